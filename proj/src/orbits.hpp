#pragma once

#include "qsdlab/kernel.hpp"

#include <cmath>
#include <vector>

namespace qsdlab::detail {

// f, P f, ..., P^count f
inline std::vector<StateFunction> right_orbit(const Matrix& p, StateFunction f, int count) {
  std::vector<StateFunction> out;
  out.reserve(static_cast<std::size_t>(count) + 1);
  out.push_back(std::move(f));
  for (int k = 0; k < count; ++k) out.push_back(p * out.back());
  return out;
}

// mu, mu P, ..., mu P^count
inline std::vector<Measure> left_orbit(const Matrix& p, Measure mu, int count) {
  std::vector<Measure> out;
  out.reserve(static_cast<std::size_t>(count) + 1);
  out.push_back(std::move(mu));
  for (int k = 0; k < count; ++k) out.push_back(out.back() * p);
  return out;
}

// P^0, ..., P^count
inline std::vector<Matrix> powers(const Matrix& p, int count) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(count) + 1);
  out.push_back(Matrix::Identity(p.rows(), p.cols()));
  for (int k = 0; k < count; ++k) out.push_back(out.back() * p);
  return out;
}

// exp of the least-squares slope of logs against xs; used for geometric rate fits.
inline double fit_log_rate(const std::vector<double>& xs, const std::vector<double>& logs) {
  const auto n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double y = logs[i];
    sx += xs[i];
    sy += y;
    sxx += xs[i] * xs[i];
    sxy += xs[i] * y;
  }
  const double denom = n * sxx - sx * sx;
  return std::exp((n * sxy - sx * sy) / denom);
}

}  // namespace qsdlab::detail
