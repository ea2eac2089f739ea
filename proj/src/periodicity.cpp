#include "qsdlab/periodicity.hpp"

#include "qsdlab/errors.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <sstream>

namespace qsdlab {

CyclicStructure::CyclicStructure(int period, std::vector<int> class_of)
    : period_(period), class_of_(std::move(class_of)) {
  if (period_ < 1) throw QsdError(ErrorKind::InvalidPartition, "period must be positive");
  std::vector<int> counts(static_cast<std::size_t>(period_), 0);
  for (int c : class_of_) {
    if (c < 0 || c >= period_) {
      std::ostringstream os;
      os << "class index " << c << " outside [0," << period_ << ")";
      throw QsdError(ErrorKind::InvalidPartition, os.str());
    }
    ++counts[static_cast<std::size_t>(c)];
  }
  for (int i = 0; i < period_; ++i) {
    if (counts[static_cast<std::size_t>(i)] == 0) {
      std::ostringstream os;
      os << "class A_" << i << " is empty";
      throw QsdError(ErrorKind::InvalidPartition, os.str());
    }
  }
}

std::vector<Eigen::Index> CyclicStructure::members(int cls) const {
  std::vector<Eigen::Index> out;
  for (std::size_t x = 0; x < class_of_.size(); ++x) {
    if (class_of_[x] == cls) out.push_back(static_cast<Eigen::Index>(x));
  }
  return out;
}

StateFunction CyclicStructure::indicator(int cls) const {
  StateFunction f = StateFunction::Zero(static_cast<Eigen::Index>(size()));
  for (std::size_t x = 0; x < class_of_.size(); ++x) {
    if (class_of_[x] == cls) f[static_cast<Eigen::Index>(x)] = 1.0;
  }
  return f;
}

Measure CyclicStructure::restrict(const Measure& mu, int cls) const {
  Measure out = mu;
  for (std::size_t x = 0; x < class_of_.size(); ++x) {
    if (class_of_[x] != cls) out[static_cast<Eigen::Index>(x)] = 0.0;
  }
  return out;
}

StateFunction CyclicStructure::extend_from_a0(const StateFunction& on_a0) const {
  const auto a0 = members(0);
  if (static_cast<std::size_t>(on_a0.size()) != a0.size()) {
    throw QsdError(ErrorKind::DimensionMismatch, "vector length differs from |A_0|");
  }
  StateFunction f = StateFunction::Zero(static_cast<Eigen::Index>(size()));
  for (std::size_t a = 0; a < a0.size(); ++a) f[a0[a]] = on_a0[static_cast<Eigen::Index>(a)];
  return f;
}

Measure CyclicStructure::extend_from_a0(const Measure& on_a0) const {
  return extend_from_a0(StateFunction(on_a0.transpose())).transpose();
}

StateFunction CyclicStructure::restrict_to_a0(const StateFunction& f) const {
  const auto a0 = members(0);
  StateFunction out(static_cast<Eigen::Index>(a0.size()));
  for (std::size_t a = 0; a < a0.size(); ++a) out[static_cast<Eigen::Index>(a)] = f[a0[a]];
  return out;
}

namespace {

std::vector<bool> reachable(const AbsorbedKernel& kernel, Eigen::Index root, bool reverse) {
  const auto n = kernel.size();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::deque<Eigen::Index> queue{root};
  seen[static_cast<std::size_t>(root)] = true;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (Eigen::Index v = 0; v < n; ++v) {
      const double p = reverse ? kernel(v, u) : kernel(u, v);
      if (p > 0.0 && !seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        queue.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace

CyclicStructure detect_cyclic_structure(const AbsorbedKernel& kernel) {
  const auto n = kernel.size();
  if (n == 0) throw QsdError(ErrorKind::DimensionMismatch, "empty state space");
  if (!(kernel.matrix().array() > 0.0).any()) {
    throw QsdError(ErrorKind::NoSurvivingTransition, "every state is absorbed in one step");
  }

  const auto& labels = kernel.labels();
  const auto root = static_cast<Eigen::Index>(
      std::min_element(labels.begin(), labels.end()) - labels.begin());

  const auto forward = reachable(kernel, root, false);
  const auto backward = reachable(kernel, root, true);
  for (Eigen::Index x = 0; x < n; ++x) {
    if (!forward[static_cast<std::size_t>(x)] || !backward[static_cast<std::size_t>(x)]) {
      std::ostringstream os;
      os << "state " << labels[static_cast<std::size_t>(x)]
         << (forward[static_cast<std::size_t>(x)] ? " cannot return to " : " is unreachable from ")
         << labels[static_cast<std::size_t>(root)];
      throw QsdError(ErrorKind::NotStronglyConnected, os.str());
    }
  }

  // Breadth-first levels; the period is the gcd of level defects over all edges.
  std::vector<long> level(static_cast<std::size_t>(n), -1);
  std::deque<Eigen::Index> queue{root};
  level[static_cast<std::size_t>(root)] = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (Eigen::Index v = 0; v < n; ++v) {
      if (kernel(u, v) > 0.0 && level[static_cast<std::size_t>(v)] < 0) {
        level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
        queue.push_back(v);
      }
    }
  }
  long period = 0;
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index v = 0; v < n; ++v) {
      if (kernel(u, v) > 0.0) {
        const long defect =
            level[static_cast<std::size_t>(u)] + 1 - level[static_cast<std::size_t>(v)];
        period = std::gcd(period, std::labs(defect));
      }
    }
  }

  std::vector<int> class_of(static_cast<std::size_t>(n));
  for (std::size_t x = 0; x < class_of.size(); ++x) {
    class_of[x] = static_cast<int>(level[x] % period);
  }
  return CyclicStructure(static_cast<int>(period), std::move(class_of));
}

double verify_partition(const AbsorbedKernel& kernel, const CyclicStructure& cyclic) {
  if (static_cast<Eigen::Index>(cyclic.size()) != kernel.size()) {
    throw QsdError(ErrorKind::DimensionMismatch, "cyclic structure does not match kernel");
  }
  double worst = 0.0;
  for (Eigen::Index x = 0; x < kernel.size(); ++x) {
    const int next = cyclic.wrap(cyclic.class_of(x) + 1);
    double misplaced = 0.0;
    for (Eigen::Index y = 0; y < kernel.size(); ++y) {
      if (cyclic.class_of(y) != next) misplaced += kernel(x, y);
    }
    worst = std::max(worst, misplaced);
  }
  return worst;
}

}  // namespace qsdlab
