#include "qsdlab/cli_io.hpp"
#include "qsdlab/errors.hpp"
#include "qsdlab/instances.hpp"
#include "qsdlab/periodicity.hpp"
#include "qsdlab/q_process.hpp"
#include "qsdlab/qsd.hpp"
#include "qsdlab/quasi_ergodic.hpp"
#include "qsdlab/spectral.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace qsdlab;

namespace {

// Leaked on purpose: the type must outlive interpreter teardown.
py::exception<QsdError>* qsd_error = nullptr;

struct Analysis {
  AbsorbedKernel kernel;
  CyclicStructure cyclic;
  SpectralCertificate cert;
};

Analysis analyse(const Matrix& p, std::vector<std::string> labels) {
  if (labels.empty()) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) labels.push_back("x" + std::to_string(i));
  }
  AbsorbedKernel kernel = validate_kernel(p, std::move(labels));
  CyclicStructure cyclic = detect_cyclic_structure(kernel);
  SpectralCertificate cert = certify(kernel, cyclic);
  return Analysis{std::move(kernel), std::move(cyclic), std::move(cert)};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quasi-stationary analysis of absorbed periodic Markov chains";

  qsd_error = new py::exception<QsdError>(m, "QsdError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const QsdError& e) {
      py::object exc = py::reinterpret_borrow<py::object>(qsd_error->ptr())(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(qsd_error->ptr(), exc.ptr());
    }
  });

  m.attr("SCHEMA") = kReportSchema;

  py::class_<Analysis>(m, "Analysis")
      .def(py::init(&analyse), py::arg("matrix"), py::arg("labels") = std::vector<std::string>{})
      .def_property_readonly("labels", [](const Analysis& a) { return a.kernel.labels(); })
      .def_property_readonly("matrix", [](const Analysis& a) { return a.kernel.matrix(); })
      .def_property_readonly("period", [](const Analysis& a) { return a.cyclic.period(); })
      .def_property_readonly("classes", [](const Analysis& a) { return a.cyclic.classes(); })
      .def_property_readonly("theta0", [](const Analysis& a) { return a.cert.theta0; })
      .def_property_readonly("alpha", [](const Analysis& a) { return a.cert.alpha(); })
      .def_property_readonly("c_q", [](const Analysis& a) { return a.cert.c_q(); })
      .def_property_readonly("c_q_prime", [](const Analysis& a) { return a.cert.c_q_prime; })
      .def_property_readonly("eta", [](const Analysis& a) { return a.cert.eta_on_e; })
      .def_property_readonly("nu", [](const Analysis& a) { return Eigen::VectorXd(a.cert.nu_on_e.transpose()); })
      .def("nu_qs",
           [](const Analysis& a) {
             return Eigen::VectorXd(
                 qsd_from_iterated(a.cert.nu, a.cert.theta0, a.kernel, a.cyclic, kQsdTolerance).transpose());
           })
      .def("nu_qe", [](const Analysis& a) { return Eigen::VectorXd(nu_qe(a.cert, a.kernel, a.cyclic).transpose()); })
      .def("q_process",
           [](const Analysis& a) {
             const QProcessKernel qp = build_q_process(a.cert, a.kernel, a.cyclic);
             return py::make_tuple(qp.labels, qp.matrix);
           })
      .def("is_qsd", [](const Analysis& a, const Eigen::VectorXd& mu) {
        const QsdCheck c = is_qsd(a.kernel, mu.transpose(), kQsdTolerance);
        return py::make_tuple(c.is_qsd, c.theta, c.residual);
      });

  m.def("two_cycle", [](double p, double q) { return instances::two_cycle(p, q).matrix(); });
  m.def("pure_cycle3", [] { return instances::pure_cycle3().matrix(); });

  m.def(
      "run",
      [](const std::string& command, const std::string& chain_text, std::uint64_t seed, int n_max, int big_n_max,
         int paths, int threads, std::vector<std::string> tolerances) {
        RunOptions opt;
        opt.command = command;
        opt.chain_text = chain_text;
        opt.seed = seed;
        opt.n_max = n_max;
        opt.big_n_max = big_n_max;
        opt.paths = paths;
        opt.threads = threads;
        opt.tolerance_overrides = std::move(tolerances);
        py::gil_scoped_release release;
        const RunResult r = qsdlab::run(opt);
        return std::make_pair(r.exit_code, r.json);
      },
      py::arg("command"), py::arg("chain_text"), py::arg("seed") = 42, py::arg("n_max") = 40,
      py::arg("big_n_max") = 1000, py::arg("paths") = 20000, py::arg("threads") = 1,
      py::arg("tolerances") = std::vector<std::string>{},
      "Runs one CLI subcommand on an in-memory chain spec; returns (exit_code, json_text).");
}
