#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cachenet/config.hpp"
#include "cachenet/online.hpp"
#include "cachenet/primal_dual.hpp"
#include "cachenet/sim.hpp"
#include "cachenet/solver.hpp"

namespace py = pybind11;
using namespace cachenet;

PYBIND11_MODULE(_cachenet, m) {
  m.doc() = "TTL cache network analysis and optimization";

  py::enum_<Policy>(m, "Policy")
      .value("MCDP", Policy::MCDP)
      .value("MCD", Policy::MCD);
  py::enum_<Variant>(m, "Variant")
      .value("L_U_MCDP", Variant::L_U_MCDP)
      .value("L_U_MCD", Variant::L_U_MCD)
      .value("G_N_U_MCDP", Variant::G_N_U_MCDP)
      .value("G_N_U_MCD", Variant::G_N_U_MCD)
      .value("MCD_COST", Variant::MCD_COST);
  py::enum_<Eviction>(m, "Eviction")
      .value("LRU", Eviction::LRU)
      .value("LFU", Eviction::LFU)
      .value("FIFO", Eviction::FIFO)
      .value("RR", Eviction::RR);

  m.def("zipf_popularity", &zipf_popularity, py::arg("n"), py::arg("alpha"));
  m.def("hits_from_timers", &hits_from_timers, py::arg("policy"),
        py::arg("rate"), py::arg("timers"));
  m.def("timers_from_hits", &timers_from_hits, py::arg("policy"),
        py::arg("rate"), py::arg("hits"));
  m.def(
      "stationary",
      [](Policy policy, double rate, const std::vector<double>& timers) {
        return (policy == Policy::MCDP ? mcdp_chain(rate, timers)
                                       : mcd_chain(rate, timers))
            .stationary;
      },
      py::arg("policy"), py::arg("rate"), py::arg("timers"));

  py::class_<PathSpec>(m, "PathSpec")
      .def(py::init<>())
      .def_readwrite("nodes", &PathSpec::nodes)
      .def_readwrite("contents", &PathSpec::contents)
      .def_readwrite("rates", &PathSpec::rates)
      .def_readwrite("weights", &PathSpec::weights);
  py::class_<NetworkSpec>(m, "NetworkSpec")
      .def(py::init<>())
      .def_readwrite("num_nodes", &NetworkSpec::num_nodes)
      .def_readwrite("capacity", &NetworkSpec::capacity)
      .def_readwrite("paths", &NetworkSpec::paths);
  py::class_<UtilitySpec>(m, "UtilitySpec")
      .def(py::init<>())
      .def_readwrite("beta", &UtilitySpec::beta)
      .def_readwrite("psi", &UtilitySpec::psi)
      .def_readwrite("h_min", &UtilitySpec::h_min);
  py::class_<HitField>(m, "HitField")
      .def(py::init<>())
      .def_readwrite("values", &HitField::values);
  py::class_<SolveResult>(m, "SolveResult")
      .def_readonly("hits", &SolveResult::hits)
      .def_readonly("objective", &SolveResult::objective)
      .def_readonly("iterations", &SolveResult::iterations)
      .def_readonly("converged", &SolveResult::converged);

  m.def(
      "build_line",
      [](std::size_t length, double capacity, std::size_t n, double alpha,
         double rate) {
        return build_line(length, capacity,
                          ContentCatalog::zipf(n, alpha, rate));
      },
      py::arg("length"), py::arg("capacity"), py::arg("n"), py::arg("alpha"),
      py::arg("rate") = 1.0);

  m.def(
      "solve",
      [](Variant variant, const NetworkSpec& net, double beta, double psi) {
        ProgramSpec prog;
        prog.variant = variant;
        prog.network = net;
        prog.utility.beta = beta;
        prog.utility.psi = psi;
        return variant == Variant::MCD_COST ? solve_mcd_cost(prog)
                                            : solve(prog);
      },
      py::arg("variant"), py::arg("network"), py::arg("beta") = 1.0,
      py::arg("psi") = 1.0);

  m.def(
      "simulate_ttl",
      [](const NetworkSpec& net, Policy policy,
         const std::vector<std::vector<std::vector<double>>>& timers,
         long long horizon, std::uint64_t seed) {
        std::vector<TimerField> fields(timers.size());
        for (std::size_t p = 0; p < timers.size(); ++p)
          fields[p].values = timers[p];
        const SimReport report =
            simulate_ttl(net, policy, fields, horizon, seed);
        py::dict out;
        py::list paths;
        for (const PathStats& st : report.paths) {
          py::dict d;
          d["requests"] = st.requests;
          d["hits"] = st.hits;
          d["empirical"] = st.empirical();
          paths.append(std::move(d));
        }
        out["paths"] = std::move(paths);
        out["total_requests"] = report.total_requests;
        return out;
      },
      py::arg("network"), py::arg("policy"), py::arg("timers"),
      py::arg("horizon"), py::arg("seed") = 0);

  py::register_exception<infeasible_error>(m, "InfeasibleError");
  py::register_exception<model_error>(m, "ModelError");
}
