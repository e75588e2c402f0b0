#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "csc/harness.hpp"
#include "csc/io.hpp"

namespace py = pybind11;
using namespace csc;

namespace {

ScenarioConfig parse_config(const std::string& json_text) {
  return config_from_json(nlohmann::json::parse(json_text));
}

py::dict community_dict(const GeneratedCommunity& gen) {
  py::list members;
  for (const auto& m : gen.community.members) {
    py::dict d;
    d["id"] = m.id;
    d["tariff_id"] = m.tariff_id;
    d["imports"] = m.imports.values;
    d["exports"] = m.exports.values;
    members.append(d);
  }
  py::dict out;
  out["members"] = members;
  out["pv_owners"] = gen.pv_owners;
  out["new_pv"] = gen.new_pv;
  out["annual_load_kwh"] = gen.annual_load_kwh;
  out["intervals"] = gen.community.axis.count;
  return out;
}

py::dict cell_dict(const CellResult& c) {
  py::dict d;
  d["community"] = c.community;
  d["uptake"] = c.uptake;
  d["mechanism"] = std::string(to_string(c.mechanism));
  d["jain"] = c.report.jain;
  d["min_max"] = c.report.min_max;
  d["meritocratic_index"] = c.report.meritocratic_index;
  d["social_welfare"] = c.report.social_welfare;
  d["contribution"] = c.report.contribution;
  d["utilities"] = c.utilities();
  std::vector<std::optional<double>> savings;
  for (const auto& m : c.members) savings.push_back(m.saving_pct());
  d["saving_pct"] = savings;
  d["inverted_intervals"] = c.inverted_intervals;
  return d;
}

}  // namespace

PYBIND11_MODULE(_csc, m) {
  m.doc() = "Energy community simulator: allocation mechanisms, French CSC billing and fairness indicators.";
  m.attr("__version__") = kVersion;

  py::class_<AllocationOutcome>(m, "AllocationOutcome")
      .def_readonly("t", &AllocationOutcome::t)
      .def_readonly("consumer_alloc", &AllocationOutcome::consumer_alloc)
      .def_readonly("producer_alloc", &AllocationOutcome::producer_alloc)
      .def_readonly("price", &AllocationOutcome::price)
      .def_property_readonly("price_inversion", [](const AllocationOutcome& o) { return o.has(kPriceInversion); })
      .def("traded", &AllocationOutcome::traded);

  py::class_<PriorityState>(m, "PriorityState")
      .def(py::init<std::size_t>(), py::arg("window_intervals") = 0)
      .def("set_cumulative", &PriorityState::set_cumulative, py::arg("consumer"), py::arg("producer"))
      .def("consumer_cumulative", &PriorityState::consumer_cumulative)
      .def("producer_cumulative", &PriorityState::producer_cumulative);

  // allocation
  m.def("community_energy", [](const std::vector<double>& imports, const std::vector<double>& exports) {
    return community_energy(imports, exports);
  });
  m.def("glass_fill", [](const std::vector<double>& q, double energy) { return glass_fill(q, energy); },
        py::arg("quantities"), py::arg("energy"));
  m.def("allocate_pro_rata", [](const std::vector<double>& imports, const std::vector<double>& exports) {
    return allocate_pro_rata(imports, exports);
  });
  m.def("allocate_glass_filling", [](const std::vector<double>& imports, const std::vector<double>& exports) {
    return allocate_glass_filling(imports, exports);
  });
  m.def(
      "allocate_prioritized_glass_filling",
      [](const std::vector<double>& imports, const std::vector<double>& exports, PriorityState& state,
         std::size_t t) { return allocate_prioritized_glass_filling(imports, exports, state, t); },
      py::arg("imports"), py::arg("exports"), py::arg("state"), py::arg("t") = 0);
  m.def("allocate_double_auction",
        [](const std::vector<double>& imports, const std::vector<double>& exports, const std::vector<double>& bids,
           const std::vector<double>& asks) { return allocate_double_auction(imports, exports, bids, asks); },
        py::arg("imports"), py::arg("exports"), py::arg("bids"), py::arg("asks"));

  // fairness
  m.def("jain_index", [](const std::vector<double>& u) { return jain_index(u); });
  m.def("min_max_ratio", [](const std::vector<double>& u) { return min_max_ratio(u); });
  m.def("contribution", [](const std::vector<double>& own, const std::vector<double>& rest) {
    return contribution(own, rest);
  });
  m.def("meritocratic_index", [](const std::vector<double>& u, const std::vector<double>& c) {
    return meritocratic_index(u, c);
  });
  m.def("social_welfare", [](const std::vector<double>& u) { return social_welfare(u); });
  m.def("weighted_utility", [](const std::vector<double>& u, const std::vector<double>& w) {
    return weighted_utility(u, w);
  });

  // scenario and sweep; configs travel as JSON text
  m.def("default_config", [] { return config_to_json(ScenarioConfig{}).dump(); });
  m.def("generate_community", [](const std::string& config, std::size_t index, double uptake) {
    return community_dict(generate_community(parse_config(config), index, uptake));
  }, py::arg("config"), py::arg("index"), py::arg("uptake"));
  m.def(
      "run_sweep",
      [](const std::string& config, std::optional<std::filesystem::path> out_root, unsigned jobs, bool resume) {
        SweepOptions options;
        options.jobs = jobs;
        options.resume = resume;
        options.log_progress = false;
        options.write_outputs = out_root.has_value();
        if (out_root) options.out_root = *out_root;
        SweepResult result;
        {
          py::gil_scoped_release release;
          result = run_sweep(parse_config(config), options);
        }
        py::list cells;
        for (const auto& c : result.cells) cells.append(cell_dict(c));
        py::dict out;
        out["config_hash"] = result.config_hash;
        out["out_dir"] = options.write_outputs ? py::object(py::str(result.out_dir.string())) : py::none();
        out["cells"] = cells;
        return out;
      },
      py::arg("config"), py::arg("out_root") = py::none(), py::arg("jobs") = 1, py::arg("resume") = false);

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
}
