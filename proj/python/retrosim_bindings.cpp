#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "retrosim/bias_policy.hpp"
#include "retrosim/errors.hpp"
#include "retrosim/harness.hpp"
#include "retrosim/histories.hpp"
#include "retrosim/measurement.hpp"
#include "retrosim/protocols.hpp"
#include "retrosim/quantum_core.hpp"
#include "retrosim/report_io.hpp"

namespace py = pybind11;
using namespace retrosim;

namespace {

py::list steps_to_list(const Path& path) {
  py::list out;
  for (const auto& s : path) out.append(py::make_tuple(s.variable, s.outcome));
  return out;
}

py::dict report_to_dict(const TrialReport& r) {
  py::dict d;
  d["protocol"] = r.protocol;
  d["policy"] = r.policy;
  d["beta"] = r.beta;
  d["trials"] = r.trials;
  d["hits"] = r.hits;
  d["conditioned"] = r.conditioned;
  d["rate"] = r.rate;
  d["ci_low"] = r.ci_low;
  d["ci_high"] = r.ci_high;
  d["exact_rate"] = r.exact_rate ? py::object(py::float_(*r.exact_rate)) : py::object(py::none());
  d["no_signaling_gap"] = r.no_signaling_gap ? py::object(py::float_(*r.no_signaling_gap)) : py::object(py::none());
  d["seed"] = r.seed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_retrosim, m) {
  m.doc() = "Valence-biased quantum history simulator";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result([&]() { return py::object(py::exception<Error>(m, "RetrosimError")); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object& type = error_type.get_stored();
      py::object exc = type(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  // quantum core
  py::class_<DensityMatrix>(m, "DensityMatrix")
      .def(py::init<CMatrix>(), py::arg("entries"))
      .def_static("maximally_mixed", &DensityMatrix::maximally_mixed)
      .def_static("basis_state", &DensityMatrix::basis_state)
      .def_static("diagonal", [](const std::vector<double>& p) { return DensityMatrix::diagonal(p); })
      .def_property_readonly("dim", &DensityMatrix::dim)
      .def_property_readonly("matrix", &DensityMatrix::matrix)
      .def("eigenvalues", &DensityMatrix::eigenvalues);

  py::class_<Projector>(m, "Projector")
      .def(py::init<CMatrix>(), py::arg("entries"))
      .def_static("identity", &Projector::identity)
      .def_static("zero", &Projector::zero)
      .def_static("basis", &Projector::basis)
      .def_static("onto", &Projector::onto)
      .def_property_readonly("dim", &Projector::dim)
      .def_property_readonly("matrix", &Projector::matrix);

  py::class_<UnitaryOp>(m, "UnitaryOp")
      .def(py::init<CMatrix>(), py::arg("entries"))
      .def_static("identity", &UnitaryOp::identity)
      .def_static("hadamard", &UnitaryOp::hadamard)
      .def_property_readonly("matrix", &UnitaryOp::matrix)
      .def("adjoint", &UnitaryOp::adjoint);

  py::class_<SubsystemLayout>(m, "SubsystemLayout")
      .def(py::init([](const std::vector<std::pair<std::string, std::size_t>>& factors) {
        std::vector<Factor> fs;
        for (const auto& [label, dim] : factors) fs.push_back({label, dim});
        return SubsystemLayout(std::move(fs));
      }))
      .def_property_readonly("total_dim", &SubsystemLayout::total_dim);

  m.def("make_pure_state", py::overload_cast<const CVector&>(&make_pure_state));
  m.def("tensor_product", py::overload_cast<const DensityMatrix&, const DensityMatrix&>(&tensor_product));
  m.def("partial_trace", &partial_trace, py::arg("rho"), py::arg("layout"), py::arg("keep"));
  m.def("complement", &complement);
  m.def("embed", py::overload_cast<const Projector&, const SubsystemLayout&, const std::string&>(&embed));
  m.def(
      "apply_unitary",
      [](const DensityMatrix& rho, const UnitaryOp& u, bool backward) {
        return apply_unitary(rho, u, backward ? Direction::Backward : Direction::Forward);
      },
      py::arg("rho"), py::arg("u"), py::arg("backward") = false);

  // measurement
  m.def("born_probability", &born_probability);
  m.def("collapse", [](const DensityMatrix& rho, const Projector& p) {
    auto r = collapse(rho, p);
    return py::make_tuple(r.state, r.probability);
  });
  m.def("family_probabilities", [](const DensityMatrix& rho, const std::vector<Projector>& members) {
    std::vector<LabeledProjector> labeled;
    for (std::size_t i = 0; i < members.size(); ++i) labeled.push_back({std::to_string(i), members[i]});
    return family_probabilities(rho, OutcomeFamily(std::move(labeled)));
  });
  m.def("conditional_probability", &conditional_probability);

  // bias policy
  m.def("biased_weights", [](const std::vector<double>& born, const std::vector<double>& valences, double beta) {
    return biased_weights(born, valences, BiasParameter(beta));
  });
  m.def("sample_outcome", [](const std::vector<double>& weights, double draw) { return sample_outcome(weights, draw); });

  py::class_<ChoicePolicy>(m, "ChoicePolicy")
      .def_static("orthodox", &ChoicePolicy::orthodox)
      .def_static("biased", [](double beta) { return ChoicePolicy::biased(beta); }, py::arg("beta"))
      .def_property_readonly("effective_beta", &ChoicePolicy::effective_beta);

  // protocols
  py::class_<ProtocolSpec>(m, "ProtocolSpec")
      .def_readonly("name", &ProtocolSpec::name)
      .def_readonly("early_variable", &ProtocolSpec::early_variable)
      .def_property_readonly("observable_name",
                             [](const ProtocolSpec& s) { return s.observable ? s.observable->name : std::string(); });

  m.def("detection_protocol", &detection_protocol);
  m.def("avoidance_protocol", &avoidance_protocol);
  m.def(
      "priming_protocol",
      [](const std::string& mode, double base_ms, double delta_ms, double valence) {
        if (mode != "retro" && mode != "normal") throw Error(ErrorKind::ConfigError, "mode must be retro or normal");
        return priming_protocol(mode == "retro" ? PrimingMode::Retro : PrimingMode::Normal,
                                ReactionTimeModel{base_ms, delta_ms, 0.0}, valence);
      },
      py::arg("mode") = "retro", py::arg("base_ms") = 600.0, py::arg("congruency_delta_ms") = 40.0,
      py::arg("congruency_valence") = kDefaultCongruencyValence);
  m.def("habituation_protocol", &habituation_protocol, py::arg("v0"), py::arg("attenuation"));
  m.def("recall_protocol", &recall_protocol, py::arg("n_words"), py::arg("n_recall"), py::arg("n_targets"));
  m.def("falsification_variant", &falsification_variant);
  m.def("reversed_polarity_protocol", &reversed_polarity_protocol, py::arg("first_observer"));
  m.def("bem_protocols", &bem_protocols);

  // histories
  py::class_<History>(m, "History")
      .def_property_readonly("steps", [](const History& h) { return steps_to_list(h.steps); })
      .def_readonly("born_weight", &History::born_weight)
      .def_readonly("valence", &History::valence)
      .def_readonly("weight", &History::weight);

  py::class_<HistoryEnsemble>(m, "HistoryEnsemble")
      .def_readonly("protocol", &HistoryEnsemble::protocol)
      .def_readonly("histories", &HistoryEnsemble::histories)
      .def_readonly("normalization", &HistoryEnsemble::normalization)
      .def_readonly("beta", &HistoryEnsemble::beta)
      .def("total_weight", &HistoryEnsemble::total_weight);

  m.def("enumerate_ensemble", &enumerate_ensemble, py::arg("protocol"), py::arg("policy"),
        py::arg("cap") = kDefaultEnumerationCap);
  m.def("hit_rate", [](const HistoryEnsemble& ens, const ProtocolSpec& spec) { return hit_rate(ens, spec.hit); });
  m.def("marginal", &marginal);
  m.def("expected_observable", [](const HistoryEnsemble& ens, const ProtocolSpec& spec) {
    if (!spec.observable) throw Error(ErrorKind::ProtocolMalformed, "protocol has no observable");
    return expectation(ens, spec.observable->value);
  });
  m.def("no_signaling_gap",
        [](const ProtocolSpec& spec, const ChoicePolicy& policy, bool on_hit_statistic) {
          return on_hit_statistic ? no_signaling_gap(spec, spec.hit, policy)
                                  : no_signaling_gap(spec, spec.early_variable, policy);
        },
        py::arg("protocol"), py::arg("policy"), py::arg("on_hit_statistic") = false);
  m.def("sequential_equivalence_distance", &sequential_equivalence_distance, py::arg("protocol"),
        py::arg("cap") = kDefaultEnumerationCap);

  // harness
  py::class_<RunConfig>(m, "RunConfig")
      .def_readwrite("protocol", &RunConfig::protocol)
      .def_readwrite("falsification", &RunConfig::falsification)
      .def_readwrite("beta", &RunConfig::beta)
      .def_readwrite("trials", &RunConfig::trials)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("confidence", &RunConfig::confidence)
      .def_readwrite("enumeration_cap", &RunConfig::enumeration_cap)
      .def_readwrite("threads", &RunConfig::threads)
      .def_property(
          "policy", [](const RunConfig& c) { return to_string(c.policy); },
          [](RunConfig& c, const std::string& s) { c.policy = parse_policy_kind(s); })
      .def("validate", &RunConfig::validate)
      .def("to_json", [](const RunConfig& c) { return config_to_json(c); });

  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("load_config", [](const std::string& path) { return load_config(path); }, py::arg("path"));
  m.def("wilson_interval", &wilson_interval, py::arg("hits"), py::arg("trials"), py::arg("confidence"));
  m.def("run_simulation", [](const RunConfig& c) { return report_to_dict(run_simulation(c)); });
  m.def("sweep_beta", [](const RunConfig& c, const std::vector<double>& betas) {
    py::list out;
    for (const auto& r : sweep_beta(c, betas)) out.append(report_to_dict(r));
    return out;
  });
  m.def("simulation_csv", [](const RunConfig& c) {
    return reports_to_string(std::vector{run_simulation(c)}, ReportFormat::Csv);
  });
  m.def("verify", [](const RunConfig& c) {
    const auto report = verify(c);
    py::list checks;
    for (const auto& check : report.checks) {
      py::dict d;
      d["check"] = check.name;
      d["status"] = to_string(check.status);
      d["value"] = check.value;
      d["detail"] = check.detail;
      checks.append(d);
    }
    return py::make_tuple(report.passed(), checks);
  });
}
