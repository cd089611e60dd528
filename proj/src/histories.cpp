#include "retrosim/histories.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "retrosim/errors.hpp"

namespace retrosim {

double HistoryEnsemble::total_weight() const {
  double total = 0.0;
  for (const auto& h : histories) total += h.weight;
  return total;
}

double path_valence(const ProtocolSpec& protocol, const ChoicePolicy& policy, const Path& path) {
  if (!protocol.biased_experience_on(path)) return 0.0;
  double v = protocol.valence(path);
  // A policy-level valence for the experienced label overrides the protocol's.
  for (const auto& step : path) {
    const auto it = protocol.observers.find(step.variable);
    if (it == protocol.observers.end() || it->second != protocol.biased_observer) continue;
    if (const auto m = policy.valence_map.find(step.outcome); m != policy.valence_map.end()) {
      v = m->second.value();
    }
  }
  return v;
}

HistoryEnsemble enumerate_ensemble(const ProtocolSpec& protocol, const ChoicePolicy& policy, std::size_t cap) {
  if (!protocol.valence) throw Error(ErrorKind::ProtocolMalformed, "protocol has no valence function");
  HistoryEnsemble ensemble;
  ensemble.protocol = protocol.name;
  ensemble.beta = policy.effective_beta();

  std::vector<double> born;
  std::vector<double> valences;
  for_each_leaf(protocol, cap, [&](const LeafVisit& leaf) {
    History h;
    h.steps = leaf.path;
    h.born_weight = leaf.born_weight;
    h.valence = path_valence(protocol, policy, leaf.path);
    born.push_back(h.born_weight);
    valences.push_back(h.valence);
    ensemble.histories.push_back(std::move(h));
  });

  const double beta = ensemble.beta;
  const auto weights = biased_weights(born, valences, BiasParameter(beta));
  double z = 0.0;
  for (std::size_t i = 0; i < born.size(); ++i) z += born[i] * (1.0 + beta * valences[i]);
  ensemble.normalization = z;
  for (std::size_t i = 0; i < weights.size(); ++i) ensemble.histories[i].weight = weights[i];
  return ensemble;
}

double conditional_rate(const HistoryEnsemble& ensemble, const Condition& condition, const Condition& event) {
  double cond_weight = 0.0;
  double joint_weight = 0.0;
  for (const auto& h : ensemble.histories) {
    if (!holds(condition, h.steps)) continue;
    cond_weight += h.weight;
    if (holds(event, h.steps)) joint_weight += h.weight;
  }
  if (cond_weight <= kZeroProbability) {
    throw Error(ErrorKind::ZeroProbabilityOutcome, "condition '" + describe(condition) + "' has zero weight");
  }
  return joint_weight / cond_weight;
}

double hit_rate(const HistoryEnsemble& ensemble, const HitStatistic& stat) {
  return conditional_rate(ensemble, stat.condition, stat.event);
}

std::map<std::string, double> marginal(const HistoryEnsemble& ensemble, const std::string& variable) {
  std::map<std::string, double> dist;
  for (const auto& h : ensemble.histories) {
    const auto o = h.outcome(variable);
    if (!o) throw Error(ErrorKind::ProtocolMalformed, "variable '" + variable + "' missing from a history");
    dist[std::string(*o)] += h.weight;
  }
  return dist;
}

double expectation(const HistoryEnsemble& ensemble, const std::function<double(const Path&)>& value) {
  double sum = 0.0;
  for (const auto& h : ensemble.histories) sum += h.weight * value(h.steps);
  return sum;
}

// ---------------------------------------------------------------------------
// No-signaling

ProtocolSpec truncate_before_final(const ProtocolSpec& protocol) {
  ProtocolSpec truncated = protocol;
  truncated.name = protocol.name + "_truncated";
  truncated.next_event = [next = protocol.next_event](const Path& path) -> std::optional<EventNode> {
    auto node = next(path);
    if (node && node->kind == EventKind::Experience) return std::nullopt;
    return node;
  };
  truncated.valence = [](const Path&) { return 0.0; };
  truncated.observers.clear();
  return truncated;
}

HistoryEnsemble enumerate_truncated(const ProtocolSpec& protocol, std::size_t cap) {
  const ProtocolSpec truncated = truncate_before_final(protocol);
  HistoryEnsemble ensemble;
  ensemble.protocol = truncated.name;
  for_each_leaf(
      truncated, cap,
      [&](const LeafVisit& leaf) {
        History h;
        h.steps = leaf.path;
        h.born_weight = leaf.born_weight;
        h.weight = leaf.born_weight;
        ensemble.histories.push_back(std::move(h));
      },
      /*require_experience=*/false);
  return ensemble;
}

double no_signaling_gap(const ProtocolSpec& protocol, const std::string& early_variable,
                        const ChoicePolicy& policy, std::size_t cap) {
  const auto full = marginal(enumerate_ensemble(protocol, policy, cap), early_variable);
  const auto truncated = marginal(enumerate_truncated(protocol, cap), early_variable);
  std::set<std::string> labels;
  for (const auto& [label, w] : full) labels.insert(label);
  for (const auto& [label, w] : truncated) labels.insert(label);
  double gap = 0.0;
  for (const auto& label : labels) {
    const auto a = full.find(label);
    const auto b = truncated.find(label);
    const double pa = a == full.end() ? 0.0 : a->second;
    const double pb = b == truncated.end() ? 0.0 : b->second;
    gap = std::max(gap, std::abs(pa - pb));
  }
  return gap;
}

double no_signaling_gap(const ProtocolSpec& protocol, const HitStatistic& stat, const ChoicePolicy& policy,
                        std::size_t cap) {
  const double full = hit_rate(enumerate_ensemble(protocol, policy, cap), stat);
  const double truncated = hit_rate(enumerate_truncated(protocol, cap), stat);
  return std::abs(full - truncated);
}

// ---------------------------------------------------------------------------
// Sequential realization

namespace {

constexpr const char* kVacuum = "_vacuum";

struct Realizer {
  const ProtocolSpec& protocol;
  std::size_t cap;
  std::vector<SequentialHistory> out;
  Path path;
  std::vector<MeasurementRecord> records;

  static DensityMatrix vacuum_state() { return DensityMatrix::basis_state(1, 0); }

  // Every register still held must sit in the basis state its record names.
  void check_records(const DensityMatrix& rho, const SubsystemLayout& layout) const {
    for (const auto& factor : layout.factors()) {
      if (factor.label == kVacuum) continue;
      const auto outcome = outcome_of(path, factor.label);
      std::size_t index = 0;
      const auto node_path = Path(path.begin(), std::find_if(path.begin(), path.end(), [&](const Step& s) {
                                    return s.variable == factor.label;
                                  }));
      const auto node = protocol.next_event(node_path);
      while (node->outcomes[index] != *outcome) ++index;
      const double p = born_probability(rho, embed(Projector::basis(factor.dim, index), layout, factor.label));
      if (p < 1.0 - 1e-9) {
        throw Error(ErrorKind::NumericIntegrity, "register '" + factor.label + "' lost its recorded outcome");
      }
    }
  }

  void run(const DensityMatrix& rho, const SubsystemLayout& layout, double probability) {
    if (path.size() > kMaxProtocolDepth) {
      throw Error(ErrorKind::ProtocolMalformed, "protocol '" + protocol.name + "' does not terminate");
    }
    const auto node = protocol.next_event(path);
    if (!node) {
      check_records(rho, layout);
      if (out.size() >= cap) {
        throw Error(ErrorKind::ProtocolMalformed, "sequential realization exceeds the enumeration cap");
      }
      out.push_back({path, probability, records});
      return;
    }
    validate_event(*node);
    const std::size_t k = node->outcomes.size();

    // Discard the oldest measured registers until the new one fits.
    DensityMatrix state = rho;
    SubsystemLayout held = layout;
    while (held.total_dim() * k > kRealizationDimLimit) {
      if (held.size() <= 1) {
        state = vacuum_state();
        held = SubsystemLayout({{kVacuum, 1}});
        break;
      }
      std::vector<std::string> keep;
      for (std::size_t f = 1; f < held.size(); ++f) keep.push_back(held.factors()[f].label);
      state = partial_trace(state, held, keep);
      held = SubsystemLayout(std::vector<Factor>(held.factors().begin() + 1, held.factors().end()));
    }

    const SubsystemLayout grown = held.appended({node->variable, k});
    const DensityMatrix fresh = tensor_product(state, DensityMatrix::basis_state(k, 0));
    const UnitaryOp prepare = embed(UnitaryOp::preparing(node->probabilities), grown, node->variable);
    const DensityMatrix prepared = apply_unitary(fresh, prepare, Direction::Forward);
    const OutcomeFamily family =
        OutcomeFamily::computational_basis(k, node->outcomes).embedded(grown, node->variable);
    const auto probs = family_probabilities(prepared, family);

    for (std::size_t i = 0; i < k; ++i) {
      if (probs[i] <= kZeroProbability) continue;
      const auto result = collapse(prepared, family.members()[i].projector);
      records.push_back({path.size(), node->variable, node->outcomes[i], result.probability, result.probability});
      path.push_back({node->variable, node->outcomes[i]});
      run(result.state, grown, probability * result.probability);
      path.pop_back();
      records.pop_back();
    }
  }
};

}  // namespace

std::vector<SequentialHistory> sequential_law(const ProtocolSpec& protocol, std::size_t cap) {
  if (!protocol.next_event) throw Error(ErrorKind::ProtocolMalformed, "protocol has no event generator");
  if (protocol.leaf_count > static_cast<double>(cap)) {
    throw Error(ErrorKind::ProtocolMalformed, "protocol '" + protocol.name + "' exceeds the enumeration cap");
  }
  Realizer realizer{protocol, cap, {}, {}, {}};
  realizer.run(Realizer::vacuum_state(), SubsystemLayout({{kVacuum, 1}}), 1.0);
  return std::move(realizer.out);
}

double sequential_equivalence_distance(const ProtocolSpec& protocol, std::size_t cap) {
  const auto ensemble = enumerate_ensemble(protocol, ChoicePolicy::orthodox(), cap);
  const auto law = sequential_law(protocol, cap);

  std::map<std::string, std::pair<double, double>> joint;
  for (const auto& h : ensemble.histories) joint[path_key(h.steps)].first += h.weight;
  for (const auto& s : law) joint[path_key(s.steps)].second += s.probability;
  double tv = 0.0;
  for (const auto& [key, pq] : joint) tv += std::abs(pq.first - pq.second);
  return 0.5 * tv;
}

}  // namespace retrosim
