#include "retrosim/bias_policy.hpp"

#include <cmath>
#include <sstream>

#include "retrosim/errors.hpp"

namespace retrosim {

namespace {

double checked_sum(std::span<const double> weights, const char* what) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::DegenerateInput, std::string(what) + " must be finite and nonnegative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << what << " sum to " << total << ", expected 1";
    throw Error(ErrorKind::DegenerateInput, msg.str());
  }
  return total;
}

}  // namespace

Valence::Valence(double value) : value_(value) {
  if (!(std::abs(value) <= 1.0)) {
    std::ostringstream msg;
    msg << "valence " << value << " outside [-1, 1]";
    throw Error(ErrorKind::DegenerateInput, msg.str());
  }
}

BiasParameter::BiasParameter(double beta) : beta_(beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    std::ostringstream msg;
    msg << "beta " << beta << " outside [0, 1]";
    throw Error(ErrorKind::DegenerateInput, msg.str());
  }
}

std::string to_string(PolicyKind kind) {
  return kind == PolicyKind::Orthodox ? "orthodox" : "biased";
}

PolicyKind parse_policy_kind(const std::string& text) {
  if (text == "orthodox") return PolicyKind::Orthodox;
  if (text == "biased") return PolicyKind::Biased;
  throw Error(ErrorKind::ConfigError, "unknown policy '" + text + "' (expected orthodox|biased)");
}

ChoicePolicy ChoicePolicy::biased(double beta, std::map<std::string, Valence> valences) {
  ChoicePolicy p;
  p.kind = PolicyKind::Biased;
  p.beta = BiasParameter(beta);
  p.valence_map = std::move(valences);
  return p;
}

double ChoicePolicy::valence_of(const std::string& label) const {
  const auto it = valence_map.find(label);
  return it == valence_map.end() ? 0.0 : it->second.value();
}

std::vector<double> biased_weights(std::span<const double> born, std::span<const double> valences,
                                   BiasParameter beta) {
  if (born.size() != valences.size()) {
    std::ostringstream msg;
    msg << born.size() << " probabilities but " << valences.size() << " valences";
    throw Error(ErrorKind::LayoutMismatch, msg.str());
  }
  checked_sum(born, "Born probabilities");
  const double b = beta.value();
  if (b == 0.0) return {born.begin(), born.end()};

  std::vector<double> q(born.size());
  double z = 0.0;
  for (std::size_t i = 0; i < born.size(); ++i) {
    const double v = Valence(valences[i]).value();
    q[i] = born[i] * (1.0 + b * v);
    z += q[i];
  }
  if (!(z > 0.0)) throw Error(ErrorKind::DegenerateInput, "all biased weights are zero");
  for (double& w : q) w /= z;
  return q;
}

std::size_t sample_outcome(std::span<const double> weights, double draw) {
  if (weights.empty()) throw Error(ErrorKind::DegenerateInput, "no weights to sample from");
  checked_sum(weights, "weights");
  if (!(draw >= 0.0 && draw < 1.0)) throw Error(ErrorKind::DegenerateInput, "draw must lie in [0, 1)");
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cumulative += weights[i];
    if (weights[i] > 0.0) last_positive = i;
    if (cumulative > draw && weights[i] > 0.0) return i;
  }
  // Rounding left the total just below the draw.
  return last_positive;
}

std::vector<double> policy_weights(const ChoicePolicy& policy, std::span<const double> born,
                                   std::span<const std::string> labels) {
  if (policy.kind == PolicyKind::Orthodox) return {born.begin(), born.end()};
  if (labels.size() != born.size()) {
    throw Error(ErrorKind::LayoutMismatch, "one label per outcome required");
  }
  std::vector<double> valences;
  valences.reserve(labels.size());
  for (const auto& label : labels) valences.push_back(policy.valence_of(label));
  return biased_weights(born, valences, policy.beta);
}

}  // namespace retrosim
