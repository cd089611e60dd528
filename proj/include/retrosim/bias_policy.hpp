#pragma once

// Nature's-choice policies: the orthodox Born rule and a valence-biased
// multiplicative tilt q_i ∝ p_i (1 + beta v_i).

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace retrosim {

/// Hedonic grading of an experience in [-1, +1].
class Valence {
 public:
  constexpr Valence() = default;
  /// Throws DegenerateInput outside [-1, 1].
  explicit Valence(double value);

  static constexpr Valence neutral() { return Valence(); }
  double value() const { return value_; }

 private:
  double value_ = 0.0;
};

/// Bias magnitude in [0, 1]; every weight 1 + beta * v stays nonnegative.
class BiasParameter {
 public:
  constexpr BiasParameter() = default;
  explicit BiasParameter(double beta);

  double value() const { return beta_; }

 private:
  double beta_ = 0.0;
};

enum class PolicyKind { Orthodox, Biased };

std::string to_string(PolicyKind kind);
/// Accepts "orthodox" or "biased"; throws ConfigError otherwise.
PolicyKind parse_policy_kind(const std::string& text);

struct ChoicePolicy {
  PolicyKind kind = PolicyKind::Orthodox;
  BiasParameter beta;
  /// Outcome label -> valence; only consulted by biased policies.
  std::map<std::string, Valence> valence_map;

  static ChoicePolicy orthodox() { return {}; }
  static ChoicePolicy biased(double beta, std::map<std::string, Valence> valences = {});

  /// The beta actually applied: 0 for orthodox policies.
  double effective_beta() const { return kind == PolicyKind::Biased ? beta.value() : 0.0; }
  /// Missing labels are neutral.
  double valence_of(const std::string& label) const;
};

/// Normalized q_i = p_i (1 + beta v_i) / sum_j p_j (1 + beta v_j).
std::vector<double> biased_weights(std::span<const double> born, std::span<const double> valences,
                                   BiasParameter beta);

/// Inverse-CDF selection: smallest i whose cumulative weight exceeds `draw`.
std::size_t sample_outcome(std::span<const double> weights, double draw);

std::vector<double> policy_weights(const ChoicePolicy& policy, std::span<const double> born,
                                   std::span<const std::string> labels);

}  // namespace retrosim
