#pragma once

// Exact enumeration of process-time histories under orthodox or biased
// weighting, conditional statistics over them, and the no-signaling and
// sequential-equivalence checks.

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "retrosim/bias_policy.hpp"
#include "retrosim/measurement.hpp"
#include "retrosim/protocol_spec.hpp"

namespace retrosim {

struct History {
  Path steps;
  /// Product of orthodox branch probabilities.
  double born_weight = 0.0;
  /// Valence the policy saw on this path (0 when no biased experience).
  double valence = 0.0;
  /// Normalized weight under the policy.
  double weight = 0.0;

  std::optional<std::string_view> outcome(std::string_view variable) const {
    return outcome_of(steps, variable);
  }
};

struct HistoryEnsemble {
  std::string protocol;
  std::vector<History> histories;
  /// sum_i born_i (1 + beta v_i) before normalization.
  double normalization = 1.0;
  double beta = 0.0;

  double total_weight() const;
};

/// Walks the protocol tree, multiplies Born branch probabilities along each
/// path, then tilts complete paths by the policy and renormalizes.
HistoryEnsemble enumerate_ensemble(const ProtocolSpec& protocol, const ChoicePolicy& policy,
                                   std::size_t cap = kDefaultEnumerationCap);

/// Valence the policy applies to a complete path.
double path_valence(const ProtocolSpec& protocol, const ChoicePolicy& policy, const Path& path);

/// weight(event and condition) / weight(condition).
double conditional_rate(const HistoryEnsemble& ensemble, const Condition& condition, const Condition& event);
double hit_rate(const HistoryEnsemble& ensemble, const HitStatistic& stat);

/// Outcome label -> summed weight.
std::map<std::string, double> marginal(const HistoryEnsemble& ensemble, const std::string& variable);

double expectation(const HistoryEnsemble& ensemble, const std::function<double(const Path&)>& value);

/// The protocol with every event from the first experience on removed.
ProtocolSpec truncate_before_final(const ProtocolSpec& protocol);
/// Orthodox ensemble of the truncated protocol (no experience, no bias).
HistoryEnsemble enumerate_truncated(const ProtocolSpec& protocol, std::size_t cap = kDefaultEnumerationCap);

/// Max |marginal_full - marginal_truncated| over the early variable's labels.
double no_signaling_gap(const ProtocolSpec& protocol, const std::string& early_variable,
                        const ChoicePolicy& policy, std::size_t cap = kDefaultEnumerationCap);
/// |rate_full(event | condition) - rate_truncated(event | condition)|; the
/// statistic may only reference variables recorded before the final
/// experience.
double no_signaling_gap(const ProtocolSpec& protocol, const HitStatistic& stat, const ChoicePolicy& policy,
                        std::size_t cap = kDefaultEnumerationCap);

struct SequentialHistory {
  Path steps;
  double probability = 0.0;
  std::vector<MeasurementRecord> records;
};

/// Largest register space the sequential realization keeps before it traces
/// out the oldest measured registers.
inline constexpr std::size_t kRealizationDimLimit = 64;

/// Orthodox path law obtained by realizing each event as a fresh register
/// prepared by a unitary and measured in its computational basis, applying
/// Born probabilities and collapse step by step.
std::vector<SequentialHistory> sequential_law(const ProtocolSpec& protocol,
                                              std::size_t cap = kDefaultEnumerationCap);

/// Total-variation distance between the beta = 0 ensemble and sequential_law.
double sequential_equivalence_distance(const ProtocolSpec& protocol,
                                       std::size_t cap = kDefaultEnumerationCap);

}  // namespace retrosim
