#pragma once

// Projective measurement: Born probabilities, Lüders collapse, complete
// outcome families, conditional probabilities and effective pasts.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "retrosim/quantum_core.hpp"

namespace retrosim {

/// Below this probability an outcome is an impossible branch.
inline constexpr double kZeroProbability = 1e-12;
/// Imaginary parts of Born traces above this indicate a modeling bug.
inline constexpr double kImaginaryTolerance = 1e-12;

struct LabeledProjector {
  std::string label;
  Projector projector;
};

/// Mutually orthogonal projectors summing to the identity.
class OutcomeFamily {
 public:
  /// Throws FamilyIncomplete unless the projectors are orthogonal and complete.
  explicit OutcomeFamily(std::vector<LabeledProjector> members);

  /// {P, I - P} with the given labels.
  static OutcomeFamily binary(const Projector& yes, std::string yes_label = "yes",
                              std::string no_label = "no");
  /// One rank-1 projector per computational basis vector.
  static OutcomeFamily computational_basis(std::size_t dim, std::vector<std::string> labels = {});

  std::size_t dim() const { return members_.front().projector.dim(); }
  std::size_t size() const { return members_.size(); }
  const std::vector<LabeledProjector>& members() const { return members_; }
  std::vector<std::string> labels() const;

  /// Lifts every member onto `label`'s factor of `layout`.
  OutcomeFamily embedded(const SubsystemLayout& layout, const std::string& label) const;

 private:
  std::vector<LabeledProjector> members_;
};

struct MeasurementRecord {
  std::size_t process_time = 0;
  std::string question_label;
  std::string outcome_label;
  double born_probability = 0.0;
  double applied_weight = 0.0;
};

struct CollapseResult {
  DensityMatrix state;
  double probability;
};

/// Tr(P rho), real and clamped to [0, 1].
double born_probability(const DensityMatrix& rho, const Projector& p);

/// (P rho P / Tr(P rho P), Tr(P rho)); throws ZeroProbabilityOutcome for an
/// impossible branch.
CollapseResult collapse(const DensityMatrix& rho, const Projector& p);

std::vector<double> family_probabilities(const DensityMatrix& rho, const OutcomeFamily& family);

/// Tr(P Q rho) / Tr(Q rho) for commuting P and Q.
double conditional_probability(const DensityMatrix& rho, const Projector& p, const Projector& q);

/// Undoes the last `steps_back` entries of `schedule`, newest first.
DensityMatrix effective_past(const DensityMatrix& rho_after, std::span<const UnitaryOp> schedule,
                             std::size_t steps_back);

/// Applies the last `steps` entries of `schedule` in order (forward evolution).
DensityMatrix evolve_forward(const DensityMatrix& rho, std::span<const UnitaryOp> schedule,
                             std::size_t steps);

}  // namespace retrosim
