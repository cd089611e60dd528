#include "retrosim/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "retrosim/errors.hpp"

namespace retrosim {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    std::ostringstream msg;
    msg << what << ": dimension " << a << " does not match " << b;
    throw Error(ErrorKind::LayoutMismatch, msg.str());
  }
}

// Tr(A B) without forming the product.
Complex trace_of_product(const CMatrix& a, const CMatrix& b) {
  return (a.transpose().cwiseProduct(b)).sum();
}

double real_probability(Complex value, const char* what) {
  if (std::abs(value.imag()) >= kImaginaryTolerance) {
    std::ostringstream msg;
    msg << what << " has imaginary part " << value.imag();
    throw Error(ErrorKind::NumericIntegrity, msg.str());
  }
  return std::clamp(value.real(), 0.0, 1.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// OutcomeFamily

OutcomeFamily::OutcomeFamily(std::vector<LabeledProjector> members) : members_(std::move(members)) {
  if (members_.empty()) throw Error(ErrorKind::FamilyIncomplete, "outcome family is empty");
  const std::size_t dim = members_.front().projector.dim();
  const auto n = static_cast<Eigen::Index>(dim);
  CMatrix sum = CMatrix::Zero(n, n);
  for (std::size_t i = 0; i < members_.size(); ++i) {
    const auto& pi = members_[i].projector;
    if (pi.dim() != dim) throw Error(ErrorKind::FamilyIncomplete, "family members differ in dimension");
    for (std::size_t j = 0; j < i; ++j) {
      if (members_[j].label == members_[i].label) {
        throw Error(ErrorKind::FamilyIncomplete, "duplicate outcome label '" + members_[i].label + "'");
      }
      const double overlap = max_abs(pi.matrix() * members_[j].projector.matrix());
      if (overlap >= tolerance::kHermitian) {
        throw Error(ErrorKind::FamilyIncomplete,
                    "outcomes '" + members_[j].label + "' and '" + members_[i].label + "' are not orthogonal");
      }
    }
    sum += pi.matrix();
  }
  if (max_abs(sum - CMatrix::Identity(n, n)) >= tolerance::kHermitian) {
    throw Error(ErrorKind::FamilyIncomplete, "outcome projectors do not sum to the identity");
  }
}

OutcomeFamily OutcomeFamily::binary(const Projector& yes, std::string yes_label, std::string no_label) {
  std::vector<LabeledProjector> members;
  members.push_back({std::move(yes_label), yes});
  members.push_back({std::move(no_label), complement(yes)});
  return OutcomeFamily(std::move(members));
}

OutcomeFamily OutcomeFamily::computational_basis(std::size_t dim, std::vector<std::string> labels) {
  if (labels.empty()) {
    for (std::size_t i = 0; i < dim; ++i) labels.push_back(std::to_string(i));
  }
  if (labels.size() != dim) throw Error(ErrorKind::LayoutMismatch, "one label per basis vector required");
  std::vector<LabeledProjector> members;
  members.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) members.push_back({labels[i], Projector::basis(dim, i)});
  return OutcomeFamily(std::move(members));
}

std::vector<std::string> OutcomeFamily::labels() const {
  std::vector<std::string> out;
  out.reserve(members_.size());
  for (const auto& m : members_) out.push_back(m.label);
  return out;
}

OutcomeFamily OutcomeFamily::embedded(const SubsystemLayout& layout, const std::string& label) const {
  std::vector<LabeledProjector> lifted;
  lifted.reserve(members_.size());
  for (const auto& m : members_) lifted.push_back({m.label, embed(m.projector, layout, label)});
  return OutcomeFamily(std::move(lifted));
}

// ---------------------------------------------------------------------------
// Born rule and collapse

double born_probability(const DensityMatrix& rho, const Projector& p) {
  require_same_dim(rho.dim(), p.dim(), "born_probability");
  return real_probability(trace_of_product(p.matrix(), rho.matrix()), "Tr(P rho)");
}

CollapseResult collapse(const DensityMatrix& rho, const Projector& p) {
  const double prob = born_probability(rho, p);
  if (prob <= kZeroProbability) {
    std::ostringstream msg;
    msg << "outcome has probability " << prob;
    throw Error(ErrorKind::ZeroProbabilityOutcome, msg.str());
  }
  const CMatrix& P = p.matrix();
  CMatrix projected = P * rho.matrix() * P;
  const double norm = matrix_trace(projected).real();
  projected /= norm;
  projected = 0.5 * (projected + projected.adjoint()).eval();
  return {DensityMatrix(std::move(projected)), prob};
}

std::vector<double> family_probabilities(const DensityMatrix& rho, const OutcomeFamily& family) {
  require_same_dim(rho.dim(), family.dim(), "family_probabilities");
  std::vector<double> probs;
  probs.reserve(family.size());
  double total = 0.0;
  for (const auto& m : family.members()) {
    probs.push_back(born_probability(rho, m.projector));
    total += probs.back();
  }
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "family probabilities sum to " << total;
    throw Error(ErrorKind::FamilyIncomplete, msg.str());
  }
  return probs;
}

double conditional_probability(const DensityMatrix& rho, const Projector& p, const Projector& q) {
  require_same_dim(rho.dim(), p.dim(), "conditional_probability");
  require_same_dim(rho.dim(), q.dim(), "conditional_probability");
  const CMatrix& P = p.matrix();
  const CMatrix& Q = q.matrix();
  if (max_abs(P * Q - Q * P) >= tolerance::kHermitian) {
    throw Error(ErrorKind::NonCommutingCondition, "conditioning requires commuting projectors");
  }
  const double denom = born_probability(rho, q);
  if (denom <= kZeroProbability) {
    throw Error(ErrorKind::ZeroProbabilityOutcome, "conditioning event has zero probability");
  }
  const CMatrix pq = P * Q;
  const double joint = real_probability(trace_of_product(pq, rho.matrix()), "Tr(P Q rho)");
  return std::clamp(joint / denom, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Effective past

DensityMatrix effective_past(const DensityMatrix& rho_after, std::span<const UnitaryOp> schedule,
                             std::size_t steps_back) {
  if (steps_back > schedule.size()) {
    std::ostringstream msg;
    msg << "cannot step back " << steps_back << " entries through a schedule of " << schedule.size();
    throw Error(ErrorKind::ScheduleMismatch, msg.str());
  }
  DensityMatrix rho = rho_after;
  for (std::size_t k = 0; k < steps_back; ++k) {
    rho = apply_unitary(rho, schedule[schedule.size() - 1 - k], Direction::Backward);
  }
  return rho;
}

DensityMatrix evolve_forward(const DensityMatrix& rho, std::span<const UnitaryOp> schedule,
                             std::size_t steps) {
  if (steps > schedule.size()) {
    throw Error(ErrorKind::ScheduleMismatch, "forward evolution longer than the schedule");
  }
  DensityMatrix out = rho;
  for (std::size_t k = schedule.size() - steps; k < schedule.size(); ++k) {
    out = apply_unitary(out, schedule[k], Direction::Forward);
  }
  return out;
}

}  // namespace retrosim
