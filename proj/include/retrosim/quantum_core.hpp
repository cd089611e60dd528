#pragma once

// Dense complex linear algebra for small Hilbert spaces.
//
// Every matrix-valued type here is an immutable value validated at
// construction. Tensor indices follow the convention that subsystem 0 of a
// SubsystemLayout is the slowest-varying index.

#include <complex>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace retrosim {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

namespace tolerance {
inline constexpr double kHermitian = 1e-9;
inline constexpr double kPsd = 1e-9;
inline constexpr double kTrace = 1e-12;
}  // namespace tolerance

/// Largest absolute entry of `m`.
double max_abs(const CMatrix& m);

/// Square complex matrix with finite entries.
class ComplexMatrix {
 public:
  explicit ComplexMatrix(CMatrix entries);

  /// Builds a dim x dim matrix from row-major entries.
  static ComplexMatrix from_row_major(std::size_t dim, std::span<const Complex> entries);
  static ComplexMatrix identity(std::size_t dim);
  static ComplexMatrix zero(std::size_t dim);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(std::size_t row, std::size_t col) const { return m_(row, col); }

 private:
  CMatrix m_;
};

/// Hermitian, positive semidefinite, unit-trace operator.
class DensityMatrix {
 public:
  explicit DensityMatrix(CMatrix entries);
  explicit DensityMatrix(const ComplexMatrix& m) : DensityMatrix(m.matrix()) {}

  /// The maximally mixed state I/dim.
  static DensityMatrix maximally_mixed(std::size_t dim);
  /// The basis projector |index><index| as a state.
  static DensityMatrix basis_state(std::size_t dim, std::size_t index);
  static DensityMatrix diagonal(std::span<const double> probabilities);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(std::size_t row, std::size_t col) const { return m_(row, col); }

  /// Ascending eigenvalues.
  std::vector<double> eigenvalues() const;

 private:
  CMatrix m_;
};

/// Hermitian idempotent operator: the "Yes" answer to a question.
class Projector {
 public:
  explicit Projector(CMatrix entries);

  static Projector identity(std::size_t dim);
  static Projector zero(std::size_t dim);
  static Projector basis(std::size_t dim, std::size_t index);
  /// Projector onto the span of `indices` in the computational basis.
  static Projector basis_span(std::size_t dim, std::span<const std::size_t> indices);
  /// Projector onto the normalized vector `v`.
  static Projector onto(const CVector& v);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(std::size_t row, std::size_t col) const { return m_(row, col); }

 private:
  CMatrix m_;
};

class UnitaryOp {
 public:
  explicit UnitaryOp(CMatrix entries);

  static UnitaryOp identity(std::size_t dim);
  static UnitaryOp hadamard();
  /// A real unitary (Householder reflection) mapping |0> to the vector with
  /// amplitudes sqrt(probabilities[i]).
  static UnitaryOp preparing(std::span<const double> probabilities);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  UnitaryOp adjoint() const;

 private:
  CMatrix m_;
};

struct Factor {
  std::string label;
  std::size_t dim = 1;
};

/// Ordered tensor factors; factor 0 is the slowest-varying index.
class SubsystemLayout {
 public:
  SubsystemLayout() = default;
  explicit SubsystemLayout(std::vector<Factor> factors);

  const std::vector<Factor>& factors() const { return factors_; }
  std::size_t size() const { return factors_.size(); }
  std::size_t total_dim() const;
  /// Throws LayoutMismatch for an unknown label.
  std::size_t index_of(const std::string& label) const;
  bool contains(const std::string& label) const;

  /// Layout with one more factor appended as the fastest index.
  SubsystemLayout appended(Factor factor) const;

 private:
  std::vector<Factor> factors_;
};

/// Returns |psi><psi| for the normalized amplitudes.
DensityMatrix make_pure_state(std::span<const Complex> amplitudes);
DensityMatrix make_pure_state(const CVector& amplitudes);

Complex matrix_trace(const CMatrix& m);
inline Complex matrix_trace(const ComplexMatrix& m) { return matrix_trace(m.matrix()); }
inline Complex matrix_trace(const DensityMatrix& m) { return matrix_trace(m.matrix()); }

CMatrix kronecker(const CMatrix& a, const CMatrix& b);
DensityMatrix tensor_product(const DensityMatrix& a, const DensityMatrix& b);
Projector tensor_product(const Projector& a, const Projector& b);

/// Reduced state over the kept factors, in layout order.
DensityMatrix partial_trace(const DensityMatrix& rho, const SubsystemLayout& layout,
                            const std::vector<std::string>& keep);

Projector complement(const Projector& p);

/// Lifts an operator on one factor to the full layout (identity elsewhere).
CMatrix embed(const CMatrix& local, const SubsystemLayout& layout, const std::string& label);
Projector embed(const Projector& local, const SubsystemLayout& layout, const std::string& label);
UnitaryOp embed(const UnitaryOp& local, const SubsystemLayout& layout, const std::string& label);

enum class Direction { Forward, Backward };

/// Forward: U rho U^dagger. Backward: U^dagger rho U.
DensityMatrix apply_unitary(const DensityMatrix& rho, const UnitaryOp& u,
                            Direction direction = Direction::Forward);

// Random generators used by the property suites and the verify command.
DensityMatrix random_density_matrix(std::size_t dim, std::mt19937_64& rng);
DensityMatrix random_pure_state(std::size_t dim, std::mt19937_64& rng);
UnitaryOp random_unitary(std::size_t dim, std::mt19937_64& rng);
Projector random_projector(std::size_t dim, std::size_t rank, std::mt19937_64& rng);

}  // namespace retrosim
