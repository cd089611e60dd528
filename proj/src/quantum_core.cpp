#include "retrosim/quantum_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "retrosim/errors.hpp"

namespace retrosim {

namespace {

void require_square_finite(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    std::ostringstream msg;
    msg << what << " must be square and nonempty, got " << m.rows() << "x" << m.cols();
    throw Error(ErrorKind::LayoutMismatch, msg.str());
  }
  if (!m.allFinite()) {
    throw Error(ErrorKind::NumericIntegrity, std::string(what) + " has non-finite entries");
  }
}

double hermitian_deviation(const CMatrix& m) { return max_abs(m - m.adjoint()); }

void require_hermitian(const CMatrix& m, const char* what) {
  const double dev = hermitian_deviation(m);
  if (dev >= tolerance::kHermitian) {
    std::ostringstream msg;
    msg << what << " is not Hermitian (deviation " << dev << ")";
    throw Error(ErrorKind::InvalidState, msg.str());
  }
}

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    std::ostringstream msg;
    msg << what << ": dimension " << a << " does not match " << b;
    throw Error(ErrorKind::LayoutMismatch, msg.str());
  }
}

CMatrix gaussian_matrix(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(dim);
  CMatrix g(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(r, c) = Complex(re, im);
    }
  }
  return g;
}

}  // namespace

double max_abs(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// ComplexMatrix

ComplexMatrix::ComplexMatrix(CMatrix entries) : m_(std::move(entries)) {
  require_square_finite(m_, "ComplexMatrix");
}

ComplexMatrix ComplexMatrix::from_row_major(std::size_t dim, std::span<const Complex> entries) {
  if (dim == 0 || entries.size() != dim * dim) {
    throw Error(ErrorKind::LayoutMismatch, "entry count must equal dim^2");
  }
  const auto n = static_cast<Eigen::Index>(dim);
  CMatrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      m(r, c) = entries[static_cast<std::size_t>(r * n + c)];
    }
  }
  return ComplexMatrix(std::move(m));
}

ComplexMatrix ComplexMatrix::identity(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return ComplexMatrix(CMatrix::Identity(n, n));
}

ComplexMatrix ComplexMatrix::zero(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return ComplexMatrix(CMatrix::Zero(n, n));
}

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(CMatrix entries) : m_(std::move(entries)) {
  require_square_finite(m_, "DensityMatrix");
  require_hermitian(m_, "DensityMatrix");
  const Complex tr = matrix_trace(m_);
  if (std::abs(tr.real() - 1.0) >= tolerance::kTrace || std::abs(tr.imag()) >= tolerance::kTrace) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "DensityMatrix trace is " << tr << ", expected 1";
    throw Error(ErrorKind::InvalidState, msg.str());
  }
  const auto evs = eigenvalues();
  if (evs.front() < -tolerance::kPsd) {
    std::ostringstream msg;
    msg << "DensityMatrix has negative eigenvalue " << evs.front();
    throw Error(ErrorKind::InvalidState, msg.str());
  }
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return DensityMatrix(CMatrix::Identity(n, n) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::basis_state(std::size_t dim, std::size_t index) {
  if (index >= dim) throw Error(ErrorKind::LayoutMismatch, "basis index out of range");
  const auto n = static_cast<Eigen::Index>(dim);
  CMatrix m = CMatrix::Zero(n, n);
  m(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = 1.0;
  return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::diagonal(std::span<const double> probabilities) {
  const auto n = static_cast<Eigen::Index>(probabilities.size());
  CMatrix m = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = probabilities[static_cast<std::size_t>(i)];
  return DensityMatrix(std::move(m));
}

std::vector<double> DensityMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(m_, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

// ---------------------------------------------------------------------------
// Projector

Projector::Projector(CMatrix entries) : m_(std::move(entries)) {
  require_square_finite(m_, "Projector");
  require_hermitian(m_, "Projector");
  const double idem = max_abs(m_ * m_ - m_);
  if (idem >= tolerance::kHermitian) {
    std::ostringstream msg;
    msg << "Projector is not idempotent (deviation " << idem << ")";
    throw Error(ErrorKind::InvalidState, msg.str());
  }
}

Projector Projector::identity(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return Projector(CMatrix::Identity(n, n));
}

Projector Projector::zero(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return Projector(CMatrix::Zero(n, n));
}

Projector Projector::basis(std::size_t dim, std::size_t index) {
  const std::size_t indices[] = {index};
  return basis_span(dim, indices);
}

Projector Projector::basis_span(std::size_t dim, std::span<const std::size_t> indices) {
  const auto n = static_cast<Eigen::Index>(dim);
  CMatrix m = CMatrix::Zero(n, n);
  for (std::size_t i : indices) {
    if (i >= dim) throw Error(ErrorKind::LayoutMismatch, "basis index out of range");
    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
  }
  return Projector(std::move(m));
}

Projector Projector::onto(const CVector& v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorKind::DegenerateInput, "cannot project onto a zero vector");
  }
  const CVector u = v / norm;
  return Projector(u * u.adjoint());
}

// ---------------------------------------------------------------------------
// UnitaryOp

UnitaryOp::UnitaryOp(CMatrix entries) : m_(std::move(entries)) {
  require_square_finite(m_, "UnitaryOp");
  const auto n = m_.rows();
  const double dev = max_abs(m_.adjoint() * m_ - CMatrix::Identity(n, n));
  if (dev >= tolerance::kHermitian) {
    std::ostringstream msg;
    msg << "UnitaryOp is not unitary (deviation " << dev << ")";
    throw Error(ErrorKind::InvalidState, msg.str());
  }
}

UnitaryOp UnitaryOp::identity(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return UnitaryOp(CMatrix::Identity(n, n));
}

UnitaryOp UnitaryOp::hadamard() {
  CMatrix h(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  h << s, s, s, -s;
  return UnitaryOp(std::move(h));
}

UnitaryOp UnitaryOp::preparing(std::span<const double> probabilities) {
  if (probabilities.empty()) throw Error(ErrorKind::DegenerateInput, "no branch probabilities");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorKind::DegenerateInput, "branch probabilities must be finite and nonnegative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorKind::DegenerateInput, "branch probabilities must sum to 1");
  }
  const auto n = static_cast<Eigen::Index>(probabilities.size());
  Eigen::VectorXd psi(n);
  for (Eigen::Index i = 0; i < n; ++i) psi(i) = std::sqrt(probabilities[static_cast<std::size_t>(i)]);
  psi /= psi.norm();

  Eigen::VectorXd v = -psi;
  v(0) += 1.0;
  const double vv = v.squaredNorm();
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  if (vv > 1e-30) h -= 2.0 * v * v.transpose() / vv;
  return UnitaryOp(h.cast<Complex>());
}

UnitaryOp UnitaryOp::adjoint() const { return UnitaryOp(m_.adjoint()); }

// ---------------------------------------------------------------------------
// SubsystemLayout

SubsystemLayout::SubsystemLayout(std::vector<Factor> factors) : factors_(std::move(factors)) {
  std::set<std::string> seen;
  for (const auto& f : factors_) {
    if (f.dim == 0) throw Error(ErrorKind::LayoutMismatch, "factor '" + f.label + "' has dimension 0");
    if (!seen.insert(f.label).second) {
      throw Error(ErrorKind::LayoutMismatch, "duplicate factor label '" + f.label + "'");
    }
  }
}

std::size_t SubsystemLayout::total_dim() const {
  return std::accumulate(factors_.begin(), factors_.end(), std::size_t{1},
                         [](std::size_t acc, const Factor& f) { return acc * f.dim; });
}

std::size_t SubsystemLayout::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (factors_[i].label == label) return i;
  }
  throw Error(ErrorKind::LayoutMismatch, "unknown factor label '" + label + "'");
}

bool SubsystemLayout::contains(const std::string& label) const {
  return std::any_of(factors_.begin(), factors_.end(),
                     [&](const Factor& f) { return f.label == label; });
}

SubsystemLayout SubsystemLayout::appended(Factor factor) const {
  auto factors = factors_;
  factors.push_back(std::move(factor));
  return SubsystemLayout(std::move(factors));
}

// ---------------------------------------------------------------------------
// Operations

DensityMatrix make_pure_state(const CVector& amplitudes) {
  if (amplitudes.size() == 0 || !amplitudes.allFinite()) {
    throw Error(ErrorKind::DegenerateInput, "amplitudes must be nonempty and finite");
  }
  const double norm = amplitudes.norm();
  if (!(norm > 0.0)) throw Error(ErrorKind::DegenerateInput, "zero amplitude vector");
  const CVector psi = amplitudes / norm;
  CMatrix rho = psi * psi.adjoint();
  // Outer products are Hermitian up to rounding in the off-diagonal pairs.
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(std::move(rho));
}

DensityMatrix make_pure_state(std::span<const Complex> amplitudes) {
  CVector v(static_cast<Eigen::Index>(amplitudes.size()));
  for (std::size_t i = 0; i < amplitudes.size(); ++i) v(static_cast<Eigen::Index>(i)) = amplitudes[i];
  return make_pure_state(v);
}

Complex matrix_trace(const CMatrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::LayoutMismatch, "trace of a non-square matrix");
  Complex sum{0.0, 0.0};
  for (Eigen::Index i = 0; i < m.rows(); ++i) sum += m(i, i);
  return sum;
}

CMatrix kronecker(const CMatrix& a, const CMatrix& b) {
  const auto ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  CMatrix out(ar * br, ac * bc);
  for (Eigen::Index i = 0; i < ar; ++i) {
    for (Eigen::Index j = 0; j < ac; ++j) {
      out.block(i * br, j * bc, br, bc) = a(i, j) * b;
    }
  }
  return out;
}

DensityMatrix tensor_product(const DensityMatrix& a, const DensityMatrix& b) {
  return DensityMatrix(kronecker(a.matrix(), b.matrix()));
}

Projector tensor_product(const Projector& a, const Projector& b) {
  return Projector(kronecker(a.matrix(), b.matrix()));
}

DensityMatrix partial_trace(const DensityMatrix& rho, const SubsystemLayout& layout,
                            const std::vector<std::string>& keep) {
  if (layout.size() == 0 || layout.total_dim() != rho.dim()) {
    std::ostringstream msg;
    msg << "layout dimension " << layout.total_dim() << " does not match state dimension " << rho.dim();
    throw Error(ErrorKind::LayoutMismatch, msg.str());
  }
  if (keep.empty()) throw Error(ErrorKind::DegenerateInput, "partial trace must keep at least one factor");

  const auto& factors = layout.factors();
  std::vector<bool> kept(factors.size(), false);
  for (const auto& label : keep) kept[layout.index_of(label)] = true;

  // Strides for full and reduced indices; factor 0 varies slowest.
  const std::size_t nf = factors.size();
  std::vector<std::size_t> kept_stride(nf, 0);
  std::size_t reduced_dim = 1;
  for (std::size_t f = nf; f-- > 0;) {
    if (kept[f]) {
      kept_stride[f] = reduced_dim;
      reduced_dim *= factors[f].dim;
    }
  }

  const std::size_t full_dim = rho.dim();
  // For each full index: its reduced index and its traced-out remainder.
  std::vector<std::size_t> reduced_of(full_dim), traced_of(full_dim);
  for (std::size_t idx = 0; idx < full_dim; ++idx) {
    std::size_t rem = idx, red = 0, traced = 0, traced_stride = 1;
    for (std::size_t f = nf; f-- > 0;) {
      const std::size_t digit = rem % factors[f].dim;
      rem /= factors[f].dim;
      if (kept[f]) {
        red += digit * kept_stride[f];
      } else {
        traced += digit * traced_stride;
        traced_stride *= factors[f].dim;
      }
    }
    reduced_of[idx] = red;
    traced_of[idx] = traced;
  }

  const auto rd = static_cast<Eigen::Index>(reduced_dim);
  CMatrix out = CMatrix::Zero(rd, rd);
  const CMatrix& m = rho.matrix();
  for (std::size_t r = 0; r < full_dim; ++r) {
    for (std::size_t c = 0; c < full_dim; ++c) {
      if (traced_of[r] != traced_of[c]) continue;
      out(static_cast<Eigen::Index>(reduced_of[r]), static_cast<Eigen::Index>(reduced_of[c])) +=
          m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return DensityMatrix(std::move(out));
}

Projector complement(const Projector& p) {
  const auto n = static_cast<Eigen::Index>(p.dim());
  return Projector(CMatrix::Identity(n, n) - p.matrix());
}

CMatrix embed(const CMatrix& local, const SubsystemLayout& layout, const std::string& label) {
  const std::size_t target = layout.index_of(label);
  const auto& factors = layout.factors();
  require_same_dim(static_cast<std::size_t>(local.rows()), factors[target].dim, "embedded operator");
  CMatrix out = CMatrix::Identity(1, 1);
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const auto d = static_cast<Eigen::Index>(factors[f].dim);
    out = kronecker(out, f == target ? local : CMatrix::Identity(d, d));
  }
  return out;
}

Projector embed(const Projector& local, const SubsystemLayout& layout, const std::string& label) {
  return Projector(embed(local.matrix(), layout, label));
}

UnitaryOp embed(const UnitaryOp& local, const SubsystemLayout& layout, const std::string& label) {
  return UnitaryOp(embed(local.matrix(), layout, label));
}

DensityMatrix apply_unitary(const DensityMatrix& rho, const UnitaryOp& u, Direction direction) {
  require_same_dim(rho.dim(), u.dim(), "apply_unitary");
  const CMatrix& U = u.matrix();
  CMatrix out = direction == Direction::Forward ? CMatrix(U * rho.matrix() * U.adjoint())
                                                : CMatrix(U.adjoint() * rho.matrix() * U);
  out = 0.5 * (out + out.adjoint()).eval();
  return DensityMatrix(std::move(out));
}

DensityMatrix random_density_matrix(std::size_t dim, std::mt19937_64& rng) {
  const CMatrix g = gaussian_matrix(dim, rng);
  CMatrix rho = g * g.adjoint();
  rho /= matrix_trace(rho).real();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(std::move(rho));
}

DensityMatrix random_pure_state(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CVector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    v(i) = Complex(re, im);
  }
  return make_pure_state(v);
}

UnitaryOp random_unitary(std::size_t dim, std::mt19937_64& rng) {
  const CMatrix g = gaussian_matrix(dim, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  return UnitaryOp(std::move(q));
}

Projector random_projector(std::size_t dim, std::size_t rank, std::mt19937_64& rng) {
  if (rank > dim) throw Error(ErrorKind::DegenerateInput, "projector rank exceeds dimension");
  const CMatrix q = random_unitary(dim, rng).matrix();
  const auto r = static_cast<Eigen::Index>(rank);
  const CMatrix cols = q.leftCols(r);
  CMatrix p = cols * cols.adjoint();
  p = 0.5 * (p + p.adjoint()).eval();
  return Projector(std::move(p));
}

}  // namespace retrosim
