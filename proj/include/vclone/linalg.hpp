#pragma once

// Dense complex linear algebra used throughout vclone: validated operator
// types, Kronecker products, partial traces, Hermitian spectra and the real
// symmetric embedding consumed by the SDP solver.

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vclone {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Numerical tolerances shared by every module.
struct Tolerances {
  double hermitian = 1e-12;         // |H - H^dagger| after symmetrization
  double hermitian_reject = 1e-8;   // largest correction accepted by symmetrization
  double trace = 1e-10;             // |Tr(rho) - 1|
  double psd = 1e-10;               // smallest admissible eigenvalue is -psd
  double unit_norm = 1e-12;         // pure-state normalization
  double linear_independence = 1e-8;  // relative Gram singular value cut-off
  double spanning = 1e-8;           // relative cut-off for basis-image inputs
  double helstrom_zero = 1e-12;     // eigenvalues above -helstrom_zero go to P+
};

const Tolerances& default_tolerances();

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public LinalgError {
 public:
  using LinalgError::LinalgError;
};

class NotHermitianError : public LinalgError {
 public:
  using LinalgError::LinalgError;
};

class InvalidStateError : public LinalgError {
 public:
  using LinalgError::LinalgError;
};

/// Largest absolute entry.
double max_abs(const ComplexMatrix& m);

/// Square matrix equal to its conjugate transpose.
///
/// The stored matrix is always exactly Hermitian: input is replaced by
/// (H + H^dagger)/2, and rejected when that correction exceeds
/// `Tolerances::hermitian_reject`.
class HermitianOperator {
 public:
  HermitianOperator() = default;
  explicit HermitianOperator(const ComplexMatrix& m);

  static HermitianOperator identity(int dim);
  static HermitianOperator zero(int dim);

  int dim() const { return static_cast<int>(matrix_.rows()); }
  const ComplexMatrix& matrix() const { return matrix_; }
  double trace() const { return matrix_.trace().real(); }

  HermitianOperator transpose() const;

  HermitianOperator& operator+=(const HermitianOperator& other);
  HermitianOperator& operator-=(const HermitianOperator& other);
  HermitianOperator& operator*=(double s);

  friend HermitianOperator operator+(HermitianOperator a, const HermitianOperator& b) { return a += b; }
  friend HermitianOperator operator-(HermitianOperator a, const HermitianOperator& b) { return a -= b; }
  friend HermitianOperator operator*(double s, HermitianOperator a) { return a *= s; }
  friend HermitianOperator operator*(HermitianOperator a, double s) { return a *= s; }

 private:
  struct Trusted {};
  HermitianOperator(ComplexMatrix m, Trusted) : matrix_(std::move(m)) {}

  ComplexMatrix matrix_;

  friend HermitianOperator kron(const HermitianOperator&, const HermitianOperator&);
};

/// Hermitian, unit trace, positive semidefinite.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(const ComplexMatrix& m);
  explicit DensityMatrix(HermitianOperator h);

  static DensityMatrix maximally_mixed(int dim);
  /// rho = (1 + x X + y Y + z Z)/2; requires |r| <= 1.
  static DensityMatrix from_bloch(double x, double y, double z);

  int dim() const { return op_.dim(); }
  const ComplexMatrix& matrix() const { return op_.matrix(); }
  const HermitianOperator& op() const { return op_; }
  operator const HermitianOperator&() const { return op_; }  // NOLINT

  /// Tr(rho^2).
  double purity() const;

 private:
  HermitianOperator op_;
};

/// Unit vector in C^d.
class PureState {
 public:
  PureState() = default;
  explicit PureState(ComplexVector amplitudes);

  /// Rescales to unit norm; throws on the zero vector.
  static PureState normalized(const ComplexVector& v);
  static PureState basis(int dim, int index);

  int dim() const { return static_cast<int>(amplitudes_.size()); }
  const ComplexVector& amplitudes() const { return amplitudes_; }

  DensityMatrix projector() const;
  Complex inner(const PureState& other) const { return amplitudes_.dot(other.amplitudes_); }
  PureState tensor(const PureState& other) const;
  PureState tensor_power(int k) const;

 private:
  ComplexVector amplitudes_;
};

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
HermitianOperator kron(const HermitianOperator& a, const HermitianOperator& b);
ComplexMatrix tensor_power(const ComplexMatrix& m, int k);
DensityMatrix tensor_power(const DensityMatrix& rho, int k);

/// Trace over every tensor factor not listed in `keep`; kept factors stay in
/// their original order. `dims` lists the factor dimensions.
ComplexMatrix partial_trace(const ComplexMatrix& m, std::span<const int> dims,
                            std::span<const int> keep);

/// Eigenvalues in descending order with matching orthonormal eigenvectors
/// (columns), so that H = V diag(values) V^dagger.
struct HermitianEigen {
  RealVector values;
  ComplexMatrix vectors;
};

HermitianEigen eig_hermitian(const HermitianOperator& h);

double min_eigenvalue(const HermitianOperator& h);

/// Sum of absolute eigenvalues.
double trace_norm(const HermitianOperator& h);

/// [[Re H, -Im H], [Im H, Re H]]. Same spectrum as H with doubled
/// multiplicities.
RealMatrix real_embedding(const HermitianOperator& h);

/// Inverse of real_embedding on the Hermitian-structured subspace; for a
/// general symmetric X = [[A, B^T], [B, C]] returns ((A + C) + i(B - B^T))/2,
/// which is PSD whenever X is.
HermitianOperator from_real_embedding(const RealMatrix& x);

/// Hilbert-Schmidt orthonormal basis of d x d Hermitian matrices: the
/// diagonal units E_aa, then (E_ab + E_ba)/sqrt2 and i(E_ab - E_ba)/sqrt2 for
/// a < b.
std::vector<ComplexMatrix> hermitian_basis(int dim);

/// Real coordinates of a Hermitian matrix in `hermitian_basis(dim)`.
RealVector hermitian_coordinates(const ComplexMatrix& h);
ComplexMatrix from_hermitian_coordinates(const RealVector& coords, int dim);

namespace pauli {
ComplexMatrix I();
ComplexMatrix X();
ComplexMatrix Y();
ComplexMatrix Z();
/// Tensor product of single-qubit Paulis named by the characters of `word`
/// (I, X, Y, Z), e.g. "XZ".
ComplexMatrix from_word(const std::string& word);
}  // namespace pauli

}  // namespace vclone
