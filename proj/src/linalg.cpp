#include "vclone/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vclone {

const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// HermitianOperator

HermitianOperator::HermitianOperator(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError("HermitianOperator: matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected square");
  }
  if (m.rows() == 0) throw DimensionError("HermitianOperator: empty matrix");
  if (!m.allFinite()) throw LinalgError("HermitianOperator: non-finite entries");
  const ComplexMatrix sym = 0.5 * (m + m.adjoint());
  const double correction = max_abs(m - sym);
  if (correction > default_tolerances().hermitian_reject) {
    throw NotHermitianError("HermitianOperator: matrix deviates from its adjoint by " +
                            std::to_string(correction));
  }
  matrix_ = sym;
}

HermitianOperator HermitianOperator::identity(int dim) {
  return HermitianOperator(ComplexMatrix::Identity(dim, dim), Trusted{});
}

HermitianOperator HermitianOperator::zero(int dim) {
  return HermitianOperator(ComplexMatrix::Zero(dim, dim), Trusted{});
}

HermitianOperator HermitianOperator::transpose() const {
  return HermitianOperator(matrix_.transpose(), Trusted{});
}

HermitianOperator& HermitianOperator::operator+=(const HermitianOperator& other) {
  if (other.dim() != dim()) throw DimensionError("HermitianOperator: dimension mismatch in +");
  matrix_ += other.matrix_;
  return *this;
}

HermitianOperator& HermitianOperator::operator-=(const HermitianOperator& other) {
  if (other.dim() != dim()) throw DimensionError("HermitianOperator: dimension mismatch in -");
  matrix_ -= other.matrix_;
  return *this;
}

HermitianOperator& HermitianOperator::operator*=(double s) {
  matrix_ *= s;
  return *this;
}

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(const ComplexMatrix& m) : DensityMatrix(HermitianOperator(m)) {}

DensityMatrix::DensityMatrix(HermitianOperator h) : op_(std::move(h)) {
  const auto& tol = default_tolerances();
  const double tr = op_.trace();
  if (std::abs(tr - 1.0) > tol.trace) {
    throw InvalidStateError("DensityMatrix: trace is " + std::to_string(tr));
  }
  const double lmin = min_eigenvalue(op_);
  if (lmin < -tol.psd) {
    throw InvalidStateError("DensityMatrix: negative eigenvalue " + std::to_string(lmin));
  }
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::from_bloch(double x, double y, double z) {
  const double r = std::sqrt(x * x + y * y + z * z);
  if (r > 1.0 + 1e-12) {
    throw InvalidStateError("DensityMatrix: Bloch vector length " + std::to_string(r) + " > 1");
  }
  return DensityMatrix(0.5 * (pauli::I() + x * pauli::X() + y * pauli::Y() + z * pauli::Z()));
}

double DensityMatrix::purity() const {
  return (matrix() * matrix()).trace().real();
}

// ---------------------------------------------------------------------------
// PureState

PureState::PureState(ComplexVector amplitudes) : amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() == 0) throw DimensionError("PureState: empty vector");
  const double n = amplitudes_.norm();
  if (std::abs(n - 1.0) > default_tolerances().unit_norm) {
    throw InvalidStateError("PureState: norm is " + std::to_string(n));
  }
}

PureState PureState::normalized(const ComplexVector& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidStateError("PureState: zero or non-finite vector");
  return PureState(v / n);
}

PureState PureState::basis(int dim, int index) {
  ComplexVector v = ComplexVector::Zero(dim);
  v(index) = 1.0;
  return PureState(v);
}

DensityMatrix PureState::projector() const {
  return DensityMatrix(ComplexMatrix(amplitudes_ * amplitudes_.adjoint()));
}

PureState PureState::tensor(const PureState& other) const {
  return PureState::normalized(kron(amplitudes_, other.amplitudes_));
}

PureState PureState::tensor_power(int k) const {
  if (k < 1) throw DimensionError("PureState::tensor_power: k must be positive");
  return PureState::normalized(vclone::tensor_power(amplitudes_, k));
}

// ---------------------------------------------------------------------------
// Products and partial trace

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

HermitianOperator kron(const HermitianOperator& a, const HermitianOperator& b) {
  return HermitianOperator(kron(a.matrix(), b.matrix()), HermitianOperator::Trusted{});
}

ComplexMatrix tensor_power(const ComplexMatrix& m, int k) {
  if (k < 1) throw DimensionError("tensor_power: k must be positive");
  ComplexMatrix out = m;
  for (int i = 1; i < k; ++i) out = kron(out, m);
  return out;
}

DensityMatrix tensor_power(const DensityMatrix& rho, int k) {
  return DensityMatrix(tensor_power(rho.matrix(), k));
}

ComplexMatrix partial_trace(const ComplexMatrix& m, std::span<const int> dims,
                            std::span<const int> keep) {
  const int nf = static_cast<int>(dims.size());
  if (nf == 0) throw DimensionError("partial_trace: no tensor factors given");
  long total = 1;
  for (int d : dims) {
    if (d <= 0) throw DimensionError("partial_trace: factor dimensions must be positive");
    total *= d;
  }
  if (m.rows() != m.cols() || m.rows() != total) {
    throw DimensionError("partial_trace: matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", factors multiply to " +
                         std::to_string(total));
  }
  std::vector<bool> kept(nf, false);
  for (int k : keep) {
    if (k < 0 || k >= nf) throw DimensionError("partial_trace: keep index out of range");
    kept[k] = true;
  }
  long out_dim = 1;
  for (int f = 0; f < nf; ++f) {
    if (kept[f]) out_dim *= dims[f];
  }

  // strides of the full index and of the kept-factor output index
  std::vector<long> stride(nf), out_stride(nf, 0);
  long s = 1, os = 1;
  for (int f = nf - 1; f >= 0; --f) {
    stride[f] = s;
    s *= dims[f];
    if (kept[f]) {
      out_stride[f] = os;
      os *= dims[f];
    }
  }

  ComplexMatrix out = ComplexMatrix::Zero(out_dim, out_dim);
  std::vector<int> ri(nf), ci(nf);
  for (long r = 0; r < total; ++r) {
    long rem = r, r_out = 0;
    for (int f = 0; f < nf; ++f) {
      ri[f] = static_cast<int>(rem / stride[f]);
      rem %= stride[f];
      r_out += ri[f] * out_stride[f];
    }
    for (long c = 0; c < total; ++c) {
      long crem = c, c_out = 0;
      bool match = true;
      for (int f = 0; f < nf; ++f) {
        ci[f] = static_cast<int>(crem / stride[f]);
        crem %= stride[f];
        if (kept[f]) {
          c_out += ci[f] * out_stride[f];
        } else if (ci[f] != ri[f]) {
          match = false;
          break;
        }
      }
      if (match) out(r_out, c_out) += m(r, c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spectra

HermitianEigen eig_hermitian(const HermitianOperator& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h.matrix());
  if (es.info() != Eigen::Success) throw LinalgError("eig_hermitian: eigensolver did not converge");
  const int n = h.dim();
  HermitianEigen out{RealVector(n), ComplexMatrix(n, n)};
  // Eigen returns ascending order
  for (int i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

double min_eigenvalue(const HermitianOperator& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double trace_norm(const HermitianOperator& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

RealMatrix real_embedding(const HermitianOperator& h) {
  const int n = h.dim();
  RealMatrix out(2 * n, 2 * n);
  const RealMatrix re = h.matrix().real();
  const RealMatrix im = h.matrix().imag();
  out.topLeftCorner(n, n) = re;
  out.topRightCorner(n, n) = -im;
  out.bottomLeftCorner(n, n) = im;
  out.bottomRightCorner(n, n) = re;
  return out;
}

HermitianOperator from_real_embedding(const RealMatrix& x) {
  if (x.rows() != x.cols() || x.rows() % 2 != 0) {
    throw DimensionError("from_real_embedding: expected an even square matrix");
  }
  const Eigen::Index n = x.rows() / 2;
  const RealMatrix a = x.topLeftCorner(n, n);
  const RealMatrix b = x.bottomLeftCorner(n, n);
  const RealMatrix bt = x.topRightCorner(n, n).transpose();
  const RealMatrix c = x.bottomRightCorner(n, n);
  ComplexMatrix h(n, n);
  h.real() = 0.5 * (a + c);
  // average the two copies of B for symmetric input that is slightly off
  h.imag() = 0.25 * ((b + bt) - (b + bt).transpose());
  return HermitianOperator(h);
}

std::vector<ComplexMatrix> hermitian_basis(int dim) {
  std::vector<ComplexMatrix> basis;
  basis.reserve(static_cast<std::size_t>(dim) * dim);
  const double r = 1.0 / std::sqrt(2.0);
  for (int a = 0; a < dim; ++a) {
    ComplexMatrix e = ComplexMatrix::Zero(dim, dim);
    e(a, a) = 1.0;
    basis.push_back(std::move(e));
  }
  for (int a = 0; a < dim; ++a) {
    for (int b = a + 1; b < dim; ++b) {
      ComplexMatrix s = ComplexMatrix::Zero(dim, dim);
      s(a, b) = r;
      s(b, a) = r;
      basis.push_back(std::move(s));
      ComplexMatrix t = ComplexMatrix::Zero(dim, dim);
      t(a, b) = Complex(0.0, r);
      t(b, a) = Complex(0.0, -r);
      basis.push_back(std::move(t));
    }
  }
  return basis;
}

RealVector hermitian_coordinates(const ComplexMatrix& h) {
  const int dim = static_cast<int>(h.rows());
  RealVector c(dim * dim);
  const double s2 = std::sqrt(2.0);
  int k = 0;
  for (int a = 0; a < dim; ++a) c(k++) = h(a, a).real();
  for (int a = 0; a < dim; ++a) {
    for (int b = a + 1; b < dim; ++b) {
      // Tr(S h) and Tr(T h) for the off-diagonal basis pair
      c(k++) = s2 * 0.5 * (h(a, b) + h(b, a)).real();
      c(k++) = s2 * 0.5 * (h(a, b) - h(b, a)).imag();
    }
  }
  return c;
}

ComplexMatrix from_hermitian_coordinates(const RealVector& coords, int dim) {
  if (coords.size() != static_cast<Eigen::Index>(dim) * dim) {
    throw DimensionError("from_hermitian_coordinates: wrong coordinate count");
  }
  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
  const double r = 1.0 / std::sqrt(2.0);
  int k = 0;
  for (int a = 0; a < dim; ++a) h(a, a) = coords(k++);
  for (int a = 0; a < dim; ++a) {
    for (int b = a + 1; b < dim; ++b) {
      const double s = coords(k++);
      const double t = coords(k++);
      h(a, b) = Complex(r * s, r * t);
      h(b, a) = Complex(r * s, -r * t);
    }
  }
  return h;
}

namespace pauli {

ComplexMatrix I() { return ComplexMatrix::Identity(2, 2); }

ComplexMatrix X() {
  ComplexMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

ComplexMatrix Y() {
  ComplexMatrix m(2, 2);
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}

ComplexMatrix Z() {
  ComplexMatrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

ComplexMatrix from_word(const std::string& word) {
  if (word.empty()) throw std::invalid_argument("pauli::from_word: empty word");
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (char c : word) {
    switch (c) {
      case 'I': case 'i': out = kron(out, I()); break;
      case 'X': case 'x': out = kron(out, X()); break;
      case 'Y': case 'y': out = kron(out, Y()); break;
      case 'Z': case 'z': out = kron(out, Z()); break;
      default:
        throw std::invalid_argument(std::string("pauli::from_word: unknown letter '") + c + "'");
    }
  }
  return out;
}

}  // namespace pauli

}  // namespace vclone
