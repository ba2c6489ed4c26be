#pragma once

// Seeded random generators for property tests.

#include <cmath>
#include <random>
#include <vector>

#include "vclone/channels.hpp"
#include "vclone/linalg.hpp"

namespace vclone::testing {

inline ComplexMatrix ginibre(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = Complex(g(rng), g(rng));
  return m;
}

// Haar-distributed via QR with the phase fix on R's diagonal.
inline ComplexMatrix random_unitary(int d, std::mt19937_64& rng) {
  Eigen::HouseholderQR<ComplexMatrix> qr(ginibre(d, d, rng));
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR();
  for (int j = 0; j < d; ++j) {
    const Complex z = r(j, j);
    q.col(j) *= z / std::abs(z);
  }
  return q;
}

inline PureState random_pure(int d, std::mt19937_64& rng) {
  return PureState::normalized(ginibre(d, 1, rng).col(0));
}

inline DensityMatrix random_density(int d, std::mt19937_64& rng, int rank = -1) {
  const ComplexMatrix g = ginibre(d, rank < 0 ? d : rank, rng);
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix(rho);
}

inline HermitianOperator random_hermitian(int d, std::mt19937_64& rng) {
  const ComplexMatrix g = ginibre(d, d, rng);
  return HermitianOperator(0.5 * (g + g.adjoint()));
}

inline std::vector<ComplexMatrix> random_kraus(int din, int dout, int count, std::mt19937_64& rng) {
  // isometry din -> dout*count, cut into blocks
  Eigen::HouseholderQR<ComplexMatrix> qr(ginibre(dout * count, din, rng));
  const ComplexMatrix v = ComplexMatrix(qr.householderQ()).leftCols(din);
  std::vector<ComplexMatrix> ks;
  for (int k = 0; k < count; ++k) ks.push_back(v.middleRows(k * dout, dout));
  return ks;
}

inline ChoiMatrix random_cptp(int din, int dout, std::mt19937_64& rng, int count = 2) {
  return choi_from_kraus(random_kraus(din, dout, count, rng), din, dout);
}

// (1 + a) L1 - a L2 with a > 0: HPTP, usually not CP.
inline ChoiMatrix random_hptp(int din, int dout, double a, std::mt19937_64& rng) {
  const ChoiMatrix c1 = random_cptp(din, dout, rng, 1);
  const ChoiMatrix c2 = random_cptp(din, dout, rng, 3);
  return ChoiMatrix(din, dout, (1.0 + a) * c1.op() - a * c2.op());
}

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace vclone::testing
