#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "vclone/channels.hpp"

using namespace vclone;
using vclone::testing::random_cptp;
using vclone::testing::random_density;
using vclone::testing::random_hermitian;
using vclone::testing::random_hptp;
using vclone::testing::random_kraus;

namespace {

HermitianOperator H(const ComplexMatrix& m) { return HermitianOperator(m); }

double diff(const ComplexMatrix& a, const ComplexMatrix& b) { return max_abs(a - b); }

// 1 -> 2 map with 1 -> 1(x)1/2 and s -> (s(x)1 + 1(x)s + s(x)s)/2 for each Pauli s.
ChoiMatrix zero_plus_cloner() {
  const ComplexMatrix i2 = pauli::I();
  std::vector<HermitianOperator> in{H(i2)}, out{H(kron(i2, i2) / 2.0)};
  for (const ComplexMatrix& s : {pauli::X(), pauli::Y(), pauli::Z()}) {
    in.push_back(H(s));
    out.push_back(H((kron(s, i2) + kron(i2, s) + kron(s, s)) / 2.0));
  }
  return map_from_basis_images(in, out);
}

DensityMatrix ket0() { return DensityMatrix::from_bloch(0, 0, 1); }
DensityMatrix ketp() { return DensityMatrix::from_bloch(1, 0, 0); }

}  // namespace

TEST(Choi, IdentityActsTrivially) {
  std::mt19937_64 rng(11);
  for (int d : {2, 3}) {
    const DensityMatrix rho = random_density(d, rng);
    EXPECT_LT(diff(apply_choi(identity_choi(d), rho.op()).matrix(), rho.matrix()), 1e-14);
  }
}

TEST(Choi, KrausExamples) {
  EXPECT_LT(diff(choi_from_kraus({pauli::I()}, 2, 2).matrix(), identity_choi(2).matrix()), 1e-15);

  std::mt19937_64 rng(12);
  const DensityMatrix rho = random_density(2, rng);
  const ChoiMatrix flip = choi_from_kraus({pauli::X()}, 2, 2);
  EXPECT_LT(diff(apply_choi(flip, rho.op()).matrix(), pauli::X() * rho.matrix() * pauli::X()), 1e-14);

  ComplexMatrix k0 = ComplexMatrix::Zero(2, 2), k1 = ComplexMatrix::Zero(2, 2);
  k0(0, 0) = 1.0;
  k1(0, 1) = 1.0;
  const ChoiMatrix reset = choi_from_kraus({k0, k1}, 2, 2);
  for (int t = 0; t < 5; ++t) {
    EXPECT_LT(diff(apply_choi(reset, random_density(2, rng).op()).matrix(), ket0().matrix()), 1e-14);
  }
  EXPECT_THROW(choi_from_kraus({ComplexMatrix::Identity(3, 2)}, 2, 2), DimensionError);
}

TEST(Choi, DimensionMismatchThrows) {
  EXPECT_THROW(apply_choi(identity_choi(2), HermitianOperator::identity(3)), DimensionError);
}

TEST(Choi, ApplyIsLinear) {
  std::mt19937_64 rng(13);
  const ChoiMatrix j = random_hptp(2, 3, 0.7, rng);
  for (int t = 0; t < 10; ++t) {
    const HermitianOperator r = random_hermitian(2, rng), s = random_hermitian(2, rng);
    const double a = vclone::testing::uniform(rng, -2, 2), b = vclone::testing::uniform(rng, -2, 2);
    const ComplexMatrix lhs = apply_choi(j, a * r + b * s).matrix();
    const ComplexMatrix rhs = a * apply_choi(j, r).matrix() + b * apply_choi(j, s).matrix();
    EXPECT_LT(diff(lhs, rhs), 1e-10);
  }
}

TEST(Choi, CompositionMatchesComposedKraus) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 5; ++t) {
    const auto ka = random_kraus(2, 3, 2, rng);
    const auto kb = random_kraus(3, 2, 3, rng);
    std::vector<ComplexMatrix> kab;
    for (const auto& b : kb)
      for (const auto& a : ka) kab.push_back(b * a);
    const ChoiMatrix direct = choi_from_kraus(kab, 2, 2);
    const ChoiMatrix composed = compose(choi_from_kraus(ka, 2, 3), choi_from_kraus(kb, 3, 2));
    EXPECT_LT(diff(direct.matrix(), composed.matrix()), 1e-9);
  }
}

TEST(Choi, TensorProductActsFactorwise) {
  std::mt19937_64 rng(15);
  const ChoiMatrix a = random_cptp(2, 2, rng), b = random_cptp(2, 3, rng);
  const DensityMatrix r = random_density(2, rng), s = random_density(2, rng);
  const ComplexMatrix lhs = apply_choi(tensor_product(a, b), kron(r.op(), s.op())).matrix();
  const ComplexMatrix rhs = kron(apply_choi(a, r.op()).matrix(), apply_choi(b, s.op()).matrix());
  EXPECT_LT(diff(lhs, rhs), 1e-12);
}

TEST(Predicates, HptpAndCptpExamples) {
  EXPECT_TRUE(is_hptp(identity_choi(2), 1e-9).ok);
  EXPECT_TRUE(is_cptp(identity_choi(2), 1e-9).ok);
  const ChoiMatrix zero(2, 2, HermitianOperator::zero(4));
  EXPECT_FALSE(is_hptp(zero, 1e-9).ok);

  const ChoiMatrix cl = zero_plus_cloner();
  EXPECT_TRUE(is_hptp(cl, 1e-9).ok);
  const MapDiagnostics d = is_cptp(cl, 1e-9);
  EXPECT_FALSE(d.ok);
  ASSERT_TRUE(d.min_eigenvalue.has_value());
  // independent oracle: smallest eigenvalue of the 8x8 Choi via Eigen directly
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(cl.matrix());
  EXPECT_NEAR(*d.min_eigenvalue, es.eigenvalues().minCoeff(), 1e-12);
  EXPECT_LT(*d.min_eigenvalue, -1e-3);

  std::mt19937_64 rng(16);
  for (int t = 0; t < 5; ++t) EXPECT_TRUE(is_cptp(random_cptp(3, 2, rng, 3), 1e-9).ok);
}

TEST(BasisImages, ZeroPlusClonerClones) {
  const ChoiMatrix cl = zero_plus_cloner();
  for (const DensityMatrix& r : {ket0(), ketp()}) {
    EXPECT_LT(diff(apply_choi(cl, r.op()).matrix(), kron(r.matrix(), r.matrix())), 1e-12);
  }
}

TEST(BasisImages, IdentityAndDepolarizing) {
  std::vector<HermitianOperator> basis{H(pauli::I()), H(pauli::X()), H(pauli::Y()), H(pauli::Z())};
  EXPECT_LT(diff(map_from_basis_images(basis, basis).matrix(), identity_choi(2).matrix()), 1e-12);

  std::vector<HermitianOperator> images;
  for (const auto& b : basis) images.push_back(H(b.trace() * ComplexMatrix::Identity(4, 4) / 4.0));
  const ChoiMatrix dep = map_from_basis_images(basis, images);
  EXPECT_EQ(dep.dim_out(), 4);
  EXPECT_LT(diff(dep.matrix(), ComplexMatrix::Identity(8, 8) / 4.0), 1e-12);
}

TEST(BasisImages, RejectsNonSpanningAndInconsistent) {
  std::vector<HermitianOperator> three{H(pauli::I()), H(pauli::X()), H(pauli::Z())};
  EXPECT_THROW(map_from_basis_images(three, three), RankDeficiencyError);

  std::vector<HermitianOperator> basis{H(pauli::I()), H(pauli::X()), H(pauli::Y()), H(pauli::Z())};
  auto in = basis, out = basis;
  in.push_back(H(pauli::X()));
  out.push_back(H(pauli::Z()));  // contradicts X -> X
  EXPECT_THROW(map_from_basis_images(in, out), ChannelError);

  in.back() = H(pauli::X() + pauli::Z());
  out.back() = H(pauli::X() + pauli::Z());  // redundant but consistent
  EXPECT_NO_THROW(map_from_basis_images(in, out));
}

TEST(Qpd, CostExamplesAndValidation) {
  std::mt19937_64 rng(17);
  const ChoiMatrix a = random_cptp(2, 2, rng), b = random_cptp(2, 2, rng);
  EXPECT_DOUBLE_EQ(qpd_cost(QPDecomposition(1.0, 0.0, a, b)), 1.0);
  EXPECT_DOUBLE_EQ(qpd_cost(QPDecomposition(1.5, 0.5, a, b)), 2.0);
  const double xi = std::sqrt(3.0);
  EXPECT_NEAR(qpd_cost(QPDecomposition((xi + 1) / 2, (xi - 1) / 2, a, b)), xi, 1e-15);

  EXPECT_THROW(QPDecomposition(1.5, 0.4, a, b), ChannelError);
  EXPECT_THROW(QPDecomposition(2.0, 1.0, zero_plus_cloner(), zero_plus_cloner()), ChannelError);
}

TEST(Qpd, ApplicationIsTracePreserving) {
  std::mt19937_64 rng(18);
  const QPDecomposition q(1.8, 0.8, random_cptp(2, 3, rng), random_cptp(2, 3, rng));
  for (int t = 0; t < 10; ++t) {
    const HermitianOperator r = random_hermitian(2, rng);
    EXPECT_NEAR(apply_qpd(q, r).trace(), r.trace(), 1e-9);
  }
}

TEST(Qpd, OptimalOfCptpIsTrivial) {
  std::mt19937_64 rng(19);
  const ChoiMatrix c = random_cptp(2, 2, rng);
  const QPDecomposition q = optimal_qpd(c);
  EXPECT_NEAR(q.lambda_plus(), 1.0, 1e-7);
  EXPECT_NEAR(q.lambda_minus(), 0.0, 1e-7);
  EXPECT_LT(diff(q.combined().matrix(), c.matrix()), 1e-7);
}

TEST(Qpd, OptimalOfCanonicalQubitMap) {
  // rho -> ((xi+mu)/2) rho + ((1-mu)/2) X rho X - ((xi-1)/2) Z rho Z at F = 1/2, F' = 1/4
  const double xi = std::sqrt(1.5), mu = std::sqrt(0.5);
  const ComplexMatrix jp = ((xi + mu) / 2) * identity_choi(2).matrix() +
                           ((1 - mu) / 2) * choi_from_kraus({pauli::X()}, 2, 2).matrix();
  const ComplexMatrix jm = ((xi - 1) / 2) * choi_from_kraus({pauli::Z()}, 2, 2).matrix();
  const ChoiMatrix j(2, 2, H(jp - jm));
  const QPDecomposition q = optimal_qpd(j);
  EXPECT_NEAR(qpd_cost(q), xi, 1e-6);
  EXPECT_LT(diff(q.combined().matrix(), j.matrix()), 1e-7);
  EXPECT_TRUE(is_cptp(q.choi_plus(), 1e-9).ok);
  EXPECT_TRUE(is_cptp(q.choi_minus(), 1e-9).ok);
}

TEST(Qpd, OptimalOfFixedClonerIsAtLeastOptimalCloningCost) {
  const ChoiMatrix cl = zero_plus_cloner();
  const QPDecomposition q = optimal_qpd(cl);
  EXPECT_GE(qpd_cost(q), std::sqrt(1.5) - 1e-6);
  EXPECT_LT(diff(q.combined().matrix(), cl.matrix()), 1e-7);
  for (const DensityMatrix& r : {ket0(), ketp()}) {
    EXPECT_LT(diff(apply_qpd(q, r.op()).matrix(), kron(r.matrix(), r.matrix())), 1e-7);
  }
}

TEST(Qpd, FromPartsRestoresValidity) {
  std::mt19937_64 rng(20);
  const ChoiMatrix target = random_hptp(2, 2, 0.5, rng);
  // split the target into PSD parts by eigen-sign
  const HermitianEigen e = eig_hermitian(target.op());
  ComplexMatrix p = ComplexMatrix::Zero(4, 4), m = ComplexMatrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i) {
    const ComplexMatrix proj = e.vectors.col(i) * e.vectors.col(i).adjoint();
    (e.values(i) > 0 ? p : m) += std::abs(e.values(i)) * proj;
  }
  const QPDecomposition q = qpd_from_parts(H(p), H(m), 2, 2, target.op());
  EXPECT_LT(diff(q.combined().matrix(), target.matrix()), 1e-9);
  EXPECT_GE(qpd_cost(q), 1.0);
}

TEST(Iterate, OneToTwoClonerIteratesToThreeCopies) {
  const ChoiMatrix cl3 = iterate_cloner(zero_plus_cloner(), 3);
  EXPECT_EQ(cl3.dim_out(), 8);
  EXPECT_TRUE(is_hptp(cl3, 1e-9).ok);
  for (const DensityMatrix& r : {ket0(), ketp()}) {
    EXPECT_LT(diff(apply_choi(cl3, r.op()).matrix(), tensor_power(r.matrix(), 3)), 1e-12);
  }
}
