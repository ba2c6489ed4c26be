#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "vclone/cloning.hpp"

using namespace vclone;
using namespace vclone::cloning;
using vclone::testing::random_density;
using vclone::testing::random_pure;
using vclone::testing::uniform;

namespace {

DensityMatrix bloch(double x, double y, double z) { return DensityMatrix::from_bloch(x, y, z); }
DensityMatrix ket0() { return bloch(0, 0, 1); }
DensityMatrix ket1() { return bloch(0, 0, -1); }
DensityMatrix ketp() { return bloch(1, 0, 0); }
DensityMatrix mixed() { return DensityMatrix::maximally_mixed(2); }

PureState pure(double theta, double phi = 0.0) {
  ComplexVector v(2);
  v << std::cos(theta / 2), std::polar(std::sin(theta / 2), phi);
  return PureState(v);
}

double diff(const ComplexMatrix& a, const ComplexMatrix& b) { return max_abs(a - b); }

// Oracle for the trace norm: singular values of the matrix, computed by JacobiSVD.
double svd_trace_norm(const ComplexMatrix& m) {
  return Eigen::JacobiSVD<ComplexMatrix>(m).singularValues().sum();
}

CloneProblem pair_problem(const DensityMatrix& a, const DensityMatrix& b, int n) {
  CloneProblem p;
  p.states = {a, b};
  p.n = n;
  return p;
}

double max_clone_error(const QPDecomposition& q, const std::vector<DensityMatrix>& states, int n) {
  double e = 0.0;
  for (const auto& s : states) {
    e = std::max(e, diff(apply_qpd(q, s.op()).matrix(), tensor_power(s.matrix(), n)));
  }
  return e;
}

}  // namespace

TEST(Clonable, PaperExamples) {
  const ClonabilityResult a = check_virtually_clonable({ket0(), ketp()});
  EXPECT_TRUE(a.clonable);
  EXPECT_EQ(a.rank, 2);
  const ClonabilityResult b = check_virtually_clonable({ket0(), ket1(), mixed()});
  EXPECT_FALSE(b.clonable);
  EXPECT_EQ(b.rank, 2);
  EXPECT_TRUE(check_virtually_clonable({mixed()}).clonable);
  EXPECT_THROW(check_virtually_clonable({}), CloningError);
  // at most d^2 = 4 independent qubit states
  EXPECT_FALSE(check_virtually_clonable({ket0(), ket1(), ketp(), bloch(0, 1, 0), bloch(-1, 0, 0)}).clonable);
}

TEST(Clonable, MinCopies) {
  EXPECT_EQ(min_copies_for_independence({ket0(), ket1(), mixed()}, 4), 2);
  EXPECT_EQ(min_copies_for_independence({ket0(), ketp()}, 4), 1);
  EXPECT_THROW(min_copies_for_independence({ket0(), ket0()}, 4), CloningError);
  EXPECT_THROW(min_copies_for_independence({ket0(), ket1(), mixed()}, 1), CloningError);
}

TEST(Clonable, RandomDependentTriplesNeedAtMostTwoCopies) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    // third state on the segment between the first two: dependent, distinct
    const DensityMatrix a = random_density(2, rng), b = random_density(2, rng);
    const double w = uniform(rng, 0.2, 0.8);
    const DensityMatrix c(ComplexMatrix(w * a.matrix() + (1 - w) * b.matrix()));
    ASSERT_FALSE(check_virtually_clonable({a, b, c}).clonable);
    EXPECT_LE(min_copies_for_independence({a, b, c}, 4), 2);
  }
}

TEST(BuildMap, ClonesPairAndSingleState) {
  const ChoiMatrix j = build_cloning_map({ket0(), ketp()}, 2);
  EXPECT_TRUE(is_hptp(j, 1e-9).ok);
  for (const auto& s : {ket0(), ketp()}) {
    EXPECT_LT(diff(apply_choi(j, s.op()).matrix(), kron(s.matrix(), s.matrix())), 1e-9);
  }
  std::mt19937_64 rng(32);
  const DensityMatrix r = random_density(2, rng);
  const ChoiMatrix c = build_cloning_map({r}, 3);
  EXPECT_TRUE(is_hptp(c, 1e-9).ok);
  EXPECT_LT(diff(apply_choi(c, r.op()).matrix(), tensor_power(r.matrix(), 3)), 1e-9);
}

TEST(BuildMap, PauliQuadrupleAndDependentSetRejected) {
  const std::vector<DensityMatrix> quad{ket0(), ket1(), ketp(), bloch(0, 1, 0)};
  const ChoiMatrix j = build_cloning_map(quad, 2);
  EXPECT_TRUE(is_hptp(j, 1e-9).ok);
  for (const auto& s : quad) {
    EXPECT_LT(diff(apply_choi(j, s.op()).matrix(), kron(s.matrix(), s.matrix())), 1e-9);
  }
  EXPECT_THROW(build_cloning_map({ket0(), ket1(), mixed()}, 2), NotClonableError);
}

TEST(CloneProblem, Validation) {
  CloneProblem p = pair_problem(ket0(), ketp(), 2);
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(p.dim_in(), 2);
  EXPECT_EQ(p.dim_out(), 4);
  p.n = 1;
  EXPECT_THROW(p.validate(), CloningError);
  p.n = 12;  // 2^13 > 4096
  EXPECT_THROW(p.validate(), CloningError);
}

TEST(OptimalCost, ZeroPlusTwoAndThreeCopies) {
  const CloneCostResult r2 = optimal_cost(pair_problem(ket0(), ketp(), 2));
  EXPECT_NEAR(r2.eta, std::sqrt(1.5), 1e-6);
  EXPECT_NEAR(qpd_cost(r2.qpd), r2.eta, 1e-6);
  EXPECT_LT(r2.clone_residual, 1e-6);
  EXPECT_LT(r2.solver_report.gap, 1e-6);

  const CloneCostResult r3 = optimal_cost(pair_problem(ket0(), ketp(), 3));
  EXPECT_NEAR(r3.eta, std::sqrt(7.0 / 4.0), 1e-6);
  EXPECT_LT(r3.clone_residual, 1e-6);
}

TEST(OptimalCost, OrthogonalPairCostsOne) {
  const CloneCostResult r = optimal_cost(pair_problem(ket0(), ket1(), 2));
  EXPECT_NEAR(r.eta, 1.0, 1e-6);
  EXPECT_NEAR(r.solver_report.dual_value, 1.0, 1e-6);
}

TEST(OptimalCost, InvariantsOnRandomMixedPair) {
  std::mt19937_64 rng(33);
  const CloneProblem p = pair_problem(random_density(2, rng), random_density(2, rng), 2);
  const CloneCostResult r = optimal_cost(p);
  EXPECT_TRUE(is_cptp(r.qpd.choi_plus(), 1e-9).ok);
  EXPECT_TRUE(is_cptp(r.qpd.choi_minus(), 1e-9).ok);
  EXPECT_LT(max_clone_error(r.qpd, p.states, 2), 1e-6);
  const DualFeasibility f = check_dual_certificate(p, r.dual_certificate);
  EXPECT_TRUE(f.feasible(1e-7));
  EXPECT_LE(f.objective, r.eta + 1e-6);
  EXPECT_NEAR(f.objective, r.eta, 1e-6);
}

TEST(OptimalCost, TwoToThreeCopiesMatchesFormula) {
  const PureState a = pure(0.9), b = pure(2.1, 0.4);
  CloneProblem p = pair_problem(a.projector(), b.projector(), 3);
  p.k = 2;
  const CloneCostResult r = optimal_cost(p);
  EXPECT_NEAR(r.eta, pure_pair_cost(a, b, 2, 3), 1e-5);
}

TEST(OptimalCost, DependentSetIsNoGo) {
  CloneProblem p;
  p.states = {ket0(), ket1(), mixed()};
  EXPECT_THROW(optimal_cost(p), NotClonableError);
  EXPECT_EQ(sdp::solve(primal_sdp(p)).status, sdp::Status::Infeasible);
}

TEST(DualSdp, MatchesPrimalOptimum) {
  const CloneProblem p = pair_problem(ket0(), ketp(), 2);
  const sdp::Solution d = sdp::solve(dual_sdp(p));
  ASSERT_EQ(d.status, sdp::Status::Optimal);
  EXPECT_NEAR(-d.primal_obj, std::sqrt(1.5), 1e-6);
  const DualCertificate c = certificate_from_dual_solution(p, d);
  EXPECT_TRUE(check_dual_certificate(p, c).feasible(1e-7));

  const sdp::Solution pr = sdp::solve(primal_sdp(p));
  const DualCertificate cp = certificate_from_primal_solution(p, pr);
  const DualFeasibility fp = check_dual_certificate(p, cp);
  EXPECT_TRUE(fp.feasible(1e-6));
  EXPECT_NEAR(fp.objective, std::sqrt(1.5), 1e-6);
}

TEST(PurePair, ClosedForms) {
  const PureState z = pure(0.0), p = pure(M_PI / 2);
  EXPECT_NEAR(fidelity(z, p), 0.5, 1e-15);
  EXPECT_NEAR(pure_pair_cost(z, p, 1, 2), std::sqrt(1.5), 1e-15);
  EXPECT_NEAR(pure_pair_cost_limit(z, p, 1), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(pure_pair_cost(z, pure(M_PI), 1, 5), 1.0, 1e-15);
  EXPECT_THROW(pure_pair_cost(z, z, 1, 2), CloningError);
}

TEST(PurePair, ConversionCost) {
  // F = 1/2 -> F' = 1/4
  const PurePair psi{pure(0.0), pure(M_PI / 2)};
  const PurePair phi{pure(0.0), pure(2 * std::acos(0.5))};
  ASSERT_NEAR(fidelity(phi.first, phi.second), 0.25, 1e-14);
  EXPECT_NEAR(pure_conversion_cost(psi, phi), std::sqrt(1.5), 1e-15);
  EXPECT_DOUBLE_EQ(pure_conversion_cost(phi, psi), 1.0);
  EXPECT_DOUBLE_EQ(pure_conversion_cost(psi, psi), 1.0);
  // ratio of trace norms when F > F'
  const double ratio = svd_trace_norm(phi.first.projector().matrix() - phi.second.projector().matrix()) /
                       svd_trace_norm(psi.first.projector().matrix() - psi.second.projector().matrix());
  EXPECT_NEAR(pure_conversion_cost(psi, phi), ratio, 1e-12);
}

TEST(PurePair, CanonicalMapCoefficients) {
  const double F = 0.5, Fp = 0.25;
  const CanonicalParameters cp = canonical_parameters(F, Fp);
  EXPECT_NEAR(cp.xi, std::sqrt(1.5), 1e-15);
  EXPECT_NEAR(cp.mu, std::sqrt(0.5), 1e-15);
  const double y = 1 - cp.xi - cp.mu;
  EXPECT_GE(y, cp.y_min - 1e-12);
  EXPECT_LE(y, cp.y_max + 1e-12);
  // the Choi at y = 1 - xi - mu is the map a rho + b X rho X - c Z rho Z
  const ChoiMatrix j = canonical_pure_choi(F, Fp, 0.0, y);
  const ComplexMatrix expect = ((cp.xi + cp.mu) / 2) * identity_choi(2).matrix() +
                               ((1 - cp.mu) / 2) * choi_from_kraus({pauli::X()}, 2, 2).matrix() -
                               ((cp.xi - 1) / 2) * choi_from_kraus({pauli::Z()}, 2, 2).matrix();
  EXPECT_LT(diff(j.matrix(), expect), 1e-14);
  EXPECT_TRUE(is_hptp(j, 1e-12).ok);
}

TEST(PurePair, OptimalMapZeroPlusClones) {
  const PureState z = pure(0.0), p = pure(M_PI / 2);
  const QPDecomposition q = optimal_pure_cloner(z, p, 1, 2);
  EXPECT_NEAR(qpd_cost(q), std::sqrt(1.5), 1e-12);
  EXPECT_LT(max_clone_error(q, {z.projector(), p.projector()}, 2), 1e-10);
  EXPECT_TRUE(is_cptp(q.choi_plus(), 1e-9).ok);
  EXPECT_TRUE(is_cptp(q.choi_minus(), 1e-9).ok);
}

TEST(PurePair, IdentityConversionIsFree) {
  const PurePair psi{pure(0.3), pure(1.7, 0.5)};
  const QPDecomposition q = optimal_pure_map(psi, psi);
  EXPECT_DOUBLE_EQ(q.lambda_minus(), 0.0);
  EXPECT_LT(diff(apply_qpd(q, psi.first.projector().op()).matrix(), psi.first.projector().matrix()), 1e-10);
  EXPECT_LT(diff(apply_qpd(q, psi.second.projector().op()).matrix(), psi.second.projector().matrix()), 1e-10);
}

TEST(PurePair, RandomConversionsBetweenDimensions) {
  std::mt19937_64 rng(34);
  for (int t = 0; t < 10; ++t) {
    const PurePair psi{random_pure(3, rng), random_pure(3, rng)};
    const PurePair phi{random_pure(2, rng), random_pure(2, rng)};
    const QPDecomposition q = optimal_pure_map(psi, phi);
    EXPECT_NEAR(qpd_cost(q), pure_conversion_cost(psi, phi), 1e-12);
    EXPECT_LT(diff(apply_qpd(q, psi.first.projector().op()).matrix(), phi.first.projector().matrix()), 1e-10);
    EXPECT_LT(diff(apply_qpd(q, psi.second.projector().op()).matrix(), phi.second.projector().matrix()), 1e-10);
  }
}

TEST(Helstrom, Examples) {
  const HelstromMeasurement o = helstrom_measurement(ket0().op(), ket1().op(), 0.5, 0.5);
  EXPECT_NEAR(o.norm, 1.0, 1e-14);
  EXPECT_LT(diff(o.P_plus.matrix(), ket0().matrix()), 1e-14);
  EXPECT_LT(diff(o.P_minus.matrix(), ket1().matrix()), 1e-14);

  const HelstromMeasurement s = helstrom_measurement(ket0().op(), ket0().op(), 0.5, 0.5);
  EXPECT_NEAR(s.norm, 0.0, 1e-14);
  EXPECT_LT(diff(s.P_plus.matrix(), ComplexMatrix::Identity(2, 2)), 1e-14);

  const HelstromMeasurement zp = helstrom_measurement(ket0().op(), ketp().op(), 0.5, 0.5);
  EXPECT_NEAR(zp.success_probability, 0.5 + std::sqrt(2.0) / 4, 1e-14);
  EXPECT_THROW(helstrom_measurement(ket0().op(), ketp().op(), 0.6, 0.6), CloningError);
}

TEST(Helstrom, AttainsTraceNorm) {
  std::mt19937_64 rng(35);
  for (int t = 0; t < 10; ++t) {
    const DensityMatrix a = random_density(3, rng), b = random_density(3, rng);
    const double p1 = uniform(rng, 0.1, 0.9);
    const HelstromMeasurement h = helstrom_measurement(a.op(), b.op(), p1, 1 - p1);
    const ComplexMatrix g = p1 * a.matrix() - (1 - p1) * b.matrix();
    const double val = ((h.P_plus.matrix() - h.P_minus.matrix()) * g).trace().real();
    EXPECT_NEAR(val, svd_trace_norm(g), 1e-10);
    EXPECT_LT(diff(h.P_plus.matrix() + h.P_minus.matrix(), ComplexMatrix::Identity(3, 3)), 1e-12);
  }
}

TEST(Bounds, ZeroPlusAndOrthogonal) {
  const CloneBounds b = cost_bounds(ket0(), ketp(), 2);
  EXPECT_NEAR(b.equal_prior_lower, std::sqrt(1.5), 1e-9);
  EXPECT_NEAR(b.upper, 2 * std::sqrt(2.0) - 1, 1e-12);
  EXPECT_GE(b.lower, b.equal_prior_lower);

  const CloneBounds o = cost_bounds(ket0(), ket1(), 3);
  EXPECT_NEAR(o.lower, 1.0, 1e-12);
  EXPECT_NEAR(o.upper, 1.0, 1e-12);
  EXPECT_THROW(cost_bounds(ket0(), ket0(), 2), CloningError);
}

TEST(Bounds, PriorGrid) {
  const auto g = default_prior_grid();
  ASSERT_EQ(g.size(), 101u);
  EXPECT_DOUBLE_EQ(g.front(), 0.005);
  EXPECT_NEAR(g.back(), 0.995, 1e-15);
  EXPECT_NE(std::find(g.begin(), g.end(), 0.5), g.end());
}

TEST(Bounds, PurePairLowerBoundIsTight) {
  std::mt19937_64 rng(36);
  for (int t = 0; t < 10; ++t) {
    const PureState a = random_pure(2, rng), b = random_pure(2, rng);
    for (int n : {2, 3, 4}) {
      const CloneBounds cb = cost_bounds(a.projector(), b.projector(), n);
      EXPECT_NEAR(cb.equal_prior_lower, pure_pair_cost(a, b, 1, n), 1e-9);
      EXPECT_LE(cb.lower, cb.upper + 1e-12);
      EXPECT_GE(cb.lower, 1.0 - 1e-12);
    }
  }
}

TEST(Bounds, MixedPairSandwich) {
  const DensityMatrix a = bloch(0, 0, 0.5), b = bloch(0.5, 0, 0);
  const CloneBounds cb = cost_bounds(a, b, 2);
  const double eta = optimal_cost(pair_problem(a, b, 2)).eta;
  EXPECT_LE(cb.lower - 1e-7, eta);
  EXPECT_LE(eta, cb.upper + 1e-7);
}

TEST(Certificate, DiscriminationCertificate) {
  const CloneProblem zp = pair_problem(ket0(), ketp(), 2);
  const DualCertificate c = dual_certificate_from_discrimination(ket0(), ketp(), 2);
  const DualFeasibility f = check_dual_certificate(zp, c);
  EXPECT_TRUE(f.feasible(1e-9));
  EXPECT_NEAR(f.objective, std::sqrt(1.5), 1e-9);

  const DualCertificate o = dual_certificate_from_discrimination(ket0(), ket1(), 3);
  EXPECT_NEAR(o.objective, 1.0, 1e-12);

  std::mt19937_64 rng(37);
  const DensityMatrix a = random_density(2, rng), b = random_density(2, rng);
  const double p1 = 0.3;
  const DualCertificate r = dual_certificate_from_discrimination(a, b, 2, p1);
  const CloneProblem rp = pair_problem(a, b, 2);
  EXPECT_TRUE(check_dual_certificate(rp, r).feasible(1e-9));
  // objective equals the prior-weighted lower bound
  const double num = svd_trace_norm(p1 * tensor_power(a.matrix(), 2) - (1 - p1) * tensor_power(b.matrix(), 2));
  const double den = svd_trace_norm(p1 * a.matrix() - (1 - p1) * b.matrix());
  EXPECT_NEAR(r.objective, num / den, 1e-9);
  EXPECT_LE(r.objective, optimal_cost(rp).eta + 1e-6);
}

TEST(Discrimination, PairClonerCost) {
  const QPDecomposition q2 = discrimination_cloner({ket0(), ketp()}, 2);
  const QPDecomposition q3 = discrimination_cloner({ket0(), ketp()}, 3);
  EXPECT_NEAR(qpd_cost(q2), 2 * std::sqrt(2.0) - 1, 1e-9);
  EXPECT_DOUBLE_EQ(qpd_cost(q2), qpd_cost(q3));
  EXPECT_LT(max_clone_error(q2, {ket0(), ketp()}, 2), 1e-8);
  EXPECT_LT(max_clone_error(q3, {ket0(), ketp()}, 3), 1e-8);

  const QPDecomposition o = discrimination_cloner({ket0(), ket1()}, 2);
  EXPECT_NEAR(qpd_cost(o), 1.0, 1e-12);
  EXPECT_LT(max_clone_error(o, {ket0(), ket1()}, 2), 1e-12);
}

TEST(Discrimination, ManyStatesAndNoGo) {
  const std::vector<DensityMatrix> three{ket0(), ketp(), bloch(0, 1, 0)};
  const QPDecomposition q = discrimination_cloner(three, 2);
  EXPECT_LT(max_clone_error(q, three, 2), 1e-8);
  EXPECT_GE(qpd_cost(q), 1.0);
  EXPECT_THROW(discrimination_cloner({ket0(), ket1(), mixed()}, 2), NotClonableError);
}
