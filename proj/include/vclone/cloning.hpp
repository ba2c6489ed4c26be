#pragma once

// Virtual cloning of finite state sets: the linear-independence criterion,
// explicit cloning maps, the cost SDP and its dual, closed forms for pure
// pairs and discrimination-based bounds.

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vclone/channels.hpp"
#include "vclone/linalg.hpp"
#include "vclone/sdp.hpp"

namespace vclone::cloning {

class CloningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The state set is linearly dependent, so no HPTP cloner exists.
class NotClonableError : public CloningError {
 public:
  using CloningError::CloningError;
};

class SolverFailure : public CloningError {
 public:
  SolverFailure(const std::string& what, sdp::Status status)
      : CloningError(what), status_(status) {}
  sdp::Status status() const { return status_; }

 private:
  sdp::Status status_;
};

// ---------------------------------------------------------------------------
// Clonability

struct ClonabilityResult {
  bool clonable = false;
  int rank = 0;
  RealVector gram_singular_values;  // descending
};

/// Linear independence of the density matrices, decided on the Gram matrix
/// Tr(rho_i rho_j): independent iff sigma_min > tol * sigma_max.
ClonabilityResult check_virtually_clonable(
    const std::vector<DensityMatrix>& states,
    double tol = default_tolerances().linear_independence);

/// Smallest k <= max_k for which the k-fold tensor powers are linearly
/// independent. Distinct states always succeed by k = m - 1.
int min_copies_for_independence(const std::vector<DensityMatrix>& states, int max_k);

/// An HPTP 1 -> n cloner of a linearly independent set, fixed by extending
/// the set to a basis of states and asking every basis state to be cloned.
ChoiMatrix build_cloning_map(const std::vector<DensityMatrix>& states, int n);

// ---------------------------------------------------------------------------
// Optimal cost

struct CloneProblem {
  std::vector<DensityMatrix> states;
  int k = 1;  // input copies
  int n = 2;  // output copies

  /// Throws CloningError when malformed or too large (d^k * d^n > 4096).
  void validate() const;
  int dim() const { return states.empty() ? 0 : states.front().dim(); }
  int dim_in() const;
  int dim_out() const;
  /// rho_i^{(x)k}
  std::vector<DensityMatrix> inputs() const;
  /// rho_i^{(x)n}
  std::vector<DensityMatrix> targets() const;
};

/// Variables J_plus, J_minus (embedded Hermitian blocks) and free
/// (lambda_plus, lambda_minus). Rows: one per (state, output-basis element)
/// for the cloning condition, then the trace-preservation rows of each branch.
sdp::Problem primal_sdp(const CloneProblem& problem);

/// Blocks: the two slacks sum rho^T (x) Y_i - M_minus (x) 1 and
/// M_plus (x) 1 - sum rho^T (x) Y_i; free variables: coordinates of every Y_i,
/// then M_minus, then M_plus. Minimizes -sum Tr(rho_i^n Y_i).
sdp::Problem dual_sdp(const CloneProblem& problem);

struct DualCertificate {
  std::vector<HermitianOperator> Y;
  HermitianOperator M_plus;
  HermitianOperator M_minus;
  double objective = 0.0;  // sum_i Tr(rho_i^n Y_i)
};

struct DualFeasibility {
  double lower_min_eigenvalue = 0.0;  // of sum rho^T (x) Y - M_minus (x) 1
  double upper_min_eigenvalue = 0.0;  // of M_plus (x) 1 - sum rho^T (x) Y
  double trace_plus_error = 0.0;      // |Tr M_plus - 1|
  double trace_minus_error = 0.0;     // |Tr M_minus + 1|
  double objective = 0.0;

  bool feasible(double tol) const {
    return lower_min_eigenvalue >= -tol && upper_min_eigenvalue >= -tol &&
           trace_plus_error <= tol && trace_minus_error <= tol;
  }
};

DualFeasibility check_dual_certificate(const CloneProblem& problem, const DualCertificate& cert);

DualCertificate certificate_from_dual_solution(const CloneProblem& problem,
                                               const sdp::Solution& dual_solution);
DualCertificate certificate_from_primal_solution(const CloneProblem& problem,
                                                 const sdp::Solution& primal_solution);

struct SolverReport {
  sdp::Status primal_status = sdp::Status::MaxIterations;
  sdp::Status dual_status = sdp::Status::MaxIterations;
  int primal_iterations = 0;
  int dual_iterations = 0;
  double primal_value = 0.0;  // optimum of the primal SDP
  double dual_value = 0.0;    // optimum of the dual SDP (as a maximization)
  double gap = 0.0;           // |primal_value - dual_value|
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double seconds = 0.0;
  // false when the dual values come from the dual iterate of the primal solve
  // (large problems), true when the dual SDP was solved on its own
  bool separate_dual = true;
};

struct CloneCostResult {
  double eta = 0.0;
  QPDecomposition qpd;
  DualCertificate dual_certificate;
  SolverReport solver_report;
  double clone_residual = 0.0;  // max_i |apply(qpd)(rho_i^k) - rho_i^n|_max
};

CloneCostResult optimal_cost(const CloneProblem& problem, const sdp::Options& opts = {});

// ---------------------------------------------------------------------------
// Pure pairs

/// |<a|b>|^2
double fidelity(const PureState& a, const PureState& b);

/// sqrt((1 - F^n) / (1 - F^k)) for F = |<psi1|psi2>|^2.
double pure_pair_cost(const PureState& psi1, const PureState& psi2, int k, int n);
/// The n -> infinity limit 1 / sqrt(1 - F^k).
double pure_pair_cost_limit(const PureState& psi1, const PureState& psi2, int k);

using PurePair = std::pair<PureState, PureState>;

/// max(1, sqrt((1 - F') / (1 - F))) for psi -> phi.
double pure_conversion_cost(const PurePair& psi, const PurePair& phi);

/// Cost-optimal QPD with psi.first -> phi.first and psi.second -> phi.second.
QPDecomposition optimal_pure_map(const PurePair& psi, const PurePair& phi);
/// optimal_pure_map for psi^{(x)k} -> psi^{(x)n}.
QPDecomposition optimal_pure_cloner(const PureState& psi1, const PureState& psi2, int k, int n);

struct CanonicalParameters {
  double xi = 1.0;  // sqrt((1-F')/(1-F))
  double mu = 1.0;  // sqrt(F'/F)
  double y_min = 0.0;
  double y_max = 0.0;
};

/// Parameters of the canonical qubit problem for F > F', with the interval
/// of the free parameter y (at gamma = 0) that attains the optimum.
CanonicalParameters canonical_parameters(double F, double F_prime);

/// (1(x)1 + r 1(x)Z + xi X(x)X + y Y(x)Y + z Z(x)Z)/2 with r = gamma sqrt(F),
/// z = mu - gamma: the Choi matrix of a canonical qubit conversion map.
ChoiMatrix canonical_pure_choi(double F, double F_prime, double gamma, double y);

// ---------------------------------------------------------------------------
// Discrimination bounds

struct HelstromMeasurement {
  HermitianOperator P_plus;
  HermitianOperator P_minus;
  double norm = 0.0;                 // |p1 rho1 - p2 rho2|_1
  double success_probability = 0.0;  // (1 + norm) / 2
};

HelstromMeasurement helstrom_measurement(const HermitianOperator& rho1,
                                         const HermitianOperator& rho2, double p1, double p2);

/// 101 values of p1 evenly spaced in [0.005, 0.995]; includes 1/2.
std::vector<double> default_prior_grid();

struct CloneBounds {
  double lower = 1.0;
  double upper = 1.0;
  std::pair<double, double> priors_used{0.5, 0.5};
  double equal_prior_lower = 1.0;
};

/// Lower bound maximized over the grid of p1 values (1/2 is always added),
/// upper bound 4 / |rho1 - rho2|_1 - 1.
CloneBounds cost_bounds(const DensityMatrix& rho1, const DensityMatrix& rho2, int n,
                        const std::vector<double>& prior_grid = default_prior_grid());

DualCertificate dual_certificate_from_discrimination(const DensityMatrix& rho1,
                                                     const DensityMatrix& rho2, int n,
                                                     double p1 = 0.5);

/// Cloner that measures which state it was given, then prepares n copies.
/// For two states its cost is 4 / |rho1 - rho2|_1 - 1 for every n.
QPDecomposition discrimination_cloner(const std::vector<DensityMatrix>& states, int n,
                                      const sdp::Options& opts = {});

}  // namespace vclone::cloning
