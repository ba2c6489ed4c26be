#pragma once

// Small dense semidefinite programs over block-diagonal real symmetric cones.
//
// Primal (standard form):
//   minimize    sum_b <C_b, X_b> + c_free^T u
//   subject to  sum_b <A_kb, X_b> + B_k^T u = b_k      k = 1..m
//               X_b >= 0,  u free
// Dual:
//   maximize    b^T y
//   subject to  C_b - sum_k y_k A_kb = S_b >= 0,   B^T y = c_free
//
// Hermitian problems enter through real_embedding(): a complex constraint
// Tr(H J) = v becomes <real_embedding(H)/2, X> = v on the embedded block.

#include <iosfwd>
#include <string>
#include <vector>

#include "vclone/linalg.hpp"

namespace vclone::sdp {

struct Constraint {
  /// One entry per block; a 0x0 matrix stands for an all-zero block.
  std::vector<RealMatrix> blocks;
  /// Coefficients of the free variables; empty means all zero.
  RealVector free;
  double rhs = 0.0;
};

struct Problem {
  std::vector<int> block_dims;
  /// One entry per block; a 0x0 matrix stands for a zero objective block.
  std::vector<RealMatrix> objective;
  int num_free = 0;
  RealVector free_objective;  // size num_free (or empty for zeros)
  std::vector<Constraint> constraints;

  /// Throws std::invalid_argument describing the first malformed field.
  void validate() const;
};

enum class Status { Optimal, Infeasible, Unbounded, MaxIterations };

std::string to_string(Status s);

struct Options {
  double tol = 1e-8;
  int max_iter = 200;
  /// Fraction-to-boundary factor for step lengths.
  double step_fraction = 0.98;
  bool record_history = false;
};

struct IterationRecord {
  int iteration = 0;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double mu = 0.0;
  double step_primal = 0.0;
  double step_dual = 0.0;
};

struct Solution {
  Status status = Status::MaxIterations;
  std::vector<RealMatrix> X;
  RealVector free;  // values of the free variables
  RealVector y;
  std::vector<RealMatrix> S;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double gap = 0.0;  // primal_obj - dual_obj
  double primal_residual = 0.0;  // relative: |A(X) + B u - b| / (1 + |b|)
  double dual_residual = 0.0;    // relative: |C - A^T y - S| / (1 + |C|)
  int iterations = 0;
  int removed_constraints = 0;   // linearly dependent rows dropped in presolve
  std::string message;
  std::vector<IterationRecord> history;
};

Solution solve(const Problem& p, const Options& opts = {});

struct VerificationCheck {
  std::string name;
  double value = 0.0;
  bool passed = false;
};

struct VerificationReport {
  std::vector<VerificationCheck> checks;
  bool passed() const;
  const VerificationCheck* find(const std::string& name) const;
};

/// Recomputes residuals, duality gap and cone membership from the raw
/// problem data, independent of the solver's internal bookkeeping.
VerificationReport verify_solution(const Problem& p, const Solution& s, double tol);

/// Plain-text dump in the SDPA sparse layout. The problem is written as
/// SDPA's dual form (max F0.Y s.t. Fi.Y = ci) with F0 = -C, Fi = A_i and
/// ci = b_i. Free variables u = u+ - u- are written as a trailing diagonal
/// (LP) block of size 2*num_free.
void write_sdpa(const Problem& p, std::ostream& out);
/// Reads back a dump produced by write_sdpa.
Problem read_sdpa(std::istream& in);

/// Symmetric-vector helpers: svec(X) . svec(Y) = <X, Y>.
RealVector svec(const RealMatrix& x);
RealMatrix smat(const RealVector& v, int dim);

}  // namespace vclone::sdp
