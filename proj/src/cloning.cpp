#include "vclone/cloning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace vclone::cloning {

namespace {

constexpr double kSameStateTol = 1e-10;
constexpr int kMaxSeparateDualRows = 1100;

int common_dim(const std::vector<DensityMatrix>& states) {
  if (states.empty()) throw CloningError("empty state set");
  const int d = states.front().dim();
  for (const auto& s : states) {
    if (s.dim() != d) throw DimensionError("states have different dimensions");
  }
  return d;
}

int ipow(int base, int e) {
  long long r = 1;
  for (int i = 0; i < e; ++i) {
    r *= base;
    if (r > (1LL << 30)) throw CloningError("dimension overflow");
  }
  return static_cast<int>(r);
}

double hs_inner(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a.adjoint().cwiseProduct(b.transpose())).sum().real();
}

RealVector gram_singular_values(const std::vector<DensityMatrix>& states, int k) {
  const auto m = static_cast<Eigen::Index>(states.size());
  RealMatrix g(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      g(i, j) = g(j, i) = std::pow(hs_inner(states[i].matrix(), states[j].matrix()), k);
    }
  }
  Eigen::JacobiSVD<RealMatrix> svd(g);
  return svd.singularValues();
}

int rank_of(const RealVector& sv, double tol) {
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  return static_cast<int>((sv.array() > tol * sv(0)).count());
}

void require_distinct(const std::vector<DensityMatrix>& states) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = i + 1; j < states.size(); ++j) {
      if (max_abs(states[i].matrix() - states[j].matrix()) < kSameStateTol) {
        throw CloningError("states " + std::to_string(i) + " and " + std::to_string(j) +
                           " coincide");
      }
    }
  }
}

// Full-rank states (1/d + eps B_j)/trace appended while they raise the rank.
std::vector<DensityMatrix> extension_states(const std::vector<DensityMatrix>& states) {
  const int d = common_dim(states);
  const double eps = 1.0 / (2.0 * d);
  std::vector<DensityMatrix> all = states;
  std::vector<DensityMatrix> extra;
  const ComplexMatrix id = ComplexMatrix::Identity(d, d) / static_cast<double>(d);
  for (const ComplexMatrix& b : hermitian_basis(d)) {
    if (static_cast<int>(all.size()) >= d * d) break;
    ComplexMatrix cand = id + eps * b;
    cand /= cand.trace().real();
    const DensityMatrix sigma(cand);
    all.push_back(sigma);
    if (check_virtually_clonable(all).clonable) {
      extra.push_back(sigma);
    } else {
      all.pop_back();
    }
  }
  if (static_cast<int>(all.size()) != d * d) {
    throw CloningError("could not extend the state set to a basis");
  }
  return extra;
}

ComplexMatrix unit_projector(int dim, int i) {
  ComplexMatrix p = ComplexMatrix::Zero(dim, dim);
  p(i, i) = 1.0;
  return p;
}

// Choi of X -> Tr(X) sigma.
ChoiMatrix constant_channel(int dim_in, const HermitianOperator& sigma) {
  return ChoiMatrix(dim_in, sigma.dim(), kron(HermitianOperator::identity(dim_in), sigma));
}

// Minimal-norm correction of J onto the affine set of exact TP cloners.
HermitianOperator project_onto_cloners(const HermitianOperator& j, const CloneProblem& problem) {
  const int din = problem.dim_in();
  const int dout = problem.dim_out();
  const std::vector<DensityMatrix> in = problem.inputs();
  const std::vector<DensityMatrix> out = problem.targets();
  const std::vector<ComplexMatrix> eout = hermitian_basis(dout);
  const std::vector<ComplexMatrix> fin = hermitian_basis(din);
  const auto rows = static_cast<Eigen::Index>(in.size() * eout.size() + fin.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(din) * dout * din * dout;
  RealMatrix a(rows, cols);
  RealVector b(rows);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const ComplexMatrix rt = in[i].matrix().transpose();
    const RealVector tc = hermitian_coordinates(out[i].matrix());
    for (std::size_t t = 0; t < eout.size(); ++t) {
      a.row(r) = hermitian_coordinates(kron(rt, eout[t])).transpose();
      b(r++) = tc(static_cast<Eigen::Index>(t));
    }
  }
  const ComplexMatrix id_out = ComplexMatrix::Identity(dout, dout);
  for (const ComplexMatrix& f : fin) {
    a.row(r) = hermitian_coordinates(kron(f, id_out)).transpose();
    b(r++) = f.trace().real();
  }
  const RealVector x0 = hermitian_coordinates(j.matrix());
  Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod(a);
  const RealVector dx = cod.solve(RealVector(b - a * x0));
  return HermitianOperator(from_hermitian_coordinates(x0 + dx, din * dout));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Canonical {
  ComplexVector v0, v1;  // v1 is empty when the pair is one state
  double alpha = 1.0, beta = 0.0;
  double overlap = 1.0;  // <first|second> after the phase fix, >= 0
};

// first = alpha v0 + beta v1, second (rephased) = alpha v0 - beta v1.
Canonical canonicalize(const PurePair& p) {
  if (p.first.dim() != p.second.dim()) throw DimensionError("pure pair has mixed dimensions");
  const ComplexVector& a = p.first.amplitudes();
  const Complex ov = a.dot(p.second.amplitudes());
  const double c = std::min(1.0, std::abs(ov));
  const Complex phase = c > 0.0 ? ov / std::abs(ov) : Complex(1.0, 0.0);
  const ComplexVector s = p.second.amplitudes() * std::conj(phase);
  Canonical out;
  out.overlap = c;
  out.alpha = std::sqrt((1.0 + c) / 2.0);
  out.beta = std::sqrt((1.0 - c) / 2.0);
  out.v0 = (a + s) / (2.0 * out.alpha);
  if (out.beta > 1e-12) {
    out.v1 = (a - s) / (2.0 * out.beta);
    // re-orthonormalize against rounding
    out.v0.normalize();
    out.v1 -= out.v0 * out.v0.dot(out.v1);
    out.v1.normalize();
  }
  return out;
}

// E: H -> C^2 with Kraus K^dagger and |0><p_j| for p_j spanning the complement.
ChoiMatrix compress_channel(const Canonical& c) {
  const auto d = c.v0.size();
  ComplexMatrix basis(d, 2);
  basis.col(0) = c.v0;
  basis.col(1) = c.v1;
  Eigen::HouseholderQR<ComplexMatrix> qr(basis);
  const ComplexMatrix q = qr.householderQ();
  std::vector<ComplexMatrix> kraus;
  ComplexMatrix kd(2, d);
  kd.row(0) = c.v0.adjoint();
  kd.row(1) = c.v1.adjoint();
  kraus.push_back(kd);
  for (Eigen::Index j = 2; j < d; ++j) {
    ComplexMatrix k = ComplexMatrix::Zero(2, d);
    k.row(0) = q.col(j).adjoint();
    kraus.push_back(k);
  }
  return choi_from_kraus(kraus, static_cast<int>(d), 2);
}

// E': C^2 -> H' with the single Kraus operator |phi0><0| + |phi1><1|.
ChoiMatrix embed_channel(const Canonical& c) {
  const auto d = c.v0.size();
  ComplexMatrix k(d, 2);
  k.col(0) = c.v0;
  k.col(1) = c.v1;
  return choi_from_kraus({k}, 2, static_cast<int>(d));
}

ChoiMatrix sandwich(const ChoiMatrix& e, const ChoiMatrix& core, const ChoiMatrix& e_prime) {
  return compose(compose(e, core), e_prime);
}

}  // namespace

// ---------------------------------------------------------------------------

ClonabilityResult check_virtually_clonable(const std::vector<DensityMatrix>& states, double tol) {
  common_dim(states);
  ClonabilityResult r;
  r.gram_singular_values = gram_singular_values(states, 1);
  r.rank = rank_of(r.gram_singular_values, tol);
  r.clonable = r.rank == static_cast<int>(states.size());
  return r;
}

int min_copies_for_independence(const std::vector<DensityMatrix>& states, int max_k) {
  common_dim(states);
  require_distinct(states);
  const int m = static_cast<int>(states.size());
  const double tol = default_tolerances().linear_independence;
  const int limit = std::max(1, m - 1);
  for (int k = 1; k <= std::min(max_k, limit); ++k) {
    if (rank_of(gram_singular_values(states, k), tol) == m) return k;
  }
  if (max_k < limit) {
    throw CloningError("no independent tensor power up to k = " + std::to_string(max_k));
  }
  throw CloningError("tensor powers remain numerically dependent up to k = " +
                     std::to_string(limit));
}

ChoiMatrix build_cloning_map(const std::vector<DensityMatrix>& states, int n) {
  if (n < 1) throw CloningError("number of copies must be positive");
  const ClonabilityResult c = check_virtually_clonable(states);
  if (!c.clonable) {
    throw NotClonableError("states are linearly dependent (Gram rank " + std::to_string(c.rank) +
                           " of " + std::to_string(states.size()) + ")");
  }
  std::vector<HermitianOperator> in;
  std::vector<HermitianOperator> out;
  auto add = [&](const DensityMatrix& s) {
    in.push_back(s.op());
    out.push_back(tensor_power(s, n).op());
  };
  for (const auto& s : states) add(s);
  for (const auto& s : extension_states(states)) add(s);
  return map_from_basis_images(in, out);
}

// ---------------------------------------------------------------------------

void CloneProblem::validate() const {
  const int d = common_dim(states);
  if (k < 1) throw CloningError("input copies k must be at least 1");
  if (n <= k) throw CloningError("output copies n must exceed k");
  const double choi_dim = std::pow(static_cast<double>(d), k + n);
  if (choi_dim > 4096.0) {
    throw CloningError("problem too large: Choi dimension d^(k+n) = " +
                       std::to_string(static_cast<long long>(choi_dim)) + " exceeds 4096");
  }
}

int CloneProblem::dim_in() const { return ipow(dim(), k); }
int CloneProblem::dim_out() const { return ipow(dim(), n); }

std::vector<DensityMatrix> CloneProblem::inputs() const {
  std::vector<DensityMatrix> out;
  for (const auto& s : states) out.push_back(tensor_power(s, k));
  return out;
}

std::vector<DensityMatrix> CloneProblem::targets() const {
  std::vector<DensityMatrix> out;
  for (const auto& s : states) out.push_back(tensor_power(s, n));
  return out;
}

sdp::Problem primal_sdp(const CloneProblem& problem) {
  problem.validate();
  const int din = problem.dim_in();
  const int dout = problem.dim_out();
  const int nc = din * dout;
  const std::vector<DensityMatrix> in = problem.inputs();
  const std::vector<DensityMatrix> out = problem.targets();

  sdp::Problem p;
  p.block_dims = {2 * nc, 2 * nc};
  p.objective = {RealMatrix(), RealMatrix()};
  p.num_free = 2;
  p.free_objective = RealVector::Ones(2);

  const std::vector<ComplexMatrix> eout = hermitian_basis(dout);
  for (std::size_t i = 0; i < in.size(); ++i) {
    const ComplexMatrix rt = in[i].matrix().transpose();
    const RealVector tc = hermitian_coordinates(out[i].matrix());
    for (std::size_t t = 0; t < eout.size(); ++t) {
      const RealMatrix e = 0.5 * real_embedding(HermitianOperator(kron(rt, eout[t])));
      sdp::Constraint c;
      c.blocks = {e, -e};
      c.rhs = tc(static_cast<Eigen::Index>(t));
      p.constraints.push_back(std::move(c));
    }
  }
  const ComplexMatrix id_out = ComplexMatrix::Identity(dout, dout);
  for (const ComplexMatrix& f : hermitian_basis(din)) {
    const RealMatrix e = 0.5 * real_embedding(HermitianOperator(kron(f, id_out)));
    for (int branch = 0; branch < 2; ++branch) {
      sdp::Constraint c;
      c.blocks = {branch == 0 ? e : RealMatrix(), branch == 0 ? RealMatrix() : e};
      c.free = RealVector::Zero(2);
      c.free(branch) = -f.trace().real();
      p.constraints.push_back(std::move(c));
    }
  }
  return p;
}

sdp::Problem dual_sdp(const CloneProblem& problem) {
  problem.validate();
  const int din = problem.dim_in();
  const int dout = problem.dim_out();
  const int nc = din * dout;
  const std::vector<DensityMatrix> in = problem.inputs();
  const std::vector<DensityMatrix> out = problem.targets();
  const auto m = static_cast<int>(in.size());
  const int ny = dout * dout;
  const int nm = din * din;

  sdp::Problem p;
  p.block_dims = {2 * nc, 2 * nc};
  p.objective = {RealMatrix(), RealMatrix()};
  p.num_free = m * ny + 2 * nm;
  p.free_objective = RealVector::Zero(p.num_free);
  for (int i = 0; i < m; ++i) {
    p.free_objective.segment(i * ny, ny) = -hermitian_coordinates(out[i].matrix());
  }

  // Choi-space coordinates of each free variable's operator.
  const Eigen::Index nn = static_cast<Eigen::Index>(nc) * nc;
  RealMatrix ycoef(nn, m * ny);
  const std::vector<ComplexMatrix> eout = hermitian_basis(dout);
  for (int i = 0; i < m; ++i) {
    const ComplexMatrix rt = in[i].matrix().transpose();
    for (int t = 0; t < ny; ++t) ycoef.col(i * ny + t) = hermitian_coordinates(kron(rt, eout[t]));
  }
  RealMatrix mcoef(nn, nm);
  const std::vector<ComplexMatrix> fin = hermitian_basis(din);
  const ComplexMatrix id_out = ComplexMatrix::Identity(dout, dout);
  for (int l = 0; l < nm; ++l) mcoef.col(l) = hermitian_coordinates(kron(fin[l], id_out));

  const std::vector<ComplexMatrix> g = hermitian_basis(nc);
  // lower slack: S_lo = sum rho^T (x) Y - M_minus (x) 1
  // upper slack: S_hi = M_plus (x) 1 - sum rho^T (x) Y
  for (int block = 0; block < 2; ++block) {
    const double sign = block == 0 ? 1.0 : -1.0;
    for (Eigen::Index t = 0; t < nn; ++t) {
      sdp::Constraint c;
      const RealMatrix e = 0.5 * real_embedding(HermitianOperator(g[t]));
      c.blocks = {block == 0 ? e : RealMatrix(), block == 0 ? RealMatrix() : e};
      c.free = RealVector::Zero(p.num_free);
      c.free.head(m * ny) = -sign * ycoef.row(t).transpose();
      if (block == 0) {
        c.free.segment(m * ny, nm) = mcoef.row(t).transpose();
      } else {
        c.free.segment(m * ny + nm, nm) = -mcoef.row(t).transpose();
      }
      p.constraints.push_back(std::move(c));
    }
  }
  RealVector tr(nm);
  for (int l = 0; l < nm; ++l) tr(l) = fin[l].trace().real();
  sdp::Constraint tm;
  tm.blocks = {RealMatrix(), RealMatrix()};
  tm.free = RealVector::Zero(p.num_free);
  tm.free.segment(m * ny, nm) = tr;
  tm.rhs = -1.0;
  p.constraints.push_back(tm);
  sdp::Constraint tp = tm;
  tp.free.setZero();
  tp.free.segment(m * ny + nm, nm) = tr;
  tp.rhs = 1.0;
  p.constraints.push_back(tp);
  return p;
}

DualFeasibility check_dual_certificate(const CloneProblem& problem, const DualCertificate& cert) {
  problem.validate();
  const std::vector<DensityMatrix> in = problem.inputs();
  const std::vector<DensityMatrix> out = problem.targets();
  if (cert.Y.size() != in.size()) throw CloningError("certificate has wrong number of Y_i");
  const int din = problem.dim_in();
  const int dout = problem.dim_out();
  ComplexMatrix sum = ComplexMatrix::Zero(din * dout, din * dout);
  DualFeasibility f;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (cert.Y[i].dim() != dout) throw DimensionError("certificate Y_i has wrong dimension");
    sum += kron(ComplexMatrix(in[i].matrix().transpose()), cert.Y[i].matrix());
    f.objective += (out[i].matrix() * cert.Y[i].matrix()).trace().real();
  }
  const ComplexMatrix id_out = ComplexMatrix::Identity(dout, dout);
  f.lower_min_eigenvalue =
      min_eigenvalue(HermitianOperator(sum - kron(cert.M_minus.matrix(), id_out)));
  f.upper_min_eigenvalue =
      min_eigenvalue(HermitianOperator(kron(cert.M_plus.matrix(), id_out) - sum));
  f.trace_plus_error = std::abs(cert.M_plus.trace() - 1.0);
  f.trace_minus_error = std::abs(cert.M_minus.trace() + 1.0);
  return f;
}

DualCertificate certificate_from_dual_solution(const CloneProblem& problem,
                                               const sdp::Solution& s) {
  const int din = problem.dim_in();
  const int dout = problem.dim_out();
  const std::vector<DensityMatrix> out = problem.targets();
  const auto m = static_cast<int>(out.size());
  const int ny = dout * dout;
  const int nm = din * din;
  if (s.free.size() != m * ny + 2 * nm) throw CloningError("dual solution has wrong shape");
  DualCertificate c;
  for (int i = 0; i < m; ++i) {
    c.Y.emplace_back(from_hermitian_coordinates(s.free.segment(i * ny, ny), dout));
    c.objective += (out[i].matrix() * c.Y.back().matrix()).trace().real();
  }
  c.M_minus = HermitianOperator(from_hermitian_coordinates(s.free.segment(m * ny, nm), din));
  c.M_plus = HermitianOperator(from_hermitian_coordinates(s.free.segment(m * ny + nm, nm), din));
  return c;
}

DualCertificate certificate_from_primal_solution(const CloneProblem& problem,
                                                 const sdp::Solution& s) {
  const int din = problem.dim_in();
  const int dout = problem.dim_out();
  const std::vector<DensityMatrix> out = problem.targets();
  const auto m = static_cast<int>(out.size());
  const int ny = dout * dout;
  const int nm = din * din;
  if (s.y.size() != m * ny + 2 * nm) throw CloningError("primal solution has wrong shape");
  DualCertificate c;
  for (int i = 0; i < m; ++i) {
    c.Y.emplace_back(from_hermitian_coordinates(s.y.segment(i * ny, ny), dout));
    c.objective += (out[i].matrix() * c.Y.back().matrix()).trace().real();
  }
  RealVector zp(nm), zm(nm);
  for (int l = 0; l < nm; ++l) {
    zp(l) = s.y(m * ny + 2 * l);
    zm(l) = s.y(m * ny + 2 * l + 1);
  }
  c.M_plus = HermitianOperator(-from_hermitian_coordinates(zp, din));
  c.M_minus = HermitianOperator(from_hermitian_coordinates(zm, din));
  return c;
}

CloneCostResult optimal_cost(const CloneProblem& problem, const sdp::Options& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  problem.validate();
  const std::vector<DensityMatrix> in = problem.inputs();
  const ClonabilityResult cl = check_virtually_clonable(in);
  if (!cl.clonable) {
    throw NotClonableError("the " + std::to_string(problem.k) +
                           "-copy input states are linearly dependent (Gram rank " +
                           std::to_string(cl.rank) + " of " + std::to_string(in.size()) +
                           "); no virtual cloner exists");
  }

  const sdp::Solution ps = sdp::solve(primal_sdp(problem), opts);
  if (ps.status == sdp::Status::Infeasible) {
    throw NotClonableError("cloning SDP is infeasible: " + ps.message);
  }
  if (ps.status != sdp::Status::Optimal) {
    throw SolverFailure("primal cloning SDP ended with status " + sdp::to_string(ps.status) +
                            (ps.message.empty() ? "" : ": " + ps.message),
                        ps.status);
  }
  // The dual SDP has 2 (d_in d_out)^2 rows; past the threshold the dual
  // iterate of the primal solve serves as the dual solution.
  const int choi_dim = problem.dim_in() * problem.dim_out();
  const bool separate_dual = 2 * choi_dim * choi_dim + 2 <= kMaxSeparateDualRows;
  sdp::Solution ds;
  if (separate_dual) {
    ds = sdp::solve(dual_sdp(problem), opts);
    if (ds.status != sdp::Status::Optimal) {
      throw SolverFailure("dual cloning SDP ended with status " + sdp::to_string(ds.status) +
                              (ds.message.empty() ? "" : ": " + ds.message),
                          ds.status);
    }
  }

  CloneCostResult r;
  r.eta = ps.primal_obj;
  r.solver_report.primal_status = ps.status;
  r.solver_report.primal_iterations = ps.iterations;
  r.solver_report.primal_value = ps.primal_obj;
  r.solver_report.primal_residual = ps.primal_residual;
  r.solver_report.separate_dual = separate_dual;
  if (separate_dual) {
    r.solver_report.dual_status = ds.status;
    r.solver_report.dual_iterations = ds.iterations;
    r.solver_report.dual_value = -ds.primal_obj;
    r.solver_report.dual_residual = ds.primal_residual;
  } else {
    r.solver_report.dual_status = ps.status;
    r.solver_report.dual_iterations = ps.iterations;
    r.solver_report.dual_value = ps.dual_obj;
    r.solver_report.dual_residual = ps.dual_residual;
  }
  r.solver_report.gap = std::abs(r.solver_report.primal_value - r.solver_report.dual_value);

  const HermitianOperator jp = from_real_embedding(ps.X[0]);
  const HermitianOperator jm = from_real_embedding(ps.X[1]);
  const HermitianOperator target = project_onto_cloners(jp - jm, problem);
  r.qpd = qpd_from_parts(jp, jm, problem.dim_in(), problem.dim_out(), target);
  r.dual_certificate = separate_dual ? certificate_from_dual_solution(problem, ds)
                                     : certificate_from_primal_solution(problem, ps);

  const std::vector<DensityMatrix> out = problem.targets();
  for (std::size_t i = 0; i < in.size(); ++i) {
    r.clone_residual = std::max(
        r.clone_residual, max_abs(apply_qpd(r.qpd, in[i].op()).matrix() - out[i].matrix()));
  }
  r.solver_report.seconds = seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------------------

double fidelity(const PureState& a, const PureState& b) {
  if (a.dim() != b.dim()) throw DimensionError("fidelity: dimension mismatch");
  return std::norm(a.inner(b));
}

double pure_pair_cost(const PureState& psi1, const PureState& psi2, int k, int n) {
  if (k < 1 || n < k) throw CloningError("pure_pair_cost: need 1 <= k <= n");
  const double f = fidelity(psi1, psi2);
  if (f > 1.0 - 1e-12) throw CloningError("pure_pair_cost: states are identical");
  return std::sqrt((1.0 - std::pow(f, n)) / (1.0 - std::pow(f, k)));
}

double pure_pair_cost_limit(const PureState& psi1, const PureState& psi2, int k) {
  if (k < 1) throw CloningError("pure_pair_cost_limit: need k >= 1");
  const double f = fidelity(psi1, psi2);
  if (f > 1.0 - 1e-12) throw CloningError("pure_pair_cost_limit: states are identical");
  return 1.0 / std::sqrt(1.0 - std::pow(f, k));
}

double pure_conversion_cost(const PurePair& psi, const PurePair& phi) {
  const double f = fidelity(psi.first, psi.second);
  const double fp = fidelity(phi.first, phi.second);
  if (f > 1.0 - 1e-12) throw CloningError("pure_conversion_cost: source states are identical");
  return std::max(1.0, std::sqrt((1.0 - fp) / (1.0 - f)));
}

CanonicalParameters canonical_parameters(double F, double F_prime) {
  if (!(F > F_prime) || F >= 1.0 || F_prime < 0.0) {
    throw CloningError("canonical_parameters: need 0 <= F' < F < 1");
  }
  CanonicalParameters c;
  c.xi = std::sqrt((1.0 - F_prime) / (1.0 - F));
  c.mu = std::sqrt(F_prime / F);
  c.y_min = 1.0 - c.xi - c.mu;
  c.y_max = c.xi - 1.0 - c.mu;
  return c;
}

ChoiMatrix canonical_pure_choi(double F, double F_prime, double gamma, double y) {
  const CanonicalParameters c = canonical_parameters(F, F_prime);
  const double r = gamma * std::sqrt(F);
  const double z = c.mu - gamma;
  const ComplexMatrix j = 0.5 * (pauli::from_word("II") + r * pauli::from_word("IZ") +
                                 c.xi * pauli::from_word("XX") + y * pauli::from_word("YY") +
                                 z * pauli::from_word("ZZ"));
  return ChoiMatrix(2, 2, HermitianOperator(j));
}

QPDecomposition optimal_pure_map(const PurePair& psi, const PurePair& phi) {
  const Canonical cs = canonicalize(psi);
  const Canonical ct = canonicalize(phi);
  const double f = cs.overlap * cs.overlap;
  const double fp = ct.overlap * ct.overlap;
  if (cs.v1.size() == 0 || f > 1.0 - 1e-12) {
    throw CloningError("optimal_pure_map: source states are identical");
  }
  const int din = psi.first.dim();
  if (ct.v1.size() == 0) {
    const ChoiMatrix c = constant_channel(din, phi.first.projector().op());
    return QPDecomposition(1.0, 0.0, c, c);
  }
  const ChoiMatrix e = compress_channel(cs);
  const ChoiMatrix ep = embed_channel(ct);
  const double a = ct.alpha, b = ct.beta;

  if (f <= fp) {
    const double t = fp > 0.0 ? std::sqrt(f / fp) : 1.0;
    const double c0 = std::sqrt((1.0 + t) / 2.0);
    const double c1 = std::sqrt(std::max(0.0, (1.0 - t) / 2.0));
    ComplexMatrix k0 = ComplexMatrix::Zero(2, 2);
    k0(0, 0) = a * c0 / cs.alpha;
    k0(1, 1) = b * c0 / cs.beta;
    ComplexMatrix k1 = ComplexMatrix::Zero(2, 2);
    k1(0, 1) = a * c1 / cs.beta;
    k1(1, 0) = b * c1 / cs.alpha;
    const ChoiMatrix c = sandwich(e, choi_from_kraus({k0, k1}, 2, 2), ep);
    return QPDecomposition(1.0, 0.0, c, c);
  }

  const CanonicalParameters p = canonical_parameters(f, fp);
  const double lp = (p.xi + 1.0) / 2.0;
  const double lm = (p.xi - 1.0) / 2.0;
  const ComplexMatrix kp0 = std::sqrt((p.xi + p.mu) / (p.xi + 1.0)) * pauli::I();
  const ComplexMatrix kp1 = std::sqrt((1.0 - p.mu) / (p.xi + 1.0)) * pauli::X();
  const ChoiMatrix plus = sandwich(e, choi_from_kraus({kp0, kp1}, 2, 2), ep);
  const ChoiMatrix minus = sandwich(e, choi_from_kraus({pauli::Z()}, 2, 2), ep);
  return QPDecomposition(lp, lm, plus, minus);
}

QPDecomposition optimal_pure_cloner(const PureState& psi1, const PureState& psi2, int k, int n) {
  if (k < 1 || n < k) throw CloningError("optimal_pure_cloner: need 1 <= k <= n");
  return optimal_pure_map({psi1.tensor_power(k), psi2.tensor_power(k)},
                          {psi1.tensor_power(n), psi2.tensor_power(n)});
}

// ---------------------------------------------------------------------------

HelstromMeasurement helstrom_measurement(const HermitianOperator& rho1,
                                         const HermitianOperator& rho2, double p1, double p2) {
  if (!(p1 >= 0.0) || !(p2 >= 0.0) || std::abs(p1 + p2 - 1.0) > 1e-12) {
    throw CloningError("helstrom_measurement: priors must be non-negative and sum to 1");
  }
  if (rho1.dim() != rho2.dim()) throw DimensionError("helstrom_measurement: dimension mismatch");
  const HermitianEigen e = eig_hermitian(p1 * rho1 - p2 * rho2);
  const int d = rho1.dim();
  ComplexMatrix pp = ComplexMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    if (e.values(i) >= -default_tolerances().helstrom_zero) {
      pp += e.vectors.col(i) * e.vectors.col(i).adjoint();
    }
  }
  HelstromMeasurement h;
  h.P_plus = HermitianOperator(pp);
  h.P_minus = HermitianOperator(ComplexMatrix(ComplexMatrix::Identity(d, d) - pp));
  h.norm = e.values.cwiseAbs().sum();
  h.success_probability = 0.5 * (1.0 + h.norm);
  return h;
}

std::vector<double> default_prior_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 100; ++i) g.push_back(0.005 + 0.0099 * i);
  g[50] = 0.5;
  return g;
}

CloneBounds cost_bounds(const DensityMatrix& rho1, const DensityMatrix& rho2, int n,
                        const std::vector<double>& prior_grid) {
  if (n < 1) throw CloningError("cost_bounds: n must be positive");
  if (rho1.dim() != rho2.dim()) throw DimensionError("cost_bounds: dimension mismatch");
  const double dist = trace_norm(rho1.op() - rho2.op());
  if (dist < kSameStateTol) throw CloningError("cost_bounds: states are identical");
  const DensityMatrix r1n = tensor_power(rho1, n);
  const DensityMatrix r2n = tensor_power(rho2, n);
  auto lower_at = [&](double p1) {
    const double p2 = 1.0 - p1;
    return trace_norm(p1 * r1n.op() - p2 * r2n.op()) / trace_norm(p1 * rho1.op() - p2 * rho2.op());
  };
  CloneBounds b;
  b.upper = 4.0 / dist - 1.0;
  b.equal_prior_lower = lower_at(0.5);
  b.lower = b.equal_prior_lower;
  b.priors_used = {0.5, 0.5};
  for (double p1 : prior_grid) {
    if (!(p1 > 0.0 && p1 < 1.0)) throw CloningError("cost_bounds: priors must lie in (0, 1)");
    const double v = lower_at(p1);
    if (v > b.lower) {
      b.lower = v;
      b.priors_used = {p1, 1.0 - p1};
    }
  }
  return b;
}

DualCertificate dual_certificate_from_discrimination(const DensityMatrix& rho1,
                                                     const DensityMatrix& rho2, int n,
                                                     double p1) {
  if (n < 1) throw CloningError("dual certificate: n must be positive");
  const double p2 = 1.0 - p1;
  const HelstromMeasurement h1 = helstrom_measurement(rho1, rho2, p1, p2);
  if (trace_norm(rho1.op() - rho2.op()) < kSameStateTol || h1.norm < kSameStateTol) {
    throw CloningError("dual certificate: states are identical");
  }
  const DensityMatrix r1n = tensor_power(rho1, n);
  const DensityMatrix r2n = tensor_power(rho2, n);
  const HelstromMeasurement hn = helstrom_measurement(r1n, r2n, p1, p2);
  const ComplexMatrix y = (hn.P_plus.matrix() - hn.P_minus.matrix()) / h1.norm;
  const ComplexMatrix diff = p1 * rho1.matrix() - p2 * rho2.matrix();
  const ComplexMatrix m =
      ((h1.P_plus.matrix() - h1.P_minus.matrix()) * diff).transpose() / h1.norm;
  DualCertificate c;
  c.Y = {HermitianOperator(ComplexMatrix(p1 * y)), HermitianOperator(ComplexMatrix(-p2 * y))};
  c.M_plus = HermitianOperator(m);
  c.M_minus = HermitianOperator(ComplexMatrix(-m));
  c.objective = (r1n.matrix() * c.Y[0].matrix()).trace().real() +
                (r2n.matrix() * c.Y[1].matrix()).trace().real();
  return c;
}

QPDecomposition discrimination_cloner(const std::vector<DensityMatrix>& states, int n,
                                      const sdp::Options& opts) {
  const int d = common_dim(states);
  if (n < 1) throw CloningError("discrimination_cloner: n must be positive");
  const auto m = static_cast<int>(states.size());

  if (m == 1) {
    const ChoiMatrix c = constant_channel(d, tensor_power(states[0], n).op());
    return QPDecomposition(1.0, 0.0, c, c);
  }

  if (m == 2) {
    require_distinct(states);
    const DensityMatrix& r1 = states[0];
    const DensityMatrix& r2 = states[1];
    const double dist = trace_norm(r1.op() - r2.op());
    const HelstromMeasurement h = helstrom_measurement(r1, r2, 0.5, 0.5);
    const HermitianOperator r1n = tensor_power(r1, n).op();
    const HermitianOperator r2n = tensor_power(r2, n).op();
    const ChoiMatrix plus = measure_prepare_choi({h.P_plus, h.P_minus}, {r1n, r2n});
    const double lp = 2.0 / dist;
    const double lm = lp - 1.0;
    if (lm < 1e-12) return QPDecomposition(1.0, 0.0, plus, plus);
    const double q1 = (r2.matrix() * h.P_plus.matrix()).trace().real();
    const double q2 = (r1.matrix() * h.P_minus.matrix()).trace().real();
    const double s = q1 + q2;
    const ChoiMatrix minus = constant_channel(d, (q1 / s) * r1n + (q2 / s) * r2n);
    return QPDecomposition(lp, lm, plus, minus);
  }

  const ClonabilityResult cl = check_virtually_clonable(states);
  if (!cl.clonable) {
    throw NotClonableError("states are linearly dependent (Gram rank " + std::to_string(cl.rank) +
                           " of " + std::to_string(m) + ")");
  }
  std::vector<HermitianOperator> in;
  std::vector<HermitianOperator> flags;
  for (int i = 0; i < m; ++i) {
    in.push_back(states[i].op());
    flags.emplace_back(unit_projector(m, i));
  }
  for (const auto& s : extension_states(states)) {
    in.push_back(s.op());
    flags.push_back(DensityMatrix::maximally_mixed(m).op());
  }
  const ChoiMatrix flag_map = map_from_basis_images(in, flags);
  const QPDecomposition q = optimal_qpd(flag_map, opts);
  std::vector<HermitianOperator> prep;
  for (const auto& s : states) prep.push_back(tensor_power(s, n).op());
  const std::vector<HermitianOperator> effects(flags.begin(), flags.begin() + m);
  const ChoiMatrix prepare = measure_prepare_choi(effects, prep);
  return QPDecomposition(q.lambda_plus(), q.lambda_minus(), compose(q.choi_plus(), prepare),
                         compose(q.choi_minus(), prepare));
}

}  // namespace vclone::cloning
