#include "vclone/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace vclone::sdp {

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "Optimal";
    case Status::Infeasible: return "Infeasible";
    case Status::Unbounded: return "Unbounded";
    case Status::MaxIterations: return "MaxIterations";
  }
  return "Unknown";
}

// Column-major upper triangle; off-diagonal entries carry sqrt(2).
RealVector svec(const RealMatrix& x) {
  const Eigen::Index n = x.rows();
  RealVector v(n * (n + 1) / 2);
  const double s2 = std::sqrt(2.0);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) v(k++) = s2 * 0.5 * (x(i, j) + x(j, i));
    v(k++) = x(j, j);
  }
  return v;
}

RealMatrix smat(const RealVector& v, int dim) {
  if (v.size() != static_cast<Eigen::Index>(dim) * (dim + 1) / 2) {
    throw std::invalid_argument("smat: vector length does not match dimension");
  }
  RealMatrix x(dim, dim);
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::Index k = 0;
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < j; ++i) {
      x(i, j) = x(j, i) = r * v(k++);
    }
    x(j, j) = v(k++);
  }
  return x;
}

void Problem::validate() const {
  const std::size_t nb = block_dims.size();
  for (int d : block_dims) {
    if (d <= 0) throw std::invalid_argument("sdp::Problem: block dimensions must be positive");
  }
  if (objective.size() != nb) {
    throw std::invalid_argument("sdp::Problem: objective must have one entry per block");
  }
  auto check_block = [&](const RealMatrix& m, std::size_t b, const std::string& what) {
    if (m.size() == 0) return;
    if (m.rows() != block_dims[b] || m.cols() != block_dims[b]) {
      throw std::invalid_argument("sdp::Problem: " + what + " block " + std::to_string(b) +
                                  " has wrong shape");
    }
    if (!m.allFinite()) throw std::invalid_argument("sdp::Problem: non-finite " + what);
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) {
      throw std::invalid_argument("sdp::Problem: " + what + " block " + std::to_string(b) +
                                  " is not symmetric");
    }
  };
  for (std::size_t b = 0; b < nb; ++b) check_block(objective[b], b, "objective");
  if (num_free < 0) throw std::invalid_argument("sdp::Problem: negative free-variable count");
  if (free_objective.size() != 0 && free_objective.size() != num_free) {
    throw std::invalid_argument("sdp::Problem: free objective has wrong length");
  }
  std::size_t total_vars = static_cast<std::size_t>(num_free);
  for (int d : block_dims) total_vars += static_cast<std::size_t>(d) * (d + 1) / 2;
  if (constraints.size() > total_vars) {
    throw std::invalid_argument("sdp::Problem: more constraints than variables");
  }
  for (std::size_t k = 0; k < constraints.size(); ++k) {
    const auto& c = constraints[k];
    if (c.blocks.size() != nb) {
      throw std::invalid_argument("sdp::Problem: constraint " + std::to_string(k) +
                                  " must have one entry per block");
    }
    for (std::size_t b = 0; b < nb; ++b) check_block(c.blocks[b], b, "constraint");
    if (c.free.size() != 0 && c.free.size() != num_free) {
      throw std::invalid_argument("sdp::Problem: constraint " + std::to_string(k) +
                                  " has wrong free-coefficient length");
    }
    if (!std::isfinite(c.rhs)) throw std::invalid_argument("sdp::Problem: non-finite rhs");
  }
}

bool VerificationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const VerificationCheck* VerificationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

struct Layout {
  std::vector<int> dims;
  std::vector<Eigen::Index> offset;
  Eigen::Index nvec = 0;
  int n_total = 0;

  explicit Layout(const std::vector<int>& d) : dims(d) {
    for (int n : dims) {
      offset.push_back(nvec);
      nvec += static_cast<Eigen::Index>(n) * (n + 1) / 2;
      n_total += n;
    }
  }
  Eigen::Index len(std::size_t b) const {
    return static_cast<Eigen::Index>(dims[b]) * (dims[b] + 1) / 2;
  }
};

RealVector stack_blocks(const Layout& lay, const std::vector<RealMatrix>& blocks) {
  RealVector v = RealVector::Zero(lay.nvec);
  for (std::size_t b = 0; b < lay.dims.size(); ++b) {
    if (blocks[b].size() == 0) continue;
    v.segment(lay.offset[b], lay.len(b)) = svec(blocks[b]);
  }
  return v;
}

std::vector<RealMatrix> unstack(const Layout& lay, const RealVector& v) {
  std::vector<RealMatrix> out;
  for (std::size_t b = 0; b < lay.dims.size(); ++b) {
    out.push_back(smat(v.segment(lay.offset[b], lay.len(b)), lay.dims[b]));
  }
  return out;
}

double min_eig(const RealMatrix& m) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Largest alpha with X + alpha*dX PSD, given the Cholesky factor of X.
double max_step(const Eigen::LLT<RealMatrix>& chol, const RealMatrix& dx) {
  const auto& l = chol.matrixL();
  RealMatrix t = l.solve(dx);
  t = l.solve(t.transpose()).eval();
  t = 0.5 * (t + t.transpose());
  const double ev = min_eig(t);
  return ev >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / ev;
}

struct FlatProblem {
  RealMatrix A;    // m x nvec
  RealVector b;    // m
  RealVector c;    // nvec
  RealMatrix B;    // m x f
  RealVector cu;   // f
};

FlatProblem flatten(const Problem& p, const Layout& lay) {
  const auto m = static_cast<Eigen::Index>(p.constraints.size());
  FlatProblem f;
  f.A = RealMatrix::Zero(m, lay.nvec);
  f.b = RealVector::Zero(m);
  f.B = RealMatrix::Zero(m, p.num_free);
  f.c = stack_blocks(lay, p.objective);
  f.cu = p.free_objective.size() == 0 ? RealVector::Zero(p.num_free) : p.free_objective;
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& con = p.constraints[k];
    f.A.row(k) = stack_blocks(lay, con.blocks).transpose();
    f.b(k) = con.rhs;
    if (con.free.size() != 0) f.B.row(k) = con.free.transpose();
  }
  return f;
}

// Reduced problem after eliminating free variables and dependent rows.
struct Reduced {
  RealMatrix A;  // r x nvec, linearly independent rows
  RealVector b;
  RealVector c;
  double offset = 0.0;

  // free-variable recovery: u = P [R11^{-1}(b1 - A1 x); 0]
  int free_rank = 0;
  RealMatrix A1;
  RealVector b1;
  RealMatrix R11;
  Eigen::VectorXi free_perm;  // u[free_perm[i]] = u'[i]
  RealMatrix Q;               // m x m orthogonal (identity if no free variables)
  RealVector w;               // leading part of the rotated dual

  std::vector<Eigen::Index> kept;  // rows of A2 kept in A
  Eigen::Index m2 = 0;
};

struct PresolveOutcome {
  Status status = Status::Optimal;  // Optimal means "proceed"
  std::string message;
  RealVector ray;  // dual ray for Infeasible
};

PresolveOutcome presolve(const FlatProblem& f, double tol, Reduced& red) {
  const Eigen::Index m = f.A.rows();
  const Eigen::Index nf = f.B.cols();
  RealMatrix A2;
  RealVector b2;
  red.c = f.c;
  if (nf > 0) {
    Eigen::ColPivHouseholderQR<RealMatrix> qr(f.B);
    qr.setThreshold(1e-10);
    const Eigen::Index r = qr.rank();
    red.free_rank = static_cast<int>(r);
    red.Q = qr.householderQ();
    const RealMatrix R = qr.matrixQR().topRows(std::min(m, nf)).triangularView<Eigen::Upper>();
    red.free_perm = qr.colsPermutation().indices();
    RealVector cp(nf);
    for (Eigen::Index i = 0; i < nf; ++i) cp(i) = f.cu(red.free_perm(i));
    red.R11 = R.topLeftCorner(r, r);
    red.w = red.R11.transpose().triangularView<Eigen::Lower>().solve(cp.head(r));
    if (nf > r) {
      const RealVector leftover = cp.tail(nf - r) - R.topRightCorner(r, nf - r).transpose() * red.w;
      if (leftover.norm() > 1e-9 * (1.0 + cp.norm())) {
        return {Status::Unbounded, "free variable with nonzero cost does not enter any constraint", {}};
      }
    }
    const RealMatrix QtA = red.Q.transpose() * f.A;
    const RealVector Qtb = red.Q.transpose() * f.b;
    red.A1 = QtA.topRows(r);
    red.b1 = Qtb.head(r);
    A2 = QtA.bottomRows(m - r);
    b2 = Qtb.tail(m - r);
    red.c = f.c - red.A1.transpose() * red.w;
    red.offset = red.b1.dot(red.w);
  } else {
    red.Q = RealMatrix::Identity(m, m);
    A2 = f.A;
    b2 = f.b;
  }
  red.m2 = A2.rows();

  if (A2.rows() == 0) {
    red.A = RealMatrix::Zero(0, f.A.cols());
    red.b = RealVector::Zero(0);
    return {};
  }

  // Rank-revealing QR on A2^T selects independent rows; the others must be
  // implied consistently or the equality system has no solution at all.
  Eigen::ColPivHouseholderQR<RealMatrix> qa(A2.transpose());
  qa.setThreshold(1e-10);
  const Eigen::Index r2 = qa.rank();
  const Eigen::VectorXi perm = qa.colsPermutation().indices();
  const RealMatrix Ra = qa.matrixQR().topRows(std::min<Eigen::Index>(A2.cols(), A2.rows()))
                            .triangularView<Eigen::Upper>();
  RealVector bp(A2.rows());
  for (Eigen::Index i = 0; i < A2.rows(); ++i) bp(i) = b2(perm(i));
  if (r2 < A2.rows()) {
    const RealMatrix Ra11 = Ra.topLeftCorner(r2, r2);
    const RealMatrix Ra12 = Ra.topRightCorner(r2, A2.rows() - r2);
    const RealVector v = Ra11.transpose().triangularView<Eigen::Lower>().solve(bp.head(r2));
    const RealVector resid = bp.tail(A2.rows() - r2) - Ra12.transpose() * v;
    Eigen::Index worst = 0;
    const double worst_val = resid.cwiseAbs().maxCoeff(&worst);
    if (worst_val > 100.0 * tol * (1.0 + b2.norm())) {
      // y with A2^T y = 0 and b2^T y = resid(worst) != 0
      RealVector yp = RealVector::Zero(A2.rows());
      yp(r2 + worst) = 1.0;
      yp.head(r2) = -Ra11.triangularView<Eigen::Upper>().solve(Ra12.col(worst));
      if (resid(worst) < 0) yp = -yp;
      RealVector y2(A2.rows());
      for (Eigen::Index i = 0; i < A2.rows(); ++i) y2(perm(i)) = yp(i);
      RealVector rot = RealVector::Zero(m);
      rot.tail(A2.rows()) = y2;
      PresolveOutcome out;
      out.status = Status::Infeasible;
      std::ostringstream msg;
      msg << "equality constraints are inconsistent (residual " << worst_val << ")";
      out.message = msg.str();
      out.ray = red.Q * rot;
      return out;
    }
  }
  red.kept.clear();
  for (Eigen::Index i = 0; i < r2; ++i) red.kept.push_back(perm(i));
  std::sort(red.kept.begin(), red.kept.end());
  red.A.resize(static_cast<Eigen::Index>(red.kept.size()), A2.cols());
  red.b.resize(static_cast<Eigen::Index>(red.kept.size()));
  for (std::size_t i = 0; i < red.kept.size(); ++i) {
    red.A.row(static_cast<Eigen::Index>(i)) = A2.row(red.kept[i]);
    red.b(static_cast<Eigen::Index>(i)) = b2(red.kept[i]);
  }
  return {};
}

RealVector recover_free(const Reduced& red, const RealVector& x, Eigen::Index nf) {
  RealVector u = RealVector::Zero(nf);
  if (nf == 0) return u;
  RealVector up = RealVector::Zero(nf);
  const Eigen::Index r = red.free_rank;
  if (r > 0) {
    up.head(r) = red.R11.triangularView<Eigen::Upper>().solve(RealVector(red.b1 - red.A1 * x));
  }
  for (Eigen::Index i = 0; i < nf; ++i) u(red.free_perm(i)) = up(i);
  return u;
}

RealVector recover_dual(const Reduced& red, const RealVector& y_reduced) {
  const Eigen::Index m = red.Q.rows();
  RealVector rot = RealVector::Zero(m);
  const Eigen::Index r = red.free_rank;
  if (r > 0) rot.head(r) = red.w;
  for (std::size_t i = 0; i < red.kept.size(); ++i) {
    rot(r + red.kept[i]) = y_reduced(static_cast<Eigen::Index>(i));
  }
  return red.Q * rot;
}

// Per-block Nesterov-Todd scaling: W = G G^T with G^{-1} X G^{-T} = G^T S G = diag(lam).
struct NTScaling {
  RealMatrix G, Ginv, W;
  RealVector lam;
  Eigen::LLT<RealMatrix> chol_x, chol_s;
};

bool nt_scaling(const RealMatrix& X, const RealMatrix& S, NTScaling& nt) {
  nt.chol_x.compute(X);
  nt.chol_s.compute(S);
  if (nt.chol_x.info() != Eigen::Success || nt.chol_s.info() != Eigen::Success) return false;
  const RealMatrix Lx = nt.chol_x.matrixL();
  const RealMatrix Ls = nt.chol_s.matrixL();
  Eigen::JacobiSVD<RealMatrix> svd(Ls.transpose() * Lx, Eigen::ComputeFullU | Eigen::ComputeFullV);
  nt.lam = svd.singularValues();
  if (nt.lam.minCoeff() <= 0.0) return false;
  const RealVector isq = nt.lam.cwiseSqrt().cwiseInverse();
  nt.G = Lx * svd.matrixV() * isq.asDiagonal();
  // G^{-1} = diag(sqrt lam) V^T Lx^{-1}
  RealMatrix lxinv_t = nt.chol_x.matrixL().solve(RealMatrix::Identity(X.rows(), X.cols()));
  nt.Ginv = nt.lam.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * lxinv_t;
  nt.W = nt.G * nt.G.transpose();
  nt.W = 0.5 * (nt.W + nt.W.transpose()).eval();
  return true;
}

class InteriorPoint {
 public:
  InteriorPoint(const Layout& lay, const Reduced& red, const Options& opts, double tau)
      : lay_(lay), red_(red), opts_(opts) {
    const Eigen::Index m = red.A.rows();
    const std::size_t nb = lay.dims.size();
    a_blocks_.assign(nb, {});
    a_nonzero_.assign(nb, std::vector<bool>(static_cast<std::size_t>(m), false));
    for (std::size_t b = 0; b < nb; ++b) {
      a_blocks_[b].reserve(static_cast<std::size_t>(m));
      for (Eigen::Index k = 0; k < m; ++k) {
        const RealVector seg = red.A.row(k).segment(lay.offset[b], lay.len(b)).transpose();
        a_nonzero_[b][static_cast<std::size_t>(k)] = seg.cwiseAbs().maxCoeff() > 0.0;
        a_blocks_[b].push_back(smat(seg, lay.dims[b]));
      }
    }
    X_.clear();
    S_.clear();
    for (int d : lay.dims) {
      X_.push_back(tau * RealMatrix::Identity(d, d));
      S_.push_back(tau * RealMatrix::Identity(d, d));
    }
    y_ = RealVector::Zero(m);
  }

  Solution run() {
    Solution sol;
    const std::size_t nb = lay_.dims.size();
    const Eigen::Index m = red_.A.rows();
    const double bnorm = red_.b.norm();
    const double cnorm = red_.c.norm();
    const double tol = opts_.tol;
    int stall = 0;

    for (int it = 0;; ++it) {
      const RealVector x = stack_blocks(lay_, X_);
      const RealVector s = stack_blocks(lay_, S_);
      const RealVector rp = red_.b - red_.A * x;
      const RealVector rd = red_.c - red_.A.transpose() * y_ - s;
      const double pobj = red_.c.dot(x) + red_.offset;
      const double dobj = red_.b.dot(y_) + red_.offset;
      const double pinf = rp.norm() / (1.0 + bnorm);
      const double dinf = rd.norm() / (1.0 + cnorm);
      const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
      const double mu = x.dot(s) / lay_.n_total;

      if (opts_.record_history) {
        sol.history.push_back({it, pobj, dobj, pinf, dinf, mu, last_ap_, last_ad_});
      }
      sol.iterations = it;

      if (pinf < tol && dinf < tol && relgap < tol) {
        sol.status = Status::Optimal;
        break;
      }
      if (dinf < tol && dobj > 1.0 / tol) {
        sol.status = Status::Infeasible;
        sol.message = "dual objective unbounded above on dual-feasible iterates";
        break;
      }
      if (pinf < tol && pobj < -1.0 / tol) {
        sol.status = Status::Unbounded;
        sol.message = "primal objective unbounded below on primal-feasible iterates";
        break;
      }
      if (it >= opts_.max_iter) {
        sol.status = Status::MaxIterations;
        sol.message = "iteration limit reached";
        break;
      }

      // scaling and Schur complement
      std::vector<NTScaling> nt(nb);
      bool ok = true;
      for (std::size_t b = 0; b < nb && ok; ++b) ok = nt_scaling(X_[b], S_[b], nt[b]);
      if (!ok) {
        sol.status = Status::MaxIterations;
        sol.message = "iterates lost positive definiteness";
        break;
      }
      RealMatrix T = RealMatrix::Zero(lay_.nvec, m);
      for (std::size_t b = 0; b < nb; ++b) {
        const RealMatrix& W = nt[b].W;
        for (Eigen::Index k = 0; k < m; ++k) {
          if (!a_nonzero_[b][static_cast<std::size_t>(k)]) continue;
          const RealMatrix wa = W * a_blocks_[b][static_cast<std::size_t>(k)] * W;
          T.col(k).segment(lay_.offset[b], lay_.len(b)) = svec(wa);
        }
      }
      RealMatrix M = red_.A * T;
      M = 0.5 * (M + M.transpose()).eval();
      Eigen::LLT<RealMatrix> schur(M);
      Eigen::LDLT<RealMatrix> schur_ldlt;
      const bool use_llt = schur.info() == Eigen::Success;
      if (!use_llt) schur_ldlt.compute(M);
      auto solve_schur = [&](const RealVector& r) -> RealVector {
        return use_llt ? RealVector(schur.solve(r)) : RealVector(schur_ldlt.solve(r));
      };

      const std::vector<RealMatrix> Rd = unstack(lay_, rd);
      std::vector<RealMatrix> wrdw(nb);
      for (std::size_t b = 0; b < nb; ++b) wrdw[b] = nt[b].W * Rd[b] * nt[b].W;

      // Direction for a given scaled right-hand side H_b of the linearized
      // complementarity lam D + D lam = H.
      auto direction = [&](const std::vector<RealMatrix>& H, std::vector<RealMatrix>& dX,
                           RealVector& dy, std::vector<RealMatrix>& dS) {
        std::vector<RealMatrix> gdg(nb);
        RealVector agdg_minus = RealVector::Zero(lay_.nvec);
        for (std::size_t b = 0; b < nb; ++b) {
          const RealVector& lam = nt[b].lam;
          RealMatrix D(H[b].rows(), H[b].cols());
          for (Eigen::Index i = 0; i < D.rows(); ++i) {
            for (Eigen::Index j = 0; j < D.cols(); ++j) D(i, j) = H[b](i, j) / (lam(i) + lam(j));
          }
          gdg[b] = nt[b].G * D * nt[b].G.transpose();
          gdg[b] = 0.5 * (gdg[b] + gdg[b].transpose()).eval();
          agdg_minus.segment(lay_.offset[b], lay_.len(b)) = svec(gdg[b]) - svec(wrdw[b]);
        }
        const RealVector rhs = rp - red_.A * agdg_minus;
        dy = solve_schur(rhs);
        const RealVector dsv = rd - red_.A.transpose() * dy;
        dS = unstack(lay_, dsv);
        dX.resize(nb);
        for (std::size_t b = 0; b < nb; ++b) {
          dX[b] = gdg[b] - nt[b].W * dS[b] * nt[b].W;
          dX[b] = 0.5 * (dX[b] + dX[b].transpose()).eval();
        }
      };

      auto step_lengths = [&](const std::vector<RealMatrix>& dX, const std::vector<RealMatrix>& dS,
                              double& ap, double& ad) {
        double mp = std::numeric_limits<double>::infinity();
        double md = mp;
        for (std::size_t b = 0; b < nb; ++b) {
          mp = std::min(mp, max_step(nt[b].chol_x, dX[b]));
          md = std::min(md, max_step(nt[b].chol_s, dS[b]));
        }
        ap = std::min(1.0, opts_.step_fraction * mp);
        ad = std::min(1.0, opts_.step_fraction * md);
      };

      // predictor
      std::vector<RealMatrix> H(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        H[b] = RealMatrix(-2.0 * nt[b].lam.cwiseAbs2().asDiagonal());
      }
      std::vector<RealMatrix> dX, dS;
      RealVector dy;
      direction(H, dX, dy, dS);
      double ap = 0.0, ad = 0.0;
      step_lengths(dX, dS, ap, ad);

      double mu_aff = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        mu_aff += ((X_[b] + ap * dX[b]).cwiseProduct(S_[b] + ad * dS[b])).sum();
      }
      mu_aff /= lay_.n_total;
      const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

      // corrector
      for (std::size_t b = 0; b < nb; ++b) {
        const RealMatrix dxs = nt[b].Ginv * dX[b] * nt[b].Ginv.transpose();
        const RealMatrix dss = nt[b].G.transpose() * dS[b] * nt[b].G;
        const RealMatrix corr = dxs * dss + dss * dxs;
        const auto n = lay_.dims[b];
        H[b] = 2.0 * sigma * mu * RealMatrix::Identity(n, n) -
               RealMatrix(2.0 * nt[b].lam.cwiseAbs2().asDiagonal()) - corr;
        H[b] = 0.5 * (H[b] + H[b].transpose()).eval();
      }
      direction(H, dX, dy, dS);
      step_lengths(dX, dS, ap, ad);

      for (std::size_t b = 0; b < nb; ++b) {
        X_[b] += ap * dX[b];
        S_[b] += ad * dS[b];
        X_[b] = 0.5 * (X_[b] + X_[b].transpose()).eval();
        S_[b] = 0.5 * (S_[b] + S_[b].transpose()).eval();
      }
      y_ += ad * dy;
      last_ap_ = ap;
      last_ad_ = ad;

      if (ap < 1e-10 && ad < 1e-10) {
        if (++stall >= 3) {
          sol.status = Status::MaxIterations;
          sol.message = "step lengths stalled";
          sol.iterations = it + 1;
          break;
        }
      } else {
        stall = 0;
      }
    }
    sol.X = X_;
    sol.S = S_;
    sol.y = y_;  // reduced; caller maps back
    return sol;
  }

 private:
  const Layout& lay_;
  const Reduced& red_;
  const Options& opts_;
  std::vector<std::vector<RealMatrix>> a_blocks_;
  std::vector<std::vector<bool>> a_nonzero_;
  std::vector<RealMatrix> X_, S_;
  RealVector y_;
  double last_ap_ = 0.0;
  double last_ad_ = 0.0;
};

void finalize(const Problem& p, const Layout& lay, const FlatProblem& f, Solution& sol) {
  const RealVector x = stack_blocks(lay, sol.X);
  const RealVector s = stack_blocks(lay, sol.S);
  sol.primal_obj = f.c.dot(x) + f.cu.dot(sol.free);
  sol.dual_obj = f.b.dot(sol.y);
  sol.gap = sol.primal_obj - sol.dual_obj;
  const RealVector rp = f.A * x + f.B * sol.free - f.b;
  const RealVector rd = f.c - f.A.transpose() * sol.y - s;
  const RealVector rfree = f.cu - f.B.transpose() * sol.y;
  sol.primal_residual = rp.norm() / (1.0 + f.b.norm());
  sol.dual_residual = std::sqrt(rd.squaredNorm() + rfree.squaredNorm()) /
                      (1.0 + std::sqrt(f.c.squaredNorm() + f.cu.squaredNorm()));
  (void)p;
}

}  // namespace

Solution solve(const Problem& p, const Options& opts) {
  p.validate();
  const Layout lay(p.block_dims);
  const FlatProblem f = flatten(p, lay);
  Reduced red;
  const PresolveOutcome pre = presolve(f, opts.tol, red);

  Solution sol;
  if (pre.status != Status::Optimal) {
    sol.status = pre.status;
    sol.message = pre.message;
    for (int d : p.block_dims) {
      sol.X.push_back(RealMatrix::Zero(d, d));
      sol.S.push_back(RealMatrix::Zero(d, d));
    }
    sol.free = RealVector::Zero(p.num_free);
    sol.y = pre.ray.size() ? pre.ray : RealVector::Zero(f.A.rows());
    // the ray certifies infeasibility; objectives are reported along it
    sol.primal_obj = std::numeric_limits<double>::infinity();
    sol.dual_obj = pre.status == Status::Infeasible ? std::numeric_limits<double>::infinity()
                                                    : -std::numeric_limits<double>::infinity();
    sol.gap = std::numeric_limits<double>::quiet_NaN();
    return sol;
  }
  sol.removed_constraints =
      static_cast<int>(f.A.rows() - red.free_rank - static_cast<Eigen::Index>(red.kept.size()));

  double bmax = 0.0;
  for (const auto& c : p.constraints) bmax = std::max(bmax, std::abs(c.rhs));
  InteriorPoint ipm(lay, red, opts, 1.0 + bmax);
  Solution raw = ipm.run();

  sol.status = raw.status;
  sol.message = raw.message;
  sol.iterations = raw.iterations;
  sol.history = std::move(raw.history);
  sol.X = std::move(raw.X);
  sol.S = std::move(raw.S);
  const RealVector x = stack_blocks(lay, sol.X);
  sol.free = recover_free(red, x, p.num_free);
  sol.y = recover_dual(red, raw.y);
  finalize(p, lay, f, sol);
  if (sol.status == Status::Infeasible || sol.status == Status::Unbounded) {
    sol.gap = std::numeric_limits<double>::quiet_NaN();
  }
  return sol;
}

VerificationReport verify_solution(const Problem& p, const Solution& s, double tol) {
  p.validate();
  const Layout lay(p.block_dims);
  const FlatProblem f = flatten(p, lay);
  VerificationReport rep;
  if (s.X.size() != p.block_dims.size() || s.S.size() != p.block_dims.size() ||
      s.y.size() != f.A.rows() || s.free.size() != p.num_free) {
    rep.checks.push_back({"shape", 1.0, false});
    return rep;
  }
  for (std::size_t b = 0; b < p.block_dims.size(); ++b) {
    if (s.X[b].rows() != p.block_dims[b] || s.S[b].rows() != p.block_dims[b]) {
      rep.checks.push_back({"shape", 1.0, false});
      return rep;
    }
  }
  // residuals straight from the constraint list
  double rp2 = 0.0, bn2 = 0.0;
  for (const auto& con : p.constraints) {
    double lhs = 0.0;
    for (std::size_t b = 0; b < p.block_dims.size(); ++b) {
      if (con.blocks[b].size() != 0) lhs += con.blocks[b].cwiseProduct(s.X[b]).sum();
    }
    if (con.free.size() != 0) lhs += con.free.dot(s.free);
    rp2 += (lhs - con.rhs) * (lhs - con.rhs);
    bn2 += con.rhs * con.rhs;
  }
  const double primal_res = std::sqrt(rp2) / (1.0 + std::sqrt(bn2));

  double rd2 = 0.0, cn2 = 0.0;
  for (std::size_t b = 0; b < p.block_dims.size(); ++b) {
    const int d = p.block_dims[b];
    RealMatrix r = p.objective[b].size() ? p.objective[b] : RealMatrix::Zero(d, d);
    cn2 += r.squaredNorm();
    for (std::size_t k = 0; k < p.constraints.size(); ++k) {
      if (p.constraints[k].blocks[b].size() != 0) {
        r -= s.y(static_cast<Eigen::Index>(k)) * p.constraints[k].blocks[b];
      }
    }
    r -= s.S[b];
    rd2 += r.squaredNorm();
  }
  RealVector cu = p.free_objective.size() ? p.free_objective : RealVector::Zero(p.num_free);
  cn2 += cu.squaredNorm();
  for (std::size_t k = 0; k < p.constraints.size(); ++k) {
    if (p.constraints[k].free.size() != 0) {
      cu -= s.y(static_cast<Eigen::Index>(k)) * p.constraints[k].free;
    }
  }
  rd2 += cu.squaredNorm();
  const double dual_res = std::sqrt(rd2) / (1.0 + std::sqrt(cn2));

  double pobj = 0.0;
  for (std::size_t b = 0; b < p.block_dims.size(); ++b) {
    if (p.objective[b].size() != 0) pobj += p.objective[b].cwiseProduct(s.X[b]).sum();
  }
  if (p.free_objective.size() != 0) pobj += p.free_objective.dot(s.free);
  double dobj = 0.0;
  for (std::size_t k = 0; k < p.constraints.size(); ++k) {
    dobj += p.constraints[k].rhs * s.y(static_cast<Eigen::Index>(k));
  }
  const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

  double xmin = std::numeric_limits<double>::infinity();
  double smin = xmin;
  for (std::size_t b = 0; b < p.block_dims.size(); ++b) {
    xmin = std::min(xmin, min_eig(0.5 * (s.X[b] + s.X[b].transpose())));
    smin = std::min(smin, min_eig(0.5 * (s.S[b] + s.S[b].transpose())));
  }

  rep.checks.push_back({"primal_residual", primal_res, primal_res < tol});
  rep.checks.push_back({"dual_residual", dual_res, dual_res < tol});
  rep.checks.push_back({"duality_gap", gap, gap < tol});
  rep.checks.push_back({"primal_cone", xmin, xmin >= -tol});
  rep.checks.push_back({"dual_cone", smin, smin >= -tol});
  return rep;
}

// ---------------------------------------------------------------------------
// SDPA-style dump

void write_sdpa(const Problem& p, std::ostream& out) {
  p.validate();
  const int nf = p.num_free;
  const int nblocks = static_cast<int>(p.block_dims.size()) + (nf > 0 ? 1 : 0);
  out << "* vclone SDP dump: SDPA dual form, F0 = -C, Fi = A_i, c_i = b_i\n";
  out << "* free variables u = u+ - u- occupy the trailing diagonal block\n";
  out << p.constraints.size() << "\n" << nblocks << "\n";
  for (int d : p.block_dims) out << d << " ";
  if (nf > 0) out << -2 * nf;
  out << "\n";
  out.precision(17);
  for (std::size_t k = 0; k < p.constraints.size(); ++k) {
    out << (k ? " " : "") << p.constraints[k].rhs;
  }
  out << "\n";
  auto emit = [&](std::size_t mat, std::size_t blk, const RealMatrix& m, double sign) {
    if (m.size() == 0) return;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = i; j < m.cols(); ++j) {
        if (m(i, j) != 0.0) {
          out << mat << " " << blk + 1 << " " << i + 1 << " " << j + 1 << " " << sign * m(i, j)
              << "\n";
        }
      }
    }
  };
  auto emit_free = [&](std::size_t mat, const RealVector& v, double sign) {
    if (nf == 0 || v.size() == 0) return;
    const std::size_t blk = p.block_dims.size() + 1;
    for (int j = 0; j < nf; ++j) {
      if (v(j) == 0.0) continue;
      out << mat << " " << blk << " " << j + 1 << " " << j + 1 << " " << sign * v(j) << "\n";
      out << mat << " " << blk << " " << nf + j + 1 << " " << nf + j + 1 << " " << -sign * v(j)
          << "\n";
    }
  };
  for (std::size_t b = 0; b < p.block_dims.size(); ++b) emit(0, b, p.objective[b], -1.0);
  emit_free(0, p.free_objective, -1.0);
  for (std::size_t k = 0; k < p.constraints.size(); ++k) {
    for (std::size_t b = 0; b < p.block_dims.size(); ++b) emit(k + 1, b, p.constraints[k].blocks[b], 1.0);
    emit_free(k + 1, p.constraints[k].free, 1.0);
  }
}

Problem read_sdpa(std::istream& in) {
  std::string line;
  std::vector<std::string> body;
  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '*' || line[pos] == '"') continue;
    body.push_back(line);
  }
  if (body.size() < 4) throw std::invalid_argument("read_sdpa: truncated header");
  auto parse_ints = [](const std::string& s) {
    std::istringstream is(s);
    std::vector<long> v;
    long x;
    while (is >> x) v.push_back(x);
    return v;
  };
  const long m = parse_ints(body[0]).at(0);
  const long nblocks = parse_ints(body[1]).at(0);
  const std::vector<long> sizes = parse_ints(body[2]);
  if (static_cast<long>(sizes.size()) != nblocks) {
    throw std::invalid_argument("read_sdpa: block size count mismatch");
  }
  Problem p;
  int free_block = -1;
  for (long b = 0; b < nblocks; ++b) {
    if (sizes[b] < 0) {
      if (b != nblocks - 1 || (-sizes[b]) % 2 != 0) {
        throw std::invalid_argument("read_sdpa: diagonal block must be last with even size");
      }
      free_block = static_cast<int>(b);
      p.num_free = static_cast<int>(-sizes[b] / 2);
    } else {
      p.block_dims.push_back(static_cast<int>(sizes[b]));
    }
  }
  std::istringstream rhs(body[3]);
  p.constraints.resize(static_cast<std::size_t>(m));
  for (long k = 0; k < m; ++k) {
    if (!(rhs >> p.constraints[k].rhs)) throw std::invalid_argument("read_sdpa: missing rhs");
  }
  const std::size_t nb = p.block_dims.size();
  auto zeros = [&](std::size_t b) { return RealMatrix::Zero(p.block_dims[b], p.block_dims[b]); };
  p.objective.assign(nb, RealMatrix());
  p.free_objective = RealVector::Zero(p.num_free);
  for (auto& c : p.constraints) {
    c.blocks.assign(nb, RealMatrix());
    c.free = RealVector::Zero(p.num_free);
  }
  for (std::size_t li = 4; li < body.size(); ++li) {
    std::istringstream is(body[li]);
    long mat, blk, i, j;
    double v;
    if (!(is >> mat >> blk >> i >> j >> v)) throw std::invalid_argument("read_sdpa: bad entry line");
    if (mat < 0 || mat > m || blk < 1 || blk > nblocks) {
      throw std::invalid_argument("read_sdpa: entry index out of range");
    }
    const double sign = mat == 0 ? -1.0 : 1.0;
    if (blk - 1 == free_block) {
      if (i > p.num_free) continue;  // u- copy carries the same data
      RealVector& tgt = mat == 0 ? p.free_objective : p.constraints[mat - 1].free;
      tgt(i - 1) = sign * v;
      continue;
    }
    const std::size_t b = static_cast<std::size_t>(blk - 1);
    RealMatrix& tgt = mat == 0 ? p.objective[b] : p.constraints[mat - 1].blocks[b];
    if (tgt.size() == 0) tgt = zeros(b);
    tgt(i - 1, j - 1) = sign * v;
    tgt(j - 1, i - 1) = sign * v;
  }
  if (p.num_free > 0 && p.free_objective.isZero()) p.free_objective.resize(0);
  return p;
}

}  // namespace vclone::sdp
