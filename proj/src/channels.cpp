#include "vclone/channels.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace vclone {

namespace {

int checked_product(int a, int b) {
  if (a <= 0 || b <= 0) throw DimensionError("channel dimensions must be positive");
  return a * b;
}

// Block (a, b) of a Choi matrix, i.e. L(|a><b|).
ComplexMatrix choi_block(const ChoiMatrix& j, int a, int b) {
  const int o = j.dim_out();
  return j.matrix().block(a * o, b * o, o, o);
}

ChoiMatrix choi_from_images(int dim_in, int dim_out,
                            const std::function<ComplexMatrix(int, int)>& image_of_unit) {
  ComplexMatrix out(dim_in * dim_out, dim_in * dim_out);
  for (int a = 0; a < dim_in; ++a) {
    for (int b = 0; b < dim_in; ++b) {
      out.block(a * dim_out, b * dim_out, dim_out, dim_out) = image_of_unit(a, b);
    }
  }
  return ChoiMatrix(dim_in, dim_out, HermitianOperator(out));
}

ComplexMatrix traceless_part(const ComplexMatrix& m) {
  const auto d = m.rows();
  return m - (m.trace() / static_cast<double>(d)) * ComplexMatrix::Identity(d, d);
}

}  // namespace

ChoiMatrix::ChoiMatrix(int dim_in, int dim_out, HermitianOperator j)
    : dim_in_(dim_in), dim_out_(dim_out), j_(std::move(j)) {
  if (j_.dim() != checked_product(dim_in, dim_out)) {
    throw DimensionError("Choi matrix dimension " + std::to_string(j_.dim()) +
                         " does not match dim_in*dim_out = " +
                         std::to_string(dim_in * dim_out));
  }
}

ComplexMatrix ChoiMatrix::output_trace() const {
  const int dims[2] = {dim_in_, dim_out_};
  const int keep[1] = {0};
  return partial_trace(j_.matrix(), dims, keep);
}

ComplexMatrix apply_choi(const ChoiMatrix& j, const ComplexMatrix& x) {
  const int di = j.dim_in();
  const int o = j.dim_out();
  if (x.rows() != di || x.cols() != di) {
    throw DimensionError("apply_choi: input is " + std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + ", map expects " + std::to_string(di));
  }
  ComplexMatrix out = ComplexMatrix::Zero(o, o);
  const ComplexMatrix& jm = j.matrix();
  for (int a = 0; a < di; ++a) {
    for (int b = 0; b < di; ++b) {
      const Complex w = x(a, b);
      if (w == Complex(0.0, 0.0)) continue;
      out += w * jm.block(a * o, b * o, o, o);
    }
  }
  return out;
}

HermitianOperator apply_choi(const ChoiMatrix& j, const HermitianOperator& rho) {
  return HermitianOperator(apply_choi(j, rho.matrix()));
}

ChoiMatrix identity_choi(int dim) {
  return choi_from_kraus({ComplexMatrix::Identity(dim, dim)}, dim, dim);
}

ChoiMatrix choi_from_kraus(const std::vector<ComplexMatrix>& kraus, int dim_in, int dim_out) {
  checked_product(dim_in, dim_out);
  ComplexMatrix j = ComplexMatrix::Zero(dim_in * dim_out, dim_in * dim_out);
  for (const auto& k : kraus) {
    if (k.rows() != dim_out || k.cols() != dim_in) {
      throw DimensionError("choi_from_kraus: Kraus operator must be dim_out x dim_in");
    }
    // vec of (1 (x) K)|Omega>: stacked columns of K
    ComplexVector v(dim_in * dim_out);
    for (int a = 0; a < dim_in; ++a) v.segment(a * dim_out, dim_out) = k.col(a);
    j += v * v.adjoint();
  }
  return ChoiMatrix(dim_in, dim_out, HermitianOperator(j));
}

ChoiMatrix measure_prepare_choi(const std::vector<HermitianOperator>& effects,
                                const std::vector<HermitianOperator>& preparations) {
  if (effects.empty() || effects.size() != preparations.size()) {
    throw DimensionError("measure_prepare_choi: need matching non-empty effect/preparation lists");
  }
  const int di = effects.front().dim();
  const int o = preparations.front().dim();
  HermitianOperator j = HermitianOperator::zero(di * o);
  for (std::size_t i = 0; i < effects.size(); ++i) {
    if (effects[i].dim() != di || preparations[i].dim() != o) {
      throw DimensionError("measure_prepare_choi: inconsistent dimensions");
    }
    j += kron(effects[i].transpose(), preparations[i]);
  }
  return ChoiMatrix(di, o, j);
}

ChoiMatrix compose(const ChoiMatrix& first, const ChoiMatrix& second) {
  if (first.dim_out() != second.dim_in()) {
    throw DimensionError("compose: output of first map does not match input of second");
  }
  return choi_from_images(first.dim_in(), second.dim_out(), [&](int a, int b) {
    return apply_choi(second, choi_block(first, a, b));
  });
}

ChoiMatrix tensor_product(const ChoiMatrix& a, const ChoiMatrix& b) {
  const int ia = a.dim_in(), ib = b.dim_in();
  return choi_from_images(ia * ib, a.dim_out() * b.dim_out(), [&](int r, int c) {
    return kron(choi_block(a, r / ib, c / ib), choi_block(b, r % ib, c % ib));
  });
}

ChoiMatrix iterate_cloner(const ChoiMatrix& cloner, int n) {
  const int d = cloner.dim_in();
  if (cloner.dim_out() != d * d) {
    throw DimensionError("iterate_cloner: expects a d -> d^2 map");
  }
  if (n < 1) throw DimensionError("iterate_cloner: n must be positive");
  if (n == 1) return identity_choi(d);
  ChoiMatrix current = cloner;
  int copies = 2;
  while (copies < n) {
    int keep = 1;
    for (int i = 0; i < copies - 1; ++i) keep *= d;
    current = compose(current, tensor_product(identity_choi(keep), cloner));
    ++copies;
  }
  return current;
}

MapDiagnostics is_hptp(const ChoiMatrix& j, double tol) {
  MapDiagnostics diag;
  const ComplexMatrix& m = j.matrix();
  diag.hermiticity_error = max_abs(m - m.adjoint());
  const ComplexMatrix tp = j.output_trace();
  diag.trace_preservation_error =
      max_abs(tp - ComplexMatrix::Identity(j.dim_in(), j.dim_in()));
  diag.ok = diag.hermiticity_error < tol && diag.trace_preservation_error < tol;
  return diag;
}

MapDiagnostics is_cptp(const ChoiMatrix& j, double tol) {
  MapDiagnostics diag = is_hptp(j, tol);
  diag.min_eigenvalue = min_eigenvalue(j.op());
  diag.ok = diag.ok && *diag.min_eigenvalue >= -tol;
  return diag;
}

ChoiMatrix map_from_basis_images(const std::vector<HermitianOperator>& inputs,
                                 const std::vector<HermitianOperator>& images) {
  if (inputs.empty() || inputs.size() != images.size()) {
    throw DimensionError("map_from_basis_images: need matching non-empty input/image lists");
  }
  const int di = inputs.front().dim();
  const int o = images.front().dim();
  const auto m = static_cast<Eigen::Index>(inputs.size());
  const int n_in = di * di;
  const int n_out = o * o;
  RealMatrix c(n_in, m);
  RealMatrix y(n_out, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (inputs[i].dim() != di || images[i].dim() != o) {
      throw DimensionError("map_from_basis_images: inconsistent dimensions");
    }
    c.col(i) = hermitian_coordinates(inputs[i].matrix());
    y.col(i) = hermitian_coordinates(images[i].matrix());
  }

  Eigen::JacobiSVD<RealMatrix> gram_svd(c.transpose() * c);
  const RealVector sv = gram_svd.singularValues();
  const double cut = default_tolerances().spanning * sv(0);
  const int rank = static_cast<int>((sv.array() > cut).count());
  if (rank < n_in) {
    throw RankDeficiencyError("map_from_basis_images: inputs span a " + std::to_string(rank) +
                                  "-dimensional subspace, need " + std::to_string(n_in),
                              rank, n_in);
  }

  // Solve C^T L^T = Y^T for the real matrix L acting on coordinates.
  Eigen::ColPivHouseholderQR<RealMatrix> qr(c.transpose());
  const RealMatrix lt = qr.solve(y.transpose());
  const double resid = (c.transpose() * lt - y.transpose()).cwiseAbs().maxCoeff();
  if (resid > 1e-9 * (1.0 + y.cwiseAbs().maxCoeff())) {
    throw ChannelError("map_from_basis_images: images are not consistent with a linear map");
  }

  const std::vector<ComplexMatrix> basis = hermitian_basis(di);
  ComplexMatrix j = ComplexMatrix::Zero(di * o, di * o);
  for (int t = 0; t < n_in; ++t) {
    const ComplexMatrix image = from_hermitian_coordinates(lt.row(t).transpose(), o);
    j += kron(ComplexMatrix(basis[t].transpose()), image);
  }
  return ChoiMatrix(di, o, HermitianOperator(j));
}

QPDecomposition::QPDecomposition(double lambda_plus, double lambda_minus, ChoiMatrix choi_plus,
                                 ChoiMatrix choi_minus, double cptp_tol)
    : lambda_plus_(lambda_plus),
      lambda_minus_(lambda_minus),
      choi_plus_(std::move(choi_plus)),
      choi_minus_(std::move(choi_minus)) {
  if (!(lambda_plus_ >= 0.0) || !(lambda_minus_ >= 0.0)) {
    throw ChannelError("QPD weights must be non-negative");
  }
  if (std::abs(lambda_plus_ - lambda_minus_ - 1.0) > 1e-9) {
    throw ChannelError("QPD weights must satisfy lambda_plus - lambda_minus = 1");
  }
  if (choi_plus_.dim_in() != choi_minus_.dim_in() ||
      choi_plus_.dim_out() != choi_minus_.dim_out()) {
    throw DimensionError("QPD branches have different shapes");
  }
  const MapDiagnostics dp = is_cptp(choi_plus_, cptp_tol);
  if (!dp.ok) {
    throw ChannelError("QPD plus branch is not CPTP (min eigenvalue " +
                       std::to_string(*dp.min_eigenvalue) + ", TP error " +
                       std::to_string(dp.trace_preservation_error) + ")");
  }
  const MapDiagnostics dm = is_cptp(choi_minus_, cptp_tol);
  if (!dm.ok) {
    throw ChannelError("QPD minus branch is not CPTP (min eigenvalue " +
                       std::to_string(*dm.min_eigenvalue) + ", TP error " +
                       std::to_string(dm.trace_preservation_error) + ")");
  }
}

ChoiMatrix QPDecomposition::combined() const {
  return ChoiMatrix(dim_in(), dim_out(),
                    lambda_plus_ * choi_plus_.op() - lambda_minus_ * choi_minus_.op());
}

double qpd_cost(const QPDecomposition& q) { return q.lambda_plus() + q.lambda_minus(); }

HermitianOperator apply_qpd(const QPDecomposition& q, const HermitianOperator& rho) {
  HermitianOperator out = q.lambda_plus() * apply_choi(q.choi_plus(), rho);
  if (q.lambda_minus() != 0.0) out -= q.lambda_minus() * apply_choi(q.choi_minus(), rho);
  return out;
}

QPDecomposition qpd_from_parts(const HermitianOperator& j_plus, const HermitianOperator& j_minus,
                               int dim_in, int dim_out,
                               const std::optional<HermitianOperator>& target) {
  const int dim = checked_product(dim_in, dim_out);
  if (j_plus.dim() != dim || j_minus.dim() != dim) {
    throw DimensionError("qpd_from_parts: part dimensions do not match dim_in*dim_out");
  }
  const int dims[2] = {dim_in, dim_out};
  const int keep[1] = {0};
  const ComplexMatrix id_out = ComplexMatrix::Identity(dim_out, dim_out);

  ComplexMatrix tgt;
  if (target) {
    if (target->dim() != dim) throw DimensionError("qpd_from_parts: target has wrong dimension");
    tgt = target->matrix();
  } else {
    tgt = j_plus.matrix() - j_minus.matrix();
    const ComplexMatrix delta =
        partial_trace(tgt, dims, keep) - ComplexMatrix::Identity(dim_in, dim_in);
    tgt -= kron(delta, id_out) / static_cast<double>(dim_out);
  }

  const HermitianOperator tgt_op(tgt);
  if (min_eigenvalue(tgt_op) >= -1e-10) {
    const ChoiMatrix c(dim_in, dim_out, tgt_op);
    if (is_cptp(c, 1e-9).ok) return QPDecomposition(1.0, 0.0, c, c);
  }

  ComplexMatrix jp = j_plus.matrix();
  const ComplexMatrix tp = partial_trace(jp, dims, keep);
  jp -= kron(traceless_part(tp), id_out) / static_cast<double>(dim_out);
  ComplexMatrix jm = jp - tgt;

  const double shift = std::max({0.0, -min_eigenvalue(HermitianOperator(jp)),
                                 -min_eigenvalue(HermitianOperator(jm))});
  if (shift > 0.0) {
    jp += shift * ComplexMatrix::Identity(dim, dim);
    jm += shift * ComplexMatrix::Identity(dim, dim);
  }
  const double lp = jp.trace().real() / dim_in;
  double lm = jm.trace().real() / dim_in;
  if (lm < 1e-12) {
    // the target is (numerically) CP; keep a valid placeholder branch
    lm = 0.0;
    const ChoiMatrix cp(dim_in, dim_out, HermitianOperator(jp / lp));
    const ChoiMatrix depol(dim_in, dim_out,
                           HermitianOperator(ComplexMatrix::Identity(dim, dim) / dim_out));
    return QPDecomposition(1.0, 0.0, cp, depol);
  }
  const ChoiMatrix cp(dim_in, dim_out, HermitianOperator(jp / lp));
  const ChoiMatrix cm(dim_in, dim_out, HermitianOperator(jm / lm));
  return QPDecomposition(lm + 1.0, lm, cp, cm);
}

QPDecomposition optimal_qpd(const ChoiMatrix& j, const sdp::Options& opts) {
  const MapDiagnostics d = is_hptp(j, 1e-8);
  if (!d.ok) {
    throw ChannelError("optimal_qpd: map is not HPTP (TP error " +
                       std::to_string(d.trace_preservation_error) + ")");
  }
  const int di = j.dim_in();
  const int o = j.dim_out();
  const int n = di * o;

  sdp::Problem p;
  p.block_dims = {2 * n, 2 * n};
  p.objective = {RealMatrix(), RealMatrix()};
  p.num_free = 2;
  p.free_objective = RealVector::Ones(2);

  // J_plus - J_minus = J, coordinate by coordinate
  for (const ComplexMatrix& h : hermitian_basis(n)) {
    const RealMatrix e = 0.5 * real_embedding(HermitianOperator(h));
    sdp::Constraint c;
    c.blocks = {e, -e};
    c.rhs = (h * j.matrix()).trace().real();
    p.constraints.push_back(std::move(c));
  }
  // Tr_out J_pm = lambda_pm 1
  const ComplexMatrix id_out = ComplexMatrix::Identity(o, o);
  for (const ComplexMatrix& f : hermitian_basis(di)) {
    const RealMatrix e = 0.5 * real_embedding(HermitianOperator(kron(f, id_out)));
    const double tr = f.trace().real();
    for (int branch = 0; branch < 2; ++branch) {
      sdp::Constraint c;
      c.blocks = {branch == 0 ? e : RealMatrix(), branch == 0 ? RealMatrix() : e};
      c.free = RealVector::Zero(2);
      c.free(branch) = -tr;
      c.rhs = 0.0;
      p.constraints.push_back(std::move(c));
    }
  }

  const sdp::Solution s = sdp::solve(p, opts);
  if (s.status != sdp::Status::Optimal) {
    throw ChannelError("optimal_qpd: SDP solver returned " + sdp::to_string(s.status) +
                       (s.message.empty() ? "" : " (" + s.message + ")"));
  }
  return qpd_from_parts(from_real_embedding(s.X[0]), from_real_embedding(s.X[1]), di, o, j.op());
}

}  // namespace vclone
