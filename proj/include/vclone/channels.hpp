#pragma once

// Choi-Jamiolkowski representation of linear maps between matrix spaces.
//
// Convention: for a map L from d_in x d_in to d_out x d_out matrices,
//   J = sum_{a,b} |a><b| (x) L(|a><b|)          (input factor first)
//   L(rho) = Tr_in[(rho^T (x) 1) J].
// The transpose is taken in the computational basis everywhere.

#include <optional>
#include <string>
#include <vector>

#include "vclone/linalg.hpp"
#include "vclone/sdp.hpp"

namespace vclone {

class ChannelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when basis-image inputs do not span the operator space.
class RankDeficiencyError : public ChannelError {
 public:
  RankDeficiencyError(const std::string& what, int rank, int required)
      : ChannelError(what), rank_(rank), required_(required) {}
  int rank() const { return rank_; }
  int required() const { return required_; }

 private:
  int rank_;
  int required_;
};

class ChoiMatrix {
 public:
  ChoiMatrix() = default;
  ChoiMatrix(int dim_in, int dim_out, HermitianOperator j);

  int dim_in() const { return dim_in_; }
  int dim_out() const { return dim_out_; }
  const HermitianOperator& op() const { return j_; }
  const ComplexMatrix& matrix() const { return j_.matrix(); }

  /// Tr_out(J), a dim_in x dim_in matrix; equals 1 for trace-preserving maps.
  ComplexMatrix output_trace() const;

 private:
  int dim_in_ = 0;
  int dim_out_ = 0;
  HermitianOperator j_;
};

/// Applies the map to an arbitrary (not necessarily Hermitian) matrix.
ComplexMatrix apply_choi(const ChoiMatrix& j, const ComplexMatrix& x);
HermitianOperator apply_choi(const ChoiMatrix& j, const HermitianOperator& rho);

ChoiMatrix identity_choi(int dim);
ChoiMatrix choi_from_kraus(const std::vector<ComplexMatrix>& kraus, int dim_in, int dim_out);

/// Choi of the measure-and-prepare map X -> sum_i Tr(E_i X) sigma_i.
ChoiMatrix measure_prepare_choi(const std::vector<HermitianOperator>& effects,
                                const std::vector<HermitianOperator>& preparations);

/// Choi of second o first.
ChoiMatrix compose(const ChoiMatrix& first, const ChoiMatrix& second);
/// Choi of a (x) b with input and output factors ordered (a, b).
ChoiMatrix tensor_product(const ChoiMatrix& a, const ChoiMatrix& b);

/// n-fold cloner obtained by iterating a 1 -> 2 map: each step feeds the last
/// output copy through `cloner` and keeps the others, so the result maps
/// d -> d^n.
ChoiMatrix iterate_cloner(const ChoiMatrix& cloner, int n);

struct MapDiagnostics {
  bool ok = false;
  double hermiticity_error = 0.0;
  double trace_preservation_error = 0.0;
  std::optional<double> min_eigenvalue;  // set by is_cptp
};

MapDiagnostics is_hptp(const ChoiMatrix& j, double tol);
MapDiagnostics is_cptp(const ChoiMatrix& j, double tol);

/// The linear map fixed by L(inputs[i]) = images[i]. Inputs must span the
/// full d^2-dimensional Hermitian space; redundant consistent inputs are
/// accepted, inconsistent ones are rejected.
ChoiMatrix map_from_basis_images(const std::vector<HermitianOperator>& inputs,
                                 const std::vector<HermitianOperator>& images);

/// L = lambda_plus * L_plus - lambda_minus * L_minus with CPTP branches.
class QPDecomposition {
 public:
  QPDecomposition() = default;
  /// Validates lambda_plus - lambda_minus = 1 (1e-9), non-negative weights
  /// and CPTP branches at `cptp_tol`.
  QPDecomposition(double lambda_plus, double lambda_minus, ChoiMatrix choi_plus,
                  ChoiMatrix choi_minus, double cptp_tol = 1e-9);

  double lambda_plus() const { return lambda_plus_; }
  double lambda_minus() const { return lambda_minus_; }
  const ChoiMatrix& choi_plus() const { return choi_plus_; }
  const ChoiMatrix& choi_minus() const { return choi_minus_; }
  int dim_in() const { return choi_plus_.dim_in(); }
  int dim_out() const { return choi_plus_.dim_out(); }

  /// lambda_plus * J_plus - lambda_minus * J_minus.
  ChoiMatrix combined() const;

 private:
  double lambda_plus_ = 1.0;
  double lambda_minus_ = 0.0;
  ChoiMatrix choi_plus_;
  ChoiMatrix choi_minus_;
};

/// Simulation cost lambda_plus + lambda_minus.
double qpd_cost(const QPDecomposition& q);

HermitianOperator apply_qpd(const QPDecomposition& q, const HermitianOperator& rho);

/// Cost-minimal decomposition of an HPTP map, via an SDP.
QPDecomposition optimal_qpd(const ChoiMatrix& j, const sdp::Options& opts = {});

/// Builds a valid QPD from raw (unnormalized) PSD parts whose difference is
/// the intended map: restores exact trace preservation and positivity with a
/// minimal identity shift. `target` (when given) is reproduced exactly.
QPDecomposition qpd_from_parts(const HermitianOperator& j_plus, const HermitianOperator& j_minus,
                               int dim_in, int dim_out,
                               const std::optional<HermitianOperator>& target = std::nullopt);

}  // namespace vclone
