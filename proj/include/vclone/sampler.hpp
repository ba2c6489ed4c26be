#pragma once

// Monte Carlo simulation of a virtual operation: each round picks the plus
// or minus branch with probability lambda_pm / eta, measures the observable
// on the branch output and records +-eta times the outcome.

#include <cstdint>
#include <stdexcept>
#include <string>

#include "vclone/channels.hpp"
#include "vclone/linalg.hpp"

namespace vclone::sampler {

class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Counter-based generator: SplitMix64 finalizer applied to
/// seed + (counter + 1) * 0x9E3779B97F4A7C15. Round i of a run draws from the
/// key mix(seed + (i + 1) * gamma); draw j of that round is
/// mix(key + (j + 1) * gamma). No state is shared between rounds.
namespace rng {
inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
std::uint64_t mix(std::uint64_t z);
std::uint64_t round_key(std::uint64_t seed, std::uint64_t round);
/// Uniform double in [0, 1) with 53 random bits.
double uniform(std::uint64_t key, std::uint64_t draw);
}  // namespace rng

/// Observable with spectrum in {+1, -1}.
class DichotomicObservable {
 public:
  explicit DichotomicObservable(const HermitianOperator& x);
  /// e.g. "XX" for sigma_x (x) sigma_x.
  static DichotomicObservable pauli(const std::string& word);

  int dim() const { return x_.dim(); }
  const HermitianOperator& op() const { return x_; }
  const HermitianOperator& plus() const { return plus_; }    // (1 + X)/2
  const HermitianOperator& minus() const { return minus_; }  // (1 - X)/2

 private:
  HermitianOperator x_;
  HermitianOperator plus_;
  HermitianOperator minus_;
};

struct Estimate {
  std::uint64_t rounds = 0;
  double mean = 0.0;
  double second_moment = 0.0;
  double standard_error = 0.0;
  double eta_used = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t plus_branch_count = 0;

  /// Probability bound 2 exp(-eps^2 N / (2 eta^2)) for |mean - truth| >= eps.
  double hoeffding(double epsilon) const;
};

double hoeffding_bound(double eta, std::uint64_t rounds, double epsilon);

/// Tr[(lambda_plus L_plus(rho) - lambda_minus L_minus(rho)) X]
double exact_expectation(const QPDecomposition& q, const HermitianOperator& rho,
                         const HermitianOperator& x);

/// threads = 0 picks the hardware concurrency. Results do not depend on it.
Estimate simulate_virtual_measurement(const QPDecomposition& q, const DensityMatrix& rho,
                                      const DichotomicObservable& x, std::uint64_t rounds,
                                      std::uint64_t seed, unsigned threads = 0);

struct Coverage {
  int trials = 0;
  int exceedances = 0;  // runs with |mean - truth| >= epsilon
  double fraction = 0.0;
  double bound = 0.0;   // hoeffding_bound(eta, N, epsilon)
  double slack = 0.0;   // 3 sqrt(bound / trials)
  double truth = 0.0;

  bool within_bound() const { return fraction <= bound + slack; }
};

/// Seed of trial t in a coverage run.
std::uint64_t trial_seed(std::uint64_t seed, int trial);

Coverage empirical_coverage(const QPDecomposition& q, const DensityMatrix& rho,
                            const DichotomicObservable& x, std::uint64_t rounds, int trials,
                            double epsilon, std::uint64_t seed, unsigned threads = 0);

/// Observables with arbitrary spectrum, measured in their eigenbasis and
/// rescaled to X' = (2X - (x_max + x_min)) / (x_max - x_min).
struct GeneralEstimate {
  Estimate rescaled;  // statistics of the +-eta * x' samples
  double x_min = 0.0;
  double x_max = 0.0;
  double mean = 0.0;        // estimate of Tr[L(rho) X]
  double range_scale = 1.0; // (x_max - x_min) / 2
  double effective_eta = 1.0;
  std::string caveat;
};

GeneralEstimate simulate_general_observable(const QPDecomposition& q, const DensityMatrix& rho,
                                            const HermitianOperator& x, std::uint64_t rounds,
                                            std::uint64_t seed, unsigned threads = 0);

}  // namespace vclone::sampler
