#include "vclone/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

namespace vclone::sampler {

namespace rng {

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t round_key(std::uint64_t seed, std::uint64_t round) {
  return mix(seed + (round + 1) * kGamma);
}

double uniform(std::uint64_t key, std::uint64_t draw) {
  return static_cast<double>(mix(key + (draw + 1) * kGamma) >> 11) * 0x1.0p-53;
}

}  // namespace rng

DichotomicObservable::DichotomicObservable(const HermitianOperator& x) : x_(x) {
  const int d = x.dim();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  const double err = max_abs(x.matrix() * x.matrix() - id);
  if (err > 1e-10) {
    throw SamplerError("observable is not dichotomic: |X^2 - 1|_max = " + std::to_string(err));
  }
  plus_ = HermitianOperator(ComplexMatrix(0.5 * (id + x.matrix())));
  minus_ = HermitianOperator(ComplexMatrix(0.5 * (id - x.matrix())));
}

DichotomicObservable DichotomicObservable::pauli(const std::string& word) {
  return DichotomicObservable(HermitianOperator(pauli::from_word(word)));
}

double hoeffding_bound(double eta, std::uint64_t rounds, double epsilon) {
  if (!(eta > 0.0) || rounds == 0 || !(epsilon >= 0.0)) {
    throw SamplerError("hoeffding_bound: eta, N must be positive and epsilon non-negative");
  }
  return 2.0 * std::exp(-epsilon * epsilon * static_cast<double>(rounds) / (2.0 * eta * eta));
}

double Estimate::hoeffding(double epsilon) const {
  return hoeffding_bound(eta_used, rounds, epsilon);
}

double exact_expectation(const QPDecomposition& q, const HermitianOperator& rho,
                         const HermitianOperator& x) {
  return (apply_qpd(q, rho).matrix() * x.matrix()).trace().real();
}

namespace {

// Outcome distribution on each branch output, as cumulative probabilities.
struct Table {
  std::vector<double> values;  // outcome values
  std::vector<double> cdf[2];  // [0] plus branch, [1] minus branch
  double p_plus_branch = 1.0;
  double eta = 1.0;
};

double clean_probability(double p, const char* what) {
  if (p < -1e-9 || p > 1.0 + 1e-9) {
    throw SamplerError(std::string("negative or excess probability on the ") + what +
                       " branch (" + std::to_string(p) + "); branch is not CPTP");
  }
  return std::clamp(p, 0.0, 1.0);
}

Table make_table(const QPDecomposition& q, const DensityMatrix& rho,
                 const std::vector<ComplexMatrix>& effects, std::vector<double> values) {
  if (rho.dim() != q.dim_in()) {
    throw SamplerError("state dimension " + std::to_string(rho.dim()) +
                       " does not match the map input dimension " + std::to_string(q.dim_in()));
  }
  if (effects.front().rows() != q.dim_out()) {
    throw SamplerError("observable dimension " + std::to_string(effects.front().rows()) +
                       " does not match the map output dimension " + std::to_string(q.dim_out()));
  }
  Table t;
  t.values = std::move(values);
  t.eta = qpd_cost(q);
  t.p_plus_branch = q.lambda_plus() / t.eta;
  const ChoiMatrix* branch[2] = {&q.choi_plus(), &q.choi_minus()};
  const char* names[2] = {"plus", "minus"};
  for (int b = 0; b < 2; ++b) {
    const ComplexMatrix out = apply_choi(*branch[b], rho.matrix());
    double acc = 0.0;
    for (const auto& e : effects) {
      acc += clean_probability((out * e).trace().real(), names[b]);
      t.cdf[b].push_back(acc);
    }
    if (std::abs(acc - 1.0) > 1e-9) {
      throw SamplerError(std::string("outcome probabilities on the ") + names[b] +
                         " branch sum to " + std::to_string(acc));
    }
    t.cdf[b].back() = 1.0;
  }
  return t;
}

using Counts = std::vector<std::uint64_t>;  // index: branch * K + outcome

void count_range(const Table& t, std::uint64_t seed, std::uint64_t begin, std::uint64_t end,
                 Counts& counts) {
  const std::size_t k = t.values.size();
  for (std::uint64_t i = begin; i < end; ++i) {
    const std::uint64_t key = rng::round_key(seed, i);
    const int b = rng::uniform(key, 0) < t.p_plus_branch ? 0 : 1;
    const double u = rng::uniform(key, 1);
    const auto& cdf = t.cdf[b];
    const std::size_t o = static_cast<std::size_t>(
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    ++counts[b * k + std::min(o, k - 1)];
  }
}

Counts run(const Table& t, std::uint64_t rounds, std::uint64_t seed, unsigned threads) {
  const std::size_t k = t.values.size();
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const std::uint64_t min_chunk = 1u << 16;
  threads = static_cast<unsigned>(
      std::max<std::uint64_t>(1, std::min<std::uint64_t>(threads, rounds / min_chunk)));
  std::vector<Counts> partial(threads, Counts(2 * k, 0));
  if (threads == 1) {
    count_range(t, seed, 0, rounds, partial[0]);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      const std::uint64_t lo = rounds * w / threads;
      const std::uint64_t hi = rounds * (w + 1) / threads;
      pool.emplace_back([&, w, lo, hi] { count_range(t, seed, lo, hi, partial[w]); });
    }
    for (auto& th : pool) th.join();
  }
  Counts total(2 * k, 0);
  for (const auto& p : partial) {
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += p[i];
  }
  return total;
}

Estimate summarize(const Table& t, const Counts& c, std::uint64_t rounds, std::uint64_t seed,
                   bool dichotomic) {
  const std::size_t k = t.values.size();
  Estimate e;
  e.rounds = rounds;
  e.seed = seed;
  e.eta_used = t.eta;
  for (std::size_t o = 0; o < k; ++o) e.plus_branch_count += c[o];
  const double n = static_cast<double>(rounds);
  if (dichotomic) {
    // net count of +eta samples minus -eta samples, exact in integers
    const auto net = static_cast<std::int64_t>(c[0]) - static_cast<std::int64_t>(c[1]) -
                     static_cast<std::int64_t>(c[2]) + static_cast<std::int64_t>(c[3]);
    e.mean = t.eta * (static_cast<double>(net) / n);
    // every sample is +-eta, so every square is the same number
    e.second_moment = t.eta * t.eta;
  } else {
    double sum = 0.0, sum2 = 0.0;
    for (int b = 0; b < 2; ++b) {
      const double sign = b == 0 ? 1.0 : -1.0;
      for (std::size_t o = 0; o < k; ++o) {
        const double v = sign * t.eta * t.values[o];
        const double cnt = static_cast<double>(c[b * k + o]);
        sum += cnt * v;
        sum2 += cnt * v * v;
      }
    }
    e.mean = sum / n;
    e.second_moment = sum2 / n;
  }
  const double var = rounds > 1 ? std::max(0.0, (e.second_moment - e.mean * e.mean) * n / (n - 1.0))
                                : 0.0;
  e.standard_error = std::sqrt(var / n);
  return e;
}

}  // namespace

Estimate simulate_virtual_measurement(const QPDecomposition& q, const DensityMatrix& rho,
                                      const DichotomicObservable& x, std::uint64_t rounds,
                                      std::uint64_t seed, unsigned threads) {
  if (rounds == 0) throw SamplerError("number of rounds must be positive");
  const Table t = make_table(q, rho, {x.plus().matrix(), x.minus().matrix()}, {1.0, -1.0});
  return summarize(t, run(t, rounds, seed, threads), rounds, seed, true);
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
  return rng::mix(seed ^ rng::mix(0xD1B54A32D192ED03ULL + static_cast<std::uint64_t>(trial)));
}

Coverage empirical_coverage(const QPDecomposition& q, const DensityMatrix& rho,
                            const DichotomicObservable& x, std::uint64_t rounds, int trials,
                            double epsilon, std::uint64_t seed, unsigned threads) {
  if (trials <= 0) throw SamplerError("number of trials must be positive");
  Coverage c;
  c.trials = trials;
  c.truth = exact_expectation(q, rho.op(), x.op());
  for (int t = 0; t < trials; ++t) {
    const Estimate e = simulate_virtual_measurement(q, rho, x, rounds, trial_seed(seed, t), threads);
    if (std::abs(e.mean - c.truth) >= epsilon) ++c.exceedances;
  }
  c.fraction = static_cast<double>(c.exceedances) / trials;
  c.bound = hoeffding_bound(qpd_cost(q), rounds, epsilon);
  c.slack = 3.0 * std::sqrt(c.bound / trials);
  return c;
}

GeneralEstimate simulate_general_observable(const QPDecomposition& q, const DensityMatrix& rho,
                                            const HermitianOperator& x, std::uint64_t rounds,
                                            std::uint64_t seed, unsigned threads) {
  if (rounds == 0) throw SamplerError("number of rounds must be positive");
  const HermitianEigen e = eig_hermitian(x);
  GeneralEstimate g;
  g.x_max = e.values(0);
  g.x_min = e.values(e.values.size() - 1);
  const double width = g.x_max - g.x_min;
  std::vector<ComplexMatrix> effects;
  std::vector<double> values;
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    effects.emplace_back(e.vectors.col(i) * e.vectors.col(i).adjoint());
    values.push_back(width > 0.0 ? (2.0 * e.values(i) - (g.x_max + g.x_min)) / width : 1.0);
  }
  const Table t = make_table(q, rho, effects, values);
  g.rescaled = summarize(t, run(t, rounds, seed, threads), rounds, seed, false);
  g.range_scale = width > 0.0 ? width / 2.0 : 0.0;
  g.mean = width > 0.0 ? g.range_scale * g.rescaled.mean + 0.5 * (g.x_max + g.x_min)
                       : g.x_max * (q.lambda_plus() - q.lambda_minus());
  g.effective_eta = t.eta * g.range_scale;
  g.caveat =
      "observable rescaled to the interval [-1, 1]; the sampling overhead for a general "
      "observable can depend on the state and the reported eta is not claimed optimal";
  return g;
}

}  // namespace vclone::sampler
