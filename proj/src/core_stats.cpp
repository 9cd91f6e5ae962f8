#include "pkboin/core_stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pkboin {

namespace {

bool is_probability(double p) { return p > 0.0 && p < 1.0; }

// Continued fraction for I_x(a, b) (modified Lentz). Converges fast for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

void UtilitySpec::validate() const {
  if (u1 != 100.0) throw std::invalid_argument("utility: u1 must be 100");
  if (u4 != 0.0) throw std::invalid_argument("utility: u4 must be 0");
  if (!(u2 >= 0.0 && u2 <= 100.0)) throw std::invalid_argument("utility: u2 must lie in [0, 100]");
  if (!(u3 >= 0.0 && u3 <= 100.0)) throw std::invalid_argument("utility: u3 must lie in [0, 100]");
}

PkPosteriorParams PkPosteriorParams::from_target(double target, double inefficacious_ratio,
                                                 double prior_sd) {
  PkPosteriorParams pk;
  pk.prior_sd = prior_sd;
  pk.target = target;
  pk.inefficacious = inefficacious_ratio * target;
  pk.cutoff = 0.5 * (pk.target + pk.inefficacious);
  return pk;
}

void PkPosteriorParams::validate() const {
  if (!(prior_sd > 0.0)) throw std::invalid_argument("pk.prior_sd must be positive");
  if (!(target > 0.0)) throw std::invalid_argument("pk.r_P must be positive");
  if (!(inefficacious < target)) throw std::invalid_argument("pk.r_I must be below pk.r_P");
  if (!(cutoff >= 0.0 && cutoff <= target))
    throw std::invalid_argument("pk.zeta1 must lie in [0, r_P]");
  if (sampling_sd < 0.0) throw std::invalid_argument("pk.sampling_sd must be nonnegative");
}

IntervalBoundaries boin_boundaries(double target_tox) {
  if (!is_probability(target_tox))
    throw std::domain_error("boin_boundaries: target toxicity must lie in (0, 1)");
  const double p = target_tox;
  const double phi1 = 0.6 * p;
  const double phi2 = 1.4 * p;
  IntervalBoundaries b;
  b.lambda1 = std::log((1.0 - phi1) / (1.0 - p)) / std::log(p * (1.0 - phi1) / (phi1 * (1.0 - p)));
  b.lambda2 = std::log((1.0 - p) / (1.0 - phi2)) / std::log(phi2 * (1.0 - p) / (p * (1.0 - phi2)));
  return b;
}

double utility_benchmark(const UtilitySpec& u, double target_tox, double min_eff) {
  const double lower = u.u1 * (1.0 - target_tox) * min_eff +
                       u.u2 * (1.0 - target_tox) * (1.0 - min_eff) + u.u3 * target_tox * min_eff;
  return lower + (100.0 - lower) / 2.0;
}

double quasi_events(std::span<const double, 4> counts, const UtilitySpec& u) {
  return (u.u1 * counts[0] + u.u2 * counts[1] + u.u3 * counts[2] + u.u4 * counts[3]) / 100.0;
}

double quasi_events(const std::array<int, 4>& counts, const UtilitySpec& u) {
  const std::array<double, 4> c{static_cast<double>(counts[0]), static_cast<double>(counts[1]),
                                static_cast<double>(counts[2]), static_cast<double>(counts[3])};
  return quasi_events(std::span<const double, 4>(c), u);
}

double expected_utility(double tox_prob, double eff_prob, const UtilitySpec& u) {
  if (u.u2 + u.u3 != 100.0)
    throw std::invalid_argument("expected_utility: requires u2 + u3 == 100");
  return u.u2 * (1.0 - tox_prob) + u.u3 * eff_prob;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("incomplete beta: a, b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("incomplete beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double beta_posterior_tail(double events, int n, double threshold, Tail direction) {
  if (n < 0) throw std::domain_error("beta_posterior_tail: n must be nonnegative");
  if (!(events >= 0.0 && events <= static_cast<double>(n)))
    throw std::domain_error("beta_posterior_tail: events must lie in [0, n]");
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw std::domain_error("beta_posterior_tail: threshold must lie in [0, 1]");
  const double cdf = regularized_incomplete_beta(1.0 + events, 1.0 + n - events, threshold);
  return direction == Tail::below ? cdf : 1.0 - cdf;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double pk_below_target_prob(double sample_mean, int n, double sampling_sd, double prior_sd,
                            double target) {
  if (n < 1) throw std::domain_error("pk_below_target_prob: n must be at least 1");
  if (!(sampling_sd > 0.0)) throw std::domain_error("pk_below_target_prob: sampling sd must be positive");
  if (!(prior_sd > 0.0)) throw std::domain_error("pk_below_target_prob: prior sd must be positive");

  const double precision = 1.0 / (prior_sd * prior_sd) + n / (sampling_sd * sampling_sd);
  const double mean = n * sample_mean / (sampling_sd * sampling_sd * precision);
  const double sd = std::sqrt(1.0 / precision);

  if (target <= 0.0) return 0.0;
  const double upper = normal_cdf((target - mean) / sd);
  const double standardized_mean = mean / sd;
  if (standardized_mean > 8.0) return upper;
  // Renormalize over r > 0.
  const double lower = normal_cdf(-standardized_mean);
  const double mass = normal_cdf(standardized_mean);
  return (upper - lower) / mass;
}

std::vector<double> pava(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size())
    throw std::invalid_argument("pava: values and weights differ in length (" +
                                std::to_string(values.size()) + " vs " +
                                std::to_string(weights.size()) + ")");
  for (double w : weights)
    if (!(w > 0.0)) throw std::invalid_argument("pava: weights must be positive");

  struct Block {
    double mean;
    double weight;
    std::size_t size;
  };
  std::vector<Block> blocks;
  blocks.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    blocks.push_back({values[i], weights[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
      const Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      const double w = prev.weight + top.weight;
      prev.mean = (prev.weight * prev.mean + top.weight * top.mean) / w;
      prev.weight = w;
      prev.size += top.size;
    }
  }

  std::vector<double> fitted;
  fitted.reserve(values.size());
  for (const Block& b : blocks) fitted.insert(fitted.end(), b.size, b.mean);
  return fitted;
}

}  // namespace pkboin
