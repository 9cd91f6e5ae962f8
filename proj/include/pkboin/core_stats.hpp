#pragma once

#include <array>
#include <span>
#include <vector>

namespace pkboin {

/// Utility scores (0-100) for the four joint outcomes:
/// O1 = (no toxicity, response), O2 = (no toxicity, no response),
/// O3 = (toxicity, response), O4 = (toxicity, no response).
struct UtilitySpec {
  double u1 = 100.0;
  double u2 = 40.0;
  double u3 = 60.0;
  double u4 = 0.0;

  /// Throws std::invalid_argument unless u1 == 100, u4 == 0 and u2, u3 lie in [0, 100].
  void validate() const;

  std::array<double, 4> as_array() const { return {u1, u2, u3, u4}; }
  bool operator==(const UtilitySpec&) const = default;
};

/// Escalation (lambda1) and de-escalation (lambda2) boundaries on the observed toxicity rate.
struct IntervalBoundaries {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  bool operator==(const IntervalBoundaries&) const = default;
};

/// Prior and decision constants for the exposure (PK) endpoint.
struct PkPosteriorParams {
  double prior_sd = 10000.0;
  double target = 6000.0;         // r_P
  double inefficacious = 3600.0;  // r_I
  double cutoff = 4800.0;         // zeta_1, midpoint of r_P and r_I
  /// Fixed per-dose sampling sd. Zero means "estimate from the sample".
  double sampling_sd = 0.0;

  /// Builds the parameters from a target exposure with r_I = ratio * r_P.
  static PkPosteriorParams from_target(double target, double inefficacious_ratio = 0.6,
                                       double prior_sd = 10000.0);
  void validate() const;
  bool operator==(const PkPosteriorParams&) const = default;
};

enum class Tail { above, below };

/// Standard BOIN boundaries with phi1 = 0.6 p_T and phi2 = 1.4 p_T.
IntervalBoundaries boin_boundaries(double target_tox);

/// Benchmark utility u_b on the 0-100 scale.
double utility_benchmark(const UtilitySpec& u, double target_tox, double min_eff);

/// Utility-weighted ("quasi-binomial") event count, (sum u_i n_i) / 100.
/// Counts may be fractional (imputed counts with pending outcomes).
double quasi_events(std::span<const double, 4> counts, const UtilitySpec& u);
double quasi_events(const std::array<int, 4>& counts, const UtilitySpec& u);

/// u2 (1 - p) + u3 q; only meaningful when u2 + u3 == 100, otherwise throws.
double expected_utility(double tox_prob, double eff_prob, const UtilitySpec& u);

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
double regularized_incomplete_beta(double a, double b, double x);

/// Tail of the Beta(1 + events, 1 + n - events) posterior at `threshold`.
/// `events` may be fractional; throws std::domain_error if outside [0, n].
double beta_posterior_tail(double events, int n, double threshold, Tail direction);

/// Standard normal CDF.
double normal_cdf(double z);

/// Pr(r < target) under the zero-truncated normal posterior of the dose-level
/// mean exposure given n samples with mean `sample_mean` and sampling sd
/// `sampling_sd`, under a truncated-N(0, prior_sd^2) prior.
double pk_below_target_prob(double sample_mean, int n, double sampling_sd, double prior_sd,
                            double target);

/// Weighted isotonic (nondecreasing) least-squares fit via pool-adjacent-violators.
std::vector<double> pava(std::span<const double> values, std::span<const double> weights);

}  // namespace pkboin
