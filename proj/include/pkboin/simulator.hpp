#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pkboin/design.hpp"
#include "pkboin/tite.hpp"

namespace pkboin {

/// Ground truth of one simulation scenario.
struct Scenario {
  std::string name;
  std::vector<double> tox;  // p_d
  std::vector<double> eff;  // q_d
  std::vector<double> pk;   // r_d
  std::optional<int> obd;   // true optimal dose, when one exists
  double cv = 0.25;
  double g_p = 1.0;
  double rho_pq = 0.0;
  double accrual_rate = 3.0;  // patients per month
  double tox_window = 30.0;
  double eff_window = 60.0;

  int num_doses() const { return static_cast<int>(tox.size()); }
  /// Throws std::invalid_argument naming the violated field.
  void validate() const;
};

using Rng = std::mt19937_64;

/// Deterministic per-replicate stream derived from (seed, replicate).
Rng replicate_rng(std::uint64_t seed, std::uint64_t replicate);

struct IndividualProbs {
  double tox;
  double eff;
};

/// Patient-level probabilities scaled by relative exposure deviation, clamped to [0, 1].
IndividualProbs individual_probs(double tox, double eff, double mean_pk, double patient_pk,
                                 double g_p);

/// Joint probability of (toxicity, response) with Pearson correlation rho,
/// clipped to the attainable range for the given marginals.
double joint_tox_eff_prob(double tox, double eff, double rho);

/// Draws one patient at `dose` enrolled at `enroll_time`, with latent outcomes
/// and their ascertainment times filled in.
PatientRecord draw_patient(const Scenario& scenario, int dose, double enroll_time, Rng& rng);

enum class StopReason { max_sample_size, all_eliminated };

struct TrialResult {
  std::vector<DoseState> states;
  ObdResult obd;
  std::vector<int> allocation;  // patients per dose
  int enrolled = 0;
  double duration_months = 0.0;
  StopReason stop = StopReason::max_sample_size;
  int decisions = 0;
  int suspensions = 0;
};

/// Runs one calendar-time trial. Complete-data designs decide once every
/// enrolled patient is fully ascertained; TITE designs decide at cohort
/// completion, waiting through suspensions event by event.
TrialResult run_trial(const DesignParams& params, const Scenario& scenario, Rng& rng);

struct OperatingCharacteristics {
  std::string design;
  std::string scenario;
  int num_doses = 0;
  std::vector<double> selection_pct;  // per dose
  double early_termination_pct = 0.0;  // all eliminated or no dose selected
  double all_eliminated_pct = 0.0;
  double no_selection_pct = 0.0;  // completed trials without a selectable dose
  std::vector<double> mean_patients;
  double mean_enrolled = 0.0;
  double mean_duration_months = 0.0;
  std::optional<int> true_obd;
  std::optional<double> obd_selection_pct;
  int replications = 0;
  std::uint64_t seed = 0;
  // Settings the study ran under, reported alongside the results.
  double g_p = 1.0;
  double cv = 0.25;
  double rho_pq = 0.0;
  double tox_window = 30.0;
  double eff_window = 60.0;

  bool operator==(const OperatingCharacteristics&) const = default;
};

/// Runs `reps` independent trials on `threads` workers (0 = hardware
/// concurrency) and aggregates them. Results depend only on (seed, inputs).
/// `progress`, when given, is incremented once per finished replicate.
OperatingCharacteristics run_replications(const DesignParams& params, const Scenario& scenario,
                                          int reps, std::uint64_t seed, int threads = 1,
                                          std::atomic<int>* progress = nullptr);

}  // namespace pkboin
