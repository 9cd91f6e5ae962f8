#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "pkboin/design.hpp"

namespace pkboin {

/// One binary endpoint of one patient.
///
/// A reported value becomes known `time` days after enrollment. Without an
/// explicit time, a positive value counts as known at enrollment and a
/// negative value at the end of the assessment window. An unreported value
/// turns into a negative once the window has fully elapsed.
struct OutcomeRecord {
  std::optional<bool> value;
  std::optional<double> time;
  bool operator==(const OutcomeRecord&) const = default;
};

struct PatientRecord {
  int id = 0;
  int dose = 1;
  double enroll_time = 0.0;  // calendar days since trial start
  double pk_value = 0.0;
  OutcomeRecord tox;
  OutcomeRecord eff;
  bool operator==(const PatientRecord&) const = default;
};

/// Value of an endpoint if it is ascertained by calendar time t.
std::optional<bool> ascertained_value(const OutcomeRecord& o, double enroll_time, double window,
                                      double t);
/// Calendar time at which the endpoint is ascertained, if determinable.
std::optional<double> ascertainment_time(const OutcomeRecord& o, double enroll_time, double window);
/// Follow-up min(t - enroll, window), floored at 0.
double follow_up(double enroll_time, double window, double t);

struct EffectiveCounts {
  std::array<double, 4> n{};  // n*_1..n*_4
  double quasi = 0.0;         // x*
  double tox_rate = 0.0;      // p_hat*
  double eff_rate = 0.0;      // q_hat*
};

struct PqStar {
  std::optional<double> tox;  // nullopt when the effective denominator is zero
  std::optional<double> eff;
};

/// Pr(Y = 1 | no event after t_j days) under uniform event times on [0, window].
double cond_event_prob(double rate, double follow_up_days, double window);

/// Follow-up-weighted rate estimates at one dose: observed events divided by
/// (number ascertained + sum of pending follow-up fractions).
PqStar estimate_pq_star(std::span<const PatientRecord> patients, double t, double tox_window,
                        double eff_window);

/// Imputed outcome-category counts under independence of the two endpoints.
EffectiveCounts effective_counts(std::span<const PatientRecord> patients, double t,
                                 const UtilitySpec& u, double tox_rate, double eff_rate,
                                 double tox_window, double eff_window);

/// True iff more than half of `patients` have a pending endpoint at t.
bool suspension_check(std::span<const PatientRecord> patients, double t, double tox_window,
                      double eff_window);

std::vector<PatientRecord> patients_at_dose(std::span<const PatientRecord> patients, int dose);

/// Recomputes counts (fully ascertained patients only), PK samples available
/// at t and usage flags; elimination flags are preserved.
void refresh_dose_states(std::vector<DoseState>& states, std::span<const PatientRecord> patients,
                         double t, const DesignParams& params);

/// Evidence with pending outcomes replaced by their imputed expectations.
std::vector<DoseEvidence> tite_evidence(std::span<const DoseState> states,
                                        std::span<const PatientRecord> patients, double t,
                                        const DesignParams& params);

/// Time-indexed decision: suspension rule, then eliminations and dose
/// assignment on imputed quantities. `states` must be refreshed at t.
Decision next_dose_tite(std::vector<DoseState>& states, std::span<const PatientRecord> patients,
                        int current_dose, double t, const DesignParams& params);

}  // namespace pkboin
