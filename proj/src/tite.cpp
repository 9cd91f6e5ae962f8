#include "pkboin/tite.hpp"

#include <algorithm>
#include <stdexcept>

#include "pkboin/detail/pk_summary.hpp"

namespace pkboin {

std::optional<double> ascertainment_time(const OutcomeRecord& o, double enroll_time, double window) {
  if (o.value) {
    if (o.time) return enroll_time + *o.time;
    return *o.value ? enroll_time : enroll_time + window;
  }
  return enroll_time + window;
}

std::optional<bool> ascertained_value(const OutcomeRecord& o, double enroll_time, double window,
                                      double t) {
  const auto at = ascertainment_time(o, enroll_time, window);
  if (!at || t < *at) return std::nullopt;
  return o.value.value_or(false);
}

double follow_up(double enroll_time, double window, double t) {
  return std::clamp(t - enroll_time, 0.0, window);
}

double cond_event_prob(double rate, double follow_up_days, double window) {
  if (!(window > 0.0)) throw std::domain_error("cond_event_prob: window must be positive");
  if (follow_up_days < 0.0 || follow_up_days > window)
    throw std::domain_error("cond_event_prob: follow-up outside [0, window]");
  if (rate < 0.0 || rate > 1.0) throw std::domain_error("cond_event_prob: rate outside [0, 1]");
  const double fraction = follow_up_days / window;
  const double denom = 1.0 - rate * fraction;
  if (!(denom > 0.0)) throw std::domain_error("cond_event_prob: degenerate denominator");
  return rate * (1.0 - fraction) / denom;
}

PqStar estimate_pq_star(std::span<const PatientRecord> patients, double t, double tox_window,
                        double eff_window) {
  int tox_events = 0;
  int eff_events = 0;
  int tox_known = 0;
  int eff_known = 0;
  double tox_pending = 0.0;
  double eff_pending = 0.0;
  for (const PatientRecord& p : patients) {
    if (const auto y = ascertained_value(p.tox, p.enroll_time, tox_window, t)) {
      ++tox_known;
      tox_events += *y ? 1 : 0;
    } else {
      tox_pending += follow_up(p.enroll_time, tox_window, t) / tox_window;
    }
    if (const auto y = ascertained_value(p.eff, p.enroll_time, eff_window, t)) {
      ++eff_known;
      eff_events += *y ? 1 : 0;
    } else {
      eff_pending += follow_up(p.enroll_time, eff_window, t) / eff_window;
    }
  }
  PqStar out;
  const double tox_denom = tox_known + tox_pending;
  const double eff_denom = eff_known + eff_pending;
  if (tox_denom > 0.0) out.tox = std::min(1.0, tox_events / tox_denom);
  if (eff_denom > 0.0) out.eff = std::min(1.0, eff_events / eff_denom);
  return out;
}

EffectiveCounts effective_counts(std::span<const PatientRecord> patients, double t,
                                 const UtilitySpec& u, double tox_rate, double eff_rate,
                                 double tox_window, double eff_window) {
  EffectiveCounts c;
  c.tox_rate = tox_rate;
  c.eff_rate = eff_rate;
  for (const PatientRecord& p : patients) {
    double pt = 0.0;
    double pe = 0.0;
    if (const auto y = ascertained_value(p.tox, p.enroll_time, tox_window, t))
      pt = *y ? 1.0 : 0.0;
    else
      pt = cond_event_prob(tox_rate, follow_up(p.enroll_time, tox_window, t), tox_window);
    if (const auto y = ascertained_value(p.eff, p.enroll_time, eff_window, t))
      pe = *y ? 1.0 : 0.0;
    else
      pe = cond_event_prob(eff_rate, follow_up(p.enroll_time, eff_window, t), eff_window);
    c.n[0] += (1.0 - pt) * pe;
    c.n[1] += (1.0 - pt) * (1.0 - pe);
    c.n[2] += pt * pe;
    c.n[3] += pt * (1.0 - pe);
  }
  c.quasi = quasi_events(std::span<const double, 4>(c.n), u);
  return c;
}

bool suspension_check(std::span<const PatientRecord> patients, double t, double tox_window,
                      double eff_window) {
  if (patients.empty()) return false;
  std::size_t pending = 0;
  for (const PatientRecord& p : patients) {
    const bool tox_pending = !ascertained_value(p.tox, p.enroll_time, tox_window, t);
    const bool eff_pending = !ascertained_value(p.eff, p.enroll_time, eff_window, t);
    if (tox_pending || eff_pending) ++pending;
  }
  return 2 * pending > patients.size();
}

std::vector<PatientRecord> patients_at_dose(std::span<const PatientRecord> patients, int dose) {
  std::vector<PatientRecord> out;
  for (const PatientRecord& p : patients)
    if (p.dose == dose) out.push_back(p);
  return out;
}

void refresh_dose_states(std::vector<DoseState>& states, std::span<const PatientRecord> patients,
                         double t, const DesignParams& params) {
  for (DoseState& s : states) {
    s.counts = {};
    s.pk_samples.clear();
  }
  for (const PatientRecord& p : patients) {
    if (p.dose < 1 || p.dose > static_cast<int>(states.size()))
      throw std::invalid_argument("patient " + std::to_string(p.id) + " has dose out of range");
    DoseState& s = states[p.dose - 1];
    s.ever_used = true;
    if (p.enroll_time + params.pk_delay <= t) s.pk_samples.push_back(p.pk_value);
    const auto yt = ascertained_value(p.tox, p.enroll_time, params.tox_window, t);
    const auto ye = ascertained_value(p.eff, p.enroll_time, params.eff_window, t);
    if (yt && ye) {
      const int index = *yt ? (*ye ? 2 : 3) : (*ye ? 0 : 1);
      ++s.counts[index];
    }
  }
}

std::vector<DoseEvidence> tite_evidence(std::span<const DoseState> states,
                                        std::span<const PatientRecord> patients, double t,
                                        const DesignParams& params) {
  std::vector<DoseEvidence> out;
  out.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const int dose = static_cast<int>(i) + 1;
    const std::vector<PatientRecord> at_dose = patients_at_dose(patients, dose);
    DoseEvidence e;
    e.n = static_cast<int>(at_dose.size());
    e.ever_used = states[i].ever_used || e.n > 0;
    e.eliminated = states[i].eliminated();

    std::vector<double> pk;
    for (const PatientRecord& p : at_dose)
      if (p.enroll_time + params.pk_delay <= t) pk.push_back(p.pk_value);
    const detail::PkSummary summary = detail::summarize_pk(pk);
    e.pk_n = summary.count;
    if (summary.count > 0) e.pk_mean = summary.mean;
    e.pk_sd = summary.sd;
    if (e.n == 0) {
      out.push_back(e);
      continue;
    }

    const PqStar rates = estimate_pq_star(at_dose, t, params.tox_window, params.eff_window);
    // An undefined rate (nothing ascertained, no follow-up) imputes as zero.
    const double p_star = rates.tox.value_or(0.0);
    const double q_star = rates.eff.value_or(0.0);
    const EffectiveCounts counts = effective_counts(at_dose, t, params.utility, p_star, q_star,
                                                    params.tox_window, params.eff_window);
    e.tox_rate = p_star;
    e.eff_rate = q_star;
    e.quasi = counts.quasi;

    int tox_observed = 0;
    int eff_observed = 0;
    bool tox_pending = false;
    bool eff_pending = false;
    for (const PatientRecord& p : at_dose) {
      const auto yt = ascertained_value(p.tox, p.enroll_time, params.tox_window, t);
      const auto ye = ascertained_value(p.eff, p.enroll_time, params.eff_window, t);
      if (yt) tox_observed += *yt ? 1 : 0; else tox_pending = true;
      if (ye) eff_observed += *ye ? 1 : 0; else eff_pending = true;
    }
    e.tox_events = tox_pending ? p_star * e.n : static_cast<double>(tox_observed);
    e.eff_events = eff_pending ? q_star * e.n : static_cast<double>(eff_observed);
    out.push_back(e);
  }
  return out;
}

Decision next_dose_tite(std::vector<DoseState>& states, std::span<const PatientRecord> patients,
                        int current_dose, double t, const DesignParams& params) {
  const std::vector<PatientRecord> current = patients_at_dose(patients, current_dose);
  if (suspension_check(current, t, params.tox_window, params.eff_window)) {
    const auto evidence = tite_evidence(states, patients, t, params);
    Decision dec = next_dose(evidence, current_dose, params);
    dec.action = Action::suspend;
    dec.dose = 0;
    dec.admissible.clear();
    dec.rules = {"accrual: more than half of the patients at the current dose are pending"};
    for (std::size_t i = 0; i < dec.doses.size(); ++i) {
      dec.doses[i].eliminated_safety = states[i].eliminated_safety;
      dec.doses[i].eliminated_efficacy = states[i].eliminated_efficacy;
      dec.doses[i].eliminated_pk = states[i].eliminated_pk;
    }
    return dec;
  }
  const auto before = tite_evidence(states, patients, t, params);
  const EliminationReport report = apply_eliminations(states, before, current_dose, params);
  const auto after = tite_evidence(states, patients, t, params);
  Decision dec = next_dose(after, current_dose, params);
  attach_eliminations(dec, report, states);
  return dec;
}

}  // namespace pkboin
