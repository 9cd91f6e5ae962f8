#include "pkboin/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace pkboin {

namespace {

constexpr double kDaysPerMonth = 30.0;

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

double latest_ascertainment(const PatientRecord& p, const DesignParams& params) {
  const double tox = ascertainment_time(p.tox, p.enroll_time, params.tox_window).value_or(p.enroll_time);
  const double eff = ascertainment_time(p.eff, p.enroll_time, params.eff_window).value_or(p.enroll_time);
  return std::max(tox, eff);
}

// Earliest ascertainment strictly after t among `patients`; +inf if none.
double next_event_after(std::span<const PatientRecord> patients, double t,
                        const DesignParams& params) {
  double next = std::numeric_limits<double>::infinity();
  for (const PatientRecord& p : patients) {
    for (const auto at : {ascertainment_time(p.tox, p.enroll_time, params.tox_window),
                          ascertainment_time(p.eff, p.enroll_time, params.eff_window)}) {
      if (at && *at > t) next = std::min(next, *at);
    }
  }
  return next;
}

struct ReplicateSummary {
  std::optional<int> selected;
  bool all_eliminated = false;
  std::vector<int> allocation;
  int enrolled = 0;
  double duration_months = 0.0;
};

}  // namespace

void Scenario::validate() const {
  const std::size_t D = tox.size();
  require(D >= 1, "scenario.tox must list at least one dose");
  require(eff.size() == D, "scenario.eff must have the same length as scenario.tox");
  require(pk.size() == D, "scenario.pk must have the same length as scenario.tox");
  for (double p : tox) require(p >= 0.0 && p <= 1.0, "scenario.tox values must lie in [0, 1]");
  for (double q : eff) require(q >= 0.0 && q <= 1.0, "scenario.eff values must lie in [0, 1]");
  for (double r : pk) require(r > 0.0, "scenario.pk values must be positive");
  require(strictly_increasing(tox), "scenario.tox must be strictly increasing");
  require(strictly_increasing(pk), "scenario.pk must be strictly increasing");
  if (obd) require(*obd >= 1 && *obd <= static_cast<int>(D), "scenario.obd out of range");
  require(cv >= 0.0, "scenario.cv must be nonnegative");
  require(g_p >= 0.0, "scenario.g_P must be nonnegative");
  require(rho_pq >= 0.0 && rho_pq < 1.0, "scenario.rho_pq must lie in [0, 1)");
  require(accrual_rate > 0.0, "scenario.accrual_rate must be positive");
  require(tox_window > 0.0 && eff_window > 0.0, "scenario windows must be positive");
}

Rng replicate_rng(std::uint64_t seed, std::uint64_t replicate) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replicate),
                    static_cast<std::uint32_t>(replicate >> 32)};
  return Rng(seq);
}

IndividualProbs individual_probs(double tox, double eff, double mean_pk, double patient_pk,
                                 double g_p) {
  if (!(mean_pk > 0.0)) throw std::domain_error("individual_probs: mean exposure must be positive");
  const double scale = 1.0 + g_p * (patient_pk - mean_pk) / mean_pk;
  return {std::clamp(tox * scale, 0.0, 1.0), std::clamp(eff * scale, 0.0, 1.0)};
}

double joint_tox_eff_prob(double tox, double eff, double rho) {
  const double independent = tox * eff;
  const double joint = independent + rho * std::sqrt(tox * (1.0 - tox) * eff * (1.0 - eff));
  return std::clamp(joint, std::max(0.0, tox + eff - 1.0), std::min(tox, eff));
}

PatientRecord draw_patient(const Scenario& scenario, int dose, double enroll_time, Rng& rng) {
  const double mean_pk = scenario.pk.at(dose - 1);
  PatientRecord p;
  p.dose = dose;
  p.enroll_time = enroll_time;
  if (scenario.cv > 0.0) {
    std::normal_distribution<double> normal(mean_pk, scenario.cv * mean_pk);
    do {
      p.pk_value = normal(rng);
    } while (!(p.pk_value > 0.0));
  } else {
    p.pk_value = mean_pk;
  }

  const IndividualProbs probs = individual_probs(scenario.tox.at(dose - 1), scenario.eff.at(dose - 1),
                                                 mean_pk, p.pk_value, scenario.g_p);
  const double both = joint_tox_eff_prob(probs.tox, probs.eff, scenario.rho_pq);
  const double tox_only = probs.tox - both;
  const double eff_only = probs.eff - both;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  bool y_tox = false;
  bool y_eff = false;
  if (u < both) {
    y_tox = y_eff = true;
  } else if (u < both + tox_only) {
    y_tox = true;
  } else if (u < both + tox_only + eff_only) {
    y_eff = true;
  }
  // Event times are drawn unconditionally so the stream layout does not depend on outcomes.
  const double tox_time = unit(rng) * scenario.tox_window;
  const double eff_time = unit(rng) * scenario.eff_window;
  p.tox = {y_tox, y_tox ? tox_time : scenario.tox_window};
  p.eff = {y_eff, y_eff ? eff_time : scenario.eff_window};
  return p;
}

TrialResult run_trial(const DesignParams& params, const Scenario& scenario, Rng& rng) {
  const int D = params.num_doses;
  if (scenario.num_doses() != D)
    throw std::invalid_argument("run_trial: scenario and design disagree on the number of doses");

  TrialResult result;
  result.states.assign(D, DoseState{});
  std::vector<PatientRecord> patients;
  patients.reserve(params.max_n);
  std::exponential_distribution<double> gap(scenario.accrual_rate / kDaysPerMonth);

  const bool tite = is_tite(params.kind);
  int current = params.start_dose;
  double t = 0.0;
  bool terminated = false;

  while (static_cast<int>(patients.size()) < params.max_n) {
    for (int k = 0; k < params.cohort_size; ++k) {
      t += gap(rng);
      PatientRecord p = draw_patient(scenario, current, t, rng);
      p.id = static_cast<int>(patients.size()) + 1;
      patients.push_back(p);
    }
    result.states[current - 1].ever_used = true;
    const bool last_cohort = static_cast<int>(patients.size()) >= params.max_n;

    Decision dec;
    if (!tite) {
      for (auto it = patients.end() - params.cohort_size; it != patients.end(); ++it)
        t = std::max(t, latest_ascertainment(*it, params));
      refresh_dose_states(result.states, patients, t, params);
      if (last_cohort) break;
      dec = decide(result.states, current, params);
    } else {
      if (last_cohort) break;
      while (true) {
        refresh_dose_states(result.states, patients, t, params);
        dec = next_dose_tite(result.states, patients, current, t, params);
        if (dec.action != Action::suspend) break;
        ++result.suspensions;
        const auto at_dose = patients_at_dose(patients, current);
        const double next = next_event_after(at_dose, t, params);
        if (!std::isfinite(next)) break;  // unreachable: a pending outcome always resolves
        t = next;
      }
    }
    ++result.decisions;
    if (dec.action == Action::terminate) {
      terminated = true;
      break;
    }
    current = dec.dose;
  }

  if (!terminated) {
    for (const PatientRecord& p : patients) t = std::max(t, latest_ascertainment(p, params));
    refresh_dose_states(result.states, patients, t, params);
    const Decision last = decide(result.states, current, params);
    terminated = last.action == Action::terminate;
  }

  result.stop = terminated ? StopReason::all_eliminated : StopReason::max_sample_size;
  result.enrolled = static_cast<int>(patients.size());
  result.allocation.assign(D, 0);
  for (const PatientRecord& p : patients) ++result.allocation[p.dose - 1];
  result.duration_months = patients.empty() ? 0.0 : (t - patients.front().enroll_time) / kDaysPerMonth;
  result.obd = select_obd(result.states, params);
  if (terminated) result.obd.selected.reset();
  return result;
}

OperatingCharacteristics run_replications(const DesignParams& params, const Scenario& scenario,
                                          int reps, std::uint64_t seed, int threads,
                                          std::atomic<int>* progress) {
  if (reps < 1) throw std::invalid_argument("run_replications: reps must be at least 1");
  params.validate();
  scenario.validate();
  if (scenario.num_doses() != params.num_doses)
    throw std::invalid_argument("scenario and design disagree on the number of doses");

  std::vector<ReplicateSummary> summaries(reps);
  auto work = [&](int i) {
    Rng rng = replicate_rng(seed, static_cast<std::uint64_t>(i));
    TrialResult r = run_trial(params, scenario, rng);
    ReplicateSummary& s = summaries[i];
    s.selected = r.obd.selected;
    s.all_eliminated = r.stop == StopReason::all_eliminated;
    s.allocation = std::move(r.allocation);
    s.enrolled = r.enrolled;
    s.duration_months = r.duration_months;
    if (progress) progress->fetch_add(1, std::memory_order_relaxed);
  };

  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, reps);
  if (workers == 1) {
    for (int i = 0; i < reps; ++i) work(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (int i = next.fetch_add(1); i < reps; i = next.fetch_add(1)) work(i);
          } catch (...) {
            errors[w] = std::current_exception();
            next.store(reps);
          }
        });
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  const int D = params.num_doses;
  OperatingCharacteristics oc;
  oc.design = std::string(to_string(params.kind));
  oc.scenario = scenario.name;
  oc.num_doses = D;
  oc.replications = reps;
  oc.seed = seed;
  oc.true_obd = scenario.obd;
  oc.g_p = scenario.g_p;
  oc.cv = scenario.cv;
  oc.rho_pq = scenario.rho_pq;
  oc.tox_window = scenario.tox_window;
  oc.eff_window = scenario.eff_window;

  std::vector<long long> selected(D, 0);
  std::vector<long long> allocated(D, 0);
  long long all_eliminated = 0;
  long long no_selection = 0;
  long long enrolled = 0;
  double duration = 0.0;
  for (const ReplicateSummary& s : summaries) {
    if (s.selected) ++selected[*s.selected - 1];
    else if (s.all_eliminated) ++all_eliminated;
    else ++no_selection;
    for (int d = 0; d < D; ++d) allocated[d] += s.allocation[d];
    enrolled += s.enrolled;
    duration += s.duration_months;
  }
  const double n = reps;
  oc.selection_pct.resize(D);
  oc.mean_patients.resize(D);
  for (int d = 0; d < D; ++d) {
    oc.selection_pct[d] = 100.0 * selected[d] / n;
    oc.mean_patients[d] = allocated[d] / n;
  }
  oc.all_eliminated_pct = 100.0 * all_eliminated / n;
  oc.no_selection_pct = 100.0 * no_selection / n;
  oc.early_termination_pct = 100.0 * (all_eliminated + no_selection) / n;
  oc.mean_enrolled = enrolled / n;
  oc.mean_duration_months = duration / n;
  if (scenario.obd) oc.obd_selection_pct = oc.selection_pct[*scenario.obd - 1];
  return oc;
}

}  // namespace pkboin
