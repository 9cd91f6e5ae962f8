#include "pkboin/design.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "pkboin/detail/pk_summary.hpp"

namespace pkboin {

namespace {

std::string upper_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

bool open_probability(double p) { return p > 0.0 && p < 1.0; }

}  // namespace

std::string_view to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::boin12: return "BOIN12";
    case DesignKind::pkboin12: return "PKBOIN-12";
    case DesignKind::tite_boin12: return "TITE-BOIN12";
    case DesignKind::tite_pkboin12: return "TITE-PKBOIN-12";
  }
  return "?";
}

DesignKind parse_design_kind(std::string_view name) {
  const std::string n = upper_ascii(name);
  if (n == "BOIN12" || n == "BOIN-12") return DesignKind::boin12;
  if (n == "PKBOIN-12" || n == "PKBOIN12") return DesignKind::pkboin12;
  if (n == "TITE-BOIN12" || n == "TITE-BOIN-12") return DesignKind::tite_boin12;
  if (n == "TITE-PKBOIN-12" || n == "TITE-PKBOIN12") return DesignKind::tite_pkboin12;
  throw std::invalid_argument("unknown design '" + std::string(name) +
                              "'; valid kinds: BOIN12, PKBOIN-12, TITE-BOIN12, TITE-PKBOIN-12");
}

std::vector<DesignKind> all_design_kinds() {
  return {DesignKind::boin12, DesignKind::pkboin12, DesignKind::tite_boin12,
          DesignKind::tite_pkboin12};
}

DesignParams DesignParams::defaults(DesignKind kind, int num_doses) {
  DesignParams p;
  p.kind = kind;
  p.num_doses = num_doses;
  p.pk = PkPosteriorParams::from_target(6000.0);
  p.refresh_derived();
  return p;
}

void DesignParams::refresh_derived() {
  if (open_probability(target_tox)) boundaries = boin_boundaries(target_tox);
  utility_benchmark = pkboin::utility_benchmark(utility, target_tox, min_eff);
}

void DesignParams::validate() const {
  require(num_doses >= 1, "num_doses must be at least 1");
  require(open_probability(target_tox), "p_T must lie in (0, 1)");
  require(open_probability(min_eff), "q_E must lie in (0, 1)");
  utility.validate();
  require(boundaries.lambda1 > 0.0 && boundaries.lambda1 < boundaries.lambda2 &&
              boundaries.lambda2 < 1.0,
          "boundaries must satisfy 0 < lambda1 < lambda2 < 1");
  require(std::abs(utility_benchmark - pkboin::utility_benchmark(utility, target_tox, min_eff)) <
              1e-9,
          "u_b is inconsistent with the utilities, p_T and q_E");
  require(sample_cutoff >= 1, "N_star must be positive");
  require(escalation_n >= 1, "escalation_n must be positive");
  require(min_elimination_n >= 0, "min_elimination_n must be nonnegative");
  require(pk_elimination_n >= 2, "pk_elimination_n must be at least 2");
  require(open_probability(tox_cutoff), "C_T must lie in (0, 1)");
  require(open_probability(eff_cutoff), "C_E must lie in (0, 1)");
  require(open_probability(pk_cutoff), "C_P must lie in (0, 1)");
  pk.validate();
  require(cohort_size >= 1, "cohort_size must be positive");
  require(max_n >= cohort_size && max_n % cohort_size == 0,
          "max_n must be a positive multiple of cohort_size");
  require(start_dose >= 1 && start_dose <= num_doses, "start_dose must lie in 1..num_doses");
  require(tox_window > 0.0, "A_T must be positive");
  require(eff_window > 0.0, "A_E must be positive");
  require(pk_delay >= 0.0, "pk_delay must be nonnegative");
}

void DoseState::add_outcome(bool toxicity, bool efficacy) {
  // O1 = (0,1), O2 = (0,0), O3 = (1,1), O4 = (1,0)
  const int index = toxicity ? (efficacy ? 2 : 3) : (efficacy ? 0 : 1);
  ++counts[index];
  ever_used = true;
}

ObservedRates observed_rates(const DoseState& s) {
  ObservedRates r;
  const int n = s.n();
  if (n > 0) {
    r.tox = static_cast<double>(s.n_tox()) / n;
    r.eff = static_cast<double>(s.n_eff()) / n;
  }
  if (!s.pk_samples.empty()) r.pk_mean = detail::summarize_pk(s.pk_samples).mean;
  return r;
}

std::vector<DoseEvidence> complete_evidence(std::span<const DoseState> states,
                                            const DesignParams& params) {
  std::vector<DoseEvidence> out;
  out.reserve(states.size());
  for (const DoseState& s : states) {
    DoseEvidence e;
    e.n = s.n();
    if (e.n > 0) {
      e.tox_rate = static_cast<double>(s.n_tox()) / e.n;
      e.eff_rate = static_cast<double>(s.n_eff()) / e.n;
    }
    e.tox_events = s.n_tox();
    e.eff_events = s.n_eff();
    e.quasi = quasi_events(s.counts, params.utility);
    const detail::PkSummary pk = detail::summarize_pk(s.pk_samples);
    e.pk_n = pk.count;
    if (pk.count > 0) e.pk_mean = pk.mean;
    e.pk_sd = pk.sd;
    e.ever_used = s.ever_used || e.n > 0;
    e.eliminated = s.eliminated();
    out.push_back(e);
  }
  return out;
}

std::optional<int> d_pk_min(std::span<const DoseEvidence> evidence, double cutoff) {
  for (std::size_t i = 0; i < evidence.size(); ++i)
    if (evidence[i].pk_mean && *evidence[i].pk_mean > cutoff) return static_cast<int>(i) + 1;
  return std::nullopt;
}

double desirability(const DoseEvidence& e, double utility_benchmark) {
  return beta_posterior_tail(std::clamp(e.quasi, 0.0, static_cast<double>(e.n)), e.n,
                             utility_benchmark / 100.0, Tail::above);
}

double desirability(const DoseState& s, const UtilitySpec& u, double utility_benchmark) {
  return beta_posterior_tail(quasi_events(s.counts, u), s.n(), utility_benchmark / 100.0,
                             Tail::above);
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::treat: return "treat";
    case Action::suspend: return "suspend";
    case Action::terminate: return "terminate";
  }
  return "?";
}

std::optional<double> pk_tail_probability(const DoseEvidence& e, const PkPosteriorParams& pk) {
  if (e.pk_n < 1 || !e.pk_mean) return std::nullopt;
  const double sd = pk.sampling_sd > 0.0 ? pk.sampling_sd : e.pk_sd;
  if (e.pk_n < 2 && pk.sampling_sd <= 0.0) return std::nullopt;
  // Zero spread: the posterior collapses onto the sample mean.
  if (!(sd > 0.0)) return *e.pk_mean < pk.target ? 1.0 : 0.0;
  return pk_below_target_prob(*e.pk_mean, e.pk_n, sd, pk.prior_sd, pk.target);
}

EliminationReport apply_eliminations(std::vector<DoseState>& states,
                                     std::span<const DoseEvidence> evidence, int current_dose,
                                     const DesignParams& params) {
  const int D = static_cast<int>(states.size());
  if (static_cast<int>(evidence.size()) != D)
    throw std::invalid_argument("apply_eliminations: evidence and states differ in length");
  EliminationReport report;
  report.safety_tail.resize(D);
  report.efficacy_tail.resize(D);
  report.pk_tail.resize(D);

  for (int d = 1; d <= D; ++d) {
    const DoseEvidence& e = evidence[d - 1];
    if (e.n < std::max(params.min_elimination_n, 1)) continue;
    const double tox_events = std::clamp(e.tox_events, 0.0, static_cast<double>(e.n));
    const double eff_events = std::clamp(e.eff_events, 0.0, static_cast<double>(e.n));
    const double safety = beta_posterior_tail(tox_events, e.n, params.target_tox, Tail::above);
    const double efficacy = beta_posterior_tail(eff_events, e.n, params.min_eff, Tail::below);
    report.safety_tail[d - 1] = safety;
    report.efficacy_tail[d - 1] = efficacy;
    if (safety > params.tox_cutoff) {
      for (int k = d; k <= D; ++k) states[k - 1].eliminated_safety = true;
      report.rules.push_back("safety: dose " + std::to_string(d) + " and above eliminated");
    }
    if (efficacy > params.eff_cutoff) {
      states[d - 1].eliminated_efficacy = true;
      report.rules.push_back("efficacy: dose " + std::to_string(d) + " eliminated");
    }
  }

  if (uses_pk(params.kind)) {
    for (int d = 1; d <= D; ++d) report.pk_tail[d - 1] = pk_tail_probability(evidence[d - 1], params.pk);
    if (current_dose >= 1 && current_dose <= D) {
      const DoseEvidence& e = evidence[current_dose - 1];
      const auto tail = report.pk_tail[current_dose - 1];
      if (e.pk_n >= params.pk_elimination_n && tail && *tail > params.pk_cutoff) {
        if (current_dose == D) {
          for (DoseState& s : states)
            if (!s.eliminated()) s.eliminated_pk = true;
          report.rules.push_back("pk: exposure below target at the highest dose; all doses eliminated");
          report.terminate = true;
        } else if (current_dose >= 2) {
          for (int k = 1; k < current_dose; ++k) {
            if (!states[k - 1].eliminated()) {
              states[k - 1].eliminated_pk = true;
              report.rules.push_back("pk: dose " + std::to_string(k) + " eliminated");
              break;
            }
          }
        } else {
          report.rules.push_back("pk: rule undefined at dose 1; no action");
        }
      }
    }
  }

  if (std::all_of(states.begin(), states.end(), [](const DoseState& s) { return s.eliminated(); })) {
    report.terminate = true;
  }
  return report;
}

namespace {

// Argmax of desirability with ties broken by fewer patients, then the lower dose.
int pick_most_desirable(std::span<const int> candidates, std::span<const DoseEvidence> evidence,
                        std::span<const DoseDiagnostics> diag) {
  int best = candidates.front();
  for (int d : candidates) {
    const double db = diag[best - 1].desirability;
    const double dd = diag[d - 1].desirability;
    if (dd > db) {
      best = d;
    } else if (dd == db) {
      const int nb = evidence[best - 1].n;
      const int nd = evidence[d - 1].n;
      if (nd < nb || (nd == nb && d < best)) best = d;
    }
  }
  return best;
}

void fallback_dose(Decision& dec, std::span<const DoseEvidence> evidence, int current) {
  const int D = static_cast<int>(evidence.size());
  if (!evidence[current - 1].eliminated) {
    dec.dose = current;
    dec.rules.push_back("fallback: stay at current dose");
    return;
  }
  for (int d = current - 1; d >= 1; --d) {
    if (!evidence[d - 1].eliminated) {
      dec.dose = d;
      dec.rules.push_back("fallback: highest available dose below");
      return;
    }
  }
  for (int d = current + 1; d <= D; ++d) {
    if (!evidence[d - 1].eliminated) {
      dec.dose = d;
      dec.rules.push_back("fallback: lowest available dose above");
      return;
    }
  }
  dec.action = Action::terminate;
  dec.dose = 0;
  dec.rules.push_back("terminate: all doses eliminated");
}

}  // namespace

Decision next_dose(std::span<const DoseEvidence> evidence, int current_dose,
                   const DesignParams& params) {
  const int D = static_cast<int>(evidence.size());
  if (current_dose < 1 || current_dose > D)
    throw std::invalid_argument("next_dose: current dose out of range");

  Decision dec;
  dec.current_dose = current_dose;
  dec.doses.resize(D);
  for (int d = 1; d <= D; ++d) {
    const DoseEvidence& e = evidence[d - 1];
    DoseDiagnostics& g = dec.doses[d - 1];
    g.dose = d;
    g.n = e.n;
    if (e.n > 0) {
      g.tox_rate = e.tox_rate;
      g.eff_rate = e.eff_rate;
    }
    g.pk_mean = e.pk_mean;
    g.quasi_events = e.quasi;
    g.desirability = desirability(e, params.utility_benchmark);
  }

  if (std::all_of(evidence.begin(), evidence.end(),
                  [](const DoseEvidence& e) { return e.eliminated; })) {
    dec.action = Action::terminate;
    dec.rules.push_back("terminate: all doses eliminated");
    return dec;
  }

  const DoseEvidence& cur = evidence[current_dose - 1];
  if (cur.n == 0) {
    dec.rules.push_back("step1: current dose untreated");
    if (!cur.eliminated) {
      dec.dose = current_dose;
      dec.admissible = {current_dose};
    } else {
      fallback_dose(dec, evidence, current_dose);
    }
    return dec;
  }

  const bool pk_design = uses_pk(params.kind);
  if (pk_design) dec.d_pk_min = d_pk_min(evidence, params.pk.cutoff);
  const bool exposure_ok = pk_design && cur.pk_mean && *cur.pk_mean > params.pk.cutoff;
  const std::string step = !pk_design ? "step2" : (exposure_ok ? "step4" : "step3");
  // d* = min{d - 1, d_PK,min}; plain d - 1 when the exposure branch does not apply.
  const int lowest = exposure_ok && dec.d_pk_min ? std::min(current_dose - 1, *dec.d_pk_min)
                                                 : current_dose - 1;

  const double p = cur.tox_rate;
  const auto& b = params.boundaries;
  int lo = 0;
  int hi = 0;
  if (p >= b.lambda2) {
    lo = exposure_ok ? lowest : current_dose - 1;
    hi = current_dose - 1;
    dec.rules.push_back(step + "a: p_hat >= lambda2, de-escalate");
  } else if (cur.n >= params.escalation_n && current_dose < D &&
             !evidence[current_dose].ever_used) {
    lo = hi = current_dose + 1;
    dec.rules.push_back(step + "b: n >= " + std::to_string(params.escalation_n) +
                        " and next dose unused, escalate");
  } else if (p > b.lambda1) {
    if (cur.n >= params.sample_cutoff) {
      lo = lowest;
      hi = current_dose;
      dec.rules.push_back(step + "c(i): lambda1 < p_hat < lambda2 and n >= N*");
    } else {
      lo = lowest;
      hi = current_dose + 1;
      dec.rules.push_back(step + "c(ii): lambda1 < p_hat < lambda2 and n < N*");
    }
  } else {
    lo = lowest;
    hi = current_dose + 1;
    dec.rules.push_back(step + "d: p_hat <= lambda1");
  }

  lo = std::max(lo, 1);
  hi = std::min(hi, D);
  for (int d = lo; d <= hi; ++d)
    if (!evidence[d - 1].eliminated) dec.admissible.push_back(d);

  if (dec.admissible.empty()) {
    fallback_dose(dec, evidence, current_dose);
    return dec;
  }
  dec.dose = pick_most_desirable(dec.admissible, evidence, dec.doses);
  return dec;
}

void attach_eliminations(Decision& decision, const EliminationReport& report,
                         std::span<const DoseState> states) {
  for (std::size_t i = 0; i < decision.doses.size() && i < states.size(); ++i) {
    DoseDiagnostics& g = decision.doses[i];
    g.safety_tail = report.safety_tail[i];
    g.efficacy_tail = report.efficacy_tail[i];
    g.pk_tail = report.pk_tail[i];
    g.eliminated_safety = states[i].eliminated_safety;
    g.eliminated_efficacy = states[i].eliminated_efficacy;
    g.eliminated_pk = states[i].eliminated_pk;
  }
  decision.rules.insert(decision.rules.begin(), report.rules.begin(), report.rules.end());
  if (report.terminate && decision.action != Action::terminate) {
    decision.action = Action::terminate;
    decision.dose = 0;
    decision.admissible.clear();
    decision.rules.push_back("terminate: trial stopped by elimination rules");
  }
}

Decision decide(std::vector<DoseState>& states, int current_dose, const DesignParams& params) {
  const auto before = complete_evidence(states, params);
  const EliminationReport report = apply_eliminations(states, before, current_dose, params);
  const auto after = complete_evidence(states, params);
  Decision dec = next_dose(after, current_dose, params);
  attach_eliminations(dec, report, states);
  return dec;
}

ObdResult select_obd(std::span<const DoseState> states, const DesignParams& params) {
  const int D = static_cast<int>(states.size());
  ObdResult r;
  r.iso_tox.resize(D);
  r.iso_pk.resize(D);
  r.utilities.resize(D);
  r.all_eliminated =
      D > 0 && std::all_of(states.begin(), states.end(), [](const DoseState& s) { return s.eliminated(); });

  std::vector<int> tried;
  std::vector<double> rates;
  std::vector<double> weights;
  for (int d = 1; d <= D; ++d) {
    const DoseState& s = states[d - 1];
    if (s.n() == 0) continue;
    tried.push_back(d);
    rates.push_back(static_cast<double>(s.n_tox()) / s.n());
    weights.push_back(s.n());
    r.utilities[d - 1] = (1.0 + quasi_events(s.counts, params.utility)) / (2.0 + s.n());
  }
  if (tried.empty()) return r;

  const std::vector<double> iso = pava(rates, weights);
  for (std::size_t i = 0; i < tried.size(); ++i) r.iso_tox[tried[i] - 1] = iso[i];

  // argmin |p~ - p_T|; on ties prefer the higher dose only while it stays below p_T.
  int mtd = tried.front();
  double best_gap = std::abs(iso.front() - params.target_tox);
  for (std::size_t i = 1; i < tried.size(); ++i) {
    const double gap = std::abs(iso[i] - params.target_tox);
    if (gap < best_gap || (gap == best_gap && iso[i] < params.target_tox)) {
      mtd = tried[i];
      best_gap = gap;
    }
  }
  r.mtd = mtd;

  int floor = 1;
  if (uses_pk(params.kind)) {
    std::vector<int> with_pk;
    std::vector<double> means;
    std::vector<double> pk_weights;
    for (int d = 1; d <= D; ++d) {
      const auto summary = detail::summarize_pk(states[d - 1].pk_samples);
      if (summary.count == 0) continue;
      with_pk.push_back(d);
      means.push_back(summary.mean);
      pk_weights.push_back(summary.count);
    }
    if (!with_pk.empty()) {
      const std::vector<double> iso_pk = pava(means, pk_weights);
      int pk_min = with_pk.front();
      double gap_pk = std::abs(iso_pk.front() - params.pk.target);
      for (std::size_t i = 0; i < with_pk.size(); ++i) {
        r.iso_pk[with_pk[i] - 1] = iso_pk[i];
        const double gap = std::abs(iso_pk[i] - params.pk.target);
        if (gap < gap_pk) {
          pk_min = with_pk[i];
          gap_pk = gap;
        }
      }
      r.pk_min = pk_min;
      floor = pk_min;
    }
  }

  if (r.all_eliminated) return r;
  std::optional<int> best;
  for (int d : tried) {
    if (d < floor || d > mtd || states[d - 1].eliminated()) continue;
    if (!best || *r.utilities[d - 1] > *r.utilities[*best - 1]) best = d;
  }
  r.selected = best;
  return r;
}

}  // namespace pkboin
