#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pkboin/core_stats.hpp"

namespace pkboin {

enum class DesignKind { boin12, pkboin12, tite_boin12, tite_pkboin12 };

std::string_view to_string(DesignKind kind);
/// Accepts "BOIN12", "PKBOIN-12", "TITE-BOIN12", "TITE-PKBOIN-12" (case-insensitive,
/// "PKBOIN12"/"TITE-PKBOIN12" spellings too). Throws std::invalid_argument listing valid kinds.
DesignKind parse_design_kind(std::string_view name);
std::vector<DesignKind> all_design_kinds();

constexpr bool uses_pk(DesignKind k) {
  return k == DesignKind::pkboin12 || k == DesignKind::tite_pkboin12;
}
constexpr bool is_tite(DesignKind k) {
  return k == DesignKind::tite_boin12 || k == DesignKind::tite_pkboin12;
}

/// Tuning constants of a design. Doses are numbered 1..num_doses throughout.
struct DesignParams {
  DesignKind kind = DesignKind::pkboin12;
  int num_doses = 6;
  double target_tox = 0.35;  // p_T
  double min_eff = 0.25;     // q_E
  UtilitySpec utility;
  IntervalBoundaries boundaries = boin_boundaries(0.35);
  double utility_benchmark = 70.5;  // u_b, 0-100 scale
  int sample_cutoff = 6;            // N*
  int escalation_n = 9;             // n_d threshold of the "escalate to an unused dose" rule
  int min_elimination_n = 3;        // safety / efficacy rules need at least this many patients
  int pk_elimination_n = 6;
  double tox_cutoff = 0.95;  // C_T
  double eff_cutoff = 0.9;   // C_E
  double pk_cutoff = 0.95;   // C_P
  PkPosteriorParams pk;
  int cohort_size = 3;
  int max_n = 45;
  int start_dose = 1;
  double tox_window = 30.0;  // A_T, days
  double eff_window = 60.0;  // A_E, days
  double pk_delay = 0.0;     // days from enrollment until the PK value is usable

  /// Defaults used throughout the simulation study, with boundaries and
  /// benchmark derived from p_T, q_E and the utilities.
  static DesignParams defaults(DesignKind kind, int num_doses = 6);
  /// Recomputes lambda1/lambda2 and u_b from p_T, q_E and the utilities.
  void refresh_derived();
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Per-dose accumulated evidence with complete outcomes.
/// counts = {n1, n2, n3, n4} for outcomes O1..O4.
struct DoseState {
  std::array<int, 4> counts{};
  std::vector<double> pk_samples;
  bool ever_used = false;
  bool eliminated_safety = false;
  bool eliminated_efficacy = false;
  bool eliminated_pk = false;

  int n() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
  int n_tox() const { return counts[2] + counts[3]; }
  int n_eff() const { return counts[0] + counts[2]; }
  bool eliminated() const { return eliminated_safety || eliminated_efficacy || eliminated_pk; }
  void add_outcome(bool toxicity, bool efficacy);
  bool operator==(const DoseState&) const = default;
};

struct ObservedRates {
  std::optional<double> tox;
  std::optional<double> eff;
  std::optional<double> pk_mean;
};

ObservedRates observed_rates(const DoseState& s);

/// What the decision rules consume for one dose. Built from complete counts
/// here, or from imputed counts by the TITE engine.
struct DoseEvidence {
  int n = 0;                // patients treated
  double tox_rate = 0.0;    // p_hat (or p_hat*), meaningful when n > 0
  double eff_rate = 0.0;    // q_hat (or q_hat*)
  double tox_events = 0.0;  // events fed to the safety Beta tail
  double eff_events = 0.0;  // events fed to the efficacy Beta tail
  double quasi = 0.0;       // x_d (or x_d*)
  std::optional<double> pk_mean;
  double pk_sd = 0.0;  // sample sd of the PK values (n - 1 denominator)
  int pk_n = 0;
  bool ever_used = false;
  bool eliminated = false;
};

/// Evidence for every dose from complete outcome counts.
std::vector<DoseEvidence> complete_evidence(std::span<const DoseState> states,
                                            const DesignParams& params);

/// Lowest dose (1-based) whose observed PK mean exceeds the cutoff.
std::optional<int> d_pk_min(std::span<const DoseEvidence> evidence, double cutoff);

/// Pr(u_d > u_b | n_d, x_d) under the Beta(1 + x, 1 + n - x) posterior.
double desirability(const DoseEvidence& e, double utility_benchmark);
double desirability(const DoseState& s, const UtilitySpec& u, double utility_benchmark);

enum class Action { treat, suspend, terminate };
std::string_view to_string(Action a);

struct DoseDiagnostics {
  int dose = 0;
  int n = 0;
  std::optional<double> tox_rate;
  std::optional<double> eff_rate;
  std::optional<double> pk_mean;
  double quasi_events = 0.0;
  double desirability = 0.0;
  std::optional<double> safety_tail;    // Pr(p_d > p_T)
  std::optional<double> efficacy_tail;  // Pr(q_d < q_E)
  std::optional<double> pk_tail;        // Pr(r_d < r_P)
  bool eliminated_safety = false;
  bool eliminated_efficacy = false;
  bool eliminated_pk = false;
};

struct Decision {
  Action action = Action::treat;
  int dose = 0;  // next dose when treating, 0 otherwise
  int current_dose = 0;
  std::vector<int> admissible;  // candidate set after filtering eliminated doses
  std::optional<int> d_pk_min;
  std::vector<DoseDiagnostics> doses;
  std::vector<std::string> rules;  // fired rule tags, in evaluation order
};

/// Result of the elimination pass.
struct EliminationReport {
  bool terminate = false;
  std::vector<std::string> rules;
  std::vector<std::optional<double>> safety_tail;
  std::vector<std::optional<double>> efficacy_tail;
  std::vector<std::optional<double>> pk_tail;
};

/// Pr(r_d < r_P) for one dose, or nullopt when no PK sample is available.
std::optional<double> pk_tail_probability(const DoseEvidence& e, const PkPosteriorParams& pk);

/// Applies safety and efficacy elimination at every dose with enough patients,
/// and the PK rule at the current dose (exposure designs only). Flags are
/// sticky: nothing is ever un-eliminated.
EliminationReport apply_eliminations(std::vector<DoseState>& states,
                                     std::span<const DoseEvidence> evidence, int current_dose,
                                     const DesignParams& params);

/// Dose assignment for the next cohort (BOIN12 step 2 or PKBOIN-12 steps 3/4).
Decision next_dose(std::span<const DoseEvidence> evidence, int current_dose,
                   const DesignParams& params);

/// Elimination pass followed by next_dose on complete data; the usual entry point.
Decision decide(std::vector<DoseState>& states, int current_dose, const DesignParams& params);

/// Merges an elimination pass into a decision's diagnostics.
void attach_eliminations(Decision& decision, const EliminationReport& report,
                         std::span<const DoseState> states);

struct ObdResult {
  std::optional<int> selected;
  std::optional<int> mtd;     // d*_MTD
  std::optional<int> pk_min;  // d*_PK,min (exposure designs)
  std::vector<std::optional<double>> iso_tox;    // per dose; nullopt when untried
  std::vector<std::optional<double>> iso_pk;     // per dose; nullopt when no PK
  std::vector<std::optional<double>> utilities;  // posterior-mean utility per tried dose
  bool all_eliminated = false;
};

/// Final optimal-dose selection after the trial.
ObdResult select_obd(std::span<const DoseState> states, const DesignParams& params);

}  // namespace pkboin
