#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pkboin/design.hpp"
#include "pkboin/simulator.hpp"
#include "pkboin/tite.hpp"

namespace pkboin {

using Json = nlohmann::json;

/// Input that violates a documented schema or invariant. The message starts
/// with the offending field path.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---- built-in scenarios ----

int builtin_scenario_count();
/// Scenarios 1..14 with true toxicity, efficacy and exposure per dose.
Scenario builtin_scenario(int id);

// ---- simulation study configuration ----

/// One point of a sensitivity grid; unset fields keep the base setting.
struct SweepPoint {
  std::optional<double> g_p;
  std::optional<double> cv;
  std::optional<double> rho_pq;
  std::optional<std::pair<double, double>> windows;  // (A_T, A_E)
  bool operator==(const SweepPoint&) const = default;
};

struct RunConfig {
  std::vector<DesignKind> designs;
  DesignParams base = DesignParams::defaults(DesignKind::pkboin12);
  std::vector<Scenario> scenarios;
  int reps = 2000;
  std::uint64_t seed = 42;
  int threads = 0;  // 0 = PKBOIN_THREADS or hardware concurrency
  std::vector<SweepPoint> sweep;  // empty = a single run at the base settings
  std::string out_path;
  std::string format = "csv";
};

/// Parses and validates a configuration object, applying defaults.
RunConfig parse_config(const Json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Parses a sweep spec like "gP=0,0.5,1" or "windows=30:60,45:90".
std::vector<SweepPoint> parse_sweep_arg(const std::string& spec);
/// Cartesian product of two sweep lists.
std::vector<SweepPoint> combine_sweeps(const std::vector<SweepPoint>& a,
                                       const std::vector<SweepPoint>& b);

/// Applies a sweep point to a copy of the design and scenario.
std::pair<DesignParams, Scenario> apply_sweep(const DesignParams& params, const Scenario& scenario,
                                              const SweepPoint& point);

/// Total number of trials a study will run.
long long study_size(const RunConfig& config);

/// Runs every (sweep point, scenario, design) combination, in that nesting order.
std::vector<OperatingCharacteristics> run_study(const RunConfig& config,
                                                std::atomic<int>* progress = nullptr);

/// Thread count from the PKBOIN_THREADS environment variable, or 0 when unset.
int default_threads();

// ---- JSON forms ----

Json to_json(const DesignParams& p);
/// Overlays the keys of `j` on `base`; derived values are recomputed unless
/// explicitly given. Throws ValidationError naming the field (prefixed by `path`).
DesignParams params_from_json(const Json& j, DesignParams base, const std::string& path = "params");

Json to_json(const Scenario& s);
Scenario scenario_from_json(const Json& j, const std::string& path = "scenario");

Json to_json(const Decision& d);
Json to_json(const ObdResult& r);
Json to_json(const DoseState& s);
DoseState dose_state_from_json(const Json& j, const std::string& path);
Json to_json(const PatientRecord& p);
PatientRecord patient_from_json(const Json& j, const std::string& path);
Json to_json(const OperatingCharacteristics& oc);
OperatingCharacteristics oc_from_json(const Json& j);

// ---- trial-state files ----

/// A trial snapshot as read by `decide` / `finalize`. Either per-dose
/// aggregates (`doses`) or per-patient records (`patients`) may be given;
/// patient records are required for TITE designs.
struct TrialStateFile {
  DesignParams params;
  int current_dose = 1;
  std::optional<double> time;
  std::vector<DoseState> doses;
  std::vector<PatientRecord> patients;
};

TrialStateFile trial_state_from_json(const Json& j);
Json to_json(const TrialStateFile& s);

struct StateDecision {
  Decision decision;
  std::vector<DoseState> states;  // with any new elimination flags
};

/// The engine's decision for a trial snapshot (the `decide` subcommand).
StateDecision decide_from_state(const TrialStateFile& s);
/// Final selection for a trial snapshot (the `finalize` subcommand).
ObdResult finalize_from_state(const TrialStateFile& s);

// ---- reports ----

enum class ReportFormat { csv, json };
ReportFormat parse_report_format(const std::string& name);

std::string format_csv(std::span<const OperatingCharacteristics> ocs);
std::string format_json(std::span<const OperatingCharacteristics> ocs);
std::vector<OperatingCharacteristics> parse_json_report(const std::string& text);
/// Writes the report; throws std::runtime_error naming the path on I/O failure.
void write_report(std::span<const OperatingCharacteristics> ocs, ReportFormat format,
                  const std::filesystem::path& path);

}  // namespace pkboin
