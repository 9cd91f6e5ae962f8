#include "pkboin/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace pkboin {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ValidationError(path + ": " + message);
}

std::string child(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void reject_unknown_keys(const Json& j, const std::string& path, const std::set<std::string>& known) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.contains(it.key())) fail(child(path, it.key()), "unknown field");
}

double as_number(const Json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int as_int(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

std::vector<double> as_number_list(const Json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

void read_number(const Json& j, const char* key, const std::string& path, double& out) {
  if (j.contains(key)) out = as_number(j.at(key), child(path, key));
}

void read_int(const Json& j, const char* key, const std::string& path, int& out) {
  if (j.contains(key)) out = as_int(j.at(key), child(path, key));
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }
Json optional_int(const std::optional<int>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> read_optional_number(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::optional<int> read_optional_int(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<int>();
}

// Re-validates and rewraps std::invalid_argument from the domain types.
template <class F>
void validated(const std::string& path, F&& check) {
  try {
    check();
  } catch (const ValidationError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<Scenario> parse_scenarios(const Json& v, const std::string& path) {
  std::vector<Scenario> out;
  auto one_builtin = [&](const Json& id, const std::string& p) {
    const int n = as_int(id, p);
    if (n < 1 || n > builtin_scenario_count())
      fail(p, "built-in scenario id must lie in 1.." + std::to_string(builtin_scenario_count()));
    out.push_back(builtin_scenario(n));
  };
  if (v.is_string() && v.get<std::string>() == "all") {
    for (int i = 1; i <= builtin_scenario_count(); ++i) out.push_back(builtin_scenario(i));
  } else if (v.is_number_integer()) {
    one_builtin(v, path);
  } else if (v.is_object()) {
    out.push_back(scenario_from_json(v, path));
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      if (v[i].is_object()) out.push_back(scenario_from_json(v[i], p));
      else one_builtin(v[i], p);
    }
  } else {
    fail(path, "expected a built-in id, \"all\", a scenario object or an array of those");
  }
  if (out.empty()) fail(path, "no scenario given");
  return out;
}

std::vector<DesignKind> parse_designs(const Json& v, const std::string& path) {
  std::vector<DesignKind> out;
  auto one = [&](const Json& name, const std::string& p) {
    if (!name.is_string()) fail(p, "expected a design name");
    const std::string s = name.get<std::string>();
    if (s == "all" || s == "ALL") {
      for (DesignKind k : all_design_kinds()) out.push_back(k);
      return;
    }
    try {
      out.push_back(parse_design_kind(s));
    } catch (const std::invalid_argument& e) {
      fail(p, e.what());
    }
  };
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) one(v[i], path + "[" + std::to_string(i) + "]");
  } else {
    one(v, path);
  }
  if (out.empty()) fail(path, "no design given");
  return out;
}

std::vector<SweepPoint> parse_sweep_object(const Json& v, const std::string& path) {
  if (!v.is_object()) fail(path, "expected an object of parameter grids");
  reject_unknown_keys(v, path, {"g_P", "gP", "cv", "rho_pq", "rho", "windows"});
  std::vector<SweepPoint> grid{SweepPoint{}};
  for (auto it = v.begin(); it != v.end(); ++it) {
    const std::string key = it.key();
    const std::string p = child(path, key);
    std::vector<SweepPoint> axis;
    if (key == "windows") {
      if (!it->is_array()) fail(p, "expected an array of [A_T, A_E] pairs");
      for (std::size_t i = 0; i < it->size(); ++i) {
        const auto pair = as_number_list((*it)[i], p + "[" + std::to_string(i) + "]");
        if (pair.size() != 2) fail(p + "[" + std::to_string(i) + "]", "expected [A_T, A_E]");
        SweepPoint s;
        s.windows = std::make_pair(pair[0], pair[1]);
        axis.push_back(s);
      }
    } else {
      for (double x : as_number_list(*it, p)) {
        SweepPoint s;
        if (key == "g_P" || key == "gP") s.g_p = x;
        else if (key == "cv") s.cv = x;
        else s.rho_pq = x;
        axis.push_back(s);
      }
    }
    grid = combine_sweeps(grid, axis);
  }
  return grid;
}

}  // namespace

// ---- sweeps ----

std::vector<SweepPoint> combine_sweeps(const std::vector<SweepPoint>& a,
                                       const std::vector<SweepPoint>& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  std::vector<SweepPoint> out;
  for (const SweepPoint& x : a) {
    for (const SweepPoint& y : b) {
      SweepPoint s = x;
      if (y.g_p) s.g_p = y.g_p;
      if (y.cv) s.cv = y.cv;
      if (y.rho_pq) s.rho_pq = y.rho_pq;
      if (y.windows) s.windows = y.windows;
      out.push_back(s);
    }
  }
  return out;
}

std::vector<SweepPoint> parse_sweep_arg(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) fail("sweep", "expected name=v1,v2,... (got '" + spec + "')");
  const std::string name = spec.substr(0, eq);
  std::vector<std::string> items;
  std::stringstream ss(spec.substr(eq + 1));
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) items.push_back(item);
  if (items.empty()) fail("sweep." + name, "no values given");

  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail("sweep." + name, "not a number: '" + s + "'");
    }
  };

  std::vector<SweepPoint> out;
  for (const std::string& item : items) {
    SweepPoint p;
    if (name == "gP" || name == "g_P") {
      p.g_p = number(item);
    } else if (name == "cv") {
      p.cv = number(item);
    } else if (name == "rho" || name == "rho_pq") {
      p.rho_pq = number(item);
    } else if (name == "windows") {
      const auto colon = item.find(':');
      if (colon == std::string::npos) fail("sweep.windows", "expected A_T:A_E pairs");
      p.windows = std::make_pair(number(item.substr(0, colon)), number(item.substr(colon + 1)));
    } else {
      fail("sweep", "unknown parameter '" + name + "'; valid: gP, cv, rho_pq, windows");
    }
    out.push_back(p);
  }
  return out;
}

std::pair<DesignParams, Scenario> apply_sweep(const DesignParams& params, const Scenario& scenario,
                                              const SweepPoint& point) {
  DesignParams p = params;
  Scenario s = scenario;
  if (point.g_p) s.g_p = *point.g_p;
  if (point.cv) s.cv = *point.cv;
  if (point.rho_pq) s.rho_pq = *point.rho_pq;
  if (point.windows) {
    p.tox_window = s.tox_window = point.windows->first;
    p.eff_window = s.eff_window = point.windows->second;
  }
  return {p, s};
}

int default_threads() {
  if (const char* env = std::getenv("PKBOIN_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;
}

long long study_size(const RunConfig& config) {
  const long long points = config.sweep.empty() ? 1 : static_cast<long long>(config.sweep.size());
  return points * static_cast<long long>(config.scenarios.size()) *
         static_cast<long long>(config.designs.size()) * config.reps;
}

std::vector<OperatingCharacteristics> run_study(const RunConfig& config,
                                                std::atomic<int>* progress) {
  const std::vector<SweepPoint> points = config.sweep.empty() ? std::vector<SweepPoint>{SweepPoint{}}
                                                              : config.sweep;
  const int threads = config.threads > 0 ? config.threads : default_threads();
  std::vector<OperatingCharacteristics> out;
  for (const SweepPoint& point : points) {
    for (const Scenario& scenario : config.scenarios) {
      for (DesignKind kind : config.designs) {
        DesignParams params = config.base;
        params.kind = kind;
        auto [p, s] = apply_sweep(params, scenario, point);
        out.push_back(run_replications(p, s, config.reps, config.seed, threads, progress));
      }
    }
  }
  return out;
}

// ---- configuration ----

RunConfig parse_config(const Json& j) {
  if (!j.is_object()) fail("config", "expected a JSON object");
  reject_unknown_keys(j, "", {"design", "designs", "scenario", "scenarios", "reps", "seed", "threads",
                              "params", "settings", "sweep", "output"});
  RunConfig c;
  if (j.contains("design")) c.designs = parse_designs(j.at("design"), "design");
  else if (j.contains("designs")) c.designs = parse_designs(j.at("designs"), "designs");
  else fail("design", "required");

  if (j.contains("params")) c.base = params_from_json(j.at("params"), c.base, "params");
  validated("params", [&] { c.base.validate(); });

  if (j.contains("scenario")) c.scenarios = parse_scenarios(j.at("scenario"), "scenario");
  else if (j.contains("scenarios")) c.scenarios = parse_scenarios(j.at("scenarios"), "scenarios");
  else fail("scenario", "required");

  if (j.contains("settings")) {
    const Json& s = j.at("settings");
    if (!s.is_object()) fail("settings", "expected an object");
    reject_unknown_keys(s, "settings", {"cv", "g_P", "rho_pq", "accrual_rate"});
    for (Scenario& sc : c.scenarios) {
      read_number(s, "cv", "settings", sc.cv);
      read_number(s, "g_P", "settings", sc.g_p);
      read_number(s, "rho_pq", "settings", sc.rho_pq);
      read_number(s, "accrual_rate", "settings", sc.accrual_rate);
    }
  }
  for (std::size_t i = 0; i < c.scenarios.size(); ++i) {
    Scenario& sc = c.scenarios[i];
    sc.tox_window = c.base.tox_window;
    sc.eff_window = c.base.eff_window;
    validated("scenario", [&] { sc.validate(); });
    if (sc.num_doses() != c.base.num_doses) {
      if (j.contains("params") && j.at("params").contains("num_doses"))
        fail("scenario", "dose count differs from params.num_doses");
      // The dose count follows the scenario unless pinned explicitly.
      c.base.num_doses = sc.num_doses();
      validated("params", [&] { c.base.validate(); });
    }
  }
  for (const Scenario& sc : c.scenarios)
    if (sc.num_doses() != c.base.num_doses) fail("scenario", "all scenarios must share one dose count");

  read_int(j, "reps", "", c.reps);
  if (c.reps < 1) fail("reps", "must be at least 1");
  if (j.contains("seed")) {
    const Json& s = j.at("seed");
    if (!s.is_number_integer()) fail("seed", "expected a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }
  read_int(j, "threads", "", c.threads);
  if (c.threads < 0) fail("threads", "must be nonnegative");
  if (j.contains("sweep")) c.sweep = parse_sweep_object(j.at("sweep"), "sweep");
  if (j.contains("output")) {
    const Json& o = j.at("output");
    if (!o.is_object()) fail("output", "expected an object");
    reject_unknown_keys(o, "output", {"path", "format"});
    if (o.contains("path")) c.out_path = o.at("path").get<std::string>();
    if (o.contains("format")) {
      c.format = o.at("format").get<std::string>();
      if (c.format != "csv" && c.format != "json") fail("output.format", "expected csv or json");
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail(path.string(), std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

// ---- design parameters ----

Json to_json(const DesignParams& p) {
  return Json{{"design", std::string(to_string(p.kind))},
              {"num_doses", p.num_doses},
              {"p_T", p.target_tox},
              {"q_E", p.min_eff},
              {"utility", {p.utility.u1, p.utility.u2, p.utility.u3, p.utility.u4}},
              {"lambda1", p.boundaries.lambda1},
              {"lambda2", p.boundaries.lambda2},
              {"u_b", p.utility_benchmark},
              {"N_star", p.sample_cutoff},
              {"escalation_n", p.escalation_n},
              {"min_elimination_n", p.min_elimination_n},
              {"pk_elimination_n", p.pk_elimination_n},
              {"C_T", p.tox_cutoff},
              {"C_E", p.eff_cutoff},
              {"C_P", p.pk_cutoff},
              {"r_P", p.pk.target},
              {"r_I", p.pk.inefficacious},
              {"zeta1", p.pk.cutoff},
              {"prior_sd", p.pk.prior_sd},
              {"pk_sd", p.pk.sampling_sd},
              {"cohort_size", p.cohort_size},
              {"max_n", p.max_n},
              {"start_dose", p.start_dose},
              {"A_T", p.tox_window},
              {"A_E", p.eff_window},
              {"pk_delay", p.pk_delay}};
}

DesignParams params_from_json(const Json& j, DesignParams p, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  reject_unknown_keys(j, path, {"design", "num_doses", "p_T", "q_E", "utility", "lambda1", "lambda2", "u_b",
                                "N_star", "escalation_n", "min_elimination_n", "pk_elimination_n",
                                "C_T", "C_E", "C_P", "r_P", "r_I", "zeta1", "prior_sd", "pk_sd",
                                "cohort_size", "max_n", "start_dose", "A_T", "A_E", "pk_delay"});
  if (j.contains("design")) {
    const Json& d = j.at("design");
    if (!d.is_string()) fail(child(path, "design"), "expected a design name");
    try {
      p.kind = parse_design_kind(d.get<std::string>());
    } catch (const std::invalid_argument& e) {
      fail(child(path, "design"), e.what());
    }
  }
  read_int(j, "num_doses", path, p.num_doses);
  read_number(j, "p_T", path, p.target_tox);
  read_number(j, "q_E", path, p.min_eff);
  if (j.contains("utility")) {
    const auto u = as_number_list(j.at("utility"), child(path, "utility"));
    if (u.size() != 4) fail(child(path, "utility"), "expected [u1, u2, u3, u4]");
    p.utility = {u[0], u[1], u[2], u[3]};
  }
  read_int(j, "N_star", path, p.sample_cutoff);
  read_int(j, "escalation_n", path, p.escalation_n);
  read_int(j, "min_elimination_n", path, p.min_elimination_n);
  read_int(j, "pk_elimination_n", path, p.pk_elimination_n);
  read_number(j, "C_T", path, p.tox_cutoff);
  read_number(j, "C_E", path, p.eff_cutoff);
  read_number(j, "C_P", path, p.pk_cutoff);
  const bool new_target = j.contains("r_P");
  read_number(j, "r_P", path, p.pk.target);
  if (j.contains("r_I")) read_number(j, "r_I", path, p.pk.inefficacious);
  else if (new_target) p.pk.inefficacious = 0.6 * p.pk.target;
  if (j.contains("zeta1")) read_number(j, "zeta1", path, p.pk.cutoff);
  else p.pk.cutoff = 0.5 * (p.pk.target + p.pk.inefficacious);
  read_number(j, "prior_sd", path, p.pk.prior_sd);
  read_number(j, "pk_sd", path, p.pk.sampling_sd);
  read_int(j, "cohort_size", path, p.cohort_size);
  read_int(j, "max_n", path, p.max_n);
  read_int(j, "start_dose", path, p.start_dose);
  read_number(j, "A_T", path, p.tox_window);
  read_number(j, "A_E", path, p.eff_window);
  read_number(j, "pk_delay", path, p.pk_delay);

  if (!(p.target_tox > 0.0 && p.target_tox < 1.0)) fail(child(path, "p_T"), "must lie in (0, 1)");
  if (!(p.min_eff > 0.0 && p.min_eff < 1.0)) fail(child(path, "q_E"), "must lie in (0, 1)");
  p.refresh_derived();
  read_number(j, "lambda1", path, p.boundaries.lambda1);
  read_number(j, "lambda2", path, p.boundaries.lambda2);
  if (j.contains("u_b")) {
    const double ub = as_number(j.at("u_b"), child(path, "u_b"));
    if (std::abs(ub - p.utility_benchmark) > 1e-9)
      fail(child(path, "u_b"), "inconsistent with the utilities, p_T and q_E (expected " +
                                   full(p.utility_benchmark) + ")");
  }
  validated(path, [&] { p.validate(); });
  return p;
}

// ---- scenarios ----

Json to_json(const Scenario& s) {
  return Json{{"name", s.name},        {"tox", s.tox},         {"eff", s.eff},
              {"pk", s.pk},            {"obd", optional_int(s.obd)},
              {"cv", s.cv},            {"g_P", s.g_p},         {"rho_pq", s.rho_pq},
              {"accrual_rate", s.accrual_rate}, {"A_T", s.tox_window}, {"A_E", s.eff_window}};
}

Scenario scenario_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  reject_unknown_keys(j, path, {"name", "tox", "eff", "pk", "obd", "cv", "g_P", "rho_pq",
                                "accrual_rate", "A_T", "A_E"});
  Scenario s;
  s.name = j.value("name", std::string("custom"));
  for (const char* key : {"tox", "eff", "pk"})
    if (!j.contains(key)) fail(child(path, key), "required");
  s.tox = as_number_list(j.at("tox"), child(path, "tox"));
  s.eff = as_number_list(j.at("eff"), child(path, "eff"));
  s.pk = as_number_list(j.at("pk"), child(path, "pk"));
  if (j.contains("obd") && !j.at("obd").is_null()) s.obd = as_int(j.at("obd"), child(path, "obd"));
  read_number(j, "cv", path, s.cv);
  read_number(j, "g_P", path, s.g_p);
  read_number(j, "rho_pq", path, s.rho_pq);
  read_number(j, "accrual_rate", path, s.accrual_rate);
  read_number(j, "A_T", path, s.tox_window);
  read_number(j, "A_E", path, s.eff_window);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    // Messages from validate() already start with "scenario.<field>".
    std::string msg = e.what();
    const std::string prefix = "scenario.";
    if (msg.rfind(prefix, 0) == 0) {
      const auto space = msg.find(' ');
      fail(child(path, msg.substr(prefix.size(), space - prefix.size())), msg.substr(space + 1));
    }
    fail(path, msg);
  }
  return s;
}

// ---- decisions and selections ----

Json to_json(const Decision& d) {
  Json doses = Json::array();
  for (const DoseDiagnostics& g : d.doses) {
    doses.push_back(Json{{"dose", g.dose},
                         {"n", g.n},
                         {"p_hat", optional_number(g.tox_rate)},
                         {"q_hat", optional_number(g.eff_rate)},
                         {"r_hat", optional_number(g.pk_mean)},
                         {"quasi_events", g.quasi_events},
                         {"desirability", g.desirability},
                         {"safety_tail", optional_number(g.safety_tail)},
                         {"efficacy_tail", optional_number(g.efficacy_tail)},
                         {"pk_tail", optional_number(g.pk_tail)},
                         {"eliminated", {{"safety", g.eliminated_safety},
                                         {"efficacy", g.eliminated_efficacy},
                                         {"pk", g.eliminated_pk}}}});
  }
  return Json{{"action", std::string(to_string(d.action))},
              {"dose", d.dose > 0 ? Json(d.dose) : Json(nullptr)},
              {"current_dose", d.current_dose},
              {"admissible", d.admissible},
              {"d_pk_min", optional_int(d.d_pk_min)},
              {"rules", d.rules},
              {"doses", doses}};
}

Json to_json(const ObdResult& r) {
  Json iso_tox = Json::array();
  Json iso_pk = Json::array();
  Json utilities = Json::array();
  for (const auto& v : r.iso_tox) iso_tox.push_back(optional_number(v));
  for (const auto& v : r.iso_pk) iso_pk.push_back(optional_number(v));
  for (const auto& v : r.utilities) utilities.push_back(optional_number(v));
  return Json{{"selected", optional_int(r.selected)},
              {"mtd", optional_int(r.mtd)},
              {"pk_min", optional_int(r.pk_min)},
              {"iso_tox", iso_tox},
              {"iso_pk", iso_pk},
              {"utilities", utilities},
              {"all_eliminated", r.all_eliminated}};
}

Json to_json(const DoseState& s) {
  return Json{{"counts", s.counts},
              {"pk", s.pk_samples},
              {"ever_used", s.ever_used},
              {"eliminated", {{"safety", s.eliminated_safety},
                              {"efficacy", s.eliminated_efficacy},
                              {"pk", s.eliminated_pk}}}};
}

DoseState dose_state_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  reject_unknown_keys(j, path, {"counts", "pk", "ever_used", "eliminated"});
  DoseState s;
  if (j.contains("counts")) {
    const Json& c = j.at("counts");
    if (!c.is_array() || c.size() != 4) fail(child(path, "counts"), "expected [n1, n2, n3, n4]");
    for (int i = 0; i < 4; ++i) {
      s.counts[i] = as_int(c[i], child(path, "counts") + "[" + std::to_string(i) + "]");
      if (s.counts[i] < 0) fail(child(path, "counts"), "counts must be nonnegative");
    }
  }
  if (j.contains("pk")) s.pk_samples = as_number_list(j.at("pk"), child(path, "pk"));
  s.ever_used = j.value("ever_used", false) || s.n() > 0;
  if (j.contains("eliminated")) {
    const Json& e = j.at("eliminated");
    if (!e.is_object()) fail(child(path, "eliminated"), "expected an object");
    s.eliminated_safety = e.value("safety", false);
    s.eliminated_efficacy = e.value("efficacy", false);
    s.eliminated_pk = e.value("pk", false);
  }
  return s;
}

namespace {

Json outcome_to_json(const OutcomeRecord& o) {
  return Json{{"value", o.value ? Json(*o.value) : Json(nullptr)}, {"time", optional_number(o.time)}};
}

OutcomeRecord outcome_from_json(const Json& j, const std::string& path) {
  OutcomeRecord o;
  if (j.is_null()) return o;
  if (j.is_boolean()) {
    o.value = j.get<bool>();
    return o;
  }
  if (!j.is_object()) fail(path, "expected true, false, null or {value, time}");
  reject_unknown_keys(j, path, {"value", "time"});
  if (j.contains("value") && !j.at("value").is_null()) {
    if (!j.at("value").is_boolean()) fail(child(path, "value"), "expected a boolean or null");
    o.value = j.at("value").get<bool>();
  }
  if (j.contains("time") && !j.at("time").is_null()) {
    o.time = as_number(j.at("time"), child(path, "time"));
    if (*o.time < 0.0) fail(child(path, "time"), "must be nonnegative");
  }
  return o;
}

}  // namespace

Json to_json(const PatientRecord& p) {
  return Json{{"id", p.id},
              {"dose", p.dose},
              {"enroll_time", p.enroll_time},
              {"pk", p.pk_value},
              {"tox", outcome_to_json(p.tox)},
              {"eff", outcome_to_json(p.eff)}};
}

PatientRecord patient_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  reject_unknown_keys(j, path, {"id", "dose", "enroll_time", "pk", "tox", "eff"});
  PatientRecord p;
  read_int(j, "id", path, p.id);
  read_int(j, "dose", path, p.dose);
  read_number(j, "enroll_time", path, p.enroll_time);
  if (!j.contains("pk")) fail(child(path, "pk"), "required");
  p.pk_value = as_number(j.at("pk"), child(path, "pk"));
  if (!(p.pk_value > 0.0)) fail(child(path, "pk"), "must be positive");
  p.tox = outcome_from_json(j.value("tox", Json(nullptr)), child(path, "tox"));
  p.eff = outcome_from_json(j.value("eff", Json(nullptr)), child(path, "eff"));
  return p;
}

// ---- operating characteristics ----

Json to_json(const OperatingCharacteristics& oc) {
  return Json{{"design", oc.design},
              {"scenario", oc.scenario},
              {"num_doses", oc.num_doses},
              {"selection_pct", oc.selection_pct},
              {"early_termination_pct", oc.early_termination_pct},
              {"all_eliminated_pct", oc.all_eliminated_pct},
              {"no_selection_pct", oc.no_selection_pct},
              {"mean_patients", oc.mean_patients},
              {"mean_enrolled", oc.mean_enrolled},
              {"mean_duration_months", oc.mean_duration_months},
              {"true_obd", optional_int(oc.true_obd)},
              {"obd_selection_pct", optional_number(oc.obd_selection_pct)},
              {"replications", oc.replications},
              {"seed", oc.seed},
              {"g_P", oc.g_p},
              {"cv", oc.cv},
              {"rho_pq", oc.rho_pq},
              {"A_T", oc.tox_window},
              {"A_E", oc.eff_window}};
}

OperatingCharacteristics oc_from_json(const Json& j) {
  OperatingCharacteristics oc;
  oc.design = j.at("design").get<std::string>();
  oc.scenario = j.at("scenario").get<std::string>();
  oc.num_doses = j.at("num_doses").get<int>();
  oc.selection_pct = j.at("selection_pct").get<std::vector<double>>();
  oc.early_termination_pct = j.at("early_termination_pct").get<double>();
  oc.all_eliminated_pct = j.at("all_eliminated_pct").get<double>();
  oc.no_selection_pct = j.at("no_selection_pct").get<double>();
  oc.mean_patients = j.at("mean_patients").get<std::vector<double>>();
  oc.mean_enrolled = j.at("mean_enrolled").get<double>();
  oc.mean_duration_months = j.at("mean_duration_months").get<double>();
  oc.true_obd = read_optional_int(j, "true_obd");
  oc.obd_selection_pct = read_optional_number(j, "obd_selection_pct");
  oc.replications = j.at("replications").get<int>();
  oc.seed = j.at("seed").get<std::uint64_t>();
  oc.g_p = j.at("g_P").get<double>();
  oc.cv = j.at("cv").get<double>();
  oc.rho_pq = j.at("rho_pq").get<double>();
  oc.tox_window = j.at("A_T").get<double>();
  oc.eff_window = j.at("A_E").get<double>();
  return oc;
}

// ---- trial-state files ----

TrialStateFile trial_state_from_json(const Json& j) {
  if (!j.is_object()) fail("state", "expected a JSON object");
  reject_unknown_keys(j, "", {"design", "params", "current_dose", "time", "doses", "patients"});
  TrialStateFile s;
  DesignKind kind = DesignKind::pkboin12;
  if (j.contains("design")) kind = parse_designs(j.at("design"), "design").front();
  s.params = DesignParams::defaults(kind);
  if (j.contains("params")) s.params = params_from_json(j.at("params"), s.params, "params");
  if (j.contains("design")) s.params.kind = kind;

  if (j.contains("doses")) {
    const Json& d = j.at("doses");
    if (!d.is_array()) fail("doses", "expected an array");
    for (std::size_t i = 0; i < d.size(); ++i)
      s.doses.push_back(dose_state_from_json(d[i], "doses[" + std::to_string(i) + "]"));
    if (!j.contains("params") || !j.at("params").contains("num_doses")) s.params.num_doses = static_cast<int>(s.doses.size());
    if (static_cast<int>(s.doses.size()) != s.params.num_doses)
      fail("doses", "expected " + std::to_string(s.params.num_doses) + " entries");
  } else {
    s.doses.assign(s.params.num_doses, DoseState{});
  }
  validated("params", [&] { s.params.validate(); });

  if (j.contains("patients")) {
    const Json& p = j.at("patients");
    if (!p.is_array()) fail("patients", "expected an array");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string path = "patients[" + std::to_string(i) + "]";
      PatientRecord rec = patient_from_json(p[i], path);
      if (rec.dose < 1 || rec.dose > s.params.num_doses) fail(path + ".dose", "out of range");
      if (!p[i].contains("id")) rec.id = static_cast<int>(i) + 1;
      s.patients.push_back(rec);
    }
  }
  s.current_dose = s.params.start_dose;
  read_int(j, "current_dose", "", s.current_dose);
  if (s.current_dose < 1 || s.current_dose > s.params.num_doses) fail("current_dose", "out of range");
  if (j.contains("time") && !j.at("time").is_null()) s.time = as_number(j.at("time"), "time");

  if (is_tite(s.params.kind) && !s.doses.empty()) {
    bool has_counts = false;
    for (const DoseState& d : s.doses) has_counts = has_counts || d.n() > 0;
    if (has_counts && s.patients.empty())
      fail("patients", "TITE designs need patient-level records");
  }
  if (is_tite(s.params.kind) && !s.patients.empty() && !s.time)
    fail("time", "required for TITE designs");
  if (!is_tite(s.params.kind)) {
    for (std::size_t i = 0; i < s.patients.size(); ++i) {
      if (!s.patients[i].tox.value || !s.patients[i].eff.value)
        fail("patients[" + std::to_string(i) + "]", "pending outcomes need a TITE design");
    }
  }
  return s;
}

Json to_json(const TrialStateFile& s) {
  Json doses = Json::array();
  for (const DoseState& d : s.doses) doses.push_back(to_json(d));
  Json patients = Json::array();
  for (const PatientRecord& p : s.patients) patients.push_back(to_json(p));
  Json params = to_json(s.params);
  params.erase("design");
  params.erase("lambda1");
  params.erase("lambda2");
  params.erase("u_b");
  return Json{{"design", std::string(to_string(s.params.kind))},
              {"params", params},
              {"current_dose", s.current_dose},
              {"time", optional_number(s.time)},
              {"doses", doses},
              {"patients", patients}};
}

namespace {

// Dose states for a snapshot: aggregates from patient records when given,
// elimination flags always from the per-dose entries.
std::vector<DoseState> snapshot_states(const TrialStateFile& s, double t) {
  std::vector<DoseState> states = s.doses;
  if (!s.patients.empty()) refresh_dose_states(states, s.patients, t, s.params);
  return states;
}

}  // namespace

StateDecision decide_from_state(const TrialStateFile& s) {
  StateDecision out;
  if (is_tite(s.params.kind)) {
    const double t = s.time.value_or(std::numeric_limits<double>::infinity());
    out.states = snapshot_states(s, t);
    out.decision = next_dose_tite(out.states, s.patients, s.current_dose, t, s.params);
  } else {
    out.states = snapshot_states(s, std::numeric_limits<double>::infinity());
    out.decision = decide(out.states, s.current_dose, s.params);
  }
  return out;
}

ObdResult finalize_from_state(const TrialStateFile& s) {
  const double t = is_tite(s.params.kind) ? s.time.value_or(std::numeric_limits<double>::infinity())
                                          : std::numeric_limits<double>::infinity();
  const std::vector<DoseState> states = snapshot_states(s, t);
  return select_obd(states, s.params);
}

// ---- reports ----

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  fail("format", "expected csv or json, got '" + name + "'");
}

std::string format_csv(std::span<const OperatingCharacteristics> ocs) {
  const int D = ocs.empty() ? 6 : ocs.front().num_doses;
  for (const auto& oc : ocs)
    if (oc.num_doses != D) throw std::invalid_argument("format_csv: rows differ in dose count");

  std::ostringstream out;
  out << "design,scenario,g_P,cv,rho_pq,A_T,A_E,reps,seed";
  for (int d = 1; d <= D; ++d) out << ",sel_" << d;
  out << ",ET";
  for (int d = 1; d <= D; ++d) out << ",n_" << d;
  out << ",duration_months,true_obd,obd_sel,no_selection,all_eliminated,mean_enrolled";
  for (int d = 1; d <= D; ++d) out << ",sel_" << d << "_full";
  out << ",ET_full";
  for (int d = 1; d <= D; ++d) out << ",n_" << d << "_full";
  out << ",duration_months_full\n";

  for (const auto& oc : ocs) {
    out << oc.design << ',' << oc.scenario << ',' << full(oc.g_p) << ',' << full(oc.cv) << ','
        << full(oc.rho_pq) << ',' << full(oc.tox_window) << ',' << full(oc.eff_window) << ','
        << oc.replications << ',' << oc.seed;
    for (double v : oc.selection_pct) out << ',' << fixed(v, 1);
    out << ',' << fixed(oc.early_termination_pct, 1);
    for (double v : oc.mean_patients) out << ',' << fixed(v, 1);
    out << ',' << fixed(oc.mean_duration_months, 1) << ','
        << (oc.true_obd ? std::to_string(*oc.true_obd) : "") << ','
        << (oc.obd_selection_pct ? fixed(*oc.obd_selection_pct, 1) : "") << ','
        << fixed(oc.no_selection_pct, 1) << ',' << fixed(oc.all_eliminated_pct, 1) << ','
        << fixed(oc.mean_enrolled, 1);
    for (double v : oc.selection_pct) out << ',' << full(v);
    out << ',' << full(oc.early_termination_pct);
    for (double v : oc.mean_patients) out << ',' << full(v);
    out << ',' << full(oc.mean_duration_months) << '\n';
  }
  return out.str();
}

std::string format_json(std::span<const OperatingCharacteristics> ocs) {
  Json rows = Json::array();
  for (const auto& oc : ocs) rows.push_back(to_json(oc));
  return Json{{"results", rows}}.dump(2) + "\n";
}

std::vector<OperatingCharacteristics> parse_json_report(const std::string& text) {
  const Json j = Json::parse(text);
  std::vector<OperatingCharacteristics> out;
  for (const Json& row : j.at("results")) out.push_back(oc_from_json(row));
  return out;
}

void write_report(std::span<const OperatingCharacteristics> ocs, ReportFormat format,
                  const std::filesystem::path& path) {
  const std::string body = format == ReportFormat::csv ? format_csv(ocs) : format_json(ocs);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open report file " + path.string());
  out << body;
  out.flush();
  if (!out) throw std::runtime_error("failed writing report file " + path.string());
}

}  // namespace pkboin
