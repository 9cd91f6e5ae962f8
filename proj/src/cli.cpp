#include "pkboin/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"
#include "pkboin/io.hpp"
#include "pkboin/service.hpp"

namespace pkboin {

namespace {

struct SimulateArgs {
  std::string config;
  std::vector<std::string> designs;
  std::vector<std::string> scenarios;
  std::optional<int> reps;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
  std::string format;
  std::vector<std::string> sweeps;
};

std::vector<std::string> split_commas(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const std::string& item : items) {
    std::stringstream ss(item);
    for (std::string part; std::getline(ss, part, ',');)
      if (!part.empty()) out.push_back(part);
  }
  return out;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ValidationError(path + ": invalid JSON");
  return j;
}

RunConfig build_config(const SimulateArgs& a) {
  Json j = a.config.empty() ? Json::object() : read_json_file(a.config);
  const auto designs = split_commas(a.designs);
  if (!designs.empty()) {
    j.erase("designs");
    j["design"] = designs;
  }
  const auto scenarios = split_commas(a.scenarios);
  if (!scenarios.empty()) {
    j.erase("scenarios");
    Json list = Json::array();
    for (const std::string& s : scenarios) {
      if (s == "all") {
        list = "all";
        break;
      }
      try {
        std::size_t used = 0;
        const int id = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        list.push_back(id);
      } catch (const std::exception&) {
        throw ValidationError("scenario: expected a built-in id or \"all\", got '" + s + "'");
      }
    }
    j["scenario"] = list;
  }
  if (a.reps) j["reps"] = *a.reps;
  if (a.seed) j["seed"] = *a.seed;
  if (a.threads) j["threads"] = *a.threads;
  RunConfig c = parse_config(j);
  if (!a.out.empty()) c.out_path = a.out;
  if (!a.format.empty()) {
    parse_report_format(a.format);
    c.format = a.format;
  }
  for (const std::string& spec : a.sweeps) c.sweep = combine_sweeps(c.sweep, parse_sweep_arg(spec));
  return c;
}

std::string sweep_label(const SweepPoint& p) {
  std::ostringstream s;
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  if (p.g_p) s << "gP=" << num(*p.g_p) << ' ';
  if (p.cv) s << "cv=" << num(*p.cv) << ' ';
  if (p.rho_pq) s << "rho=" << num(*p.rho_pq) << ' ';
  if (p.windows) s << "AT:AE=" << num(p.windows->first) << ':' << num(p.windows->second) << ' ';
  std::string label = s.str();
  if (!label.empty()) label.pop_back();
  return label;
}

// OBD-selection grid: one row per scenario, one column per (sweep point, design).
void print_grid(const RunConfig& c, const std::vector<OperatingCharacteristics>& ocs, std::ostream& out) {
  const std::size_t S = c.scenarios.size();
  const std::size_t K = c.designs.size();
  const std::size_t P = c.sweep.empty() ? 1 : c.sweep.size();
  out << "OBD selection (%); ET (%) where no true OBD\n";
  out << "scenario";
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t k = 0; k < K; ++k)
      out << '\t' << (c.sweep.empty() ? "" : sweep_label(c.sweep[p]) + " ") << to_string(c.designs[k]);
  out << '\n';
  for (std::size_t s = 0; s < S; ++s) {
    out << c.scenarios[s].name;
    for (std::size_t p = 0; p < P; ++p) {
      for (std::size_t k = 0; k < K; ++k) {
        const OperatingCharacteristics& oc = ocs[(p * S + s) * K + k];
        char buf[32];
        if (oc.obd_selection_pct) std::snprintf(buf, sizeof buf, "%.1f", *oc.obd_selection_pct);
        else std::snprintf(buf, sizeof buf, "ET %.1f", oc.early_termination_pct);
        out << '\t' << buf;
      }
    }
    out << '\n';
  }
}

int run_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  const RunConfig c = build_config(args);
  const auto ocs = run_study(c);
  const ReportFormat format = parse_report_format(c.format);
  if (c.out_path.empty()) {
    out << (format == ReportFormat::csv ? format_csv(ocs) : format_json(ocs));
    return 0;
  }
  write_report(ocs, format, c.out_path);
  print_grid(c, ocs, out);
  err << "wrote " << ocs.size() << " rows to " << c.out_path << '\n';
  return 0;
}

void list_scenarios(std::ostream& out) {
  out << "id\tobd\ttox\teff\tpk\n";
  for (int i = 1; i <= builtin_scenario_count(); ++i) {
    const Scenario s = builtin_scenario(i);
    auto join = [](const std::vector<double>& v) {
      std::ostringstream o;
      for (std::size_t k = 0; k < v.size(); ++k) o << (k ? "," : "") << v[k];
      return o.str();
    };
    out << i << '\t' << (s.obd ? std::to_string(*s.obd) : "-") << '\t' << join(s.tox) << '\t'
        << join(s.eff) << '\t' << join(s.pk) << '\n';
  }
}

}  // namespace

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dose finding with toxicity, efficacy and PK exposure: BOIN12, PKBOIN-12 and TITE variants"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a simulation study and report operating characteristics");
  simulate->add_option("--config", sim.config, "JSON study configuration");
  simulate->add_option("--design,--designs", sim.designs, "Design(s): BOIN12, PKBOIN-12, TITE-BOIN12, TITE-PKBOIN-12 or all")
      ->delimiter(',');
  simulate->add_option("--scenario,--scenarios", sim.scenarios, "Built-in scenario id(s) 1-14 or all")->delimiter(',');
  simulate->add_option("--reps", sim.reps, "Replications per design and scenario");
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");
  simulate->add_option("--out", sim.out, "Report file (default: stdout)");
  simulate->add_option("--format", sim.format, "Report format: csv or json");
  simulate->add_option("--sweep", sim.sweeps, "Sensitivity grid, e.g. gP=0,0.5,1 or windows=30:60,45:90 (repeatable)");

  std::string decide_state;
  auto* decide = app.add_subcommand("decide", "Print the dose decision for a trial-state file");
  decide->add_option("--state", decide_state, "Trial-state JSON file")->required();

  std::string finalize_state;
  auto* finalize = app.add_subcommand("finalize", "Print the final OBD selection for a trial-state file");
  finalize->add_option("--state", finalize_state, "Trial-state JSON file")->required();

  auto* scenarios = app.add_subcommand("scenarios", "List or show built-in scenarios");
  auto* list = scenarios->add_subcommand("list", "List all built-in scenarios");
  int show_id = 0;
  auto* show = scenarios->add_subcommand("show", "Print one scenario as JSON");
  show->add_option("id", show_id, "Scenario id")->required();
  scenarios->require_subcommand(1);

  std::string host = "127.0.0.1";
  int port = 8080;
  ServiceOptions service_options;
  std::string data_dir = service_options.data_dir.string();
  std::string ui_dir;
  auto* serve = app.add_subcommand("serve", "Start the trial conduct HTTP service");
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--data-dir", data_dir, "Directory for trial session files");
  serve->add_option("--ui-dir", ui_dir, "Static UI bundle served at /");
  serve->add_option("--max-jobs", service_options.max_jobs, "Simulation jobs run at once");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*simulate) return run_simulate(sim, out, err);
    if (*decide) {
      const StateDecision d = decide_from_state(trial_state_from_json(read_json_file(decide_state)));
      Json doses = Json::array();
      for (const DoseState& s : d.states) doses.push_back(to_json(s));
      out << Json{{"decision", to_json(d.decision)}, {"doses", doses}}.dump(2) << '\n';
      return 0;
    }
    if (*finalize) {
      const ObdResult r = finalize_from_state(trial_state_from_json(read_json_file(finalize_state)));
      out << to_json(r).dump(2) << '\n';
      return 0;
    }
    if (*scenarios) {
      if (*list) list_scenarios(out);
      if (*show) out << to_json(builtin_scenario(show_id)).dump(2) << '\n';
      return 0;
    }
    if (*serve) {
      service_options.data_dir = data_dir;
      if (!ui_dir.empty()) service_options.ui_dir = ui_dir;
      ConductService service(service_options);
      httplib::Server server;
      service.bind(server);
      err << "listening on http://" << host << ':' << port << '\n';
      if (!server.listen(host, port)) {
        err << "error: cannot listen on " << host << ':' << port << '\n';
        return 2;
      }
      return 0;
    }
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace pkboin
