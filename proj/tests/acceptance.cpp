// Acceptance report: one PASS/FAIL line per primary criterion. Exits 1 when
// any criterion fails.

#define DOCTEST_CONFIG_IMPLEMENT
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "doctest.h"
#include "pkboin/io.hpp"

using namespace pkboin;

namespace {

struct PropertyRun {
  int selected = 0;
  int failed = 0;
};

PropertyRun g_property_run;

struct PropertyCounter : doctest::IReporter {
  explicit PropertyCounter(const doctest::ContextOptions&) {}
  void report_query(const doctest::QueryData&) override {}
  void test_run_start() override {}
  void test_run_end(const doctest::TestRunStats& s) override {
    g_property_run.selected = static_cast<int>(s.numTestCasesPassingFilters);
    g_property_run.failed = static_cast<int>(s.numTestCasesFailed);
  }
  void test_case_start(const doctest::TestCaseData&) override {}
  void test_case_reenter(const doctest::TestCaseData&) override {}
  void test_case_end(const doctest::CurrentTestCaseStats&) override {}
  void test_case_exception(const doctest::TestCaseException&) override {}
  void subcase_start(const doctest::SubcaseSignature&) override {}
  void subcase_end() override {}
  void log_assert(const doctest::AssertData&) override {}
  void log_message(const doctest::MessageData&) override {}
  void test_case_skipped(const doctest::TestCaseData&) override {}
};

REGISTER_LISTENER("property_counter", 1, PropertyCounter);

bool run_property(const std::string& test_case) {
  std::ostringstream sink;
  doctest::Context ctx;
  ctx.setOption("test-case", test_case.c_str());
  ctx.setCout(&sink);
  g_property_run = {};
  ctx.run();
  return g_property_run.selected == 1 && g_property_run.failed == 0;
}

std::string fmt(double v, int decimals = 1) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// Collects the parts of one criterion and prints a single line.
class Criterion {
 public:
  explicit Criterion(std::string name) : name_(std::move(name)) {}

  void check(bool ok, const std::string& detail) {
    ok_ = ok_ && ok;
    parts_.push_back(detail + (ok ? "" : " [miss]"));
  }
  void within(const std::string& label, double got, double expected, double tol, int decimals = 1) {
    check(std::abs(got - expected) <= tol,
          label + " " + fmt(got, decimals) + " (" + fmt(expected, decimals) + " +/- " + fmt(tol, decimals) + ")");
  }
  void at_most(const std::string& label, double got, double bound) {
    check(got <= bound, label + " " + fmt(got) + " (<= " + fmt(bound) + ")");
  }

  bool report() const {
    std::cout << (ok_ ? "PASS" : "FAIL") << "  " << name_ << ": ";
    for (std::size_t i = 0; i < parts_.size(); ++i) std::cout << (i ? "; " : "") << parts_[i];
    std::cout << std::endl;
    return ok_;
  }

 private:
  std::string name_;
  bool ok_ = true;
  std::vector<std::string> parts_;
};

struct PaperRow {
  std::vector<double> sel;
  double et = 0.0;
  std::vector<double> n;
  double duration = 0.0;
};

std::map<int, std::map<std::string, PaperRow>> load_table2() {
  std::ifstream in(std::string(PKBOIN_FIXTURE_DIR) + "/table2.json");
  if (!in) throw std::runtime_error("table2.json not found");
  const Json j = Json::parse(in);
  std::map<int, std::map<std::string, PaperRow>> out;
  for (const Json& s : j.at("scenarios")) {
    for (const auto& [design, row] : s.at("designs").items()) {
      out[s.at("id").get<int>()][design] = PaperRow{row.at("sel").get<std::vector<double>>(), row.at("et").get<double>(),
                                                     row.at("n").get<std::vector<double>>(),
                                                     row.at("duration").get<double>()};
    }
  }
  return out;
}

class Study {
 public:
  Study(int reps, std::uint64_t seed, int threads) : reps_(reps), seed_(seed), threads_(threads) {}

  OperatingCharacteristics run(DesignKind kind, const Scenario& s, const DesignParams* base = nullptr) const {
    DesignParams p = base ? *base : DesignParams::defaults(kind, s.num_doses());
    p.kind = kind;
    return run_replications(p, s, reps_, seed_, threads_);
  }

 private:
  int reps_;
  std::uint64_t seed_;
  int threads_;
};

double obd_or_et(const OperatingCharacteristics& oc) {
  return oc.obd_selection_pct ? *oc.obd_selection_pct : oc.early_termination_pct;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance report for the primary criteria"};
  int reps = 2000;
  std::uint64_t seed = 7;
  int threads = 0;
  app.add_option("--reps", reps, "Replications per design and scenario");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");
  CLI11_PARSE(app, argc, argv);

  const auto table2 = load_table2();
  const Study study(reps, seed, threads);
  std::cout << "reps " << reps << ", seed " << seed << std::endl;
  int failures = 0;
  auto tally = [&](const Criterion& c) { failures += c.report() ? 0 : 1; };

  {
    Criterion c("Boundaries and benchmark");
    const IntervalBoundaries b = boin_boundaries(0.35);
    c.within("lambda1", b.lambda1, 0.276, 0.0005, 3);
    c.within("lambda2", b.lambda2, 0.419, 0.0005, 3);
    const double ub = utility_benchmark(UtilitySpec{}, 0.35, 0.25);
    c.check(ub == 70.5, "u_b " + fmt(ub, 4) + " (70.5 exactly)");
    const double zeta = PkPosteriorParams::from_target(6000.0).cutoff;
    c.check(zeta == 4800.0, "zeta1 " + fmt(zeta, 1) + " (4800)");
    tally(c);
  }

  // Every scenario under every design, shared by the Table 2 and duration criteria.
  std::map<int, std::map<DesignKind, OperatingCharacteristics>> all;
  for (int s = 1; s <= builtin_scenario_count(); ++s)
    for (DesignKind k : all_design_kinds()) all[s][k] = study.run(k, builtin_scenario(s));
  const auto B = DesignKind::boin12;
  const auto P = DesignKind::pkboin12;

  {
    Criterion c("Table 2, scenario 1");
    const auto& pk = all[1][P];
    const auto& boin = all[1][B];
    c.within("PKBOIN-12 dose 6", pk.selection_pct[5], 53.8, 3.0);
    c.at_most("PKBOIN-12 doses 1-3", pk.selection_pct[0] + pk.selection_pct[1] + pk.selection_pct[2], 0.5);
    c.within("BOIN12 dose 6", boin.selection_pct[5], 36.9, 3.0);
    tally(c);
  }
  {
    Criterion c("Table 2, scenario 5");
    c.within("PKBOIN-12 dose 4", all[5][P].selection_pct[3], 58.0, 3.0);
    c.within("BOIN12 dose 4", all[5][B].selection_pct[3], 37.7, 3.0);
    c.within("PKBOIN-12 patients at dose 4", all[5][P].mean_patients[3], 13.8, 1.0);
    tally(c);
  }
  {
    Criterion c("Table 2, scenario 13");
    c.within("PKBOIN-12 ET", all[13][P].early_termination_pct, 84.7, 3.0);
    c.at_most("BOIN12 ET", all[13][B].early_termination_pct, 1.5);
    c.within("PKBOIN-12 enrolled", all[13][P].mean_enrolled, 30.3, 2.0);
    tally(c);
  }
  {
    Criterion c("Table 2, scenario 14");
    c.within("BOIN12 ET", all[14][B].early_termination_pct, 56.3, 4.0);
    c.within("PKBOIN-12 ET", all[14][P].early_termination_pct, 54.8, 4.0);
    tally(c);
  }
  {
    Criterion c("Durations");
    int shorter = 0, within = 0, total = 0;
    double worst = 0.0;
    std::string worst_at;
    for (int s = 1; s <= builtin_scenario_count(); ++s) {
      const auto& row = all[s];
      if (row.at(DesignKind::tite_boin12).mean_duration_months < row.at(B).mean_duration_months) ++shorter;
      if (row.at(DesignKind::tite_pkboin12).mean_duration_months < row.at(P).mean_duration_months) ++shorter;
      for (const auto& [kind, oc] : row) {
        const double paper = table2.at(s).at(std::string(to_string(kind))).duration;
        const double rel = std::abs(oc.mean_duration_months - paper) / paper;
        ++total;
        if (rel <= 0.25) ++within;
        if (rel > worst) {
          worst = rel;
          worst_at = "scenario " + std::to_string(s) + " " + std::string(to_string(kind)) + " " +
                     fmt(oc.mean_duration_months) + " vs " + fmt(paper);
        }
      }
    }
    const int pairs = 2 * builtin_scenario_count();
    c.check(shorter == pairs, "TITE shorter in " + std::to_string(shorter) + "/" + std::to_string(pairs) + " pairs");
    c.check(within == total, std::to_string(within) + "/" + std::to_string(total) +
                                 " within 25% of Table 2, worst " + fmt(100 * worst) + "% (" + worst_at + ")");
    tally(c);
  }
  {
    Criterion c("Table 3 pattern");
    for (double g : {0.0, 1.0, 2.0}) {
      SweepPoint point;
      point.g_p = g;
      for (int s : {1, 5, 10, 13}) {
        const auto [pp, scen] = apply_sweep(DesignParams::defaults(P), builtin_scenario(s), point);
        const auto pk = study.run(P, scen, &pp);
        const auto boin = study.run(B, scen, &pp);
        const std::string at = "gP=" + fmt(g, 0) + " S" + std::to_string(s);
        if (scen.obd)
          c.check(*pk.obd_selection_pct >= *boin.obd_selection_pct - 1.0,
                  at + " OBD " + fmt(*pk.obd_selection_pct) + " vs " + fmt(*boin.obd_selection_pct));
        else
          c.check(pk.early_termination_pct >= 80.0, at + " PKBOIN-12 ET " + fmt(pk.early_termination_pct));
      }
    }
    tally(c);
  }
  {
    Criterion c("Property suite");
    const std::vector<std::pair<std::string, std::string>> properties{
        {"TITE reduction", "complete data: TITE engine reduces to the complete-data engine"},
        {"PAVA brute force", "pava equals exhaustive search over monotone partitions"},
        {"beta tails vs quadrature", "beta tails agree with numerical integration of the density"},
        {"effective counts sum", "effective counts sum to the number of patients"},
        {"thread invariance", "replication results do not depend on the thread count"},
        {"step 3 vs BOIN12", "step 3 equals BOIN12 step 2 when no exposure exceeds the cutoff"},
    };
    for (const auto& [label, test_case] : properties) c.check(run_property(test_case), label);
    tally(c);
  }
  {
    Criterion c("Sensitivity knobs");
    struct Setting {
      std::string label;
      SweepPoint point;
      std::optional<UtilitySpec> utility;
    };
    std::vector<Setting> settings;
    for (double v : {0.1, 0.4}) {
      settings.push_back({"cv=" + fmt(v), {}, std::nullopt});
      settings.back().point.cv = v;
    }
    for (double v : {0.2, 0.4}) {
      settings.push_back({"rho=" + fmt(v), {}, std::nullopt});
      settings.back().point.rho_pq = v;
    }
    settings.push_back({"u=(100,0,100,0)", {}, UtilitySpec{100.0, 0.0, 100.0, 0.0}});
    for (auto w : {std::pair{45.0, 90.0}, std::pair{90.0, 120.0}}) {
      settings.push_back({"windows=" + fmt(w.first, 0) + ":" + fmt(w.second, 0), {}, std::nullopt});
      settings.back().point.windows = w;
    }
    for (const Setting& set : settings) {
      for (int s : {1, 13}) {
        try {
          auto [pp, scen] = apply_sweep(DesignParams::defaults(P), builtin_scenario(s), set.point);
          if (set.utility) {
            pp.utility = *set.utility;
            pp.refresh_derived();
          }
          const double pk = obd_or_et(study.run(P, scen, &pp));
          const double boin = obd_or_et(study.run(B, scen, &pp));
          c.check(pk >= boin - 3.0, set.label + " S" + std::to_string(s) + " " + fmt(pk) + " vs " + fmt(boin));
        } catch (const std::exception& e) {
          c.check(false, set.label + " S" + std::to_string(s) + " error: " + e.what());
        }
      }
    }
    tally(c);
  }

  std::cout << (failures == 0 ? "all criteria met" : std::to_string(failures) + " criteria not met") << std::endl;
  return failures == 0 ? 0 : 1;
}
