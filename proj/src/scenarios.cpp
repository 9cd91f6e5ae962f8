#include <stdexcept>
#include <string>

#include "pkboin/io.hpp"

namespace pkboin {

namespace {

struct Row {
  std::vector<double> tox;
  std::vector<double> eff;
  std::vector<double> pk;
  std::optional<int> obd;
};

// True toxicity, efficacy and exposure (AUC) per dose; target exposure 6000.
const std::vector<Row>& table() {
  static const std::vector<Row> rows = {
      {{0.01, 0.03, 0.05, 0.10, 0.18, 0.24}, {0.05, 0.10, 0.20, 0.30, 0.45, 0.55},
       {1000, 1500, 2500, 3600, 4800, 6500}, 6},
      {{0.03, 0.05, 0.10, 0.15, 0.20, 0.41}, {0.05, 0.10, 0.20, 0.40, 0.55, 0.65},
       {1000, 2000, 3500, 6000, 7500, 8500}, 5},
      {{0.20, 0.30, 0.40, 0.50, 0.60, 0.70}, {0.40, 0.55, 0.60, 0.65, 0.70, 0.75},
       {4500, 6000, 7000, 8000, 9000, 9500}, 2},
      {{0.30, 0.40, 0.50, 0.60, 0.70, 0.80}, {0.50, 0.55, 0.60, 0.65, 0.70, 0.75},
       {6500, 7000, 7500, 8000, 8500, 9000}, 1},
      {{0.03, 0.05, 0.10, 0.20, 0.30, 0.45}, {0.10, 0.30, 0.45, 0.55, 0.55, 0.55},
       {1000, 2000, 4000, 6000, 7500, 9000}, 4},
      {{0.10, 0.15, 0.21, 0.24, 0.27, 0.30}, {0.20, 0.30, 0.40, 0.55, 0.55, 0.55},
       {2000, 3000, 4000, 6000, 6500, 7000}, 4},
      {{0.10, 0.15, 0.21, 0.24, 0.27, 0.30}, {0.30, 0.40, 0.55, 0.55, 0.55, 0.55},
       {2000, 4000, 6000, 6500, 7000, 7500}, 3},
      {{0.10, 0.21, 0.24, 0.27, 0.30, 0.33}, {0.40, 0.55, 0.55, 0.55, 0.55, 0.55},
       {4000, 6000, 6500, 7000, 7500, 8000}, 2},
      {{0.20, 0.25, 0.30, 0.40, 0.45, 0.50}, {0.30, 0.50, 0.45, 0.40, 0.35, 0.30},
       {5000, 6500, 7500, 8000, 8500, 9000}, 2},
      {{0.10, 0.20, 0.30, 0.45, 0.50, 0.55}, {0.30, 0.40, 0.55, 0.60, 0.55, 0.45},
       {4000, 5000, 6000, 7000, 7500, 8000}, 3},
      {{0.03, 0.05, 0.10, 0.15, 0.20, 0.25}, {0.10, 0.30, 0.40, 0.50, 0.65, 0.55},
       {1500, 3000, 4500, 6000, 7500, 9000}, 5},
      {{0.05, 0.10, 0.20, 0.45, 0.55, 0.65}, {0.50, 0.50, 0.50, 0.50, 0.50, 0.50},
       {6000, 7000, 7500, 8000, 8500, 9000}, 1},
      {{0.01, 0.03, 0.05, 0.10, 0.12, 0.14}, {0.03, 0.05, 0.10, 0.20, 0.20, 0.20},
       {500, 900, 1500, 2600, 3600, 4600}, std::nullopt},
      {{0.45, 0.50, 0.55, 0.60, 0.65, 0.70}, {0.30, 0.40, 0.55, 0.55, 0.55, 0.55},
       {6000, 6500, 7000, 7500, 8000, 8500}, std::nullopt},
  };
  return rows;
}

}  // namespace

int builtin_scenario_count() { return static_cast<int>(table().size()); }

Scenario builtin_scenario(int id) {
  if (id < 1 || id > builtin_scenario_count())
    throw std::out_of_range("built-in scenario id must lie in 1.." +
                            std::to_string(builtin_scenario_count()) + ", got " + std::to_string(id));
  const Row& row = table()[id - 1];
  Scenario s;
  s.name = "scenario " + std::to_string(id);
  s.tox = row.tox;
  s.eff = row.eff;
  s.pk = row.pk;
  s.obd = row.obd;
  return s;
}

}  // namespace pkboin
