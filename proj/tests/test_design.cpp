#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "pkboin/design.hpp"

using namespace pkboin;

namespace {

DoseState dose(std::array<int, 4> counts, std::vector<double> pk = {}) {
  DoseState s;
  s.counts = counts;
  s.pk_samples = std::move(pk);
  s.ever_used = s.n() > 0;
  return s;
}

std::vector<double> repeat(double v, int n) { return std::vector<double>(n, v); }

std::vector<DoseState> untried(int D) { return std::vector<DoseState>(D); }

// Random per-dose counts, PK samples in [pk_lo, pk_hi], a few sticky flags,
// and a treated, non-eliminated current dose.
struct RandomState {
  std::vector<DoseState> states;
  int current = 1;
};

RandomState random_state(std::mt19937_64& rng, double pk_lo, double pk_hi) {
  const int D = 6;
  std::uniform_int_distribution<int> top(0, D - 1);
  std::uniform_int_distribution<int> cell(0, 4);
  std::uniform_real_distribution<double> pk(pk_lo, pk_hi);
  std::bernoulli_distribution rare(0.1);
  for (;;) {
    RandomState r;
    r.states.resize(D);
    const int highest = top(rng);
    for (int d = 0; d <= highest; ++d) {
      DoseState& s = r.states[d];
      for (int& c : s.counts) c = cell(rng);
      for (int k = 0; k < s.n(); ++k) s.pk_samples.push_back(pk(rng));
      s.ever_used = s.n() > 0;
      s.eliminated_safety = rare(rng);
      s.eliminated_efficacy = rare(rng);
    }
    std::vector<int> options;
    for (int d = 1; d <= D; ++d)
      if (r.states[d - 1].n() > 0 && !r.states[d - 1].eliminated()) options.push_back(d);
    if (options.empty()) continue;
    r.current = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
    return r;
  }
}

DesignParams params_for(DesignKind kind) { return DesignParams::defaults(kind, 6); }

}  // namespace

TEST_CASE("observed rates") {
  const ObservedRates r = observed_rates(dose({1, 1, 1, 0}));
  CHECK(*r.tox == doctest::Approx(1.0 / 3));
  CHECK(*r.eff == doctest::Approx(2.0 / 3));
  CHECK_FALSE(observed_rates(DoseState{}).tox);
  CHECK_FALSE(observed_rates(DoseState{}).eff);
  CHECK(*observed_rates(dose({0, 0, 0, 0}, {5000, 7000})).pk_mean == 6000.0);
}

TEST_CASE("lowest dose with exposure above the cutoff") {
  const DesignParams p = params_for(DesignKind::pkboin12);
  CHECK(p.pk.cutoff == 4800.0);
  std::vector<DoseState> s = untried(6);
  s[0] = dose({3, 0, 0, 0}, repeat(1000, 3));
  s[1] = dose({3, 0, 0, 0}, repeat(2000, 3));
  s[2] = dose({3, 0, 0, 0}, repeat(5000, 3));
  s[3] = dose({3, 0, 0, 0}, repeat(6500, 3));
  CHECK(d_pk_min(complete_evidence(s, p), p.pk.cutoff) == 3);
  s[2].pk_samples = repeat(4800, 3);
  CHECK(d_pk_min(complete_evidence(s, p), p.pk.cutoff) == 4);
  s[3].pk_samples = repeat(100, 3);
  CHECK_FALSE(d_pk_min(complete_evidence(s, p), p.pk.cutoff));
  s[0].pk_samples = repeat(9000, 3);
  CHECK(d_pk_min(complete_evidence(s, p), p.pk.cutoff) == 1);
}

TEST_CASE("desirability tail") {
  const UtilitySpec u;
  CHECK(desirability(DoseState{}, u, 70.5) == doctest::Approx(0.295).epsilon(1e-12));
  CHECK(desirability(dose({1, 0, 0, 0}), u, 70.5) == doctest::Approx(1 - 0.705 * 0.705).epsilon(1e-12));
  CHECK(desirability(dose({0, 0, 0, 3}), u, 70.5) == doctest::Approx(std::pow(0.295, 4)).epsilon(1e-12));
}

TEST_CASE("PKBOIN-12 step 4(a): de-escalate to d* when exposure is adequate") {
  const DesignParams p = params_for(DesignKind::pkboin12);
  std::vector<DoseState> s = untried(6);
  s[0] = dose({0, 3, 0, 0}, repeat(1000, 3));
  s[1] = dose({1, 2, 0, 0}, repeat(2000, 3));
  s[2] = dose({2, 1, 0, 0}, repeat(5000, 3));
  s[3] = dose({2, 1, 2, 1}, repeat(6500, 6));
  const Decision d = next_dose(complete_evidence(s, p), 4, p);
  CHECK(d.action == Action::treat);
  CHECK(d.d_pk_min == 3);
  CHECK(d.admissible == std::vector<int>{3});
  CHECK(d.dose == 3);
  CHECK(d.rules.back().rfind("step4a", 0) == 0);
}

TEST_CASE("PKBOIN-12 step 4 widens the admissible set down to d_PK,min") {
  const DesignParams p = params_for(DesignKind::pkboin12);
  std::vector<DoseState> s = untried(6);
  s[0] = dose({0, 3, 0, 0}, repeat(1000, 3));
  s[1] = dose({1, 2, 0, 0}, repeat(5000, 3));
  s[2] = dose({2, 1, 0, 0}, repeat(5500, 3));
  s[3] = dose({1, 1, 2, 2}, repeat(6500, 6));
  const Decision d = next_dose(complete_evidence(s, p), 4, p);
  CHECK(d.d_pk_min == 2);
  CHECK(d.admissible == std::vector<int>{2, 3});
  CHECK(d.dose == 3);
}

TEST_CASE("BOIN12 step 2(d): argmax desirability over d-1, d, d+1") {
  const DesignParams p = params_for(DesignKind::boin12);
  std::vector<DoseState> s = untried(6);
  s[0] = dose({0, 3, 0, 0});
  s[1] = dose({2, 1, 0, 0});
  const auto ev = complete_evidence(s, p);
  const Decision d = next_dose(ev, 2, p);
  CHECK(d.doses[0].desirability < d.doses[2].desirability);
  CHECK(d.doses[2].desirability == doctest::Approx(0.295));
  CHECK(d.doses[1].desirability > d.doses[2].desirability);
  CHECK(d.admissible == std::vector<int>{1, 2, 3});
  CHECK(d.dose == 2);
  CHECK(d.rules.back().rfind("step2d", 0) == 0);
}

TEST_CASE("PKBOIN-12 at dose 1 with excess toxicity stays at dose 1") {
  const DesignParams p = params_for(DesignKind::pkboin12);
  std::vector<DoseState> s = untried(6);
  s[0] = dose({0, 1, 1, 1}, repeat(1000, 3));
  const Decision d = next_dose(complete_evidence(s, p), 1, p);
  CHECK(d.action == Action::treat);
  CHECK(d.dose == 1);
  CHECK(d.rules.front().rfind("step3a", 0) == 0);
}

TEST_CASE("BOIN12 step 2(c)(i): n >= N* keeps the choice within d-1 and d") {
  const DesignParams p = params_for(DesignKind::boin12);
  std::vector<DoseState> s = untried(6);
  s[1] = dose({1, 2, 0, 0});
  s[2] = dose({2, 2, 1, 1});
  s[3] = dose({3, 0, 0, 0});
  const Decision d = next_dose(complete_evidence(s, p), 3, p);
  CHECK(d.admissible == std::vector<int>{2, 3});
  CHECK(d.rules.back().rfind("step2c(i)", 0) == 0);
  s[2] = dose({2, 1, 1, 0});
  const Decision small = next_dose(complete_evidence(s, p), 3, p);
  CHECK(small.admissible == std::vector<int>{2, 3, 4});
}

TEST_CASE("step (b): escalate once n reaches the threshold and the next dose is unused") {
  const DesignParams p = params_for(DesignKind::boin12);
  std::vector<DoseState> s = untried(6);
  s[0] = dose({3, 0, 0, 0});
  s[1] = dose({3, 3, 0, 3});
  const Decision d = next_dose(complete_evidence(s, p), 2, p);
  CHECK(d.admissible == std::vector<int>{3});
  CHECK(d.dose == 3);
  s[2] = dose({1, 2, 0, 0});
  CHECK(next_dose(complete_evidence(s, p), 2, p).admissible == std::vector<int>{1, 2});
}

TEST_CASE("step 1: untreated current dose is used as is") {
  const DesignParams p = params_for(DesignKind::pkboin12);
  const Decision d = next_dose(complete_evidence(untried(6), p), 1, p);
  CHECK(d.action == Action::treat);
  CHECK(d.dose == 1);
}

TEST_CASE("boundary clamps and fallbacks") {
  std::vector<DoseState> s = untried(3);
  const DesignParams p3 = DesignParams::defaults(DesignKind::boin12, 3);
  s[2] = dose({3, 0, 0, 0});
  s[0].ever_used = s[1].ever_used = true;
  CHECK(next_dose(complete_evidence(s, p3), 3, p3).admissible == std::vector<int>{2, 3});

  s = untried(3);
  s[0] = dose({2, 1, 0, 0});
  s[1] = dose({0, 1, 1, 1});
  s[0].eliminated_efficacy = true;
  const Decision down = next_dose(complete_evidence(s, p3), 2, p3);
  CHECK(down.admissible.empty());
  CHECK(down.dose == 2);
  CHECK(down.rules.back() == "fallback: stay at current dose");

  s[1].eliminated_efficacy = true;
  const Decision up = next_dose(complete_evidence(s, p3), 2, p3);
  CHECK(up.dose == 3);
  CHECK(up.rules.back() == "fallback: lowest available dose above");

  s[2].eliminated_safety = true;
  const Decision none = next_dose(complete_evidence(s, p3), 2, p3);
  CHECK(none.action == Action::terminate);
  CHECK(none.dose == 0);
  CHECK_THROWS_AS(next_dose(complete_evidence(s, p3), 4, p3), std::invalid_argument);
}

TEST_CASE("tie-breaking prefers fewer patients, then the lower dose") {
  const DesignParams p = params_for(DesignKind::boin12);
  std::vector<DoseState> s = untried(6);
  s[1] = dose({0, 2, 0, 1});
  const Decision d = next_dose(complete_evidence(s, p), 2, p);
  CHECK(d.admissible == std::vector<int>{1, 2, 3});
  CHECK(d.doses[0].desirability == d.doses[2].desirability);
  CHECK(d.doses[1].desirability < d.doses[0].desirability);
  CHECK(d.dose == 1);
}

TEST_CASE("safety elimination removes the dose and everything above") {
  const DesignParams p = params_for(DesignKind::boin12);
  std::vector<DoseState> s = untried(6);
  s[0] = dose({3, 0, 0, 0});
  s[1] = dose({0, 0, 2, 1});
  const Decision d = decide(s, 2, p);
  CHECK(*d.doses[1].safety_tail == doctest::Approx(1 - std::pow(0.35, 4)).epsilon(1e-12));
  CHECK_FALSE(s[0].eliminated());
  for (int k = 1; k < 6; ++k) CHECK(s[k].eliminated_safety);
  CHECK(d.dose == 1);
}

TEST_CASE("efficacy elimination removes only that dose") {
  const DesignParams p = params_for(DesignKind::boin12);
  std::vector<DoseState> s = untried(6);
  s[0] = dose({1, 2, 0, 0});
  s[1] = dose({0, 9, 0, 0});
  const Decision d = decide(s, 2, p);
  CHECK(*d.doses[1].efficacy_tail == doctest::Approx(1 - std::pow(0.75, 10)).epsilon(1e-12));
  CHECK(s[1].eliminated_efficacy);
  CHECK_FALSE(s[0].eliminated());
  CHECK_FALSE(s[2].eliminated());
  CHECK(d.dose != 2);
}

TEST_CASE("no safety or efficacy elimination below three patients") {
  const DesignParams p = params_for(DesignKind::boin12);
  std::vector<DoseState> s = untried(6);
  s[0] = dose({0, 0, 0, 2});
  decide(s, 1, p);
  CHECK_FALSE(s[0].eliminated());
}

TEST_CASE("PK elimination rule") {
  const DesignParams p = params_for(DesignKind::pkboin12);
  SUBCASE("at the highest dose all doses go and the trial terminates") {
    std::vector<DoseState> s = untried(6);
    for (int k = 0; k < 5; ++k) s[k] = dose({1, 2, 0, 0}, repeat(500.0 * (k + 1), 3));
    s[5] = dose({2, 4, 0, 0}, {2900, 3000, 3100, 2950, 3050, 3000});
    const Decision d = decide(s, 6, p);
    CHECK(d.action == Action::terminate);
    for (const DoseState& x : s) CHECK(x.eliminated());
  }
  SUBCASE("in the middle the lowest remaining lower dose goes") {
    std::vector<DoseState> s = untried(6);
    s[0] = dose({1, 2, 0, 0}, repeat(1000, 3));
    s[0].eliminated_efficacy = true;
    s[1] = dose({1, 2, 0, 0}, repeat(1500, 3));
    s[2] = dose({1, 2, 0, 0}, repeat(2000, 3));
    s[3] = dose({2, 4, 0, 0}, {2900, 3000, 3100, 2950, 3050, 3000});
    const Decision d = decide(s, 4, p);
    CHECK(s[1].eliminated_pk);
    CHECK_FALSE(s[2].eliminated());
    CHECK_FALSE(s[0].eliminated_pk);
    CHECK(d.action == Action::treat);
  }
  SUBCASE("at dose 1 the rule takes no action") {
    std::vector<DoseState> s = untried(6);
    s[0] = dose({2, 4, 0, 0}, {2900, 3000, 3100, 2950, 3050, 3000});
    const Decision d = decide(s, 1, p);
    for (const DoseState& x : s) CHECK_FALSE(x.eliminated());
    CHECK(std::count(d.rules.begin(), d.rules.end(), "pk: rule undefined at dose 1; no action") == 1);
  }
  SUBCASE("needs six PK values") {
    std::vector<DoseState> s = untried(6);
    s[0] = dose({1, 2, 0, 0}, repeat(1000, 3));
    s[1] = dose({2, 3, 0, 0}, {2900, 3000, 3100, 2950, 3050});
    decide(s, 2, p);
    CHECK_FALSE(s[0].eliminated());
  }
  SUBCASE("BOIN12 ignores PK") {
    const DesignParams b = params_for(DesignKind::boin12);
    std::vector<DoseState> s = untried(6);
    s[5] = dose({2, 4, 0, 0}, {2900, 3000, 3100, 2950, 3050, 3000});
    for (int k = 0; k < 5; ++k) s[k].ever_used = true;
    CHECK(decide(s, 6, b).action == Action::treat);
  }
}

TEST_CASE("final selection") {
  SUBCASE("MTD by isotonic toxicity") {
    const DesignParams p = params_for(DesignKind::boin12);
    std::vector<DoseState> s = untried(6);
    s[0] = dose({1, 2, 0, 0});
    s[1] = dose({3, 6, 1, 0});
    s[2] = dose({2, 0, 1, 0});
    s[3] = dose({1, 0, 1, 0});
    const ObdResult r = select_obd(s, p);
    CHECK(r.mtd == 3);
    CHECK(*r.iso_tox[2] == doctest::Approx(1.0 / 3));
    CHECK_FALSE(r.iso_tox[4]);
    CHECK(r.selected == 3);
    CHECK(*r.utilities[2] == doctest::Approx((1 + 2.6) / 5.0));
  }
  SUBCASE("single tried dose") {
    const DesignParams p = params_for(DesignKind::boin12);
    std::vector<DoseState> s = untried(6);
    s[0] = dose({1, 2, 0, 0});
    CHECK(select_obd(s, p).selected == 1);
    s[0].eliminated_efficacy = true;
    CHECK_FALSE(select_obd(s, p).selected);
  }
  SUBCASE("PK floor above the MTD selects nothing") {
    const DesignParams p = params_for(DesignKind::pkboin12);
    std::vector<DoseState> s = untried(6);
    s[0] = dose({0, 1, 1, 1}, repeat(1000, 3));
    s[1] = dose({0, 0, 2, 1}, repeat(6000, 3));
    const ObdResult r = select_obd(s, p);
    CHECK(r.mtd == 1);
    CHECK(r.pk_min == 2);
    CHECK_FALSE(r.selected);
  }
  SUBCASE("PK floor may sit below the target") {
    const DesignParams p = params_for(DesignKind::pkboin12);
    std::vector<DoseState> s = untried(6);
    s[0] = dose({1, 2, 0, 0}, repeat(3000, 3));
    s[1] = dose({2, 1, 0, 0}, repeat(5500, 3));
    s[2] = dose({0, 2, 1, 0}, repeat(8000, 3));
    const ObdResult r = select_obd(s, p);
    CHECK(r.pk_min == 2);
    CHECK(r.mtd == 3);
    CHECK(r.selected == 2);
  }
  SUBCASE("MTD ties prefer the higher dose below target") {
    DesignParams p = params_for(DesignKind::boin12);
    p.target_tox = 0.25;
    p.refresh_derived();
    std::vector<DoseState> s = untried(6);
    s[0] = dose({2, 0, 0, 0});
    s[1] = dose({2, 0, 0, 0});
    s[2] = dose({1, 0, 1, 0});
    CHECK(select_obd(s, p).mtd == 2);
  }
  SUBCASE("nothing tried") {
    CHECK_FALSE(select_obd(untried(6), params_for(DesignKind::boin12)).selected);
  }
}

TEST_CASE("step 3 equals BOIN12 step 2 when no exposure exceeds the cutoff") {
  std::mt19937_64 rng(20240601);
  const DesignParams boin = params_for(DesignKind::boin12);
  const DesignParams pk = params_for(DesignKind::pkboin12);
  for (int i = 0; i < 1000; ++i) {
    const RandomState r = random_state(rng, 100.0, pk.pk.cutoff);
    const Decision a = next_dose(complete_evidence(r.states, boin), r.current, boin);
    const Decision b = next_dose(complete_evidence(r.states, pk), r.current, pk);
    REQUIRE(a.action == b.action);
    REQUIRE(a.dose == b.dose);
    REQUIRE(a.admissible == b.admissible);
  }
}

TEST_CASE("next_dose invariants on random states") {
  std::mt19937_64 rng(7);
  for (DesignKind kind : {DesignKind::boin12, DesignKind::pkboin12}) {
    const DesignParams p = params_for(kind);
    for (int i = 0; i < 1000; ++i) {
      const RandomState r = random_state(rng, 500.0, 9000.0);
      const auto ev = complete_evidence(r.states, p);
      const Decision d = next_dose(ev, r.current, p);
      if (d.action != Action::treat) continue;
      REQUIRE(d.dose >= 1);
      REQUIRE(d.dose <= 6);
      REQUIRE_FALSE(r.states[d.dose - 1].eliminated());
      if (ev[r.current - 1].tox_rate >= p.boundaries.lambda2) REQUIRE(d.dose <= r.current);
    }
  }
}

TEST_CASE("eliminations are monotone in toxicity and contiguous above") {
  std::mt19937_64 rng(11);
  const DesignParams p = params_for(DesignKind::pkboin12);
  for (int i = 0; i < 1000; ++i) {
    RandomState r = random_state(rng, 500.0, 9000.0);
    for (DoseState& s : r.states) s.eliminated_safety = s.eliminated_efficacy = false;
    std::vector<DoseState> base = r.states;
    std::vector<DoseState> more = r.states;
    const int d = std::uniform_int_distribution<int>(0, 5)(rng);
    more[d].counts[3] += 1;
    more[d].ever_used = true;
    apply_eliminations(base, complete_evidence(base, p), r.current, p);
    apply_eliminations(more, complete_evidence(more, p), r.current, p);
    for (int k = 0; k < 6; ++k) {
      if (base[k].eliminated_safety) REQUIRE(more[k].eliminated_safety);
      if (k > 0 && more[k - 1].eliminated_safety) REQUIRE(more[k].eliminated_safety);
    }
  }
}

TEST_CASE("selection lies in the final admissible range") {
  std::mt19937_64 rng(13);
  const DesignParams p = params_for(DesignKind::pkboin12);
  for (int i = 0; i < 1000; ++i) {
    const RandomState r = random_state(rng, 500.0, 9000.0);
    const ObdResult o = select_obd(r.states, p);
    if (!o.selected) continue;
    const int s = *o.selected;
    REQUIRE(r.states[s - 1].n() > 0);
    REQUIRE_FALSE(r.states[s - 1].eliminated());
    REQUIRE(s <= *o.mtd);
    REQUIRE(s >= *o.pk_min);
  }
}

TEST_CASE("desirability ranking is unchanged when utilities and benchmark scale together") {
  std::mt19937_64 rng(17);
  const UtilitySpec u;
  const UtilitySpec half{50, 20, 30, 0};
  for (int i = 0; i < 200; ++i) {
    const RandomState r = random_state(rng, 500.0, 9000.0);
    for (int a = 0; a < 6; ++a) {
      for (int b = 0; b < 6; ++b) {
        const double x = desirability(r.states[a], u, 70.5);
        const double y = desirability(r.states[b], u, 70.5);
        const double xs = desirability(r.states[a], half, 35.25);
        const double ys = desirability(r.states[b], half, 35.25);
        if (r.states[a].n() == r.states[b].n() && x < y) REQUIRE(xs < ys);
      }
    }
  }
}

TEST_CASE("parameter validation") {
  DesignParams p = params_for(DesignKind::pkboin12);
  CHECK_NOTHROW(p.validate());
  p.utility_benchmark = 60;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = params_for(DesignKind::pkboin12);
  p.max_n = 44;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK(parse_design_kind("pkboin12") == DesignKind::pkboin12);
  CHECK(parse_design_kind("TITE-BOIN12") == DesignKind::tite_boin12);
  CHECK_THROWS_WITH_AS(parse_design_kind("CRM"),
                       doctest::Contains("BOIN12, PKBOIN-12, TITE-BOIN12, TITE-PKBOIN-12"),
                       std::invalid_argument);
}
