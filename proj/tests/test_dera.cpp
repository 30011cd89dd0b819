#include <doctest.h>

#include <cmath>
#include <random>

#include "netacc/dera.hpp"
#include "test_support.hpp"

using namespace netacc;
using netacc::testing::uniform;

namespace {

const UtilityFn kU{0.65, 0.2};
const NemTariff kTariff{0.06, 0.03, 0.0};

// Single-prosumer portfolio working directly in kWh (conversion factor 1).
DeraPortfolio single(const UtilityFn& u, const ProsumerParams& p, double zeta,
                     double lmp, const NemTariff& tariff = kTariff) {
  DeraPortfolio port;
  port.id = "d";
  port.prosumers.push_back({2, u, p, 1.0});
  port.zeta = zeta;
  port.lmp = lmp;
  port.tariff = tariff;
  port.kwh_per_mw = 1.0;
  return port;
}

struct RandomInstance {
  DeraPortfolio port;
  std::vector<AccessInterval> access;
};

RandomInstance random_instance(std::mt19937_64& rng, int n_buses = 1) {
  RandomInstance inst;
  inst.port.id = "rnd";
  inst.port.zeta = 1.0 + uniform(rng, 1e-6, 0.1);
  inst.port.lmp = uniform(rng, 0.01, 0.2);
  inst.port.tariff.pi_minus = uniform(rng, 0.0, 0.05);
  inst.port.tariff.pi_plus = inst.port.tariff.pi_minus + uniform(rng, 0.0, 0.08);
  inst.port.tariff.pi_zero = uniform(rng, 0.0, 0.1);
  inst.port.kwh_per_mw = 1.0;
  for (int b = 0; b < n_buses; ++b) {
    ProsumerRecord rec;
    rec.bus = 2 + b;
    rec.utility = {uniform(rng, 0.1, 2.0), uniform(rng, 0.05, 1.0)};
    rec.params.d_min = uniform(rng, 0.0, 1.0);
    rec.params.r = rec.params.d_min + uniform(rng, 0.0, 14.0);
    AccessInterval iv{-uniform(rng, 0.0, 5.0), uniform(rng, 0.0, 5.0)};
    rec.params.d_max =
        std::max(rec.params.d_min + uniform(rng, 0.1, 9.0),
                 rec.params.r - iv.c_hi_mw + uniform(rng, 0.0, 1.0));
    rec.mass = 1.0;
    inst.port.prosumers.push_back(rec);
    inst.access.push_back(iv);
  }
  return inst;
}

}  // namespace

TEST_CASE("closed form: injection cap binds for a producer") {
  // r = 5.2, access +-0.1 kWh: the cap pins d at 5.1.
  const ProsumerParams p{0.0, 10.0, 5.2};
  const ProsumerDecision d =
      optimal_prosumer_decision(kU, p, kTariff, 1.003, 0.03, -0.1, 0.1);
  CHECK(d.d_star == doctest::Approx(5.1));
  CHECK(d.phi_hi < 0.0);
  CHECK(d.phi_lo == 0.0);

  const DeraPortfolio port = single(kU, p, 1.003, 0.03);
  const AccessInterval access[] = {{-0.1, 0.1}};
  const double oracle = oracle_surplus(port, access);
  const DeraDecision full = optimal_decision(port, access);
  CHECK(std::abs(full.phi_total - oracle) <= 1e-8);
}

TEST_CASE("closed form: withdrawal cap binds for a consumer") {
  const ProsumerParams p{0.0, 10.0, 0.0};
  const ProsumerDecision d =
      optimal_prosumer_decision(kU, p, kTariff, 1.003, 0.03, -0.1, 0.1);
  CHECK(d.d_star == doctest::Approx(0.1));
  CHECK(d.phi_lo < 0.0);
  CHECK(d.phi_hi == 0.0);

  const DeraPortfolio port = single(kU, p, 1.003, 0.03);
  const AccessInterval access[] = {{-0.1, 0.1}};
  CHECK(optimal_decision(port, access).phi_total ==
        doctest::Approx(oracle_surplus(port, access)).epsilon(1e-8));
}

TEST_CASE("collapsed access forces net-zero exchange") {
  const ProsumerParams p{0.0, 10.0, 4.0};
  const ProsumerDecision d =
      optimal_prosumer_decision(kU, p, kTariff, 1.01, 0.03, 0.0, 0.0);
  CHECK(d.d_star == doctest::Approx(4.0));
  // surplus = U(r) - zeta S_NEM with no wholesale exchange
  const double expected = kU.value(4.0) - 1.01 * nem_surplus(kU, kTariff, p);
  CHECK(d.surplus == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("infeasible access is reported") {
  const ProsumerParams p{0.0, 5.0, 10.0};  // r - c_hi = 8 > d_max
  CHECK_THROWS_WITH_AS(
      optimal_prosumer_decision(kU, p, kTariff, 1.003, 0.03, -1.0, 2.0),
      doctest::Contains("infeasible"), std::invalid_argument);
}

TEST_CASE("closed form equals the ternary-search oracle on random instances") {
  std::mt19937_64 rng(4242);
  for (int t = 0; t < 250; ++t) {
    const RandomInstance inst = random_instance(rng);
    const double oracle = oracle_surplus(inst.port, inst.access);
    const DeraDecision dec = optimal_decision(inst.port, inst.access);
    CHECK(std::abs(dec.phi_total - oracle) <= 1e-7);
  }
}

TEST_CASE("decomposition identities: exactness, exclusivity, participation") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 200; ++t) {
    const RandomInstance inst = random_instance(rng);
    const DeraDecision dec = optimal_decision(inst.port, inst.access);
    const ProsumerRecord& rec = inst.port.prosumers[0];
    const ProsumerDecision& pd = dec.per_bus[0].per_prosumer;
    const double s_nem = nem_surplus(rec.utility, inst.port.tariff, rec.params);

    // phi decomposition reproduces the direct objective value.
    const double direct = pd.omega - inst.port.lmp * (pd.d_star - rec.params.r);
    const double decomposed = pd.phi_lo + pd.phi_hi + pd.h - inst.port.zeta * s_nem;
    CHECK(std::abs(direct - decomposed) <= 1e-10);

    // At most one branch active (by value).
    CHECK(pd.phi_lo * pd.phi_hi == 0.0);

    // The payment leaves the prosumer exactly zeta times the NEM surplus.
    CHECK(rec.utility.value(pd.d_star) - pd.omega ==
          doctest::Approx(inst.port.zeta * s_nem).epsilon(1e-12));
  }
}

TEST_CASE("surplus is nondecreasing as the access interval widens") {
  std::mt19937_64 rng(88);
  for (int t = 0; t < 60; ++t) {
    RandomInstance inst = random_instance(rng);
    const double base = optimal_decision(inst.port, inst.access).phi_total;
    RandomInstance wider = inst;
    wider.access[0].c_hi_mw += uniform(rng, 0.0, 2.0);
    CHECK(optimal_decision(wider.port, wider.access).phi_total >= base - 1e-12);
    wider.access[0].c_lo_mw -= uniform(rng, 0.0, 2.0);
    CHECK(optimal_decision(wider.port, wider.access).phi_total >= base - 1e-12);
  }
}

TEST_CASE("oracle at zeta -> 1+ reduces to the competitive limit") {
  const ProsumerParams p{0.0, 10.0, 3.0};
  const DeraPortfolio port = single(kU, p, 1.0 + 1e-9, 0.03);
  const AccessInterval access[] = {{0.0, 0.0}};
  const double s = oracle_surplus(port, access);
  CHECK(s == doctest::Approx(kU.value(3.0) - nem_surplus(kU, kTariff, p) - 0.0)
                 .epsilon(1e-6));
}

TEST_CASE("bid curves vanish when r sits at the unconstrained optimum") {
  const ProsumerParams p{0.0, 25.0, 3.1};  // V^{-1}(0.03) = 3.1
  DeraPortfolio port = single(kU, p, 1.003, 0.03);
  port.kwh_per_mw = 1000.0;
  const auto curves = bid_curves(port, {-0.01, 0.01}, 10);
  REQUIRE(curves.size() == 2);
  for (const BidCurve& c : curves) {
    CHECK(c.value_at_zero == doctest::Approx(0.0).epsilon(1e-12));
    for (const auto& bp : c.breakpoints) {
      CHECK(bp.marginal_usd_per_kwh == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("injection marginal matches a finite difference of the oracle") {
  // r = 15.2 kWh: V(r - c) = 0 at c = 5 kWh, so the marginal is exactly the LMP.
  const ProsumerParams p{0.0, 25.0, 15.2};
  DeraPortfolio port = single(kU, p, 1.003, 0.03);
  port.kwh_per_mw = 1000.0;
  const auto curves = bid_curves(port, {-0.01, 0.01}, 10);
  const BidCurve& inj = curves[0];
  REQUIRE(inj.direction == Direction::Injection);
  const double marginal = pwl_marginal_at(inj, 0.005);
  CHECK(marginal == doctest::Approx(0.03).epsilon(1e-12));

  DeraPortfolio kwh_port = single(kU, p, 1.003, 0.03);  // factor 1: kWh access
  const double h = 1e-6;
  const AccessInterval up[] = {{0.0, 5.0 + h}};
  const AccessInterval dn[] = {{0.0, 5.0 - h}};
  const double fd =
      (oracle_surplus(kwh_port, up) - oracle_surplus(kwh_port, dn)) / (2 * h);
  CHECK(marginal == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("bid prices order with the DG level in both directions") {
  const double dg[] = {0.2, 5.2, 10.2, 15.2};
  std::vector<BidCurve> wdr, inj;
  for (double r : dg) {
    DeraPortfolio port = single(kU, {0.0, 25.0, r}, 1.003, 0.03);
    port.kwh_per_mw = 1000.0;
    const auto curves = bid_curves(port, {-0.02, 0.02}, 10);
    inj.push_back(curves[0]);
    wdr.push_back(curves[1]);
  }
  for (double c = 0.0005; c <= 0.02; c += 0.0005) {
    for (int k = 0; k + 1 < 4; ++k) {
      CHECK(pwl_marginal_at(wdr[k], c) >= pwl_marginal_at(wdr[k + 1], c) - 1e-12);
      CHECK(pwl_marginal_at(inj[k], c) <= pwl_marginal_at(inj[k + 1], c) + 1e-12);
    }
  }
}

TEST_CASE("bid curve marginals are nonincreasing and capacities bounded") {
  std::mt19937_64 rng(3131);
  for (int t = 0; t < 40; ++t) {
    DeraPortfolio port = single({uniform(rng, 0.2, 1.5), uniform(rng, 0.05, 0.8)},
                                {0.0, 30.0, uniform(rng, 0.0, 20.0)},
                                1.0 + uniform(rng, 1e-4, 0.05),
                                uniform(rng, 0.01, 0.2));
    port.kwh_per_mw = 1000.0;
    const AccessInterval cmax{-uniform(rng, 0.001, 0.05), uniform(rng, 0.001, 0.05)};
    for (const BidCurve& c : bid_curves(port, cmax, 8)) {
      double prev = 1e300;
      for (const auto& bp : c.breakpoints) {
        CHECK(bp.marginal_usd_per_kwh >= -1e-15);
        CHECK(bp.marginal_usd_per_kwh <= prev + 1e-12);
        prev = bp.marginal_usd_per_kwh;
        CHECK(bp.capacity_mw <=
              (c.direction == Direction::Injection ? cmax.c_hi_mw
                                                   : -cmax.c_lo_mw) + 1e-12);
      }
    }
  }
}

TEST_CASE("pwl benefit value: zero at zero, rectangle, concavity") {
  BidCurve curve;
  curve.bus = 2;
  curve.kwh_per_mw = 1000.0;
  curve.breakpoints = {{0.004, 0.05}, {0.01, 0.02}};
  CHECK(pwl_benefit_value(curve, 0.0) == 0.0);
  CHECK(pwl_benefit_value(curve, 0.003) == doctest::Approx(0.05 * 0.003 * 1000));
  CHECK(pwl_benefit_value(curve, 0.01) ==
        doctest::Approx(0.05 * 0.004 * 1000 + 0.02 * 0.006 * 1000));
  CHECK_THROWS_AS(pwl_benefit_value(curve, 0.02), std::invalid_argument);

  // Concavity: value at the midpoint dominates the chord.
  std::mt19937_64 rng(55);
  for (int t = 0; t < 30; ++t) {
    const double a = uniform(rng, 0.0, 0.01);
    const double b = uniform(rng, 0.0, 0.01);
    const double mid = 0.5 * (a + b);
    const double chord =
        0.5 * (pwl_benefit_value(curve, a) + pwl_benefit_value(curve, b));
    CHECK(pwl_benefit_value(curve, mid) >= chord - 1e-12);
  }
}

TEST_CASE("mass-aggregated portfolios scale the closed form consistently") {
  // k identical prosumers sharing k times the access equal k independent ones.
  const ProsumerParams p{0.0, 12.0, 6.0};
  DeraPortfolio one = single(kU, p, 1.01, 0.04);
  DeraPortfolio many = one;
  many.prosumers[0].mass = 7.0;
  const AccessInterval base[] = {{-0.4, 0.9}};
  const AccessInterval scaled[] = {{-0.4 * 7, 0.9 * 7}};
  CHECK(optimal_decision(many, scaled).phi_total ==
        doctest::Approx(7.0 * optimal_decision(one, base).phi_total)
            .epsilon(1e-12));
  CHECK(oracle_surplus(many, scaled) ==
        doctest::Approx(7.0 * oracle_surplus(one, base)).epsilon(1e-9));
}
