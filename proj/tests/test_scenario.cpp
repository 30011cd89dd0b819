#include <doctest.h>

#include <string>

#include "netacc/json_io.hpp"
#include "netacc/scenario.hpp"

using namespace netacc;
using nlohmann::json;

namespace {

const std::string kData = NETACC_DATA_DIR;

Scenario load_small() {
  return scenario_from_json(
      json::parse(read_text_file(kData + "/scenario_small.json")), kData);
}

}  // namespace

TEST_CASE("scenario file loads with nested DERA configs") {
  const Scenario sc = load_small();
  CHECK(sc.deras.size() == 2);
  CHECK(sc.deras[0].id == "alpha");
  CHECK(sc.deras[0].serve_all_buses);
  CHECK(sc.deras[1].buses_served == std::vector<int>{2, 3, 5});
  CHECK(sc.dso.a_coeff == doctest::Approx(-0.096));
  CHECK(sc.households == doctest::Approx(2.0));
}

TEST_CASE("case141 fixture parses to a radial 141-bus network") {
  const RadialNetwork net =
      parse_matpower_case(read_text_file(kData + "/case141.m"));
  CHECK(net.bus_count() == 141);
  CHECK(net.line_count() == 140);
  CHECK(net.base_mva == doctest::Approx(100.0));
  CHECK_NOTHROW(net.validate());
  // The first six branches hang consecutively below the substation.
  for (int l = 0; l < 6; ++l) {
    CHECK(net.lines[l].to_bus == l + 1);
    CHECK(net.lines[l].from_bus == l + 2);
  }
}

TEST_CASE("case5 fixture reproduces the 5-bus topology") {
  const RadialNetwork net =
      parse_matpower_case(read_text_file(kData + "/case5.m"));
  REQUIRE(net.bus_count() == 5);
  const SensitivityBundle b = build_sensitivity(net);
  Eigen::MatrixXd expected(4, 4);
  expected << 1, 1, 1, 1,
              0, 1, 1, 1,
              0, 1, 0, 0,
              0, 0, 1, 0;
  CHECK((b.shift_reduced - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adoption mask is deterministic in the seed") {
  const RadialNetwork net =
      parse_matpower_case(read_text_file(kData + "/case5.m"));
  const auto a = adoption_mask(net, 0.5, 7);
  const auto b = adoption_mask(net, 0.5, 7);
  const auto c = adoption_mask(net, 0.5, 8);
  CHECK(a == b);
  CHECK(adoption_mask(net, 1.0, 7) ==
        std::vector<bool>({false, false, true, true, true, true}));
  CHECK(adoption_mask(net, 0.0, 7) == std::vector<bool>(6, false));
  (void)c;
}

TEST_CASE("scenario build is deterministic: identical bids for identical configs") {
  const Scenario sc = load_small();
  const ScenarioBuild b1 = build_scenario(sc);
  const ScenarioBuild b2 = build_scenario(sc);
  const json j1 = bids_to_json(b1.bids, sc.interval_hours);
  const json j2 = bids_to_json(b2.bids, sc.interval_hours);
  CHECK(j1.dump() == j2.dump());

  // Two DERAs with identical configs produce identical curve sets.
  Scenario twin = sc;
  twin.deras[1] = twin.deras[0];
  twin.deras[1].id = "alpha2";
  const ScenarioBuild tb = build_scenario(twin);
  const json c0 = bid_curve_to_json(tb.bids[0].curves[0]);
  const json c1 = bid_curve_to_json(tb.bids[1].curves[0]);
  CHECK(c0.dump() == c1.dump());
  CHECK(tb.bids[0].constant_usd == doctest::Approx(tb.bids[1].constant_usd));
}

TEST_CASE("derived utility range follows the NEM consumption and DG span") {
  Scenario sc = load_small();
  sc.dg_adoption = 1.0;  // no mask, deterministic by hand
  sc.utility.diversity = 1.0;
  const ScenarioBuild build = build_scenario(sc);
  // Bus 2 hosts both DERAs: alpha (r = 8) and beta (r = 0.5), households 2,
  // ratio 0.8 -> utility mass 0.4 per slot. d_NEM = 2.95 at pi_plus = 0.06.
  const double util_mass = 2.0 * 0.2;
  const double expected_lo = -util_mass * (2.95 + 2.95) / 1000.0;
  const double expected_hi = util_mass * (8.0 + 0.5) / 1000.0;
  CHECK(build.instance.utility_range.p0_lo_mw(0) ==
        doctest::Approx(expected_lo).epsilon(1e-12));
  CHECK(build.instance.utility_range.p0_hi_mw(0) ==
        doctest::Approx(expected_hi).epsilon(1e-12));
  // Bus 4 hosts only alpha.
  CHECK(build.instance.utility_range.p0_hi_mw(2) ==
        doctest::Approx(util_mass * 8.0 / 1000.0).epsilon(1e-12));
}

TEST_CASE("round trip: bids JSON preserves the curves exactly") {
  const Scenario sc = load_small();
  const ScenarioBuild build = build_scenario(sc);
  const json j = bids_to_json(build.bids, sc.interval_hours);
  const std::vector<DeraBid> back = bids_from_json(j);
  REQUIRE(back.size() == build.bids.size());
  for (size_t k = 0; k < back.size(); ++k) {
    CHECK(back[k].constant_usd == build.bids[k].constant_usd);
    REQUIRE(back[k].curves.size() == build.bids[k].curves.size());
    for (size_t c = 0; c < back[k].curves.size(); ++c) {
      const BidCurve& a = back[k].curves[c];
      const BidCurve& b = build.bids[k].curves[c];
      CHECK(a.bus == b.bus);
      CHECK((a.direction == b.direction));
      REQUIRE(a.breakpoints.size() == b.breakpoints.size());
      for (size_t i = 0; i < a.breakpoints.size(); ++i) {
        CHECK(a.breakpoints[i].capacity_mw == b.breakpoints[i].capacity_mw);
        CHECK(a.breakpoints[i].marginal_usd_per_kwh ==
              b.breakpoints[i].marginal_usd_per_kwh);
      }
    }
  }
}

TEST_CASE("single-value sweep equals a direct clearing") {
  const Scenario sc = load_small();
  const auto rows = run_sweep(sc, "dera_ratio", {0.8});
  REQUIRE(rows.size() == 1);
  const ScenarioBuild build = build_scenario(sc);
  const ClearingResult res = clear(build.instance);
  CHECK(rows[0].social_surplus == doctest::Approx(res.social_surplus).epsilon(1e-12));
  CHECK(rows[0].dera_surplus ==
        doctest::Approx(total_dera_surplus(build, res)).epsilon(1e-12));
}

TEST_CASE("small-network ratio sweep is nondecreasing in social surplus") {
  const Scenario sc = load_small();
  const auto rows = run_sweep(sc, "dera_ratio", {0.25, 0.5, 0.75, 1.0});
  for (size_t i = 0; i + 1 < rows.size(); ++i) {
    CHECK(rows[i + 1].social_surplus >= rows[i].social_surplus - 1e-9);
  }
}

TEST_CASE("sweep rejects unknown parameters") {
  const Scenario sc = load_small();
  CHECK_THROWS_AS(run_sweep(sc, "frequency", {1.0}), std::invalid_argument);
}

TEST_CASE("a DERA serving an unknown bus is rejected") {
  Scenario sc = load_small();
  sc.deras[1].buses_served = {2, 99};
  CHECK_THROWS_WITH_AS(build_scenario(sc), doctest::Contains("unknown bus"),
                       std::invalid_argument);
}

TEST_CASE("a DERA with no prosumers yields empty curves and a zero constant") {
  Scenario sc = load_small();
  sc.deras[1].serve_all_buses = false;
  sc.deras[1].buses_served.clear();
  const ScenarioBuild build = build_scenario(sc);
  CHECK(build.bids[1].curves.empty());
  CHECK(build.bids[1].constant_usd == 0.0);
  CHECK_NOTHROW(clear(build.instance));
}

TEST_CASE("clearing and result JSON round trip for verification") {
  const Scenario sc = load_small();
  const ScenarioBuild build = build_scenario(sc);
  const ClearingResult res = clear(build.instance);
  const RobustCertificate cert =
      verify_robust(res, build.bundle, build.instance.utility_range, 500, 3);
  CHECK(cert.pass);

  const json j = clearing_result_to_json(res, &cert);
  const ClearingResult back = clearing_result_from_json(j);
  CHECK(back.social_surplus == doctest::Approx(res.social_surplus));
  REQUIRE(back.allocations.size() == res.allocations.size());
  const RobustCertificate cert2 =
      verify_robust(back, build.bundle, build.instance.utility_range, 500, 3);
  CHECK(cert2.pass);
  CHECK(cert2.worst_margin_sampled ==
        doctest::Approx(cert.worst_margin_sampled).epsilon(1e-12));
}

TEST_CASE("CSV emission has the versioned headers") {
  const Scenario sc = load_small();
  const ScenarioBuild build = build_scenario(sc);
  const ClearingResult res = clear(build.instance);
  const std::string csv = clearing_csv(res);
  CHECK(csv.rfind("# netacc clear csv v1\n", 0) == 0);
  CHECK(csv.find("bus,lambda_hi,lambda_lo,p_agg_hi,p_agg_lo,c_hi_alpha") !=
        std::string::npos);
  CHECK(kkt_csv(res).find("stationarity,feasibility") != std::string::npos);
  CHECK(bids_csv(build.bids).find("dera,bus,direction") != std::string::npos);
  const std::string sweep =
      sweep_csv("dera_ratio", {{0.5, 1.0, 0.25}});
  CHECK(sweep.find("dera_ratio,social_surplus,dera_surplus") != std::string::npos);
}
