#include "netacc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "netacc/json_io.hpp"

namespace netacc {

using nlohmann::json;

namespace {

UtilityFn utility_from_json(const json& j) {
  return {j.at("a_hat").get<double>(), j.at("b_hat").get<double>()};
}

ProsumerParams params_from_json(const json& j) {
  ProsumerParams p;
  p.d_min = j.value("d_min", 0.0);
  p.d_max = j.value("d_max", 25.0);
  p.r = j.value("r_kwh", 0.0);
  return p;
}

}  // namespace

DeraConfig dera_config_from_json(const json& j) {
  DeraConfig cfg;
  cfg.id = j.at("id").get<std::string>();
  cfg.zeta = j.value("zeta", 1.003);
  cfg.lmp = j.value("lmp", 0.03);
  if (j.contains("tariff")) {
    const json& t = j["tariff"];
    cfg.tariff.pi_plus = t.value("pi_plus", 0.06);
    cfg.tariff.pi_minus = t.value("pi_minus", 0.03);
    cfg.tariff.pi_zero = t.value("pi_zero", 0.0);
  }
  if (j.contains("c_max")) {
    cfg.c_max.c_hi_mw = j["c_max"].value("injection_mw", 0.1);
    cfg.c_max.c_lo_mw = -j["c_max"].value("withdrawal_mw", 0.1);
  }
  if (j.contains("prosumers")) {
    for (const auto& jp : j["prosumers"]) {
      DeraConfig::ProsumerEntry e;
      e.bus = jp.at("bus").get<int>();
      e.utility = utility_from_json(jp);
      e.params = params_from_json(jp);
      e.mass = jp.value("mass", 1.0);
      cfg.prosumers.push_back(e);
    }
  }
  if (j.contains("prosumer_template")) {
    cfg.template_utility = utility_from_json(j["prosumer_template"]);
    cfg.template_params = params_from_json(j["prosumer_template"]);
  }
  if (j.contains("buses_served")) {
    if (j["buses_served"].is_string() && j["buses_served"] == "all") {
      cfg.serve_all_buses = true;
    } else {
      for (const auto& b : j["buses_served"]) {
        cfg.buses_served.push_back(b.get<int>());
      }
    }
  } else if (cfg.prosumers.empty()) {
    cfg.serve_all_buses = true;
  }
  return cfg;
}

Scenario scenario_from_json(const json& j, const std::string& base_dir) {
  Scenario sc;
  if (j.contains("network")) {
    std::string p = j["network"].get<std::string>();
    if (!p.empty() && p[0] != '/' && !base_dir.empty()) p = base_dir + "/" + p;
    sc.network_path = p;
  }
  for (const auto& jd : j.at("deras")) {
    if (jd.is_string()) {
      std::string p = jd.get<std::string>();
      if (!p.empty() && p[0] != '/' && !base_dir.empty()) p = base_dir + "/" + p;
      sc.deras.push_back(dera_config_from_json(json::parse(read_text_file(p))));
    } else {
      sc.deras.push_back(dera_config_from_json(jd));
    }
  }
  if (j.contains("dso")) {
    sc.dso.a_coeff = j["dso"].value("a", -0.096);
    sc.dso.b_coeff = j["dso"].value("b", 0.2);
  }
  sc.voltage_dev = j.value("voltage_dev", 0.05);
  if (j.value("bounds_on", "u") == std::string("v")) {
    sc.bounds_on = VoltageBoundConvention::OnMagnitude;
  }
  if (j.contains("power_factor")) sc.power_factor = j["power_factor"].get<double>();
  if (j.contains("flow_limits")) {
    const json& f = j["flow_limits"];
    if (f.contains("explicit")) {
      sc.flow_limits.explicit_limits = f["explicit"].get<std::vector<double>>();
    } else if (f.contains("first_n")) {
      sc.flow_limits.use_rule = true;
      sc.flow_limits.first_n = f.at("first_n").get<int>();
      sc.flow_limits.first_limit = f.at("first_limit").get<double>();
      sc.flow_limits.rest_limit = f.at("rest_limit").get<double>();
    }
  }
  if (j.contains("utility_range")) {
    const json& u = j["utility_range"];
    const std::string mode = u.value("mode", "derived");
    if (mode == "explicit") {
      sc.utility.mode = UtilityRangePolicy::Mode::Explicit;
      sc.utility.p0_lo = u.at("p0_lo").get<std::vector<double>>();
      sc.utility.p0_hi = u.at("p0_hi").get<std::vector<double>>();
    } else if (mode == "zero") {
      sc.utility.mode = UtilityRangePolicy::Mode::Zero;
    } else {
      sc.utility.mode = UtilityRangePolicy::Mode::Derived;
    }
    sc.utility.diversity = u.value("diversity", 1.0);
  } else {
    sc.utility.mode = UtilityRangePolicy::Mode::Derived;
  }
  sc.dera_ratio = j.value("dera_ratio", 1.0);
  sc.dg_adoption = j.value("dg_adoption", 1.0);
  sc.households = j.value("households", 1.0);
  sc.bid_segments = j.value("bid_segments", 10);
  sc.j_segments = j.value("j_segments", 20);
  sc.interval_hours = j.value("interval_hours", 1.0);
  sc.seed = j.value("seed", std::uint64_t{42});
  return sc;
}

std::vector<bool> adoption_mask(const RadialNetwork& net, double probability,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<bool> mask(net.bus_count() + 1, false);
  for (int bus = 2; bus <= net.bus_count(); ++bus) {
    const double u = (rng() >> 11) * 0x1.0p-53;
    mask[bus] = u < probability;
  }
  return mask;
}

double access_free_surplus(const UtilityFn& u, const ProsumerParams& p,
                           const NemTariff& tariff, double zeta, double lmp) {
  const double d_hat = std::min(p.d_max, std::max(inverse_marginal(u, lmp), p.d_min));
  const double h = u.value(d_hat) - lmp * (d_hat - p.r);
  return h - zeta * nem_surplus(u, tariff, p);
}

ScenarioBuild build_scenario(const Scenario& sc, const RadialNetwork& net_in) {
  ScenarioBuild out;
  out.network = net_in;
  if (sc.power_factor) out.network.set_power_factor(*sc.power_factor);

  SensitivityOptions sopts;
  sopts.voltage_dev = sc.voltage_dev;
  sopts.bounds_on = sc.bounds_on;
  if (sc.flow_limits.explicit_limits) {
    sopts.flow_limits_mw = sc.flow_limits.explicit_limits;
  } else if (sc.flow_limits.use_rule) {
    std::vector<double> lim(out.network.line_count());
    for (int l = 0; l < out.network.line_count(); ++l) {
      lim[l] = l < sc.flow_limits.first_n ? sc.flow_limits.first_limit
                                          : sc.flow_limits.rest_limit;
    }
    sopts.flow_limits_mw = std::move(lim);
  }
  out.bundle = build_sensitivity(out.network, sopts);

  out.dg_mask = adoption_mask(out.network, sc.dg_adoption, sc.seed);
  const double kwh_per_mw = 1000.0 * sc.interval_hours;
  const int nb = out.network.bus_count() - 1;

  Eigen::VectorXd p0_lo = Eigen::VectorXd::Zero(nb);
  Eigen::VectorXd p0_hi = Eigen::VectorXd::Zero(nb);

  for (const DeraConfig& cfg : sc.deras) {
    DeraPortfolio port;
    port.id = cfg.id;
    port.zeta = cfg.zeta;
    port.lmp = cfg.lmp;
    port.tariff = cfg.tariff;
    port.kwh_per_mw = kwh_per_mw;

    std::vector<DeraConfig::ProsumerEntry> entries;
    if (!cfg.prosumers.empty()) {
      entries = cfg.prosumers;
    } else {
      std::vector<int> buses = cfg.buses_served;
      if (cfg.serve_all_buses) {
        buses.clear();
        for (int b = 2; b <= out.network.bus_count(); ++b) buses.push_back(b);
      }
      for (int b : buses) {
        if (b < 2 || b > out.network.bus_count()) {
          throw std::invalid_argument("DERA '" + cfg.id +
                                      "' serves unknown bus " + std::to_string(b));
        }
        DeraConfig::ProsumerEntry e;
        e.bus = b;
        e.utility = cfg.template_utility;
        e.params = cfg.template_params;
        if (!out.dg_mask[b]) e.params.r = 0.0;
        e.mass = 1.0;
        entries.push_back(e);
      }
    }

    for (const auto& e : entries) {
      if (e.bus < 2 || e.bus > out.network.bus_count()) {
        throw std::invalid_argument("DERA '" + cfg.id + "' serves unknown bus " +
                                    std::to_string(e.bus));
      }
      ProsumerRecord rec;
      rec.bus = e.bus;
      rec.utility = e.utility;
      rec.params = e.params;
      rec.mass = e.mass * sc.households * sc.dera_ratio;
      port.prosumers.push_back(rec);

      // The complementary household share stays with the utility under NEM;
      // its consumption/DG span sets the robust utility-injection range.
      if (sc.utility.mode == UtilityRangePolicy::Mode::Derived) {
        const double util_mass = e.mass * sc.households * (1.0 - sc.dera_ratio) *
                                 sc.utility.diversity;
        if (util_mass > 0.0) {
          const double d_nem = nem_consumption(e.utility, cfg.tariff, e.params);
          p0_lo(e.bus - 2) -= util_mass * d_nem / kwh_per_mw;
          p0_hi(e.bus - 2) +=
              util_mass * (e.params.r - e.params.d_min) / kwh_per_mw;
        }
      }
    }
    std::sort(port.prosumers.begin(), port.prosumers.end(),
              [](const ProsumerRecord& a, const ProsumerRecord& b) {
                return a.bus < b.bus;
              });
    out.portfolios.push_back(std::move(port));
  }

  if (sc.utility.mode == UtilityRangePolicy::Mode::Explicit) {
    if (static_cast<int>(sc.utility.p0_lo.size()) != nb ||
        static_cast<int>(sc.utility.p0_hi.size()) != nb) {
      throw std::invalid_argument("explicit utility range must list every bus");
    }
    p0_lo = Eigen::Map<const Eigen::VectorXd>(sc.utility.p0_lo.data(), nb);
    p0_hi = Eigen::Map<const Eigen::VectorXd>(sc.utility.p0_hi.data(), nb);
  }

  for (size_t k = 0; k < sc.deras.size(); ++k) {
    DeraBid bid;
    bid.dera_id = sc.deras[k].id;
    bid.curves = bid_curves(out.portfolios[k], sc.deras[k].c_max, sc.bid_segments);
    for (const ProsumerRecord& rec : out.portfolios[k].prosumers) {
      bid.constant_usd +=
          rec.mass * access_free_surplus(rec.utility, rec.params,
                                         sc.deras[k].tariff, sc.deras[k].zeta,
                                         sc.deras[k].lmp);
    }
    out.bids.push_back(std::move(bid));
  }

  out.instance.bundle = out.bundle;
  out.instance.bids = out.bids;
  out.instance.utility_range = {p0_lo, p0_hi};
  out.instance.cost = sc.dso;
  out.instance.options.j_segments = sc.j_segments;
  return out;
}

ScenarioBuild build_scenario(const Scenario& sc) {
  return build_scenario(sc, load_network(sc.network_path));
}

double total_dera_surplus(const ScenarioBuild& build,
                          const ClearingResult& result) {
  double total = 0.0;
  const std::vector<DeraPayment> pays = payments(result);
  for (size_t k = 0; k < build.portfolios.size(); ++k) {
    const DeraPortfolio& port = build.portfolios[k];
    const auto& alloc = result.allocations[k];
    std::vector<AccessInterval> access(port.prosumers.size());
    for (size_t i = 0; i < port.prosumers.size(); ++i) {
      for (size_t b = 0; b < alloc.buses.size(); ++b) {
        if (alloc.buses[b] == port.prosumers[i].bus) {
          access[i] = alloc.cleared[b];
          break;
        }
      }
    }
    total += optimal_decision(port, access).phi_total - pays[k].payment_usd;
  }
  return total;
}

std::vector<SweepRow> run_sweep(const Scenario& sc, const std::string& param,
                                const std::vector<double>& values) {
  if (param != "dera_ratio" && param != "dg_level") {
    throw std::invalid_argument("sweep parameter must be dera_ratio or dg_level");
  }
  const RadialNetwork net = load_network(sc.network_path);
  std::vector<SweepRow> rows;
  for (double v : values) {
    Scenario variant = sc;
    if (param == "dera_ratio") {
      variant.dera_ratio = v;
    } else {
      for (DeraConfig& cfg : variant.deras) {
        cfg.template_params.r = v;
        for (auto& e : cfg.prosumers) e.params.r = v;
      }
    }
    const ScenarioBuild build = build_scenario(variant, net);
    const ClearingResult result = clear(build.instance);
    rows.push_back({v, result.social_surplus, total_dera_surplus(build, result)});
  }
  return rows;
}

namespace {

std::string fmt(double v) {
  if (v == 0.0) return "0";  // never print -0
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

std::string clearing_csv(const ClearingResult& result) {
  std::string csv = "# netacc clear csv v1\n";
  csv += "bus,lambda_hi,lambda_lo,p_agg_hi,p_agg_lo";
  for (const auto& alloc : result.allocations) {
    csv += ",c_hi_" + alloc.dera_id + ",c_lo_" + alloc.dera_id;
  }
  csv += "\n";
  const int nb = static_cast<int>(result.p_agg_hi.size());
  for (int i = 0; i < nb; ++i) {
    const int bus = i + 2;
    csv += std::to_string(bus) + "," + fmt(result.duals.lambda_hi(i)) + "," +
           fmt(result.duals.lambda_lo(i)) + "," + fmt(result.p_agg_hi(i)) + "," +
           fmt(result.p_agg_lo(i));
    for (const auto& alloc : result.allocations) {
      double c_hi = 0.0, c_lo = 0.0;
      for (size_t b = 0; b < alloc.buses.size(); ++b) {
        if (alloc.buses[b] == bus) {
          c_hi = alloc.cleared[b].c_hi_mw;
          c_lo = alloc.cleared[b].c_lo_mw;
          break;
        }
      }
      csv += "," + fmt(c_hi) + "," + fmt(c_lo);
    }
    csv += "\n";
  }
  return csv;
}

std::string kkt_csv(const ClearingResult& result) {
  std::string csv = "# netacc kkt csv v1\n";
  csv += "stationarity,feasibility,complementarity,gap_pwl,iterations\n";
  csv += fmt(result.kkt.stationarity) + "," + fmt(result.kkt.feasibility) + "," +
         fmt(result.kkt.complementarity) + "," + fmt(result.gap_pwl) + "," +
         std::to_string(result.iterations) + "\n";
  return csv;
}

std::string bids_csv(const std::vector<DeraBid>& bids) {
  std::string csv = "# netacc bids csv v1\n";
  csv += "dera,bus,direction,capacity_mw,marginal_usd_per_kwh\n";
  for (const DeraBid& bid : bids) {
    for (const BidCurve& curve : bid.curves) {
      for (const auto& bp : curve.breakpoints) {
        csv += bid.dera_id + "," + std::to_string(curve.bus) + "," +
               (curve.direction == Direction::Injection ? "injection"
                                                        : "withdrawal") +
               "," + fmt(bp.capacity_mw) + "," + fmt(bp.marginal_usd_per_kwh) +
               "\n";
      }
    }
  }
  return csv;
}

std::string sweep_csv(const std::string& param, const std::vector<SweepRow>& rows) {
  std::string csv = "# netacc sweep csv v1\n";
  csv += param + ",social_surplus,dera_surplus\n";
  for (const SweepRow& row : rows) {
    csv += fmt(row.value) + "," + fmt(row.social_surplus) + "," +
           fmt(row.dera_surplus) + "\n";
  }
  return csv;
}

}  // namespace netacc
