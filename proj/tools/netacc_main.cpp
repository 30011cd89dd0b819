// netacc: forward auction toolkit for distribution-network access allocation.
//
// Subcommands: parse, bids, clear, verify, sweep. Exit codes: 0 success,
// 1 infeasible clearing or failed verification, 2 input error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netacc/json_io.hpp"
#include "netacc/scenario.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitInputError = 2;

struct LimitFlags {
  double voltage_dev = 0.05;
  std::string bounds_on = "u";
  int flow_first_n = 0;
  double flow_first_limit = 0.0;
  double flow_rest_limit = 0.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--voltage-dev", voltage_dev,
                    "Voltage deviation fraction (default 0.05)");
    cmd->add_option("--bounds-on", bounds_on,
                    "Voltage bound convention: u (squared) or v (magnitude)");
    cmd->add_option("--flow-limit-first-n", flow_first_n,
                    "Number of leading branches using --flow-limit-first");
    cmd->add_option("--flow-limit-first", flow_first_limit,
                    "MW limit for the first N branches");
    cmd->add_option("--flow-limit-rest", flow_rest_limit,
                    "MW limit for the remaining branches");
  }

  netacc::SensitivityOptions to_options(const netacc::RadialNetwork& net) const {
    netacc::SensitivityOptions o;
    o.voltage_dev = voltage_dev;
    o.bounds_on = bounds_on == "v" ? netacc::VoltageBoundConvention::OnMagnitude
                                   : netacc::VoltageBoundConvention::OnSquared;
    if (flow_first_n > 0 || flow_rest_limit > 0.0) {
      std::vector<double> lim(net.line_count());
      for (int l = 0; l < net.line_count(); ++l) {
        lim[l] = l < flow_first_n ? flow_first_limit : flow_rest_limit;
      }
      o.flow_limits_mw = std::move(lim);
    }
    return o;
  }
};

netacc::UtilityRange load_p0(const std::string& path, int nb) {
  netacc::UtilityRange range;
  range.p0_lo_mw = Eigen::VectorXd::Zero(nb);
  range.p0_hi_mw = Eigen::VectorXd::Zero(nb);
  if (path.empty()) return range;
  const json j = json::parse(netacc::read_text_file(path));
  const auto lo = j.at("p0_lo").get<std::vector<double>>();
  const auto hi = j.at("p0_hi").get<std::vector<double>>();
  if (static_cast<int>(lo.size()) != nb || static_cast<int>(hi.size()) != nb) {
    throw std::invalid_argument("p0 file must list every non-reference bus");
  }
  range.p0_lo_mw = Eigen::Map<const Eigen::VectorXd>(lo.data(), nb);
  range.p0_hi_mw = Eigen::Map<const Eigen::VectorXd>(hi.data(), nb);
  return range;
}

std::string csv_sibling(const std::string& out, const std::string& suffix) {
  const auto dot = out.rfind('.');
  const std::string stem = dot == std::string::npos ? out : out.substr(0, dot);
  return stem + suffix;
}

int cmd_parse(const std::string& case_path, const std::string& out_path,
              double power_factor) {
  netacc::RadialNetwork net =
      netacc::parse_matpower_case(netacc::read_text_file(case_path));
  net.set_power_factor(power_factor);
  netacc::write_text_file(out_path, netacc::network_to_json(net).dump(2) + "\n");
  std::printf("buses=%d lines=%d radial=yes base_mva=%g\n", net.bus_count(),
              net.line_count(), net.base_mva);
  return kExitOk;
}

int cmd_bids(const std::string& network_path,
             const std::vector<std::string>& dera_paths, int segments,
             const std::string& out_path, const std::string& csv_path,
             double interval_hours, double ratio, double households,
             double adoption, std::uint64_t seed) {
  netacc::Scenario sc;
  sc.network_path = network_path;
  for (const std::string& p : dera_paths) {
    sc.deras.push_back(
        netacc::dera_config_from_json(json::parse(netacc::read_text_file(p))));
  }
  sc.bid_segments = segments;
  sc.interval_hours = interval_hours;
  sc.dera_ratio = ratio;
  sc.households = households;
  sc.dg_adoption = adoption;
  sc.seed = seed;
  sc.utility.mode = netacc::UtilityRangePolicy::Mode::Zero;
  sc.flow_limits.use_rule = true;  // bundle unused here; any limits satisfy it
  sc.flow_limits.first_n = 0;
  sc.flow_limits.rest_limit = 1.0;

  const netacc::ScenarioBuild build = netacc::build_scenario(sc);
  netacc::write_text_file(
      out_path,
      netacc::bids_to_json(build.bids, interval_hours).dump(2) + "\n");
  if (!csv_path.empty()) {
    netacc::write_text_file(csv_path, netacc::bids_csv(build.bids));
  }
  size_t n_curves = 0;
  for (const auto& b : build.bids) n_curves += b.curves.size();
  std::printf("deras=%zu curves=%zu\n", build.bids.size(), n_curves);
  return kExitOk;
}

int cmd_clear(const std::string& network_path, const std::string& bids_path,
              const std::string& dso_arg, const std::string& out_path,
              const std::string& p0_path, const LimitFlags& limits,
              int j_segments, int verify_samples, std::uint64_t seed) {
  const netacc::RadialNetwork net = netacc::load_network(network_path);
  netacc::AuctionInstance instance;
  instance.bundle = netacc::build_sensitivity(net, limits.to_options(net));
  instance.bids =
      netacc::bids_from_json(json::parse(netacc::read_text_file(bids_path)));
  instance.utility_range = load_p0(p0_path, net.bus_count() - 1);
  const auto comma = dso_arg.find(',');
  if (comma == std::string::npos) {
    throw std::invalid_argument("--dso expects 'a,b'");
  }
  instance.cost.a_coeff = std::stod(dso_arg.substr(0, comma));
  instance.cost.b_coeff = std::stod(dso_arg.substr(comma + 1));
  instance.options.j_segments = j_segments;

  const netacc::ClearingResult result = netacc::clear(instance);
  const netacc::RobustCertificate cert = netacc::verify_robust(
      result, instance.bundle, instance.utility_range, verify_samples, seed);

  netacc::write_text_file(
      out_path, netacc::clearing_result_to_json(result, &cert).dump(2) + "\n");
  netacc::write_text_file(csv_sibling(out_path, ".csv"),
                          netacc::clearing_csv(result));
  netacc::write_text_file(csv_sibling(out_path, "_kkt.csv"),
                          netacc::kkt_csv(result));
  std::printf("surplus=%.6f gap_pwl=%.3g kkt_max=%.3g iterations=%d robust=%s\n",
              result.social_surplus, result.gap_pwl, result.kkt.max(),
              result.iterations, cert.pass ? "pass" : "FAIL");
  return cert.pass ? kExitOk : kExitInfeasible;
}

int cmd_verify(const std::string& result_path, const std::string& network_path,
               const std::string& p0_path, const LimitFlags& limits,
               int samples, std::uint64_t seed) {
  const netacc::RadialNetwork net = netacc::load_network(network_path);
  const netacc::SensitivityBundle bundle =
      netacc::build_sensitivity(net, limits.to_options(net));
  const netacc::ClearingResult result = netacc::clearing_result_from_json(
      json::parse(netacc::read_text_file(result_path)));
  const netacc::UtilityRange range = load_p0(p0_path, net.bus_count() - 1);
  const netacc::RobustCertificate cert =
      netacc::verify_robust(result, bundle, range, samples, seed);
  std::printf("exact=%s sampled=%s worst_margin_exact=%.3g "
              "worst_margin_sampled=%.3g samples=%d\n",
              cert.exact_pass ? "pass" : "FAIL",
              cert.sampled_pass ? "pass" : "FAIL", cert.worst_margin_exact,
              cert.worst_margin_sampled, cert.n_samples);
  if (cert.violation) {
    std::printf("violation: row=%d value=%.6g bound=%.6g\n",
                cert.violation->row, cert.violation->value,
                cert.violation->bound);
  }
  return cert.pass ? kExitOk : kExitInfeasible;
}

int cmd_sweep(const std::string& scenario_path, const std::string& param,
              const std::string& values_csv, const std::string& out_path) {
  std::string base_dir;
  const auto slash = scenario_path.rfind('/');
  if (slash != std::string::npos) base_dir = scenario_path.substr(0, slash);
  const netacc::Scenario sc = netacc::scenario_from_json(
      json::parse(netacc::read_text_file(scenario_path)), base_dir);
  std::vector<double> values;
  size_t pos = 0;
  while (pos < values_csv.size()) {
    const auto next = values_csv.find(',', pos);
    values.push_back(std::stod(values_csv.substr(pos, next - pos)));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (values.empty()) throw std::invalid_argument("--values must be nonempty");
  const std::vector<netacc::SweepRow> rows = netacc::run_sweep(sc, param, values);
  netacc::write_text_file(out_path, netacc::sweep_csv(param, rows));
  for (const auto& row : rows) {
    std::printf("%s=%g social_surplus=%.6f dera_surplus=%.6f\n", param.c_str(),
                row.value, row.social_surplus, row.dera_surplus);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distribution-network access auction toolkit"};
  app.require_subcommand(1);

  // parse
  auto* parse = app.add_subcommand("parse", "Read a MATPOWER case, emit network JSON");
  std::string case_path, parse_out;
  double parse_pf = 0.98;
  parse->add_option("--case", case_path, "MATPOWER .m file")->required();
  parse->add_option("--out", parse_out, "Output network JSON")->required();
  parse->add_option("--power-factor", parse_pf, "Uniform power factor (default 0.98)");

  // bids
  auto* bids = app.add_subcommand("bids", "Construct DERA bid curves");
  std::string bids_network, bids_out, bids_csv_path;
  std::vector<std::string> dera_paths;
  int bids_segments = 10;
  double interval_hours = 1.0, ratio = 1.0, households = 1.0, adoption = 1.0;
  std::uint64_t bids_seed = 42;
  bids->add_option("--network", bids_network, "Network file (.m or .json)")->required();
  bids->add_option("--dera", dera_paths, "DERA config JSON file(s)")->required();
  bids->add_option("--segments", bids_segments, "PWL segments per curve (default 10)");
  bids->add_option("--out", bids_out, "Output bids JSON")->required();
  bids->add_option("--csv", bids_csv_path, "Also write the curves as CSV");
  bids->add_option("--interval-hours", interval_hours, "Trading interval length");
  bids->add_option("--ratio", ratio, "Fraction of households served by DERAs");
  bids->add_option("--households", households, "Households per (DERA, bus) slot");
  bids->add_option("--adoption", adoption, "DG adoption probability per bus");
  bids->add_option("--seed", bids_seed, "Seed for the adoption mask");

  // clear
  auto* clear_cmd = app.add_subcommand("clear", "Clear the access auction");
  std::string clear_network, clear_bids, clear_dso = "-0.096,0.2", clear_out,
              clear_p0;
  LimitFlags clear_limits;
  int clear_j_segments = 20, clear_samples = 1000;
  std::uint64_t clear_seed = 42;
  clear_cmd->add_option("--network", clear_network)->required();
  clear_cmd->add_option("--bids", clear_bids)->required();
  clear_cmd->add_option("--dso", clear_dso, "DSO cost coefficients 'a,b'");
  clear_cmd->add_option("--out", clear_out, "Output result JSON")->required();
  clear_cmd->add_option("--p0", clear_p0, "Utility range JSON {p0_lo, p0_hi}");
  clear_cmd->add_option("--j-segments", clear_j_segments, "Cost PWL segments");
  clear_cmd->add_option("--verify-samples", clear_samples,
                        "Monte Carlo samples for the certificate");
  clear_cmd->add_option("--seed", clear_seed, "Sampling seed");
  clear_limits.attach(clear_cmd);

  // verify
  auto* verify = app.add_subcommand("verify", "Re-check a clearing result");
  std::string verify_result, verify_network, verify_p0;
  LimitFlags verify_limits;
  int verify_samples = 10000;
  std::uint64_t verify_seed = 42;
  verify->add_option("--result", verify_result)->required();
  verify->add_option("--network", verify_network)->required();
  verify->add_option("--p0", verify_p0, "Utility range JSON {p0_lo, p0_hi}");
  verify->add_option("--samples", verify_samples);
  verify->add_option("--seed", verify_seed);
  verify_limits.attach(verify);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Clear a scenario over a parameter range");
  std::string sweep_scenario, sweep_param, sweep_values, sweep_out;
  sweep->add_option("--scenario", sweep_scenario)->required();
  sweep->add_option("--param", sweep_param, "dera_ratio or dg_level")->required();
  sweep->add_option("--values", sweep_values, "Comma-separated values")->required();
  sweep->add_option("--out", sweep_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInputError;
  }

  try {
    if (*parse) return cmd_parse(case_path, parse_out, parse_pf);
    if (*bids) {
      return cmd_bids(bids_network, dera_paths, bids_segments, bids_out,
                      bids_csv_path, interval_hours, ratio, households,
                      adoption, bids_seed);
    }
    if (*clear_cmd) {
      return cmd_clear(clear_network, clear_bids, clear_dso, clear_out,
                       clear_p0, clear_limits, clear_j_segments, clear_samples,
                       clear_seed);
    }
    if (*verify) {
      return cmd_verify(verify_result, verify_network, verify_p0, verify_limits,
                        verify_samples, verify_seed);
    }
    if (*sweep) return cmd_sweep(sweep_scenario, sweep_param, sweep_values, sweep_out);
  } catch (const netacc::InfeasibleAuction& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kExitInfeasible;
  } catch (const netacc::ParseError& e) {
    if (e.line_no > 0) {
      std::fprintf(stderr, "parse error at line %d: %s\n", e.line_no, e.what());
    } else {
      std::fprintf(stderr, "parse error: %s\n", e.what());
    }
    return kExitInputError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  }
  return kExitInputError;
}
