#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "netacc/auction.hpp"

namespace netacc {

struct DeraConfig {
  std::string id;
  double zeta = 1.003;
  double lmp = 0.03;  // $/kWh
  NemTariff tariff{0.06, 0.03, 0.0};
  AccessInterval c_max{-0.1, 0.1};

  struct ProsumerEntry {
    int bus = 0;
    UtilityFn utility;
    ProsumerParams params;
    double mass = 1.0;
  };
  std::vector<ProsumerEntry> prosumers;  // explicit per-bus records

  // Template applied to buses_served (or every non-reference bus) when no
  // explicit prosumers are given. The DG adoption mask only applies here.
  UtilityFn template_utility{0.65, 0.2};
  ProsumerParams template_params{0.0, 25.0, 0.0};
  bool serve_all_buses = false;
  std::vector<int> buses_served;
};

struct FlowLimitPolicy {
  std::optional<std::vector<double>> explicit_limits;
  bool use_rule = false;  // first_n lines get first_limit, the rest rest_limit
  int first_n = 0;
  double first_limit = 0.0;
  double rest_limit = 0.0;
};

struct UtilityRangePolicy {
  enum class Mode { Explicit, Derived, Zero };
  Mode mode = Mode::Zero;
  std::vector<double> p0_lo, p0_hi;  // explicit mode, indexed by bus-2
  // Diversity (coincidence) factor on the derived per-household range; 1.0
  // means every utility customer hits the extreme simultaneously.
  double diversity = 1.0;
};

struct Scenario {
  std::string network_path;
  std::vector<DeraConfig> deras;
  DsoCost dso{-0.096, 0.2};
  double voltage_dev = 0.05;
  VoltageBoundConvention bounds_on = VoltageBoundConvention::OnSquared;
  std::optional<double> power_factor;  // overrides the network default
  FlowLimitPolicy flow_limits;
  UtilityRangePolicy utility;
  double dera_ratio = 1.0;   // fraction of each household slot under the DERA
  double dg_adoption = 1.0;  // probability a bus's households have DG
  double households = 1.0;   // population per (DERA, bus) slot
  int bid_segments = 10;
  int j_segments = 20;
  double interval_hours = 1.0;
  std::uint64_t seed = 42;
};

DeraConfig dera_config_from_json(const nlohmann::json& j);
Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir);

struct ScenarioBuild {
  RadialNetwork network;
  SensitivityBundle bundle;
  std::vector<DeraPortfolio> portfolios;
  std::vector<DeraBid> bids;
  AuctionInstance instance;
  std::vector<bool> dg_mask;  // per bus id (index 0..N, ids 2..N meaningful)
};

/// Per-bus Bernoulli DG-adoption mask drawn from the scenario seed.
std::vector<bool> adoption_mask(const RadialNetwork& net, double probability,
                                std::uint64_t seed);

/// h - zeta * S_NEM: the access-independent per-prosumer surplus term.
double access_free_surplus(const UtilityFn& u, const ProsumerParams& p,
                           const NemTariff& tariff, double zeta, double lmp);

ScenarioBuild build_scenario(const Scenario& sc, const RadialNetwork& net);
ScenarioBuild build_scenario(const Scenario& sc);  // loads sc.network_path

/// True (closed-form) aggregator surplus at the cleared access, minus the
/// auction payment, summed over DERAs.
double total_dera_surplus(const ScenarioBuild& build,
                          const ClearingResult& result);

struct SweepRow {
  double value = 0.0;
  double social_surplus = 0.0;
  double dera_surplus = 0.0;
};

/// param is "dera_ratio" or "dg_level" (kWh, applied to every DERA template).
std::vector<SweepRow> run_sweep(const Scenario& sc, const std::string& param,
                                const std::vector<double>& values);

// CSV emission (stable v1 column sets, documented in the README).
std::string clearing_csv(const ClearingResult& result);
std::string kkt_csv(const ClearingResult& result);
std::string bids_csv(const std::vector<DeraBid>& bids);
std::string sweep_csv(const std::string& param, const std::vector<SweepRow>& rows);

}  // namespace netacc
