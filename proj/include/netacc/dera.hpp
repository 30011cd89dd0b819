#pragma once

#include <span>
#include <string>
#include <vector>

#include "netacc/prosumer.hpp"

namespace netacc {

// Per-bus access interval granted to (or requested by) one aggregator:
// c_lo <= 0 <= c_hi, net injection r - d must stay inside [c_lo, c_hi].
struct AccessInterval {
  double c_lo_mw = 0.0;
  double c_hi_mw = 0.0;

  void validate() const {
    if (c_lo_mw > 0.0 || c_hi_mw < 0.0) {
      throw std::invalid_argument("access interval must satisfy c_lo <= 0 <= c_hi");
    }
  }
};

struct ProsumerRecord {
  int bus = 0;
  UtilityFn utility;
  ProsumerParams params;
  // Number of identical prosumers pooled at this bus (may be fractional when
  // modeling a served population share). The bus access interval is shared
  // across them; by symmetry and concavity the optimal split is equal.
  double mass = 1.0;
};

struct DeraPortfolio {
  std::string id;
  std::vector<ProsumerRecord> prosumers;  // one record per served bus
  double zeta = 1.003;                    // competitiveness multiplier, > 1
  double lmp = 0.0;                       // wholesale price, $/kWh
  NemTariff tariff;                       // benchmark NEM surplus
  double kwh_per_mw = 1000.0;             // MW -> kWh over the trading interval

  void validate() const;
};

// Closed-form optimum of one prosumer's aggregation subproblem
// (all quantities in kWh / $).
struct ProsumerDecision {
  double d_star = 0.0;   // optimal consumption
  double omega = 0.0;    // payment from the prosumer to the aggregator
  double phi_lo = 0.0;   // surplus part tied to the withdrawal access
  double phi_hi = 0.0;   // surplus part tied to the injection access
  double h = 0.0;        // access-independent part, before -zeta*S_NEM
  double surplus = 0.0;  // omega - lmp (d_star - r) = phi_lo + phi_hi + h - zeta S_NEM
};

struct BusDecision {
  int bus = 0;
  double mass = 1.0;
  ProsumerDecision per_prosumer;
};

struct DeraDecision {
  std::vector<BusDecision> per_bus;
  double phi_total = 0.0;  // $, mass-weighted sum of per-prosumer surpluses
};

enum class Direction { Injection, Withdrawal };

// Marginal-benefit step curve for one bus and direction. Breakpoints store
// capacity magnitudes (MW, strictly increasing from 0) and the constant
// marginal benefit ($/kWh) over the segment ending at that capacity;
// marginals are nonincreasing. value_at_zero is the (nonpositive) benefit
// the closed form assigns at zero capacity; the integral of the steps
// reproduces the closed-form benefit up to that constant.
struct BidCurve {
  int bus = 0;
  Direction direction = Direction::Injection;
  double kwh_per_mw = 1000.0;
  double value_at_zero = 0.0;
  struct Breakpoint {
    double capacity_mw;
    double marginal_usd_per_kwh;
  };
  std::vector<Breakpoint> breakpoints;

  double capacity_max() const {
    return breakpoints.empty() ? 0.0 : breakpoints.back().capacity_mw;
  }
};

/// Closed-form per-prosumer optimum; access in kWh. Throws if the consumption
/// bounds make every d violate the access interval.
ProsumerDecision optimal_prosumer_decision(const UtilityFn& u,
                                           const ProsumerParams& p,
                                           const NemTariff& tariff, double zeta,
                                           double lmp, double c_lo_kwh,
                                           double c_hi_kwh);

/// Closed-form aggregator optimum; access[i] pairs with prosumers[i].
DeraDecision optimal_decision(const DeraPortfolio& port,
                              std::span<const AccessInterval> access);

/// Numerical benchmark for the closed form: per bus, eliminates the payment
/// (its constraint always binds) and maximizes the remaining concave
/// single-variable objective by ternary search. Independent of the formulas
/// in optimal_decision.
double oracle_surplus(const DeraPortfolio& port,
                      std::span<const AccessInterval> access);

/// Samples the two per-bus benefit curves at n_segments+1 uniform breakpoints
/// over [0, c_max] and emits the chord slopes as marginal-benefit steps
/// (concavity makes the chords the exact piecewise-linear envelope of the
/// sampled points). Two curves per served bus, injection first.
std::vector<BidCurve> bid_curves(const DeraPortfolio& port, AccessInterval c_max,
                                 int n_segments);

/// Integral of the marginal-benefit steps from 0 to |capacity| (in $);
/// 0 at zero capacity, concave and nondecreasing in the magnitude.
double pwl_benefit_value(const BidCurve& curve, double capacity_mw);

/// Step-function value at |capacity| ($/kWh); right-continuous at 0,
/// left-continuous at the breakpoints, 0 beyond the last one.
double pwl_marginal_at(const BidCurve& curve, double capacity_mw);

}  // namespace netacc
