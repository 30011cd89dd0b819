#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "netacc/dera.hpp"
#include "netacc/net_model.hpp"
#include "netacc/solver.hpp"

namespace netacc {

// Per-direction DSO operation cost j(x) = (b/2) x^2 - a x, applied to the
// aggregate injection P_hi[i] and the withdrawal magnitude -P_lo[i] at every
// bus and summed.
struct DsoCost {
  double a_coeff = 0.0;
  double b_coeff = 0.0;

  void validate() const {
    if (b_coeff < 0.0) throw std::invalid_argument("DSO cost must be convex (b >= 0)");
  }
  double unit_cost(double x) const { return 0.5 * b_coeff * x * x - a_coeff * x; }
  double unit_marginal(double x) const { return b_coeff * x - a_coeff; }
  double total(const Eigen::VectorXd& p_hi, const Eigen::VectorXd& p_lo) const;
};

struct DeraBid {
  std::string dera_id;
  std::vector<BidCurve> curves;  // both directions per served bus
  double constant_usd = 0.0;     // capacity-independent surplus part
};

struct UtilityRange {
  Eigen::VectorXd p0_lo_mw;  // length N-1, per non-reference bus
  Eigen::VectorXd p0_hi_mw;
};

struct AuctionOptions {
  int j_segments = 20;  // PWL resolution of the DSO cost per bus per direction
  // Fixed aggregate variable boxes (otherwise derived from the instance and
  // padded by one segment). Used to keep the cost grid identical across
  // perturbed re-clears.
  std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> p_hi_box;
  std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> p_lo_box;
};

struct AuctionInstance {
  SensitivityBundle bundle;
  std::vector<DeraBid> bids;
  UtilityRange utility_range;
  DsoCost cost;
  AuctionOptions options;

  void validate() const;
};

class InfeasibleAuction : public std::runtime_error {
 public:
  InfeasibleAuction(const std::string& block, double amount)
      : std::runtime_error("auction infeasible in constraint block '" + block +
                           "' (violation " + std::to_string(amount) + ")"),
        block(block),
        amount(amount) {}
  std::string block;
  double amount;
};

// Bookkeeping produced by assemble(); indices refer to the returned program.
struct AssembleInfo {
  struct CapacityVar {
    int dera = 0;  // index into instance.bids
    int bus = 0;   // bus id
    Direction direction = Direction::Injection;
    int var = -1;
    double cap_mw = 0.0;
    double marginal_first = 0.0;  // $/MW at zero capacity
    double marginal_last = 0.0;   // $/MW at the cap
  };
  std::vector<CapacityVar> capacity_vars;
  std::vector<int> p_hi_var, p_lo_var;  // per non-reference bus
  int n_capacity_vars = 0;
  int n_aggregate_vars = 0;
  int n_equalities = 0;
  int n_network_rows = 0;
  int n_box_bounds = 0;  // capacity bound constraints folded into variable boxes
  double j_segment_width = 0.0;
  Eigen::VectorXd p_hi_lo, p_hi_hi, p_lo_lo, p_lo_hi;  // aggregate boxes used
};

struct DualSolution {
  Eigen::VectorXd lambda_hi, lambda_lo;  // per bus, $/MW
  Eigen::VectorXd mu_hi, mu_lo;          // per network row, both >= 0
  // Box multipliers per capacity variable (same order as
  // AssembleInfo::capacity_vars): eta for injection, xi for withdrawal.
  std::vector<double> box_lo, box_hi;
};

struct ClearingResult {
  struct DeraAllocation {
    std::string dera_id;
    std::vector<int> buses;
    std::vector<AccessInterval> cleared;
  };
  std::vector<DeraAllocation> allocations;
  Eigen::VectorXd p_agg_hi, p_agg_lo;
  double social_surplus = 0.0;  // true quadratic cost, PWL bid benefits
  double pwl_objective = 0.0;   // the solved program's objective value
  double gap_pwl = 0.0;         // |J_pwl - J_true| at the optimum
  DualSolution duals;
  KktResiduals kkt;
  int iterations = 0;
  AssembleInfo info;
  DsoCost cost;
};

ConvexSeparableProgram assemble(const AuctionInstance& instance,
                                AssembleInfo* info);

/// Solves the access auction; throws InfeasibleAuction when the utility range
/// alone violates the network limits.
ClearingResult clear(const AuctionInstance& instance);

std::pair<Eigen::VectorXd, Eigen::VectorXd> locational_prices(
    const ClearingResult& result);

struct PriceIdentityReport {
  double residual_hi = 0.0;
  double residual_lo = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Verifies the dual identity: lambda_hi = J' (at P_hi) + A+^T mu_hi
/// + A-^T mu_lo and lambda_lo = J' (at -P_lo) + A-^T mu_hi + A+^T mu_lo,
/// with the true quadratic gradient. The tolerance widens by the cost PWL
/// segment width times b.
PriceIdentityReport check_price_identity(const ClearingResult& result,
                                         const SensitivityBundle& bundle,
                                         const DsoCost& cost);

struct DeraPayment {
  std::string dera_id;
  double payment_usd = 0.0;
};

/// payment_k = sum_i C_hi[k,i] lambda_hi[i] - C_lo[k,i] lambda_lo[i].
std::vector<DeraPayment> payments(const ClearingResult& result);

struct RobustCertificate {
  bool pass = false;
  bool exact_pass = false;
  bool sampled_pass = false;
  double worst_margin_exact = 0.0;    // min over rows of the exact slack
  double worst_margin_sampled = 0.0;  // min over samples and rows
  int n_samples = 0;
  std::uint64_t seed = 0;
  struct Violation {
    int row = -1;
    double value = 0.0;
    double bound = 0.0;
    Eigen::VectorXd total_injection_mw;  // the offending profile, per bus
  };
  std::optional<Violation> violation;
};

/// (i) exact interval check of the cleared boxes against the network limits,
/// (ii) n_samples uniform draws of all DERA injections and the utility
/// profile. Failure is reported, not thrown.
RobustCertificate verify_robust(const ClearingResult& result,
                                const SensitivityBundle& bundle,
                                const UtilityRange& utility_range,
                                int n_samples, std::uint64_t seed);

}  // namespace netacc
