#include "netacc/auction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <tuple>

namespace netacc {

double DsoCost::total(const Eigen::VectorXd& p_hi,
                      const Eigen::VectorXd& p_lo) const {
  double j = 0.0;
  for (Eigen::Index i = 0; i < p_hi.size(); ++i) {
    j += unit_cost(p_hi(i)) + unit_cost(-p_lo(i));
  }
  return j;
}

void AuctionInstance::validate() const {
  cost.validate();
  const int nb = bundle.n_injection_buses();
  if (utility_range.p0_lo_mw.size() != nb || utility_range.p0_hi_mw.size() != nb) {
    throw std::invalid_argument("utility range must cover every non-reference bus");
  }
  if ((utility_range.p0_lo_mw.array() > utility_range.p0_hi_mw.array()).any()) {
    throw std::invalid_argument("utility range lower bound exceeds upper bound");
  }
  for (const DeraBid& bid : bids) {
    for (const BidCurve& c : bid.curves) {
      if (c.bus < 2 || c.bus > nb + 1) {
        throw std::invalid_argument("bid curve for unknown bus " +
                                    std::to_string(c.bus));
      }
    }
  }
  if (options.j_segments < 1) {
    throw std::invalid_argument("cost PWL needs at least one segment");
  }
}

namespace {

// Concave PWL of -j over [lo, hi] by chords on a uniform grid.
std::vector<PwlSegment> cost_pwl(const DsoCost& cost, double lo, double hi,
                                 int segments, bool negate_argument) {
  std::vector<PwlSegment> segs;
  segs.reserve(segments);
  const double width = (hi - lo) / segments;
  double prev = negate_argument ? cost.unit_cost(-lo) : cost.unit_cost(lo);
  for (int s = 1; s <= segments; ++s) {
    const double x = lo + width * s;
    const double val = negate_argument ? cost.unit_cost(-x) : cost.unit_cost(x);
    segs.push_back({width, -(val - prev) / width});
    prev = val;
  }
  return segs;
}

std::string tagged(const char* prefix, int bus_or_row) {
  return std::string(prefix) + ":" + std::to_string(bus_or_row);
}

double linear_interp_cost(const DsoCost& cost, double lo, double width,
                          int segments, double x, bool negate_argument) {
  auto j = [&](double v) {
    return negate_argument ? cost.unit_cost(-v) : cost.unit_cost(v);
  };
  const double t = std::clamp((x - lo) / width, 0.0, double(segments));
  const int k = std::min(static_cast<int>(t), segments - 1);
  const double x0 = lo + k * width;
  const double x1 = x0 + width;
  const double frac = (x - x0) / width;
  return j(x0) + (j(x1) - j(x0)) * frac;
}

}  // namespace

ConvexSeparableProgram assemble(const AuctionInstance& instance,
                                AssembleInfo* info) {
  instance.validate();
  const int nb = instance.bundle.n_injection_buses();  // non-reference buses
  const int nrows = instance.bundle.n_rows();          // 2(N-1) limit rows
  ConvexSeparableProgram prog;
  AssembleInfo out;

  // Capacity variables, one per (DERA, bus, direction) bid curve. The bid
  // benefit enters as the curve's marginal steps; the box constraints
  // 0 <= C_hi <= cap and -cap <= C_lo <= 0 are the variable bounds.
  std::vector<std::vector<std::pair<int, double>>> inj_vars_at(nb);
  std::vector<std::vector<std::pair<int, double>>> wdr_vars_at(nb);
  std::set<std::tuple<size_t, int, int>> seen_curves;
  for (size_t k = 0; k < instance.bids.size(); ++k) {
    for (const BidCurve& curve : instance.bids[k].curves) {
      if (!seen_curves
               .insert({k, curve.bus, static_cast<int>(curve.direction)})
               .second) {
        throw std::invalid_argument("duplicate bid curve for DERA '" +
                                    instance.bids[k].dera_id + "' bus " +
                                    std::to_string(curve.bus));
      }
      const double cap = curve.capacity_max();
      AssembleInfo::CapacityVar cv;
      cv.dera = static_cast<int>(k);
      cv.bus = curve.bus;
      cv.direction = curve.direction;
      cv.cap_mw = cap;
      const std::string name =
          instance.bids[k].dera_id + (curve.direction == Direction::Injection
                                          ? ":inj:"
                                          : ":wdr:") +
          std::to_string(curve.bus);
      cv.var = prog.add_variable(0.0, cap, 0.0, name);
      if (cap > 0.0) {
        std::vector<PwlSegment> segs;
        double prev_cap = 0.0;
        for (const auto& bp : curve.breakpoints) {
          segs.push_back({bp.capacity_mw - prev_cap,
                          bp.marginal_usd_per_kwh * curve.kwh_per_mw});
          prev_cap = bp.capacity_mw;
        }
        prog.set_objective_pwl(cv.var, segs);
        cv.marginal_first = segs.front().slope;
        cv.marginal_last = segs.back().slope;
      }
      const int idx = curve.bus - 2;
      if (curve.direction == Direction::Injection) {
        inj_vars_at[idx].emplace_back(cv.var, -1.0);
      } else {
        wdr_vars_at[idx].emplace_back(cv.var, 1.0);
      }
      out.capacity_vars.push_back(cv);
    }
  }
  out.n_capacity_vars = static_cast<int>(out.capacity_vars.size());
  out.n_box_bounds = 2 * out.n_capacity_vars;

  // Aggregate capacity variables P_hi, P_lo with the DSO cost as a concave
  // PWL term. Boxes are padded by half a segment: the balance equations, not
  // the boxes, pin the aggregates (their stationarity stays an equality),
  // and the common landing points - nothing cleared, everything cleared -
  // fall mid-segment where the cost subgradient is unique.
  out.p_hi_var.resize(nb);
  out.p_lo_var.resize(nb);
  Eigen::VectorXd inj_cap_sum = Eigen::VectorXd::Zero(nb);
  Eigen::VectorXd wdr_cap_sum = Eigen::VectorXd::Zero(nb);
  for (const auto& cv : out.capacity_vars) {
    if (cv.direction == Direction::Injection) {
      inj_cap_sum(cv.bus - 2) += cv.cap_mw;
    } else {
      wdr_cap_sum(cv.bus - 2) += cv.cap_mw;
    }
  }
  out.p_hi_lo.resize(nb);
  out.p_hi_hi.resize(nb);
  out.p_lo_lo.resize(nb);
  out.p_lo_hi.resize(nb);
  const int segs = instance.options.j_segments + 1;
  double max_width = 0.0;
  for (int i = 0; i < nb; ++i) {
    {
      double lo = instance.utility_range.p0_hi_mw(i);
      double hi = lo + inj_cap_sum(i);
      if (instance.options.p_hi_box) {
        lo = instance.options.p_hi_box->first(i);
        hi = instance.options.p_hi_box->second(i);
      } else {
        double w = (hi - lo) / instance.options.j_segments;
        if (w < 1e-6) w = 1e-3;
        lo -= 0.5 * w;
        hi += 0.5 * w;
      }
      out.p_hi_lo(i) = lo;
      out.p_hi_hi(i) = hi;
      max_width = std::max(max_width, (hi - lo) / segs);
      out.p_hi_var[i] =
          prog.add_variable(lo, hi, 0.0, tagged("P_hi", i + 2));
      prog.set_objective_pwl(out.p_hi_var[i],
                             cost_pwl(instance.cost, lo, hi, segs, false));
    }
    {
      double hi = instance.utility_range.p0_lo_mw(i);
      double lo = hi - wdr_cap_sum(i);
      if (instance.options.p_lo_box) {
        lo = instance.options.p_lo_box->first(i);
        hi = instance.options.p_lo_box->second(i);
      } else {
        double w = (hi - lo) / instance.options.j_segments;
        if (w < 1e-6) w = 1e-3;
        lo -= 0.5 * w;
        hi += 0.5 * w;
      }
      out.p_lo_lo(i) = lo;
      out.p_lo_hi(i) = hi;
      max_width = std::max(max_width, (hi - lo) / segs);
      out.p_lo_var[i] =
          prog.add_variable(lo, hi, 0.0, tagged("P_lo", i + 2));
      prog.set_objective_pwl(out.p_lo_var[i],
                             cost_pwl(instance.cost, lo, hi, segs, true));
    }
  }
  out.n_aggregate_vars = 2 * nb;
  out.j_segment_width = max_width;

  // Balance equalities carrying the locational allocation prices.
  for (int i = 0; i < nb; ++i) {
    std::vector<std::pair<int, double>> coefs = inj_vars_at[i];
    coefs.emplace_back(out.p_hi_var[i], 1.0);
    prog.add_row(std::move(coefs), Relation::Equal,
                 instance.utility_range.p0_hi_mw(i), tagged("bal_hi", i + 2));
    std::vector<std::pair<int, double>> coefs_lo = wdr_vars_at[i];
    coefs_lo.emplace_back(out.p_lo_var[i], 1.0);
    prog.add_row(std::move(coefs_lo), Relation::Equal,
                 instance.utility_range.p0_lo_mw(i), tagged("bal_lo", i + 2));
  }
  out.n_equalities = 2 * nb;

  // Network rows: A+ P_hi - A- P_lo <= b_hi and A+ P_lo - A- P_hi >= b_lo.
  const Eigen::MatrixXd& ap = instance.bundle.a_plus;
  const Eigen::MatrixXd& am = instance.bundle.a_minus;
  for (int j = 0; j < nrows; ++j) {
    std::vector<std::pair<int, double>> coefs;
    for (int i = 0; i < nb; ++i) {
      if (ap(j, i) != 0.0) coefs.emplace_back(out.p_hi_var[i], ap(j, i));
      if (am(j, i) != 0.0) coefs.emplace_back(out.p_lo_var[i], -am(j, i));
    }
    prog.add_row(std::move(coefs), Relation::LessEqual,
                 instance.bundle.limit_hi(j), tagged("net_hi", j));
  }
  for (int j = 0; j < nrows; ++j) {
    std::vector<std::pair<int, double>> coefs;
    for (int i = 0; i < nb; ++i) {
      if (ap(j, i) != 0.0) coefs.emplace_back(out.p_lo_var[i], ap(j, i));
      if (am(j, i) != 0.0) coefs.emplace_back(out.p_hi_var[i], -am(j, i));
    }
    prog.add_row(std::move(coefs), Relation::GreaterEqual,
                 instance.bundle.limit_lo(j), tagged("net_lo", j));
  }
  out.n_network_rows = 2 * nrows;

  if (info) *info = out;
  return prog;
}

ClearingResult clear(const AuctionInstance& instance) {
  AssembleInfo info;
  const ConvexSeparableProgram prog = assemble(instance, &info);
  const Solution sol = solve(prog);
  if (sol.status != Solution::Status::Optimal) {
    std::string block = sol.infeasible_row_tag;
    if (block.rfind("bal", 0) == 0) {
      block = "access balance (" + block + ")";
    } else if (block.rfind("net", 0) == 0) {
      block = "network limits (" + block + ")";
    }
    throw InfeasibleAuction(block, sol.infeasibility);
  }

  if (sol.residuals.max() > 1e-8) {
    throw std::runtime_error("clearing solution failed the 1e-8 residual gate (" +
                             std::to_string(sol.residuals.max()) + ")");
  }

  const int nb = instance.bundle.n_injection_buses();
  const int nrows = instance.bundle.n_rows();
  ClearingResult res;
  res.info = info;
  res.cost = instance.cost;
  res.iterations = sol.iterations;
  res.kkt = sol.residuals;
  res.pwl_objective = sol.objective;

  res.p_agg_hi.resize(nb);
  res.p_agg_lo.resize(nb);
  for (int i = 0; i < nb; ++i) {
    res.p_agg_hi(i) = sol.x(info.p_hi_var[i]);
    res.p_agg_lo(i) = sol.x(info.p_lo_var[i]);
  }

  // Per-DERA cleared intervals.
  res.allocations.resize(instance.bids.size());
  for (size_t k = 0; k < instance.bids.size(); ++k) {
    res.allocations[k].dera_id = instance.bids[k].dera_id;
  }
  std::vector<std::map<int, AccessInterval>> per_dera(instance.bids.size());
  for (const auto& cv : info.capacity_vars) {
    AccessInterval& slot = per_dera[cv.dera][cv.bus];
    const double v = std::max(0.0, sol.x(cv.var));
    if (cv.direction == Direction::Injection) {
      slot.c_hi_mw = v;
    } else {
      slot.c_lo_mw = v == 0.0 ? 0.0 : -v;
    }
  }
  for (size_t k = 0; k < instance.bids.size(); ++k) {
    for (const auto& [bus, interval] : per_dera[k]) {
      res.allocations[k].buses.push_back(bus);
      res.allocations[k].cleared.push_back(interval);
    }
  }

  // Duals in the price convention (see check_price_identity).
  DualSolution& du = res.duals;
  du.lambda_hi.resize(nb);
  du.lambda_lo.resize(nb);
  for (int i = 0; i < nb; ++i) {
    du.lambda_hi(i) = -sol.dual(prog, tagged("bal_hi", i + 2));
    du.lambda_lo(i) = sol.dual(prog, tagged("bal_lo", i + 2));
  }
  du.mu_hi.resize(nrows);
  du.mu_lo.resize(nrows);
  for (int j = 0; j < nrows; ++j) {
    du.mu_hi(j) = std::max(0.0, sol.dual(prog, tagged("net_hi", j)));
    du.mu_lo(j) = std::max(0.0, -sol.dual(prog, tagged("net_lo", j)));
  }
  du.box_lo.resize(info.capacity_vars.size(), 0.0);
  du.box_hi.resize(info.capacity_vars.size(), 0.0);
  for (size_t c = 0; c < info.capacity_vars.size(); ++c) {
    const auto& cv = info.capacity_vars[c];
    const double price = cv.direction == Direction::Injection
                             ? du.lambda_hi(cv.bus - 2)
                             : du.lambda_lo(cv.bus - 2);
    const double x = sol.x(cv.var);
    if (x <= 1e-9) {
      du.box_lo[c] = std::max(0.0, price - cv.marginal_first);
    } else if (x >= cv.cap_mw - 1e-9) {
      du.box_hi[c] = std::max(0.0, cv.marginal_last - price);
    }
  }

  // True-cost surplus and the PWL surrogate gap.
  double benefit = 0.0;
  for (size_t k = 0; k < instance.bids.size(); ++k) {
    benefit += instance.bids[k].constant_usd;
    for (const BidCurve& curve : instance.bids[k].curves) {
      const AccessInterval& slot = per_dera[k][curve.bus];
      const double c = curve.direction == Direction::Injection ? slot.c_hi_mw
                                                               : slot.c_lo_mw;
      benefit += pwl_benefit_value(curve, c);
    }
  }
  const double j_true = instance.cost.total(res.p_agg_hi, res.p_agg_lo);
  res.social_surplus = benefit - j_true;

  double j_pwl = 0.0;
  const int segs = instance.options.j_segments + 1;
  for (int i = 0; i < nb; ++i) {
    j_pwl += linear_interp_cost(instance.cost, info.p_hi_lo(i),
                                (info.p_hi_hi(i) - info.p_hi_lo(i)) / segs, segs,
                                res.p_agg_hi(i), false);
    j_pwl += linear_interp_cost(instance.cost, info.p_lo_lo(i),
                                (info.p_lo_hi(i) - info.p_lo_lo(i)) / segs, segs,
                                res.p_agg_lo(i), true);
  }
  res.gap_pwl = std::abs(j_pwl - j_true);
  return res;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> locational_prices(
    const ClearingResult& result) {
  return {result.duals.lambda_hi, result.duals.lambda_lo};
}

PriceIdentityReport check_price_identity(const ClearingResult& result,
                                         const SensitivityBundle& bundle,
                                         const DsoCost& cost) {
  const int nb = bundle.n_injection_buses();
  Eigen::VectorXd grad_hi(nb), grad_lo(nb);
  for (int i = 0; i < nb; ++i) {
    grad_hi(i) = cost.unit_marginal(result.p_agg_hi(i));
    grad_lo(i) = cost.unit_marginal(-result.p_agg_lo(i));
  }
  const Eigen::VectorXd expected_hi =
      grad_hi + bundle.a_plus.transpose() * result.duals.mu_hi +
      bundle.a_minus.transpose() * result.duals.mu_lo;
  const Eigen::VectorXd expected_lo =
      grad_lo + bundle.a_minus.transpose() * result.duals.mu_hi +
      bundle.a_plus.transpose() * result.duals.mu_lo;

  PriceIdentityReport rep;
  rep.residual_hi =
      (result.duals.lambda_hi - expected_hi).cwiseAbs().maxCoeff();
  rep.residual_lo =
      (result.duals.lambda_lo - expected_lo).cwiseAbs().maxCoeff();
  rep.tolerance = 1e-6;
  if (cost.b_coeff > 0.0) {
    rep.tolerance += result.info.j_segment_width * cost.b_coeff;
  }
  rep.pass = rep.residual_hi <= rep.tolerance && rep.residual_lo <= rep.tolerance;
  return rep;
}

std::vector<DeraPayment> payments(const ClearingResult& result) {
  std::vector<DeraPayment> out;
  out.reserve(result.allocations.size());
  for (const auto& alloc : result.allocations) {
    DeraPayment p;
    p.dera_id = alloc.dera_id;
    for (size_t b = 0; b < alloc.buses.size(); ++b) {
      const int i = alloc.buses[b] - 2;
      p.payment_usd += alloc.cleared[b].c_hi_mw * result.duals.lambda_hi(i) -
                       alloc.cleared[b].c_lo_mw * result.duals.lambda_lo(i);
    }
    out.push_back(p);
  }
  return out;
}

namespace {

double uniform01(std::mt19937_64& rng) {
  return (rng() >> 11) * 0x1.0p-53;
}

}  // namespace

RobustCertificate verify_robust(const ClearingResult& result,
                                const SensitivityBundle& bundle,
                                const UtilityRange& utility_range,
                                int n_samples, std::uint64_t seed) {
  constexpr double kTol = 1e-7;
  const int nb = bundle.n_injection_buses();
  RobustCertificate cert;
  cert.n_samples = n_samples;
  cert.seed = seed;

  // Exact interval check over the total box [P_lo, P_hi]; the balance
  // equations make those exactly sum(C_lo) + p0_lo and sum(C_hi) + p0_hi.
  const IntervalBounds wc =
      worst_case_bounds(bundle, result.p_agg_lo, result.p_agg_hi);
  cert.worst_margin_exact =
      std::min((bundle.limit_hi - wc.hi).minCoeff(),
               (wc.lo - bundle.limit_lo).minCoeff());
  cert.exact_pass = cert.worst_margin_exact >= -kTol;

  // Monte Carlo over independent per-DERA profiles and the utility range.
  std::mt19937_64 rng(seed);
  cert.sampled_pass = true;
  cert.worst_margin_sampled = std::numeric_limits<double>::infinity();
  Eigen::VectorXd total(nb);
  for (int s = 0; s < n_samples && cert.sampled_pass; ++s) {
    total.setZero();
    for (int i = 0; i < nb; ++i) {
      const double u = uniform01(rng);
      total(i) += utility_range.p0_lo_mw(i) +
                  u * (utility_range.p0_hi_mw(i) - utility_range.p0_lo_mw(i));
    }
    for (const auto& alloc : result.allocations) {
      for (size_t b = 0; b < alloc.buses.size(); ++b) {
        const double u = uniform01(rng);
        const AccessInterval& iv = alloc.cleared[b];
        total(alloc.buses[b] - 2) +=
            iv.c_lo_mw + u * (iv.c_hi_mw - iv.c_lo_mw);
      }
    }
    const Eigen::VectorXd w = bundle.a_matrix * total;
    for (int j = 0; j < w.size(); ++j) {
      const double margin =
          std::min(bundle.limit_hi(j) - w(j), w(j) - bundle.limit_lo(j));
      cert.worst_margin_sampled = std::min(cert.worst_margin_sampled, margin);
      if (margin < -kTol) {
        cert.sampled_pass = false;
        RobustCertificate::Violation v;
        v.row = j;
        v.value = w(j);
        v.bound = w(j) > bundle.limit_hi(j) ? bundle.limit_hi(j)
                                            : bundle.limit_lo(j);
        v.total_injection_mw = total;
        cert.violation = v;
        break;
      }
    }
  }
  if (n_samples == 0) cert.worst_margin_sampled = cert.worst_margin_exact;

  // A failing exact check also yields a witness: push each bus to the box
  // corner that maximizes the worst row's violation.
  if (!cert.exact_pass && !cert.violation) {
    int worst_row = 0;
    bool upper = true;
    double worst = std::numeric_limits<double>::infinity();
    for (int j = 0; j < bundle.n_rows(); ++j) {
      const double m_hi = bundle.limit_hi(j) - wc.hi(j);
      const double m_lo = wc.lo(j) - bundle.limit_lo(j);
      if (m_hi < worst) {
        worst = m_hi;
        worst_row = j;
        upper = true;
      }
      if (m_lo < worst) {
        worst = m_lo;
        worst_row = j;
        upper = false;
      }
    }
    RobustCertificate::Violation v;
    v.row = worst_row;
    Eigen::VectorXd profile(nb);
    for (int i = 0; i < nb; ++i) {
      const double a = bundle.a_matrix(worst_row, i);
      const bool take_hi = upper ? a >= 0.0 : a < 0.0;
      profile(i) = take_hi ? result.p_agg_hi(i) : result.p_agg_lo(i);
    }
    v.total_injection_mw = profile;
    v.value = bundle.a_matrix.row(worst_row) * profile;
    v.bound = upper ? bundle.limit_hi(worst_row) : bundle.limit_lo(worst_row);
    cert.violation = v;
  }

  cert.pass = cert.exact_pass && cert.sampled_pass;
  return cert;
}

}  // namespace netacc
