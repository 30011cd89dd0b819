#include "netacc/dera.hpp"

#include <algorithm>
#include <cmath>

namespace netacc {

void DeraPortfolio::validate() const {
  if (!(zeta > 1.0)) throw std::invalid_argument("zeta must exceed 1");
  if (lmp < 0.0) throw std::invalid_argument("negative LMP is not supported");
  if (!(kwh_per_mw > 0.0)) throw std::invalid_argument("kwh_per_mw must be positive");
  tariff.validate();
  for (const ProsumerRecord& rec : prosumers) {
    rec.utility.validate();
    rec.params.validate();
    if (!(rec.mass > 0.0)) throw std::invalid_argument("prosumer mass must be positive");
  }
}

ProsumerDecision optimal_prosumer_decision(const UtilityFn& u,
                                           const ProsumerParams& p,
                                           const NemTariff& tariff, double zeta,
                                           double lmp, double c_lo_kwh,
                                           double c_hi_kwh) {
  u.validate();
  p.validate();
  if (c_lo_kwh > 0.0 || c_hi_kwh < 0.0) {
    throw std::invalid_argument("access interval must satisfy c_lo <= 0 <= c_hi");
  }
  const double r = p.r;
  if (r - c_hi_kwh > p.d_max || r - c_lo_kwh < p.d_min) {
    throw std::invalid_argument(
        "infeasible access: no consumption in [d_min, d_max] keeps r - d inside "
        "[c_lo, c_hi]");
  }

  const double v_inv = inverse_marginal(u, lmp);
  const double d_hat = std::min(p.d_max, std::max(v_inv, p.d_min));
  const double s_nem = nem_surplus(u, tariff, p);

  ProsumerDecision out;
  out.d_star = std::min(r - c_lo_kwh, std::max(d_hat, r - c_hi_kwh));
  out.omega = u.value(out.d_star) - zeta * s_nem;
  out.h = u.value(d_hat) - lmp * (d_hat - r);

  const double q_minus = c_hi_kwh + std::max(v_inv, p.d_min);
  const double q_plus = c_lo_kwh + std::min(v_inv, p.d_max);
  out.phi_lo =
      r <= q_plus ? u.value(r - c_lo_kwh) + lmp * c_lo_kwh - out.h : 0.0;
  out.phi_hi =
      q_minus <= r ? u.value(r - c_hi_kwh) + lmp * c_hi_kwh - out.h : 0.0;
  out.surplus = out.omega - lmp * (out.d_star - r);
  return out;
}

DeraDecision optimal_decision(const DeraPortfolio& port,
                              std::span<const AccessInterval> access) {
  port.validate();
  if (access.size() != port.prosumers.size()) {
    throw std::invalid_argument("one access interval per served bus required");
  }
  DeraDecision out;
  out.per_bus.reserve(port.prosumers.size());
  for (size_t i = 0; i < port.prosumers.size(); ++i) {
    access[i].validate();
    const ProsumerRecord& rec = port.prosumers[i];
    const double c_lo = access[i].c_lo_mw * port.kwh_per_mw / rec.mass;
    const double c_hi = access[i].c_hi_mw * port.kwh_per_mw / rec.mass;
    BusDecision bd;
    bd.bus = rec.bus;
    bd.mass = rec.mass;
    bd.per_prosumer = optimal_prosumer_decision(rec.utility, rec.params,
                                                port.tariff, port.zeta, port.lmp,
                                                c_lo, c_hi);
    out.phi_total += rec.mass * bd.per_prosumer.surplus;
    out.per_bus.push_back(bd);
  }
  return out;
}

namespace {

// Ternary search of a concave function on [lo, hi]; endpoints included.
double maximize_concave(double lo, double hi, const auto& f) {
  double a = lo, b = hi;
  for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, std::abs(b)); ++it) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (f(m1) < f(m2)) {
      a = m1;
    } else {
      b = m2;
    }
  }
  const double mid = 0.5 * (a + b);
  return std::max({f(mid), f(lo), f(hi)});
}

}  // namespace

double oracle_surplus(const DeraPortfolio& port,
                      std::span<const AccessInterval> access) {
  port.validate();
  if (access.size() != port.prosumers.size()) {
    throw std::invalid_argument("one access interval per served bus required");
  }
  double total = 0.0;
  for (size_t i = 0; i < port.prosumers.size(); ++i) {
    access[i].validate();
    const ProsumerRecord& rec = port.prosumers[i];
    const UtilityFn& u = rec.utility;
    const ProsumerParams& p = rec.params;
    const double c_lo = access[i].c_lo_mw * port.kwh_per_mw / rec.mass;
    const double c_hi = access[i].c_hi_mw * port.kwh_per_mw / rec.mass;
    const double lo = std::max(p.d_min, p.r - c_hi);
    const double hi = std::min(p.d_max, p.r - c_lo);
    if (lo > hi) {
      throw std::invalid_argument("infeasible access interval at bus " +
                                  std::to_string(rec.bus));
    }
    const double s_nem = nem_surplus(u, port.tariff, p);
    // With the payment constraint binding, omega = U(d) - zeta S_NEM and the
    // per-prosumer objective reduces to a concave function of d alone.
    auto objective = [&](double d) {
      return u.value(d) - port.zeta * s_nem - port.lmp * (d - p.r);
    };
    total += rec.mass * maximize_concave(lo, hi, objective);
  }
  return total;
}

namespace {

// Benefit at one bus as a function of the access magnitude, mass-aggregated:
// mass * phi(c/mass) with phi the single-prosumer closed form.
class BusBenefit {
 public:
  BusBenefit(const ProsumerRecord& rec, double lmp, Direction dir)
      : rec_(rec), lmp_(lmp), dir_(dir) {
    const double v_inv = inverse_marginal(rec.utility, lmp);
    const double d_hat =
        std::min(rec.params.d_max, std::max(v_inv, rec.params.d_min));
    h_ = rec.utility.value(d_hat) - lmp * (d_hat - rec.params.r);
    knee_lo_ = std::max(v_inv, rec.params.d_min);   // injection activation
    knee_hi_ = std::min(v_inv, rec.params.d_max);   // withdrawal activation
  }

  // magnitude_kwh >= 0, per single prosumer.
  double single(double magnitude_kwh) const {
    const double r = rec_.params.r;
    if (dir_ == Direction::Injection) {
      const double c = magnitude_kwh;
      if (c + knee_lo_ <= r) {
        return rec_.utility.value(r - c) + lmp_ * c - h_;
      }
      return 0.0;
    }
    const double c = -magnitude_kwh;  // signed withdrawal capacity
    if (r <= c + knee_hi_) {
      return rec_.utility.value(r - c) + lmp_ * c - h_;
    }
    return 0.0;
  }

  double aggregated(double magnitude_kwh) const {
    return rec_.mass * single(magnitude_kwh / rec_.mass);
  }

 private:
  const ProsumerRecord& rec_;
  double lmp_;
  Direction dir_;
  double h_ = 0.0;
  double knee_lo_ = 0.0;
  double knee_hi_ = 0.0;
};

BidCurve make_curve(const ProsumerRecord& rec, double lmp, double kwh_per_mw,
                    Direction dir, double cap_mw, int n_segments) {
  BidCurve curve;
  curve.bus = rec.bus;
  curve.direction = dir;
  curve.kwh_per_mw = kwh_per_mw;
  const BusBenefit benefit(rec, lmp, dir);
  curve.value_at_zero = benefit.aggregated(0.0);
  if (cap_mw <= 0.0) return curve;

  double prev_value = curve.value_at_zero;
  double prev_cap = 0.0;
  double prev_slope = std::numeric_limits<double>::infinity();
  for (int s = 1; s <= n_segments; ++s) {
    const double cap = cap_mw * s / n_segments;
    const double value = benefit.aggregated(cap * kwh_per_mw);
    double slope = (value - prev_value) / ((cap - prev_cap) * kwh_per_mw);
    if (std::abs(slope) < 1e-15) slope = 0.0;
    if (slope > prev_slope) {
      if (slope - prev_slope > 1e-9) {
        throw std::logic_error("bid curve lost concavity; bad utility inputs?");
      }
      slope = prev_slope;  // snap rounding noise
    }
    if (!curve.breakpoints.empty() &&
        curve.breakpoints.back().marginal_usd_per_kwh == slope) {
      curve.breakpoints.back().capacity_mw = cap;  // merge equal steps
    } else {
      curve.breakpoints.push_back({cap, slope});
    }
    prev_value = value;
    prev_cap = cap;
    prev_slope = slope;
  }
  return curve;
}

}  // namespace

std::vector<BidCurve> bid_curves(const DeraPortfolio& port, AccessInterval c_max,
                                 int n_segments) {
  port.validate();
  c_max.validate();
  if (n_segments < 1) throw std::invalid_argument("n_segments must be >= 1");
  std::vector<BidCurve> curves;
  curves.reserve(2 * port.prosumers.size());
  for (const ProsumerRecord& rec : port.prosumers) {
    curves.push_back(make_curve(rec, port.lmp, port.kwh_per_mw,
                                Direction::Injection, c_max.c_hi_mw, n_segments));
    curves.push_back(make_curve(rec, port.lmp, port.kwh_per_mw,
                                Direction::Withdrawal, -c_max.c_lo_mw,
                                n_segments));
  }
  return curves;
}

double pwl_benefit_value(const BidCurve& curve, double capacity_mw) {
  const double mag = std::abs(capacity_mw);
  if (mag > curve.capacity_max() + 1e-9) {
    throw std::invalid_argument("capacity beyond the bid curve domain");
  }
  double value = 0.0;
  double prev_cap = 0.0;
  for (const auto& bp : curve.breakpoints) {
    const double width = std::min(mag, bp.capacity_mw) - prev_cap;
    if (width <= 0.0) break;
    value += bp.marginal_usd_per_kwh * width * curve.kwh_per_mw;
    prev_cap = bp.capacity_mw;
  }
  return value;
}

double pwl_marginal_at(const BidCurve& curve, double capacity_mw) {
  const double mag = std::abs(capacity_mw);
  for (const auto& bp : curve.breakpoints) {
    if (mag <= bp.capacity_mw) return bp.marginal_usd_per_kwh;
  }
  return 0.0;
}

}  // namespace netacc
