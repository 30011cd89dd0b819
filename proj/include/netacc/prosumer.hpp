#pragma once

#include <stdexcept>

namespace netacc {

// Capped quadratic household utility: U(x) = a x - (b/2) x^2 up to the
// saturation point a/b, constant a^2/(2b) beyond. Concave, nondecreasing,
// C^1 at the knee.
struct UtilityFn {
  double a_hat = 0.0;  // marginal utility intercept, $/kWh
  double b_hat = 0.0;  // marginal utility slope, $/kWh^2

  void validate() const {
    if (!(a_hat > 0.0) || !(b_hat > 0.0)) {
      throw std::invalid_argument("utility coefficients must be positive");
    }
  }

  double saturation() const { return a_hat / b_hat; }

  double value(double x) const {
    if (x < 0.0) throw std::invalid_argument("consumption must be nonnegative");
    if (x >= saturation()) return a_hat * a_hat / (2.0 * b_hat);
    return a_hat * x - 0.5 * b_hat * x * x;
  }
};

// NEM X tariff (pi_plus, pi_minus, pi_zero): retail rate, sell rate,
// connection charge. Negative rates are rejected rather than interpreted.
struct NemTariff {
  double pi_plus = 0.0;   // $/kWh
  double pi_minus = 0.0;  // $/kWh
  double pi_zero = 0.0;   // $

  void validate() const {
    if (pi_plus < 0.0 || pi_minus < 0.0) {
      throw std::invalid_argument("negative tariff rates are not supported");
    }
    if (pi_plus < pi_minus) {
      throw std::invalid_argument("retail rate must be >= sell rate");
    }
  }
};

struct ProsumerParams {
  double d_min = 0.0;  // kWh
  double d_max = 0.0;  // kWh
  double r = 0.0;      // behind-the-meter DG output, kWh

  void validate() const {
    if (d_min < 0.0 || d_max < d_min) {
      throw std::invalid_argument("need 0 <= d_min <= d_max");
    }
    if (r < 0.0) throw std::invalid_argument("DG output must be nonnegative");
  }
};

/// V(x) = max(a - b x, 0).
double marginal_utility(const UtilityFn& u, double x);

/// Inverse of V on [0, inf): (a - y)/b for 0 < y <= a, the saturation point
/// at y = 0, and 0 above a. Negative prices are rejected.
double inverse_marginal(const UtilityFn& u, double y);

/// Optimal NEM consumption min{d_max, max{V^-1(pi_plus), d_min}};
/// independent of r.
double nem_consumption(const UtilityFn& u, const NemTariff& t,
                       const ProsumerParams& p);

/// Optimal prosumer surplus under NEM X. With d* the NEM consumption:
/// U(d*) - pi_minus (d* - r) - pi_zero when r >= d* (net producer),
/// U(d*) - pi_plus  (d* - r) - pi_zero otherwise.
double nem_surplus(const UtilityFn& u, const NemTariff& t,
                   const ProsumerParams& p);

}  // namespace netacc
