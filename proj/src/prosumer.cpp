#include "netacc/prosumer.hpp"

#include <algorithm>

namespace netacc {

double marginal_utility(const UtilityFn& u, double x) {
  u.validate();
  if (x < 0.0) throw std::invalid_argument("consumption must be nonnegative");
  return std::max(u.a_hat - u.b_hat * x, 0.0);
}

double inverse_marginal(const UtilityFn& u, double y) {
  u.validate();
  if (y < 0.0) throw std::invalid_argument("negative prices are not supported");
  if (y == 0.0) return u.saturation();
  if (y >= u.a_hat) return 0.0;
  return (u.a_hat - y) / u.b_hat;
}

double nem_consumption(const UtilityFn& u, const NemTariff& t,
                       const ProsumerParams& p) {
  t.validate();
  p.validate();
  return std::min(p.d_max, std::max(inverse_marginal(u, t.pi_plus), p.d_min));
}

double nem_surplus(const UtilityFn& u, const NemTariff& t,
                   const ProsumerParams& p) {
  const double d = nem_consumption(u, t, p);
  const double rate = p.r >= d ? t.pi_minus : t.pi_plus;
  return u.value(d) - rate * (d - p.r) - t.pi_zero;
}

}  // namespace netacc
