#include "netacc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <Eigen/Dense>

namespace netacc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-10;
constexpr double kReducedCostTol = 1e-9;
constexpr int kDegenerateStreakLimit = 40;
constexpr int kRefactorInterval = 256;

}  // namespace

int ConvexSeparableProgram::add_variable(double lo, double hi, double obj_coef,
                                         std::string name) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
    throw std::invalid_argument("variables need finite lo <= hi bounds");
  }
  vars_.push_back({lo, hi, obj_coef, std::move(name), {}});
  return static_cast<int>(vars_.size()) - 1;
}

void ConvexSeparableProgram::set_objective_pwl(int var,
                                               std::vector<PwlSegment> segments) {
  Variable& v = vars_.at(var);
  double total = 0.0;
  double prev_slope = kInf;
  std::vector<PwlSegment> kept;
  for (const PwlSegment& s : segments) {
    if (s.width < 0.0) throw std::invalid_argument("segment width must be >= 0");
    if (s.width == 0.0) continue;
    if (s.slope > prev_slope + 1e-12) {
      throw std::invalid_argument("PWL slopes must be nonincreasing (concavity)");
    }
    prev_slope = std::min(prev_slope, s.slope);
    total += s.width;
    kept.push_back(s);
  }
  const double span = v.hi - v.lo;
  if (std::abs(total - span) > 1e-9 * std::max(1.0, std::abs(span))) {
    throw std::invalid_argument("PWL widths must sum to hi - lo");
  }
  if (kept.empty()) kept.push_back({0.0, 0.0});  // fixed variable, zero term
  v.pwl = std::move(kept);
  v.obj = 0.0;
}

int ConvexSeparableProgram::add_row(std::vector<std::pair<int, double>> coefs,
                                    Relation rel, double rhs, std::string tag) {
  for (const auto& [v, c] : coefs) {
    if (v < 0 || v >= n_variables()) {
      throw std::invalid_argument("row references unknown variable");
    }
    (void)c;
  }
  rows_.push_back({std::move(coefs), rel, rhs, std::move(tag)});
  return static_cast<int>(rows_.size()) - 1;
}

int ConvexSeparableProgram::row_by_tag(const std::string& tag) const {
  for (int r = 0; r < n_rows(); ++r) {
    if (rows_[r].tag == tag) return r;
  }
  return -1;
}

void ConvexSeparableProgram::validate() const {
  for (const Variable& v : vars_) {
    if (!std::isfinite(v.lo) || !std::isfinite(v.hi) || v.lo > v.hi) {
      throw std::invalid_argument("variable bounds invalid");
    }
  }
}

double KktResiduals::max() const {
  return std::max({stationarity, feasibility, complementarity});
}

double Solution::dual(const ConvexSeparableProgram& prog,
                      const std::string& tag) const {
  const int r = prog.row_by_tag(tag);
  if (r < 0) throw std::invalid_argument("no row tagged '" + tag + "'");
  return row_duals[r];
}

namespace {

// The program with PWL terms expanded into segment columns and inequality
// rows given slack columns.
struct Lowered {
  int m = 0;
  int n_struct = 0;
  std::vector<std::vector<std::pair<int, double>>> cols;  // (row, coef)
  std::vector<double> lo, hi, obj;
  std::vector<double> rhs;  // adjusted for lowered variables' lower bounds
  std::vector<int> slack_of_row;  // column index, -1 for equalities
  std::vector<int> var_first_col;
  std::vector<int> var_col_count;
  std::vector<bool> var_shifted;  // true when x = lo + sum(segment columns)
};

Lowered lower(const ConvexSeparableProgram& prog) {
  prog.validate();
  const auto& vars = prog.variables();
  const auto& rows = prog.rows();
  Lowered lp;
  lp.m = static_cast<int>(rows.size());
  lp.rhs.resize(lp.m);
  for (int r = 0; r < lp.m; ++r) lp.rhs[r] = rows[r].rhs;

  std::vector<std::vector<std::pair<int, double>>> var_cols(vars.size());
  for (int r = 0; r < lp.m; ++r) {
    for (const auto& [v, c] : rows[r].coefs) {
      if (c != 0.0) var_cols[v].emplace_back(r, c);
    }
  }

  lp.var_first_col.resize(vars.size());
  lp.var_col_count.resize(vars.size());
  lp.var_shifted.resize(vars.size());
  for (size_t v = 0; v < vars.size(); ++v) {
    lp.var_first_col[v] = static_cast<int>(lp.cols.size());
    if (vars[v].pwl.empty()) {
      lp.var_shifted[v] = false;
      lp.var_col_count[v] = 1;
      lp.cols.push_back(var_cols[v]);
      lp.lo.push_back(vars[v].lo);
      lp.hi.push_back(vars[v].hi);
      lp.obj.push_back(vars[v].obj);
    } else {
      lp.var_shifted[v] = true;
      lp.var_col_count[v] = static_cast<int>(vars[v].pwl.size());
      for (const PwlSegment& s : vars[v].pwl) {
        lp.cols.push_back(var_cols[v]);
        lp.lo.push_back(0.0);
        lp.hi.push_back(s.width);
        lp.obj.push_back(s.slope);
      }
      if (vars[v].lo != 0.0) {
        for (const auto& [r, c] : var_cols[v]) lp.rhs[r] -= c * vars[v].lo;
      }
    }
  }
  lp.n_struct = static_cast<int>(lp.cols.size());

  lp.slack_of_row.assign(lp.m, -1);
  for (int r = 0; r < lp.m; ++r) {
    if (rows[r].rel == Relation::Equal) continue;
    const double sign = rows[r].rel == Relation::LessEqual ? 1.0 : -1.0;
    lp.slack_of_row[r] = static_cast<int>(lp.cols.size());
    lp.cols.push_back({{r, sign}});
    lp.lo.push_back(0.0);
    lp.hi.push_back(kInf);
    lp.obj.push_back(0.0);
  }
  return lp;
}

enum class ColStatus : uint8_t { Basic, AtLower, AtUpper };

class Simplex {
 public:
  explicit Simplex(const Lowered& lp) : lp_(lp), m_(lp.m) {
    const int n = static_cast<int>(lp.cols.size());
    lo_ = lp.lo;
    hi_ = lp.hi;
    obj_.assign(n, 0.0);
    x_.resize(n);
    status_.assign(n, ColStatus::AtLower);
    for (int j = 0; j < n; ++j) x_[j] = lo_[j];
    basis_.assign(m_, -1);
    binv_ = Eigen::MatrixXd::Identity(m_, m_);
  }

  // Returns false when infeasible; *bad_row then names a violated row.
  bool run(int* bad_row, double* infeasibility, int* iterations) {
    Eigen::VectorXd res = initial_residual();
    std::vector<int> artificials;
    for (int r = 0; r < m_; ++r) {
      const int s = lp_.slack_of_row[r];
      const double sign = s >= 0 ? lp_.cols[s][0].second : 0.0;
      const double slack_val = s >= 0 ? res(r) * sign : -1.0;
      if (s >= 0 && slack_val >= 0.0) {
        basis_[r] = s;
        status_[s] = ColStatus::Basic;
        x_[s] = slack_val;
      } else {
        const int a = add_artificial(r, res(r) >= 0.0 ? 1.0 : -1.0);
        artificials.push_back(a);
        basis_[r] = a;
        status_[a] = ColStatus::Basic;
        x_[a] = std::abs(res(r));
      }
    }

    int iters = 0;
    if (!artificials.empty()) {
      for (int a : artificials) obj_[a] = -1.0;
      iterate(&iters);
      double infeas = 0.0;
      for (int a : artificials) infeas += x_[a];
      if (infeas > 1e-7) {
        *infeasibility = infeas;
        *bad_row = worst_artificial_row();
        *iterations = iters;
        return false;
      }
      drive_out_artificials();
      for (int a : artificials) {
        obj_[a] = 0.0;
        lo_[a] = hi_[a] = 0.0;
        x_[a] = 0.0;
      }
    }

    for (int j = 0; j < static_cast<int>(lp_.cols.size()); ++j) obj_[j] = lp_.obj[j];
    iterate(&iters);
    *iterations = iters;
    return true;
  }

  const std::vector<double>& x() const { return x_; }
  const Eigen::VectorXd& duals() const { return last_y_; }

 private:
  int n_cols() const { return static_cast<int>(x_.size()); }
  bool is_artificial(int j) const { return j >= static_cast<int>(lp_.cols.size()); }

  const std::vector<std::pair<int, double>>& column(int j) const {
    return is_artificial(j) ? artificial_cols_[j - lp_.cols.size()] : lp_.cols[j];
  }

  int add_artificial(int row, double sign) {
    artificial_cols_.push_back({{row, sign}});
    x_.push_back(0.0);
    lo_.push_back(0.0);
    hi_.push_back(kInf);
    obj_.push_back(0.0);
    status_.push_back(ColStatus::AtLower);
    return n_cols() - 1;
  }

  Eigen::VectorXd initial_residual() const {
    Eigen::VectorXd res = Eigen::Map<const Eigen::VectorXd>(lp_.rhs.data(), m_);
    for (int j = 0; j < static_cast<int>(lp_.cols.size()); ++j) {
      if (x_[j] == 0.0) continue;
      for (const auto& [r, c] : lp_.cols[j]) res(r) -= c * x_[j];
    }
    return res;
  }

  Eigen::VectorXd ftran(int j) const {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m_);
    for (const auto& [r, c] : column(j)) w += c * binv_.col(r);
    return w;
  }

  void refactorize() {
    Eigen::MatrixXd basis_mat = Eigen::MatrixXd::Zero(m_, m_);
    for (int r = 0; r < m_; ++r) {
      for (const auto& [row, c] : column(basis_[r])) basis_mat(row, r) = c;
    }
    binv_ = Eigen::PartialPivLU<Eigen::MatrixXd>(basis_mat).inverse();
    recompute_basic_values();
  }

  void recompute_basic_values() {
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(lp_.rhs.data(), m_);
    for (int j = 0; j < n_cols(); ++j) {
      if (status_[j] == ColStatus::Basic || x_[j] == 0.0) continue;
      for (const auto& [r, c] : column(j)) rhs(r) -= c * x_[j];
    }
    const Eigen::VectorXd xb = binv_ * rhs;
    for (int r = 0; r < m_; ++r) x_[basis_[r]] = xb(r);
  }

  Eigen::VectorXd compute_duals() const {
    Eigen::VectorXd cb(m_);
    for (int r = 0; r < m_; ++r) cb(r) = obj_[basis_[r]];
    return binv_.transpose() * cb;
  }

  // Dantzig pricing; Bland's rule (lowest eligible index) when asked.
  // Segment columns of one lowered variable share their constraint column,
  // so y^T a is computed once per variable.
  int price(const Eigen::VectorXd& y, bool bland) const {
    int best = -1;
    double best_score = kReducedCostTol;
    auto consider = [&](int j, double ya) -> bool {
      if (status_[j] == ColStatus::Basic || lo_[j] == hi_[j]) return false;
      const double d = obj_[j] - ya;
      const bool eligible =
          (status_[j] == ColStatus::AtLower && d > kReducedCostTol) ||
          (status_[j] == ColStatus::AtUpper && d < -kReducedCostTol);
      if (!eligible) return false;
      if (bland) {
        best = j;
        return true;
      }
      if (std::abs(d) > best_score) {
        best_score = std::abs(d);
        best = j;
      }
      return false;
    };
    for (size_t v = 0; v < lp_.var_first_col.size(); ++v) {
      const int first = lp_.var_first_col[v];
      const int count = lp_.var_col_count[v];
      bool all_pinned = true;
      for (int s = 0; s < count && all_pinned; ++s) {
        all_pinned = status_[first + s] == ColStatus::Basic ||
                     lo_[first + s] == hi_[first + s];
      }
      if (all_pinned) continue;
      double ya = 0.0;
      for (const auto& [r, c] : lp_.cols[first]) ya += y(r) * c;
      for (int s = 0; s < count; ++s) {
        if (consider(first + s, ya)) return best;
      }
    }
    for (int j = lp_.n_struct; j < n_cols(); ++j) {  // slacks and artificials
      double ya = 0.0;
      for (const auto& [r, c] : column(j)) ya += y(r) * c;
      if (consider(j, ya)) return best;
    }
    return best;
  }

  void pivot_update(int leave_row, const Eigen::VectorXd& w) {
    const double piv = w(leave_row);
    binv_.row(leave_row) /= piv;
    Eigen::VectorXd wz = w;
    wz(leave_row) = 0.0;
    binv_.noalias() -= wz * binv_.row(leave_row);
  }

  void iterate(int* iterations) {
    refactorize();
    Eigen::VectorXd y = compute_duals();
    int degen_streak = 0;
    int since_refactor = 0;
    int confirm_rounds = 0;
    while (true) {
      const bool bland = degen_streak > kDegenerateStreakLimit;
      const int q = price(y, bland);
      if (q < 0) {
        refactorize();
        y = compute_duals();
        last_y_ = y;
        if (price(last_y_, false) < 0 || ++confirm_rounds > 8) return;
        continue;
      }

      const double dir = status_[q] == ColStatus::AtLower ? 1.0 : -1.0;
      const Eigen::VectorXd w = ftran(q);

      // Ratio test: smallest step that drives a basic variable to a bound,
      // against the entering variable's own span. Ties go to the largest
      // pivot magnitude, then the lowest row index; under Bland's rule the
      // tie goes to the smallest basic variable index (termination).
      const double t_own = hi_[q] - lo_[q];
      double t_min = kInf;
      int leave_row = -1;
      double best_pivot = 0.0;
      bool leave_to_lower = true;
      for (int r = 0; r < m_; ++r) {
        const double g = dir * w(r);
        const int b = basis_[r];
        double t;
        bool to_lower;
        if (g > kPivotTol) {
          t = (x_[b] - lo_[b]) / g;
          to_lower = true;
        } else if (g < -kPivotTol) {
          if (hi_[b] == kInf) continue;
          t = (hi_[b] - x_[b]) / (-g);
          to_lower = false;
        } else {
          continue;
        }
        t = std::max(t, 0.0);
        const bool tie = t <= t_min + 1e-12;
        const bool better =
            bland ? (tie && (leave_row < 0 || b < basis_[leave_row]))
                  : (tie && std::abs(w(r)) > best_pivot);
        if (t < t_min - 1e-12 || better) {
          t_min = std::min(t, t_min);
          leave_row = r;
          best_pivot = std::abs(w(r));
          leave_to_lower = to_lower;
        }
      }

      ++(*iterations);
      if (t_own <= t_min) {
        if (t_own == kInf) {
          throw std::logic_error(
              "unbounded direction in a box-constrained program (internal fault)");
        }
        // Bound flip, no basis change.
        for (int r = 0; r < m_; ++r) x_[basis_[r]] -= t_own * dir * w(r);
        x_[q] = dir > 0 ? hi_[q] : lo_[q];
        status_[q] = dir > 0 ? ColStatus::AtUpper : ColStatus::AtLower;
        degen_streak = 0;
        continue;
      }

      const double t = t_min;
      for (int r = 0; r < m_; ++r) x_[basis_[r]] -= t * dir * w(r);
      x_[q] = (status_[q] == ColStatus::AtLower ? lo_[q] : hi_[q]) + t * dir;

      double d_enter = obj_[q];
      for (const auto& [r, c] : column(q)) d_enter -= y(r) * c;

      const int leaving = basis_[leave_row];
      status_[leaving] = leave_to_lower ? ColStatus::AtLower : ColStatus::AtUpper;
      x_[leaving] = leave_to_lower ? lo_[leaving] : hi_[leaving];
      status_[q] = ColStatus::Basic;
      basis_[leave_row] = q;
      pivot_update(leave_row, w);

      degen_streak = t <= 1e-11 ? degen_streak + 1 : 0;
      if (++since_refactor >= kRefactorInterval) {
        refactorize();
        y = compute_duals();
        since_refactor = 0;
      } else {
        // Rank-one dual update: y' = y + d_q * (post-pivot B^-1 row r*).
        y += d_enter * binv_.row(leave_row).transpose();
      }
    }
  }

  // Pivots basic zero-valued artificials onto structural columns where
  // possible; rows with no usable pivot are redundant and keep their
  // artificial pinned at zero.
  void drive_out_artificials() {
    for (int r = 0; r < m_; ++r) {
      if (!is_artificial(basis_[r])) continue;
      const Eigen::VectorXd beta = binv_.row(r).transpose();
      int found = -1;
      for (int j = 0; j < static_cast<int>(lp_.cols.size()); ++j) {
        if (status_[j] == ColStatus::Basic || lo_[j] == hi_[j]) continue;
        double wr = 0.0;
        for (const auto& [row, c] : lp_.cols[j]) wr += beta(row) * c;
        if (std::abs(wr) > 1e-8) {
          found = j;
          break;
        }
      }
      if (found < 0) continue;
      const Eigen::VectorXd w = ftran(found);
      const int leaving = basis_[r];
      status_[leaving] = ColStatus::AtLower;
      x_[leaving] = 0.0;
      status_[found] = ColStatus::Basic;
      basis_[r] = found;
      pivot_update(r, w);
      recompute_basic_values();
    }
  }

  int worst_artificial_row() const {
    int worst = 0;
    double worst_val = -1.0;
    for (int r = 0; r < m_; ++r) {
      if (is_artificial(basis_[r]) && x_[basis_[r]] > worst_val) {
        worst_val = x_[basis_[r]];
        worst = r;
      }
    }
    return worst;
  }

  const Lowered& lp_;
  int m_;
  std::vector<std::vector<std::pair<int, double>>> artificial_cols_;
  std::vector<double> x_, lo_, hi_, obj_;
  std::vector<ColStatus> status_;
  std::vector<int> basis_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd last_y_;
};

}  // namespace

Solution solve(const ConvexSeparableProgram& prog) {
  const Lowered lp = lower(prog);
  Simplex simplex(lp);

  Solution sol;
  int bad_row = -1;
  int iterations = 0;
  double infeas = 0.0;
  if (!simplex.run(&bad_row, &infeas, &iterations)) {
    sol.status = Solution::Status::Infeasible;
    sol.iterations = iterations;
    sol.infeasibility = infeas;
    sol.infeasible_row_tag = prog.rows()[bad_row].tag.empty()
                                 ? "row " + std::to_string(bad_row)
                                 : prog.rows()[bad_row].tag;
    return sol;
  }

  sol.status = Solution::Status::Optimal;
  sol.iterations = iterations;
  const std::vector<double>& xcol = simplex.x();

  const auto& vars = prog.variables();
  sol.x.resize(static_cast<Eigen::Index>(vars.size()));
  double objective = 0.0;
  for (size_t v = 0; v < vars.size(); ++v) {
    const int first = lp.var_first_col[v];
    const int count = lp.var_col_count[v];
    if (!lp.var_shifted[v]) {
      sol.x(v) = xcol[first];
      objective += vars[v].obj * xcol[first];
      continue;
    }
    double val = vars[v].lo;
    for (int s = 0; s < count; ++s) {
      val += xcol[first + s];
      objective += lp.obj[first + s] * xcol[first + s];
    }
    sol.x(v) = val;
    for (int s = 0; s + 1 < count; ++s) {
      const bool later_used = xcol[first + s + 1] > 1e-9;
      const bool this_unsaturated = xcol[first + s] < lp.hi[first + s] - 1e-9;
      if (later_used && this_unsaturated &&
          std::abs(lp.obj[first + s] - lp.obj[first + s + 1]) > 1e-12) {
        sol.pwl_order_ok = false;
      }
    }
  }
  sol.objective = objective;

  const Eigen::VectorXd& y = simplex.duals();
  sol.row_duals.assign(y.data(), y.data() + y.size());

  // LP dual value on the lowered form: y^T rhs plus the bound terms picked
  // by the reduced-cost signs.
  double dual_obj = 0.0;
  for (int r = 0; r < lp.m; ++r) dual_obj += y(r) * lp.rhs[r];
  for (size_t j = 0; j < lp.cols.size(); ++j) {
    double d = lp.obj[j];
    for (const auto& [r, c] : lp.cols[j]) d -= y(r) * c;
    if (d > 0.0 && lp.hi[j] != std::numeric_limits<double>::infinity()) {
      dual_obj += d * lp.hi[j];
    } else if (d < 0.0) {
      dual_obj += d * lp.lo[j];
    }
  }
  sol.dual_objective = dual_obj;

  sol.residuals = kkt_residuals(prog, sol);
  return sol;
}

KktResiduals kkt_residuals(const ConvexSeparableProgram& prog,
                           const Solution& sol) {
  KktResiduals res;
  if (sol.status != Solution::Status::Optimal) return res;
  const auto& vars = prog.variables();
  const auto& rows = prog.rows();

  std::vector<double> ya(vars.size(), 0.0);  // (A^T y) per variable
  for (size_t r = 0; r < rows.size(); ++r) {
    double val = 0.0;
    for (const auto& [v, c] : rows[r].coefs) {
      val += c * sol.x(v);
      ya[v] += sol.row_duals[r] * c;
    }
    const double y = sol.row_duals[r];
    switch (rows[r].rel) {
      case Relation::Equal:
        res.feasibility = std::max(res.feasibility, std::abs(val - rows[r].rhs));
        break;
      case Relation::LessEqual:
        res.feasibility = std::max(res.feasibility, val - rows[r].rhs);
        res.complementarity =
            std::max(res.complementarity, std::abs(y * (rows[r].rhs - val)));
        res.stationarity = std::max(res.stationarity, -y);  // y >= 0 required
        break;
      case Relation::GreaterEqual:
        res.feasibility = std::max(res.feasibility, rows[r].rhs - val);
        res.complementarity =
            std::max(res.complementarity, std::abs(y * (val - rows[r].rhs)));
        res.stationarity = std::max(res.stationarity, y);  // y <= 0 required
        break;
    }
  }
  res.feasibility = std::max(res.feasibility, 0.0);
  res.stationarity = std::max(res.stationarity, 0.0);

  // Stationarity: some supergradient of the objective term must match A^T y,
  // up to the bound cone at the variable's active bound.
  for (size_t v = 0; v < vars.size(); ++v) {
    const double x = sol.x(v);
    res.feasibility =
        std::max({res.feasibility, vars[v].lo - x, x - vars[v].hi});

    double g_right, g_left;  // derivative just above / below x
    if (vars[v].pwl.empty()) {
      g_right = g_left = vars[v].obj;
    } else {
      g_right = -kInf;
      g_left = kInf;
      double pos = vars[v].lo;
      for (size_t s = 0; s < vars[v].pwl.size(); ++s) {
        const double seg_end = pos + vars[v].pwl[s].width;
        if (x > pos + 1e-9 && x < seg_end - 1e-9) {
          g_right = g_left = vars[v].pwl[s].slope;  // segment interior
          break;
        }
        if (std::abs(x - pos) <= 1e-9) {  // at this segment's start
          g_right = vars[v].pwl[s].slope;
          g_left = s == 0 ? kInf : vars[v].pwl[s - 1].slope;
          break;
        }
        pos = seg_end;
      }
      if (g_right == -kInf && std::abs(x - vars[v].hi) <= 1e-9) {
        g_left = vars[v].pwl.back().slope;
        g_right = -kInf;  // no room above
      }
    }

    const bool at_lo = x <= vars[v].lo + 1e-9;
    const bool at_hi = x >= vars[v].hi - 1e-9;
    double viol = 0.0;
    if (at_lo && at_hi) {
      viol = 0.0;
    } else if (at_lo) {
      viol = std::max(0.0, g_right - ya[v]);
    } else if (at_hi) {
      viol = std::max(0.0, ya[v] - g_left);
    } else {
      viol = std::max({0.0, g_right - ya[v], ya[v] - g_left});
    }
    res.stationarity = std::max(res.stationarity, viol);
  }
  return res;
}

void dump_standard_form(const ConvexSeparableProgram& prog, std::ostream& os) {
  const auto& vars = prog.variables();
  os << "maximize over " << vars.size() << " variables, " << prog.n_rows()
     << " rows\n";
  for (size_t v = 0; v < vars.size(); ++v) {
    os << "  x" << v;
    if (!vars[v].name.empty()) os << " (" << vars[v].name << ")";
    os << " in [" << vars[v].lo << ", " << vars[v].hi << "]";
    if (vars[v].pwl.empty()) {
      os << " obj " << vars[v].obj << "\n";
    } else {
      os << " pwl";
      for (const auto& s : vars[v].pwl) {
        os << " [w=" << s.width << ",m=" << s.slope << "]";
      }
      os << "\n";
    }
  }
  for (const auto& row : prog.rows()) {
    os << "  ";
    for (const auto& [v, c] : row.coefs) {
      os << (c >= 0 ? "+" : "") << c << "*x" << v << " ";
    }
    os << (row.rel == Relation::Equal        ? "=="
           : row.rel == Relation::LessEqual ? "<="
                                            : ">=")
       << " " << row.rhs;
    if (!row.tag.empty()) os << "   # " << row.tag;
    os << "\n";
  }
}

}  // namespace netacc
