#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace netacc {

enum class Relation { Equal, LessEqual, GreaterEqual };

struct PwlSegment {
  double width = 0.0;  // >= 0
  double slope = 0.0;  // nonincreasing across segments (concavity)
};

// Maximization of a separable concave piecewise-linear objective over linear
// constraints and finite variable boxes. Multi-segment objective terms are
// lowered to segment variables at solve time; concavity makes that lowering
// exact. A PWL term is worth 0 at the variable's lower bound.
class ConvexSeparableProgram {
 public:
  int add_variable(double lo, double hi, double obj_coef = 0.0,
                   std::string name = {});

  // Replaces the variable's linear objective with a concave PWL term over
  // [lo, hi]; segment widths must sum to hi - lo.
  void set_objective_pwl(int var, std::vector<PwlSegment> segments);

  int add_row(std::vector<std::pair<int, double>> coefs, Relation rel,
              double rhs, std::string tag = {});

  int n_variables() const { return static_cast<int>(vars_.size()); }
  int n_rows() const { return static_cast<int>(rows_.size()); }
  const std::string& row_tag(int row) const { return rows_[row].tag; }
  int row_by_tag(const std::string& tag) const;  // -1 when absent

  void validate() const;

  struct Variable {
    double lo, hi, obj;
    std::string name;
    std::vector<PwlSegment> pwl;  // empty = plain linear objective
  };
  struct Row {
    std::vector<std::pair<int, double>> coefs;
    Relation rel;
    double rhs;
    std::string tag;
  };
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Row>& rows() const { return rows_; }

 private:
  std::vector<Variable> vars_;
  std::vector<Row> rows_;
};

struct KktResiduals {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;
  double max() const;
};

struct Solution {
  enum class Status { Optimal, Infeasible };
  Status status = Status::Infeasible;
  Eigen::VectorXd x;               // per original variable
  std::vector<double> row_duals;   // d(objective)/d(rhs), maximization sense
  double objective = 0.0;
  double dual_objective = 0.0;     // for the strong-duality check
  KktResiduals residuals;
  int iterations = 0;
  bool pwl_order_ok = true;        // no segment used before its predecessors
  std::string infeasible_row_tag;  // a violated row at the phase-1 optimum
  double infeasibility = 0.0;

  double dual(const ConvexSeparableProgram& prog, const std::string& tag) const;
};

/// Primal simplex on the lowered LP. Deterministic: Dantzig pricing with a
/// Bland fallback once pivots stay degenerate. Duals come from a freshly
/// refactorized basis at optimality.
Solution solve(const ConvexSeparableProgram& prog);

/// Recomputes stationarity, primal feasibility and complementary slackness
/// from (x, duals) alone, independent of the solve path.
KktResiduals kkt_residuals(const ConvexSeparableProgram& prog,
                           const Solution& sol);

void dump_standard_form(const ConvexSeparableProgram& prog, std::ostream& os);

}  // namespace netacc
