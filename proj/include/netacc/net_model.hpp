#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace netacc {

/// Thrown by the MATPOWER reader; `line_no` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, int line_no = 0)
      : std::runtime_error(std::move(message)), line_no(line_no) {}
  int line_no;
};

struct Bus {
  int id = 0;                    // 1-based, bus 1 is the substation/reference
  double base_voltage_sq = 1.0;  // u_base, p.u.^2 (only the reference value is used)
};

struct Line {
  int from_bus = 0;  // child end (oriented toward the root)
  int to_bus = 0;    // parent end
  double resistance_pu = 0.0;
  double reactance_pu = 0.0;
  std::optional<double> flow_limit_mw;  // absent = no thermal limit given
};

// Radial distribution network, buses renumbered 1..N with bus 1 the root.
// Lines keep the source ordering; each non-root bus is the `from` end of
// exactly one line.
struct RadialNetwork {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  double base_mva = 1.0;
  double power_factor = 0.98;
  double power_factor_alpha = 0.0;  // alpha = sqrt(1-pf^2)/pf, stored explicitly
  double u_base = 1.0;

  int bus_count() const { return static_cast<int>(buses.size()); }
  int line_count() const { return static_cast<int>(lines.size()); }

  /// Index of the line whose child end is `bus` (bus 2..N -> 0..N-2).
  int parent_line_of(int bus) const;

  /// Line indices on the path from `bus` to the root, child side first.
  std::vector<int> root_path(int bus) const;

  void set_power_factor(double pf);

  /// Checks connectivity, radiality, orientation and id compaction.
  void validate() const;
};

double alpha_from_power_factor(double pf);

/// Which multiplier convention the voltage limits use: OnSquared applies
/// (1 +/- dev) to the squared base voltage directly, OnMagnitude squares
/// (1 +/- dev) first.
enum class VoltageBoundConvention { OnSquared, OnMagnitude };

struct SensitivityOptions {
  double voltage_dev = 0.05;
  VoltageBoundConvention bounds_on = VoltageBoundConvention::OnSquared;
  // Per-line MW limits overriding the network's own; required for any line
  // without a limit of its own.
  std::optional<std::vector<double>> flow_limits_mw;
};

// Linear sensitivity model of a radial network.
//
//   [ f ]   [ S~                      ]
//   [   ] = [                         ] (p + p0)
//   [ u']   [ 2 S~^T (R + aX) / base  ]
//
// with p in MW, f in MW and u' the squared-voltage deviation from u_base in
// p.u.^2. S~, R, X are stored unscaled, exactly in the path-incidence form;
// the 1/base_mva factor converts MW injections to per-unit for the voltage
// block (base_mva = 1 means inputs are already per-unit).
struct SensitivityBundle {
  Eigen::MatrixXd shift_reduced;            // S~, (N-1) x (N-1)
  Eigen::MatrixXd r_matrix;                 // R = diag(r) S~
  Eigen::MatrixXd x_matrix;                 // X = diag(x) S~
  Eigen::MatrixXd a_matrix;                 // 2(N-1) x (N-1), stacked as above
  Eigen::MatrixXd a_plus;                   // elementwise positive part of A
  Eigen::MatrixXd a_minus;                  // elementwise negative part of A
  Eigen::VectorXd limit_lo;                 // b_lo = (f_lo, v_lo)
  Eigen::VectorXd limit_hi;                 // b_hi = (f_hi, v_hi)
  double base_mva = 1.0;
  double u_base = 1.0;
  double alpha = 0.0;

  int n_lines() const { return static_cast<int>(shift_reduced.rows()); }
  int n_injection_buses() const { return static_cast<int>(shift_reduced.cols()); }
  int n_rows() const { return static_cast<int>(a_matrix.rows()); }
};

struct FlowEvaluation {
  Eigen::VectorXd line_flow_mw;   // length N-1
  Eigen::VectorXd volt_dev_pu2;   // length N-1; u_i = u_base + volt_dev_pu2[i]
};

struct IntervalBounds {
  Eigen::VectorXd lo;  // wmin
  Eigen::VectorXd hi;  // wmax
};

/// Reads the MATPOWER M-file subset: baseMVA, bus (id, type) and branch
/// (fbus, tbus, r, x, rateA) tables. rateA = 0 means no limit. Bus ids are
/// compacted to 1..N preserving order, with the type-3 bus mapped to id 1.
RadialNetwork parse_matpower_case(const std::string& text);

SensitivityBundle build_sensitivity(const RadialNetwork& net,
                                    const SensitivityOptions& opts = {});

FlowEvaluation evaluate_flow(const SensitivityBundle& bundle,
                             const Eigen::VectorXd& p_mw,
                             const Eigen::VectorXd& p0_mw);

/// Exact componentwise range of A(p) over the box lo <= p <= hi:
/// hi_out = A+ hi - A- lo, lo_out = A+ lo - A- hi.
IntervalBounds worst_case_bounds(const SensitivityBundle& bundle,
                                 const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi);

}  // namespace netacc
