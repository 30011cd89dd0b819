#include "netacc/net_model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace netacc {

double alpha_from_power_factor(double pf) {
  if (!(pf > 0.0) || pf > 1.0) {
    throw std::invalid_argument("power factor must be in (0, 1]");
  }
  return std::sqrt(1.0 - pf * pf) / pf;
}

void RadialNetwork::set_power_factor(double pf) {
  power_factor = pf;
  power_factor_alpha = alpha_from_power_factor(pf);
}

int RadialNetwork::parent_line_of(int bus) const {
  for (int l = 0; l < line_count(); ++l) {
    if (lines[l].from_bus == bus) return l;
  }
  throw std::logic_error("no parent line for bus " + std::to_string(bus));
}

std::vector<int> RadialNetwork::root_path(int bus) const {
  std::vector<int> path;
  int cur = bus;
  while (cur != 1) {
    int l = parent_line_of(cur);
    path.push_back(l);
    cur = lines[l].to_bus;
    if (static_cast<int>(path.size()) > line_count()) {
      throw std::logic_error("root path does not terminate; network not radial");
    }
  }
  return path;
}

void RadialNetwork::validate() const {
  const int n = bus_count();
  if (n < 2) throw std::invalid_argument("network needs at least two buses");
  if (line_count() != n - 1) {
    throw std::invalid_argument("line count must equal bus count - 1");
  }
  std::vector<bool> seen(n + 1, false);
  for (const Bus& b : buses) {
    if (b.id < 1 || b.id > n || seen[b.id]) {
      throw std::invalid_argument("bus ids must be a permutation of 1..N");
    }
    seen[b.id] = true;
  }
  if (power_factor_alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
  std::vector<bool> has_parent(n + 1, false);
  for (const Line& l : lines) {
    if (l.from_bus < 2 || l.from_bus > n || l.to_bus < 1 || l.to_bus > n) {
      throw std::invalid_argument("line endpoints out of range or rooted at bus 1");
    }
    if (l.resistance_pu < 0.0 || l.reactance_pu < 0.0) {
      throw std::invalid_argument("line impedance must be nonnegative");
    }
    if (has_parent[l.from_bus]) {
      throw std::invalid_argument("bus " + std::to_string(l.from_bus) +
                                  " has more than one parent line");
    }
    has_parent[l.from_bus] = true;
  }
  // Every root path must reach bus 1; throws on a cycle.
  for (int b = 2; b <= n; ++b) (void)root_path(b);
}

namespace {

// --- MATPOWER M-file subset reader ---------------------------------------

struct Token {
  std::string text;
  int line_no;
};

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> tokens;
  int line_no = 1;
  size_t i = 0;
  const size_t n = text.size();
  auto push = [&](std::string t) { tokens.push_back({std::move(t), line_no}); };
  while (i < n) {
    char c = text[i];
    if (c == '\n') {
      ++line_no;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++i;
    } else if (c == '%') {
      while (i < n && text[i] != '\n') ++i;
    } else if (c == '[' || c == ']' || c == ';' || c == '=') {
      push(std::string(1, c));
      ++i;
    } else if (c == '\'') {  // string literal (e.g. mpc.version), skipped later
      size_t j = i + 1;
      while (j < n && text[j] != '\'' && text[j] != '\n') ++j;
      push(text.substr(i, j - i + 1));
      i = j + 1;
    } else {
      size_t j = i;
      while (j < n && !std::isspace(static_cast<unsigned char>(text[j])) &&
             text[j] != ',' && text[j] != ';' && text[j] != '[' && text[j] != ']' &&
             text[j] != '=' && text[j] != '%') {
        ++j;
      }
      push(text.substr(i, j - i));
      i = j;
    }
  }
  return tokens;
}

bool parse_number(const std::string& s, double* out) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) return false;
    *out = v;
    return true;
  } catch (...) {
    return false;
  }
}

// Matches identifiers like "bus" and "mpc.bus".
bool names_field(const std::string& tok, const std::string& field) {
  if (tok == field) return true;
  auto dot = tok.rfind('.');
  return dot != std::string::npos && tok.substr(dot + 1) == field;
}

using Matrix = std::vector<std::vector<double>>;

Matrix read_matrix(const std::vector<Token>& toks, size_t* idx) {
  size_t i = *idx;
  if (i >= toks.size() || toks[i].text != "[") {
    throw ParseError("expected '[' to open a matrix",
                     i < toks.size() ? toks[i].line_no : 0);
  }
  ++i;
  Matrix rows;
  std::vector<double> row;
  int last_line = toks[i - 1].line_no;
  auto flush_row = [&]() {
    if (!row.empty()) {
      rows.push_back(row);
      row.clear();
    }
  };
  while (i < toks.size() && toks[i].text != "]") {
    const Token& t = toks[i];
    if (t.text == ";") {
      flush_row();
    } else {
      if (t.line_no != last_line) flush_row();  // newline also ends a row
      double v;
      if (!parse_number(t.text, &v)) {
        throw ParseError("malformed matrix entry '" + t.text + "'", t.line_no);
      }
      row.push_back(v);
    }
    last_line = t.line_no;
    ++i;
  }
  if (i >= toks.size()) throw ParseError("matrix not closed with ']'", last_line);
  flush_row();
  ++i;  // consume ']'
  if (i < toks.size() && toks[i].text == ";") ++i;
  *idx = i;
  for (size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) {
      throw ParseError("ragged matrix row (row " + std::to_string(r + 1) + ")", 0);
    }
  }
  return rows;
}

}  // namespace

RadialNetwork parse_matpower_case(const std::string& text) {
  const std::vector<Token> toks = tokenize(text);
  std::optional<double> base_mva;
  std::optional<Matrix> bus_table;
  std::optional<Matrix> branch_table;

  for (size_t i = 0; i < toks.size();) {
    const std::string& t = toks[i].text;
    bool is_assign = i + 1 < toks.size() && toks[i + 1].text == "=";
    if (is_assign && names_field(t, "baseMVA")) {
      i += 2;
      double v;
      if (i >= toks.size() || !parse_number(toks[i].text, &v)) {
        throw ParseError("baseMVA must be a number",
                         i < toks.size() ? toks[i].line_no : 0);
      }
      base_mva = v;
      ++i;
    } else if (is_assign && names_field(t, "bus")) {
      i += 2;
      bus_table = read_matrix(toks, &i);
    } else if (is_assign && names_field(t, "branch")) {
      i += 2;
      branch_table = read_matrix(toks, &i);
    } else {
      ++i;
    }
  }

  if (!base_mva) throw ParseError("no baseMVA assignment found");
  if (!bus_table) throw ParseError("no bus table found");
  if (!branch_table) throw ParseError("no branch table found");
  if (*base_mva <= 0.0) throw ParseError("baseMVA must be positive");

  // Columns: bus = [id type ...], branch = [fbus tbus r x b rateA ...].
  std::vector<int> order;          // original ids in table order
  std::map<int, int> compact;      // original id -> 1..N
  int ref_count = 0;
  int ref_id = -1;
  for (const auto& row : *bus_table) {
    if (row.size() < 2) throw ParseError("bus row needs at least id and type");
    int id = static_cast<int>(std::llround(row[0]));
    if (compact.count(id)) {
      throw ParseError("duplicate bus id " + std::to_string(id));
    }
    compact[id] = 0;
    order.push_back(id);
    if (static_cast<int>(std::llround(row[1])) == 3) {
      ++ref_count;
      ref_id = id;
    }
  }
  if (ref_count == 0) throw ParseError("no type-3 (reference) bus in the case");
  if (ref_count > 1) throw ParseError("more than one type-3 bus in the case");

  compact[ref_id] = 1;
  int next = 2;
  for (int id : order) {
    if (id != ref_id) compact[id] = next++;
  }

  RadialNetwork net;
  net.base_mva = *base_mva;
  net.set_power_factor(0.98);
  net.buses.resize(order.size());
  for (size_t i = 0; i < order.size(); ++i) {
    net.buses[i].id = compact[order[i]];
  }
  std::sort(net.buses.begin(), net.buses.end(),
            [](const Bus& a, const Bus& b) { return a.id < b.id; });

  const int n = net.bus_count();
  std::set<std::pair<int, int>> pairs;
  std::vector<std::array<double, 3>> branch_rx_rate;
  std::vector<std::pair<int, int>> branch_ends;
  for (const auto& row : *branch_table) {
    if (row.size() < 6) {
      throw ParseError("branch row needs fbus tbus r x b rateA columns");
    }
    int f_orig = static_cast<int>(std::llround(row[0]));
    int t_orig = static_cast<int>(std::llround(row[1]));
    if (!compact.count(f_orig) || !compact.count(t_orig)) {
      throw ParseError("branch references unknown bus");
    }
    int f = compact[f_orig];
    int t = compact[t_orig];
    if (f == t) throw ParseError("branch with identical endpoints");
    auto key = std::minmax(f, t);
    if (!pairs.insert(key).second) {
      throw ParseError("duplicate branch between buses " + std::to_string(f_orig) +
                       " and " + std::to_string(t_orig));
    }
    branch_ends.emplace_back(f, t);
    branch_rx_rate.push_back({row[2], row[3], row[5]});
  }

  if (static_cast<int>(branch_ends.size()) != n - 1) {
    throw ParseError("network not radial: " + std::to_string(branch_ends.size()) +
                     " branches for " + std::to_string(n) + " buses");
  }

  // Orient branches child -> parent by BFS from the reference bus.
  std::vector<std::vector<std::pair<int, int>>> adj(n + 1);  // (neighbor, branch)
  for (size_t b = 0; b < branch_ends.size(); ++b) {
    adj[branch_ends[b].first].emplace_back(branch_ends[b].second, static_cast<int>(b));
    adj[branch_ends[b].second].emplace_back(branch_ends[b].first, static_cast<int>(b));
  }
  std::vector<int> depth(n + 1, -1);
  std::queue<int> q;
  depth[1] = 0;
  q.push(1);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (auto [v, b] : adj[u]) {
      if (depth[v] < 0) {
        depth[v] = depth[u] + 1;
        q.push(v);
      }
    }
  }
  for (int b = 1; b <= n; ++b) {
    if (depth[b] < 0) throw ParseError("network not connected");
  }

  net.lines.resize(branch_ends.size());
  for (size_t b = 0; b < branch_ends.size(); ++b) {
    auto [f, t] = branch_ends[b];
    Line& ln = net.lines[b];
    if (depth[f] == depth[t]) throw ParseError("network not radial: cycle detected");
    ln.from_bus = depth[f] > depth[t] ? f : t;
    ln.to_bus = depth[f] > depth[t] ? t : f;
    ln.resistance_pu = branch_rx_rate[b][0];
    ln.reactance_pu = branch_rx_rate[b][1];
    if (branch_rx_rate[b][2] > 0.0) ln.flow_limit_mw = branch_rx_rate[b][2];
  }

  net.validate();
  return net;
}

SensitivityBundle build_sensitivity(const RadialNetwork& net,
                                    const SensitivityOptions& opts) {
  net.validate();
  if (!(opts.voltage_dev > 0.0) || !(opts.voltage_dev < 1.0)) {
    throw std::invalid_argument("voltage deviation must lie in (0, 1)");
  }
  const int m = net.line_count();

  std::vector<double> flow_limit(m);
  if (opts.flow_limits_mw) {
    if (static_cast<int>(opts.flow_limits_mw->size()) != m) {
      throw std::invalid_argument("flow limit override has wrong length");
    }
    flow_limit = *opts.flow_limits_mw;
  } else {
    for (int l = 0; l < m; ++l) {
      if (!net.lines[l].flow_limit_mw) {
        throw std::invalid_argument("line " + std::to_string(l + 1) +
                                    " has no flow limit and no override was given");
      }
      flow_limit[l] = *net.lines[l].flow_limit_mw;
    }
  }
  for (int l = 0; l < m; ++l) {
    if (!(flow_limit[l] > 0.0)) {
      throw std::invalid_argument("flow limits must be positive");
    }
  }

  SensitivityBundle b;
  b.base_mva = net.base_mva;
  b.u_base = net.u_base;
  b.alpha = net.power_factor_alpha;

  b.shift_reduced = Eigen::MatrixXd::Zero(m, m);
  for (int bus = 2; bus <= net.bus_count(); ++bus) {
    for (int l : net.root_path(bus)) b.shift_reduced(l, bus - 2) = 1.0;
  }
  Eigen::VectorXd r(m), x(m);
  for (int l = 0; l < m; ++l) {
    r(l) = net.lines[l].resistance_pu;
    x(l) = net.lines[l].reactance_pu;
  }
  b.r_matrix = r.asDiagonal() * b.shift_reduced;
  b.x_matrix = x.asDiagonal() * b.shift_reduced;

  b.a_matrix.resize(2 * m, m);
  b.a_matrix.topRows(m) = b.shift_reduced;
  b.a_matrix.bottomRows(m) = 2.0 / b.base_mva * b.shift_reduced.transpose() *
                             (b.r_matrix + b.alpha * b.x_matrix);
  b.a_plus = b.a_matrix.cwiseMax(0.0);
  b.a_minus = (-b.a_matrix).cwiseMax(0.0);

  double hi_mult, lo_mult;
  if (opts.bounds_on == VoltageBoundConvention::OnSquared) {
    hi_mult = 1.0 + opts.voltage_dev;
    lo_mult = 1.0 - opts.voltage_dev;
  } else {
    hi_mult = (1.0 + opts.voltage_dev) * (1.0 + opts.voltage_dev);
    lo_mult = (1.0 - opts.voltage_dev) * (1.0 - opts.voltage_dev);
  }
  b.limit_hi.resize(2 * m);
  b.limit_lo.resize(2 * m);
  for (int l = 0; l < m; ++l) {
    b.limit_hi(l) = flow_limit[l];
    b.limit_lo(l) = -flow_limit[l];
  }
  b.limit_hi.tail(m).setConstant((hi_mult - 1.0) * net.u_base);
  b.limit_lo.tail(m).setConstant((lo_mult - 1.0) * net.u_base);
  return b;
}

FlowEvaluation evaluate_flow(const SensitivityBundle& bundle,
                             const Eigen::VectorXd& p_mw,
                             const Eigen::VectorXd& p0_mw) {
  const int m = bundle.n_lines();
  if (p_mw.size() != m || p0_mw.size() != m) {
    throw std::invalid_argument("injection vectors must have length N-1");
  }
  Eigen::VectorXd w = bundle.a_matrix * (p_mw + p0_mw);
  FlowEvaluation ev;
  ev.line_flow_mw = w.head(m);
  ev.volt_dev_pu2 = w.tail(m);
  return ev;
}

IntervalBounds worst_case_bounds(const SensitivityBundle& bundle,
                                 const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi) {
  if (lo.size() != bundle.n_injection_buses() || hi.size() != lo.size()) {
    throw std::invalid_argument("interval vectors must have length N-1");
  }
  if ((lo.array() > hi.array()).any()) {
    throw std::invalid_argument("interval lower bound exceeds upper bound");
  }
  IntervalBounds out;
  out.hi = bundle.a_plus * hi - bundle.a_minus * lo;
  out.lo = bundle.a_plus * lo - bundle.a_minus * hi;
  return out;
}

}  // namespace netacc
