#include "netacc/json_io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace netacc {

using nlohmann::json;

json network_to_json(const RadialNetwork& net) {
  json j;
  j["base_mva"] = net.base_mva;
  j["power_factor"] = net.power_factor;
  j["u_base"] = net.u_base;
  j["buses"] = json::array();
  for (const Bus& b : net.buses) j["buses"].push_back({{"id", b.id}});
  j["lines"] = json::array();
  for (const Line& l : net.lines) {
    json jl = {{"from", l.from_bus},
               {"to", l.to_bus},
               {"r", l.resistance_pu},
               {"x", l.reactance_pu}};
    if (l.flow_limit_mw) jl["flow_limit_mw"] = *l.flow_limit_mw;
    j["lines"].push_back(jl);
  }
  return j;
}

RadialNetwork network_from_json(const json& j) {
  RadialNetwork net;
  net.base_mva = j.value("base_mva", 1.0);
  net.set_power_factor(j.value("power_factor", 0.98));
  net.u_base = j.value("u_base", 1.0);
  for (const auto& jb : j.at("buses")) {
    Bus b;
    b.id = jb.at("id").get<int>();
    b.base_voltage_sq = net.u_base;
    net.buses.push_back(b);
  }
  for (const auto& jl : j.at("lines")) {
    Line l;
    l.from_bus = jl.at("from").get<int>();
    l.to_bus = jl.at("to").get<int>();
    l.resistance_pu = jl.at("r").get<double>();
    l.reactance_pu = jl.at("x").get<double>();
    if (jl.contains("flow_limit_mw") && !jl["flow_limit_mw"].is_null()) {
      l.flow_limit_mw = jl["flow_limit_mw"].get<double>();
    }
    net.lines.push_back(l);
  }
  net.validate();
  return net;
}

json bid_curve_to_json(const BidCurve& curve) {
  json j;
  j["bus"] = curve.bus;
  j["direction"] =
      curve.direction == Direction::Injection ? "injection" : "withdrawal";
  j["kwh_per_mw"] = curve.kwh_per_mw;
  j["value_at_zero"] = curve.value_at_zero;
  j["breakpoints"] = json::array();
  for (const auto& bp : curve.breakpoints) {
    j["breakpoints"].push_back({bp.capacity_mw, bp.marginal_usd_per_kwh});
  }
  return j;
}

BidCurve bid_curve_from_json(const json& j) {
  BidCurve curve;
  curve.bus = j.at("bus").get<int>();
  const std::string dir = j.at("direction").get<std::string>();
  if (dir == "injection") {
    curve.direction = Direction::Injection;
  } else if (dir == "withdrawal") {
    curve.direction = Direction::Withdrawal;
  } else {
    throw std::invalid_argument("bid curve direction must be injection|withdrawal");
  }
  curve.kwh_per_mw = j.value("kwh_per_mw", 1000.0);
  curve.value_at_zero = j.value("value_at_zero", 0.0);
  for (const auto& jbp : j.at("breakpoints")) {
    curve.breakpoints.push_back(
        {jbp.at(0).get<double>(), jbp.at(1).get<double>()});
  }
  return curve;
}

json bids_to_json(const std::vector<DeraBid>& bids, double interval_hours) {
  json j;
  j["interval_hours"] = interval_hours;
  j["deras"] = json::array();
  for (const DeraBid& bid : bids) {
    json jd;
    jd["id"] = bid.dera_id;
    jd["constant_usd"] = bid.constant_usd;
    jd["curves"] = json::array();
    for (const BidCurve& c : bid.curves) jd["curves"].push_back(bid_curve_to_json(c));
    j["deras"].push_back(jd);
  }
  return j;
}

std::vector<DeraBid> bids_from_json(const json& j) {
  std::vector<DeraBid> bids;
  for (const auto& jd : j.at("deras")) {
    DeraBid bid;
    bid.dera_id = jd.at("id").get<std::string>();
    bid.constant_usd = jd.value("constant_usd", 0.0);
    for (const auto& jc : jd.at("curves")) {
      bid.curves.push_back(bid_curve_from_json(jc));
    }
    bids.push_back(bid);
  }
  return bids;
}

json clearing_result_to_json(const ClearingResult& result,
                             const RobustCertificate* certificate) {
  json j;
  j["surplus"] = result.social_surplus;
  j["gap_pwl"] = result.gap_pwl;
  j["pwl_objective"] = result.pwl_objective;
  j["iterations"] = result.iterations;
  j["per_bus"] = json::array();
  for (int i = 0; i < result.p_agg_hi.size(); ++i) {
    j["per_bus"].push_back({{"bus", i + 2},
                            {"lambda_hi", result.duals.lambda_hi(i)},
                            {"lambda_lo", result.duals.lambda_lo(i)},
                            {"p_agg_hi", result.p_agg_hi(i)},
                            {"p_agg_lo", result.p_agg_lo(i)}});
  }
  const std::vector<DeraPayment> pays = payments(result);
  j["per_dera"] = json::array();
  for (size_t k = 0; k < result.allocations.size(); ++k) {
    const auto& alloc = result.allocations[k];
    json jd;
    jd["id"] = alloc.dera_id;
    jd["payment"] = pays[k].payment_usd;
    jd["per_bus"] = json::array();
    for (size_t b = 0; b < alloc.buses.size(); ++b) {
      jd["per_bus"].push_back({{"bus", alloc.buses[b]},
                               {"c_hi", alloc.cleared[b].c_hi_mw},
                               {"c_lo", alloc.cleared[b].c_lo_mw}});
    }
    j["per_dera"].push_back(jd);
  }
  j["kkt_residuals"] = {{"stationarity", result.kkt.stationarity},
                        {"feasibility", result.kkt.feasibility},
                        {"complementarity", result.kkt.complementarity}};
  if (certificate) {
    json jc;
    jc["pass"] = certificate->pass;
    jc["exact_pass"] = certificate->exact_pass;
    jc["sampled_pass"] = certificate->sampled_pass;
    jc["worst_margin_exact"] = certificate->worst_margin_exact;
    jc["worst_margin_sampled"] = certificate->worst_margin_sampled;
    jc["n_samples"] = certificate->n_samples;
    jc["seed"] = certificate->seed;
    if (certificate->violation) {
      jc["violation"] = {{"row", certificate->violation->row},
                         {"value", certificate->violation->value},
                         {"bound", certificate->violation->bound}};
    }
    j["robust_certificate"] = jc;
  }
  return j;
}

ClearingResult clearing_result_from_json(const json& j) {
  ClearingResult res;
  res.social_surplus = j.value("surplus", 0.0);
  res.gap_pwl = j.value("gap_pwl", 0.0);
  res.pwl_objective = j.value("pwl_objective", 0.0);
  res.iterations = j.value("iterations", 0);
  const auto& per_bus = j.at("per_bus");
  const int nb = static_cast<int>(per_bus.size());
  res.p_agg_hi.resize(nb);
  res.p_agg_lo.resize(nb);
  res.duals.lambda_hi.resize(nb);
  res.duals.lambda_lo.resize(nb);
  for (const auto& jb : per_bus) {
    const int i = jb.at("bus").get<int>() - 2;
    res.p_agg_hi(i) = jb.at("p_agg_hi").get<double>();
    res.p_agg_lo(i) = jb.at("p_agg_lo").get<double>();
    res.duals.lambda_hi(i) = jb.value("lambda_hi", 0.0);
    res.duals.lambda_lo(i) = jb.value("lambda_lo", 0.0);
  }
  for (const auto& jd : j.at("per_dera")) {
    ClearingResult::DeraAllocation alloc;
    alloc.dera_id = jd.at("id").get<std::string>();
    for (const auto& jb : jd.at("per_bus")) {
      alloc.buses.push_back(jb.at("bus").get<int>());
      alloc.cleared.push_back(
          {jb.at("c_lo").get<double>(), jb.at("c_hi").get<double>()});
    }
    res.allocations.push_back(std::move(alloc));
  }
  return res;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

RadialNetwork load_network(const std::string& path) {
  const std::string text = read_text_file(path);
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '{') return network_from_json(json::parse(text));
    break;
  }
  return parse_matpower_case(text);
}

}  // namespace netacc
