#pragma once

#include <string>

#include <json.hpp>

#include "netacc/auction.hpp"
#include "netacc/dera.hpp"
#include "netacc/net_model.hpp"

namespace netacc {

// Native network format:
// {base_mva, power_factor, u_base, buses:[{id}], lines:[{from,to,r,x,flow_limit_mw}]}
nlohmann::json network_to_json(const RadialNetwork& net);
RadialNetwork network_from_json(const nlohmann::json& j);

nlohmann::json bid_curve_to_json(const BidCurve& curve);
BidCurve bid_curve_from_json(const nlohmann::json& j);

// Bids file: {interval_hours, deras:[{id, constant_usd, curves:[...]}]}
nlohmann::json bids_to_json(const std::vector<DeraBid>& bids,
                            double interval_hours);
std::vector<DeraBid> bids_from_json(const nlohmann::json& j);

nlohmann::json clearing_result_to_json(const ClearingResult& result,
                                       const RobustCertificate* certificate);

/// Restores the parts of a clearing result that downstream verification
/// needs: allocations, aggregates and prices.
ClearingResult clearing_result_from_json(const nlohmann::json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Reads a network from either a MATPOWER .m file or the native JSON format,
/// dispatching on the content (not the extension).
RadialNetwork load_network(const std::string& path);

}  // namespace netacc
