#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <string>

#include "netacc/json_io.hpp"

using nlohmann::json;

namespace {

const std::string kCli = NETACC_CLI_PATH;
const std::string kData = NETACC_DATA_DIR;
const std::string kTmp = std::string(NETACC_BIN_DIR) + "/cli_scratch";

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[512];
  while (fgets(buf, sizeof(buf), pipe)) out += buf;
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

void setup_scratch() {
  const int rc = std::system(("mkdir -p " + kTmp).c_str());
  REQUIRE(rc == 0);
}

}  // namespace

TEST_CASE("cli parse: case5 and case141") {
  setup_scratch();
  const RunResult r5 = run("parse --case " + kData + "/case5.m --out " + kTmp +
                           "/net5.json");
  CHECK(r5.exit_code == 0);
  CHECK(r5.output.find("buses=5") != std::string::npos);
  const netacc::RadialNetwork net =
      netacc::load_network(kTmp + "/net5.json");
  CHECK(net.bus_count() == 5);

  const RunResult r141 = run("parse --case " + kData + "/case141.m --out " +
                             kTmp + "/net141.json");
  CHECK(r141.exit_code == 0);
  CHECK(r141.output.find("buses=141") != std::string::npos);
}

TEST_CASE("cli parse: looped case exits with an input error") {
  setup_scratch();
  const char* loop = R"(
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0 0 0 0 1 1 0 12.5 1 1.1 0.9;
  2 1 0 0 0 0 1 1 0 12.5 1 1.1 0.9;
  3 1 0 0 0 0 1 1 0 12.5 1 1.1 0.9;
];
mpc.branch = [
  1 2 0.01 0.02 0 15 0 0 0 0 1 -360 360;
  2 3 0.01 0.02 0 15 0 0 0 0 1 -360 360;
  3 1 0.01 0.02 0 15 0 0 0 0 1 -360 360;
];
)";
  netacc::write_text_file(kTmp + "/loop.m", loop);
  const RunResult r = run("parse --case " + kTmp + "/loop.m --out " + kTmp +
                          "/loop.json");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("not radial") != std::string::npos);
}

TEST_CASE("cli pipeline: bids, clear, verify on the 5-bus fixture") {
  setup_scratch();
  const RunResult bids =
      run("bids --network " + kData + "/case5.m --dera " + kData +
          "/dera_small_a.json --dera " + kData +
          "/dera_small_b.json --segments 20 --out " + kTmp +
          "/bids.json --csv " + kTmp + "/bids.csv");
  CHECK(bids.exit_code == 0);
  CHECK(bids.output.find("deras=2") != std::string::npos);

  const RunResult clr =
      run("clear --network " + kData + "/case5.m --bids " + kTmp +
          "/bids.json --dso=-0.096,0.2 --out " + kTmp + "/result.json");
  CHECK(clr.exit_code == 0);
  CHECK(clr.output.find("robust=pass") != std::string::npos);

  const json result = json::parse(netacc::read_text_file(kTmp + "/result.json"));
  CHECK(result.contains("surplus"));
  CHECK(result.contains("per_bus"));
  CHECK(result.contains("per_dera"));
  CHECK(result.contains("kkt_residuals"));
  CHECK(result.contains("robust_certificate"));
  CHECK(result["per_bus"].size() == 4);
  CHECK(result["kkt_residuals"]["stationarity"].get<double>() <= 1e-8);

  // The sibling CSVs exist with the documented headers.
  const std::string csv = netacc::read_text_file(kTmp + "/result.csv");
  CHECK(csv.find("bus,lambda_hi") != std::string::npos);
  const std::string kkt = netacc::read_text_file(kTmp + "/result_kkt.csv");
  CHECK(kkt.find("stationarity") != std::string::npos);

  const RunResult ver =
      run("verify --result " + kTmp + "/result.json --network " + kData +
          "/case5.m --samples 5000 --seed 42");
  CHECK(ver.exit_code == 0);
  CHECK(ver.output.find("exact=pass") != std::string::npos);
  CHECK(ver.output.find("sampled=pass") != std::string::npos);
}

TEST_CASE("cli verify: tampered allocations fail with exit 1") {
  setup_scratch();
  // Reuse the pipeline artifacts; inflate one cleared injection way past the
  // network's headroom.
  json result = json::parse(netacc::read_text_file(kTmp + "/result.json"));
  result["per_dera"][0]["per_bus"][0]["c_hi"] = 50.0;
  result["per_bus"][0]["p_agg_hi"] = 50.0;
  netacc::write_text_file(kTmp + "/tampered.json", result.dump(2));
  const RunResult ver =
      run("verify --result " + kTmp + "/tampered.json --network " + kData +
          "/case5.m --samples 2000 --seed 42");
  CHECK(ver.exit_code == 1);
  CHECK(ver.output.find("violation") != std::string::npos);
}

TEST_CASE("cli determinism: repeated runs are byte-identical") {
  setup_scratch();
  for (int pass = 0; pass < 2; ++pass) {
    const std::string suffix = pass == 0 ? "_a" : "_b";
    run("bids --network " + kData + "/case5.m --dera " + kData +
        "/dera_small_a.json --segments 15 --out " + kTmp + "/det_bids" +
        suffix + ".json");
    run("clear --network " + kData + "/case5.m --bids " + kTmp + "/det_bids" +
        suffix + ".json --dso=-0.096,0.2 --seed 5 --out " + kTmp +
        "/det_result" + suffix + ".json");
  }
  CHECK(netacc::read_text_file(kTmp + "/det_bids_a.json") ==
        netacc::read_text_file(kTmp + "/det_bids_b.json"));
  CHECK(netacc::read_text_file(kTmp + "/det_result_a.json") ==
        netacc::read_text_file(kTmp + "/det_result_b.json"));
  CHECK(netacc::read_text_file(kTmp + "/det_result_a.csv") ==
        netacc::read_text_file(kTmp + "/det_result_b.csv"));
}

TEST_CASE("cli clear: infeasible utility range exits with 1") {
  setup_scratch();
  json p0;
  p0["p0_lo"] = {40.0, 0.0, 0.0, 0.0};
  p0["p0_hi"] = {40.0, 0.0, 0.0, 0.0};  // 40 MW through a 10 MW line
  netacc::write_text_file(kTmp + "/p0_bad.json", p0.dump());
  const RunResult r =
      run("clear --network " + kData + "/case5.m --bids " + kTmp +
          "/bids.json --dso=-0.096,0.2 --p0 " + kTmp +
          "/p0_bad.json --out " + kTmp + "/never.json");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("infeasible") != std::string::npos);
}

TEST_CASE("cli sweep: trend CSV with one row per value") {
  setup_scratch();
  const RunResult r = run("sweep --scenario " + kData +
                          "/scenario_small.json --param dera_ratio "
                          "--values 0.5,1.0 --out " +
                          kTmp + "/sweep.csv");
  CHECK(r.exit_code == 0);
  const std::string csv = netacc::read_text_file(kTmp + "/sweep.csv");
  CHECK(csv.find("dera_ratio,social_surplus,dera_surplus") != std::string::npos);
  int rows = 0;
  for (char c : csv) rows += c == '\n';
  CHECK(rows == 4);  // comment, header, two data rows
}

TEST_CASE("cli rejects unknown flags with an input error") {
  const RunResult r = run("clear --nonsense 1");
  CHECK(r.exit_code == 2);
}
