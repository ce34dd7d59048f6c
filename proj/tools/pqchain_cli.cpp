// pqchain command line: drives every protocol phase through the C API.
#include <pqchain/pqchain.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

struct CliError {
  std::string message;
};

[[noreturn]] void fail(pqchain_status status)
{
  throw CliError{ std::string(pqchain_last_error()).empty()
                    ? pqchain_status_string(status)
                    : std::string(pqchain_last_error()) };
}

void check(pqchain_status status)
{
  if (status != PQCHAIN_OK) {
    fail(status);
  }
}

std::string take(char* s)
{
  std::string out(s ? s : "");
  pqchain_string_free(s);
  return out;
}

std::vector<uint8_t> seed_bytes(const std::string& seed)
{
  return std::vector<uint8_t>(seed.begin(), seed.end());
}

// all file outputs land via temp + rename
void write_atomic(const std::string& path, const std::string& content)
{
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw CliError{ "cannot open " + tmp };
    }
    out << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw CliError{ "cannot rename into " + path };
  }
}

std::string read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CliError{ "cannot open " + path };
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex_of(const uint8_t* data, size_t len)
{
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (size_t i = 0; i < len; i++) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xF]);
  }
  return out;
}

std::string pretty(const std::string& payload, bool enabled)
{
  if (!enabled) {
    return payload;
  }
  try {
    return json::parse(payload).dump(2);
  } catch (...) {
    return payload;
  }
}

struct WorldHandle {
  pqchain_world* world = nullptr;

  explicit WorldHandle(const std::string& seed)
  {
    const auto s = seed_bytes(seed);
    check(pqchain_world_create(s.data(), s.size(), &world));
  }

  ~WorldHandle() { pqchain_world_destroy(world); }

  std::string enroll(const std::string& name)
  {
    char did[64];
    check(pqchain_world_enroll(world, name.c_str(), did));
    return did;
  }
};

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{ "post-quantum layer-2 toolkit: certified entropy, dual-key "
                "certificates, PQ tunnels, Falcon meta-transactions, PoA simulation" };
  app.require_subcommand(1);
  bool pretty_flag = false;
  app.add_flag("--pretty", pretty_flag, "human-readable JSON output");

  // ---- entropy -------------------------------------------------------------
  auto* entropy = app.add_subcommand("entropy", "bootstrap an entropy session and draw bytes");
  uint32_t e_shares = 3;
  uint64_t e_timeout = 30;
  uint32_t e_bytes = 32;
  std::string e_seed = "entropy-demo";
  std::string e_out;
  entropy->add_option("--shares", e_shares, "bootstrap share count (>= 2)");
  entropy->add_option("--timeout", e_timeout, "share timeout in logical ticks");
  entropy->add_option("--bytes", e_bytes, "entropy bytes to request");
  entropy->add_option("--seed", e_seed, "service seed (deterministic test mode)");
  entropy->add_option("--out", e_out, "write the JSON report to a file");

  // ---- cert ----------------------------------------------------------------
  auto* cert = app.add_subcommand("cert", "certificate operations");
  auto* cert_issue = cert->add_subcommand("issue", "enroll a node and emit its certificate");
  std::string ci_name = "node-0";
  std::string ci_seed = "world";
  std::string ci_out;
  bool ci_armor = false;
  cert_issue->add_option("--name", ci_name, "subject common name");
  cert_issue->add_option("--seed", ci_seed, "world seed");
  cert_issue->add_option("--out", ci_out, "certificate output file");
  cert_issue->add_flag("--armor", ci_armor, "hex-armored text instead of binary");
  auto* cert_verify = cert->add_subcommand("verify", "verify a certificate in a fresh world");
  std::string cv_name = "node-0";
  std::string cv_seed = "world";
  uint64_t cv_time = 5;
  cert_verify->add_option("--name", cv_name, "node to enroll and check");
  cert_verify->add_option("--seed", cv_seed, "world seed");
  cert_verify->add_option("--at", cv_time, "logical validation time");

  // ---- registry ------------------------------------------------------------
  auto* registry = app.add_subcommand("registry", "DID registry operations");
  auto* reg_resolve = registry->add_subcommand("resolve", "resolve a DID after enrollment");
  std::string rr_name = "node-0";
  std::string rr_seed = "world";
  reg_resolve->add_option("--name", rr_name, "node name to enroll");
  reg_resolve->add_option("--seed", rr_seed, "world seed");
  auto* reg_snapshot = registry->add_subcommand("snapshot", "export the sorted state snapshot");
  std::string rs_seed = "world";
  std::vector<std::string> rs_names = { "node-0", "node-1" };
  std::string rs_out;
  reg_snapshot->add_option("--seed", rs_seed, "world seed");
  reg_snapshot->add_option("--name", rs_names, "nodes to enroll before the export");
  reg_snapshot->add_option("--out", rs_out, "snapshot output file");

  // ---- tunnel ----------------------------------------------------------------
  auto* tunnel = app.add_subcommand("tunnel", "handshake two nodes and move records");
  uint32_t t_records = 8;
  std::string t_seed = "world";
  std::string t_out;
  tunnel->add_option("--records", t_records, "records to exchange");
  tunnel->add_option("--seed", t_seed, "world seed");
  tunnel->add_option("--out", t_out, "JSON report file");

  // ---- tx --------------------------------------------------------------------
  auto* txc = app.add_subcommand("tx", "meta-transaction operations");
  auto* tx_build = txc->add_subcommand("build", "wrap an inner transaction");
  std::string tb_seed = "world";
  std::string tb_inner = R"({"nonce":0,"gasprice":"1000000000","startgas":90000,)"
                         R"("to":"00000000000000000000000000000000000000d0","value":"1",)"
                         R"("data":"","chain_id":648529})";
  std::string tb_user = "user-0";
  std::string tb_out;
  tx_build->add_option("--seed", tb_seed, "world seed");
  tx_build->add_option("--inner", tb_inner, "inner transaction JSON");
  tx_build->add_option("--user", tb_user, "user key seed");
  tx_build->add_option("--out", tb_out, "meta-transaction output file (binary)");
  auto* tx_verify = txc->add_subcommand("verify", "run the three-step admission pipeline");
  std::string tv_seed = "world";
  std::string tv_in;
  std::string tv_backend = "native";
  std::string tv_charging = "flat";
  tx_verify->add_option("--seed", tv_seed, "world seed (must match the build)");
  tx_verify->add_option("--in", tv_in, "meta-transaction file")->required();
  tx_verify->add_option("--backend", tv_backend, "native | metered");
  tx_verify->add_option("--charging", tv_charging, "flat | precompile");
  auto* tx_relay = txc->add_subcommand("relay", "serve the relay-signer JSON-RPC interface");
  std::string xr_seed = "world";
  uint16_t xr_port = 0;
  uint64_t xr_seconds = 5;
  tx_relay->add_option("--seed", xr_seed, "world seed");
  tx_relay->add_option("--port", xr_port, "TCP port (0 = ephemeral)");
  tx_relay->add_option("--seconds", xr_seconds, "how long to serve before exiting");

  // ---- sim ---------------------------------------------------------------------
  auto* simc = app.add_subcommand("sim", "network simulation");
  auto* sim_run = simc->add_subcommand("run", "spawn and run to quiescence");
  std::string sr_config;
  uint64_t sr_seed = 7;
  uint32_t sr_writers = 1, sr_validators = 4, sr_observers = 1, sr_txs = 20;
  std::vector<std::string> sr_scenarios;
  std::string sr_backend = "native";
  std::string sr_outdir;
  sim_run->add_option("--config", sr_config, "scenario config file (overrides flags)");
  sim_run->add_option("--seed", sr_seed, "run seed");
  sim_run->add_option("--writers", sr_writers, "writer count");
  sim_run->add_option("--validators", sr_validators, "validator count");
  sim_run->add_option("--observers", sr_observers, "observer count");
  sim_run->add_option("--tx-count", sr_txs, "writer transactions");
  sim_run->add_option("--scenario", sr_scenarios,
                      "adversary scenario (repeatable): TamperInFlight ForgeFalcon "
                      "ReplayMetatx StolenEcdsaKeys RogueEntryPoint");
  sim_run->add_option("--backend", sr_backend, "native | metered");
  sim_run->add_option("--out-dir", sr_outdir, "write metrics.jsonl/metrics.csv/chain.bin here");

  // ---- bench ---------------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "verification cost reports");
  auto* bench_verify = bench->add_subcommand("verify", "per-vector gas over a KAT file");
  std::string bv_kat;
  std::string bv_backend = "metered";
  std::string bv_charging = "flat";
  std::string bv_out;
  bench_verify->add_option("--kat", bv_kat, "KAT vector file")->required();
  bench_verify->add_option("--backend", bv_backend, "metered | native");
  bench_verify->add_option("--charging", bv_charging, "flat | precompile");
  bench_verify->add_option("--out", bv_out, "CSV output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (entropy->parsed()) {
      const auto s = seed_bytes(e_seed);
      char* report = nullptr;
      check(pqchain_entropy_demo(e_shares, e_timeout, e_bytes, s.data(), s.size(), &report));
      const std::string payload = take(report);
      if (!e_out.empty()) {
        write_atomic(e_out, payload + "\n");
      }
      std::cout << pretty(payload, pretty_flag) << "\n";
    }

    if (cert_issue->parsed()) {
      WorldHandle world(ci_seed);
      const std::string did = world.enroll(ci_name);
      std::string payload;
      if (ci_armor) {
        char* armored = nullptr;
        check(pqchain_world_certificate_armored(world.world, did.c_str(), &armored));
        payload = take(armored);
      } else {
        uint8_t* buffer = nullptr;
        size_t len = 0;
        check(pqchain_world_certificate(world.world, did.c_str(), &buffer, &len));
        payload.assign(reinterpret_cast<char*>(buffer), len);
        pqchain_buffer_free(buffer);
      }
      if (!ci_out.empty()) {
        write_atomic(ci_out, payload);
        std::cout << json{ { "did", did }, { "out", ci_out } }.dump() << "\n";
      } else if (ci_armor) {
        std::cout << payload;
      } else {
        std::cout << json{ { "did", did }, { "certificate", hex_of(
                             reinterpret_cast<const uint8_t*>(payload.data()), payload.size()) } }
                       .dump()
                  << "\n";
      }
    }

    if (cert_verify->parsed()) {
      WorldHandle world(cv_seed);
      const std::string did = world.enroll(cv_name);
      uint8_t* buffer = nullptr;
      size_t len = 0;
      check(pqchain_world_certificate(world.world, did.c_str(), &buffer, &len));
      const pqchain_status status =
        pqchain_world_verify_certificate(world.world, buffer, len, cv_time);
      pqchain_buffer_free(buffer);
      check(status);
      std::cout << json{ { "did", did }, { "verdict", "Accept" } }.dump() << "\n";
    }

    if (reg_resolve->parsed()) {
      WorldHandle world(rr_seed);
      const std::string did = world.enroll(rr_name);
      char* record = nullptr;
      check(pqchain_world_resolve(world.world, did.c_str(), &record));
      std::cout << pretty(take(record), pretty_flag) << "\n";
    }

    if (reg_snapshot->parsed()) {
      WorldHandle world(rs_seed);
      for (const auto& name : rs_names) {
        world.enroll(name);
      }
      char* snapshot = nullptr;
      check(pqchain_world_registry_snapshot(world.world, &snapshot));
      const std::string payload = take(snapshot);
      if (!rs_out.empty()) {
        write_atomic(rs_out, payload);
        std::cout << json{ { "out", rs_out } }.dump() << "\n";
      } else {
        std::cout << payload;
      }
    }

    if (tunnel->parsed()) {
      WorldHandle world(t_seed);
      const std::string a = world.enroll("initiator");
      const std::string b = world.enroll("responder");
      char* report = nullptr;
      check(pqchain_world_tunnel_demo(world.world, a.c_str(), b.c_str(), t_records, &report));
      const std::string payload = take(report);
      if (!t_out.empty()) {
        write_atomic(t_out, payload + "\n");
      }
      std::cout << pretty(payload, pretty_flag) << "\n";
    }

    if (tx_build->parsed()) {
      WorldHandle world(tb_seed);
      const std::string did = world.enroll("writer-0");
      const auto user = seed_bytes(tb_user);
      uint8_t* mtx = nullptr;
      size_t len = 0;
      check(pqchain_world_build_metatx(world.world, did.c_str(), tb_inner.c_str(), user.data(),
                                       user.size(), &mtx, &len));
      const std::string hex = hex_of(mtx, len);
      if (!tb_out.empty()) {
        write_atomic(tb_out, std::string(reinterpret_cast<char*>(mtx), len));
      }
      pqchain_buffer_free(mtx);
      std::cout << json{ { "writer", did },
                         { "bytes", len },
                         { "out", tb_out.empty() ? json(nullptr) : json(tb_out) },
                         { "metatx", tb_out.empty() ? json(hex) : json(nullptr) } }
                     .dump()
                << "\n";
    }

    if (tx_verify->parsed()) {
      WorldHandle world(tv_seed);
      world.enroll("writer-0");
      const std::string wire = read_file(tv_in);
      char* decision = nullptr;
      check(pqchain_world_verify_metatx(
        world.world, reinterpret_cast<const uint8_t*>(wire.data()), wire.size(),
        tv_backend == "metered" ? PQCHAIN_BACKEND_METERED : PQCHAIN_BACKEND_NATIVE,
        tv_charging == "precompile" ? PQCHAIN_CHARGING_PRECOMPILE : PQCHAIN_CHARGING_OPCODE_FLAT,
        &decision));
      const std::string payload = take(decision);
      std::cout << pretty(payload, pretty_flag) << "\n";
      if (json::parse(payload)["verdict"] != "Admit") {
        std::cerr << json::parse(payload)["reason"].get<std::string>() << "\n";
        return 1;
      }
    }

    if (tx_relay->parsed()) {
      WorldHandle world(xr_seed);
      const std::string did = world.enroll("writer-0");
      pqchain_relay_server* server = nullptr;
      uint16_t bound = 0;
      check(pqchain_relay_server_start(world.world, did.c_str(), xr_port, &server, &bound));
      std::cout << json{ { "writer", did }, { "port", bound }, { "seconds", xr_seconds } }.dump()
                << std::endl;
      std::this_thread::sleep_for(std::chrono::seconds(xr_seconds));
      pqchain_relay_server_stop(server);
    }

    if (sim_run->parsed()) {
      std::string config;
      if (!sr_config.empty()) {
        config = read_file(sr_config);
      } else {
        std::ostringstream cfg;
        cfg << "seed = " << sr_seed << "\nwriters = " << sr_writers
            << "\nvalidators = " << sr_validators << "\nobservers = " << sr_observers
            << "\ntx_count = " << sr_txs << "\nbackend = " << sr_backend << "\n";
        for (const auto& s : sr_scenarios) {
          cfg << "scenario = " << s << "\n";
        }
        config = cfg.str();
      }
      char* metrics = nullptr;
      char* csv = nullptr;
      char* snapshot = nullptr;
      check(pqchain_sim_run(config.c_str(), &metrics, &csv, &snapshot));
      const std::string metrics_str = take(metrics);
      const std::string csv_str = take(csv);
      const std::string snapshot_hex = take(snapshot);
      if (!sr_outdir.empty()) {
        write_atomic(sr_outdir + "/metrics.jsonl", metrics_str + "\n");
        write_atomic(sr_outdir + "/metrics.csv", csv_str);
        std::string raw;
        raw.reserve(snapshot_hex.size() / 2);
        for (size_t i = 0; i + 1 < snapshot_hex.size(); i += 2) {
          raw.push_back(static_cast<char>(std::stoi(snapshot_hex.substr(i, 2), nullptr, 16)));
        }
        write_atomic(sr_outdir + "/chain.bin", raw);
      }
      std::cout << pretty(metrics_str, pretty_flag) << "\n";
    }

    if (bench_verify->parsed()) {
      char* csv = nullptr;
      check(pqchain_bench_verify(
        bv_kat.c_str(),
        bv_backend == "metered" ? PQCHAIN_BACKEND_METERED : PQCHAIN_BACKEND_NATIVE,
        bv_charging == "precompile" ? PQCHAIN_CHARGING_PRECOMPILE : PQCHAIN_CHARGING_OPCODE_FLAT,
        &csv));
      const std::string payload = take(csv);
      if (!bv_out.empty()) {
        write_atomic(bv_out, payload);
        std::cout << json{ { "out", bv_out } }.dump() << "\n";
      } else {
        std::cout << payload;
      }
    }
  } catch (const CliError& e) {
    std::cerr << e.message << "\n";
    return 1;
  }
  return 0;
}
