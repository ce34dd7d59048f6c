#pragma once

#include "cert/certificates.hpp"
#include "did/registry.hpp"
#include "entropy/entropy.hpp"
#include "tunnel/tunnel.hpp"
#include "tx/transaction.hpp"
#include "verify/pipeline.hpp"

#include <deque>
#include <map>
#include <set>
#include <memory>
#include <string>
#include <vector>

namespace pqchain::sim {

enum class Role : uint8_t { Writer, Validator, Observer };

enum class Scenario : uint8_t {
  TamperInFlight,
  ForgeFalcon,
  ReplayMetatx,
  StolenEcdsaKeys,
  RogueEntryPoint,
};

std::optional<Scenario> parse_scenario(std::string_view name);
std::string_view scenario_name(Scenario scenario);

struct SimConfig {
  uint64_t seed = 0;
  uint32_t writers = 1;
  uint32_t validators = 4;
  uint32_t observers = 1;
  uint32_t tx_count = 20;
  std::vector<Scenario> scenarios;
  pipeline::Backend backend = pipeline::Backend::NativeFast;
  pipeline::GasModel gas_model;
  uint64_t event_budget = 1'000'000;
  bool pq_block_signatures = false;
};

// Key-value text format: one "key = value" per line, '#' comments.
SimConfig parse_config(const std::string& text);

struct Block {
  uint64_t number = 0;
  uint64_t nonce = 0;
  Digest256 prev_hash{};
  Digest256 tx_root{};
  Digest256 block_hash{};
  std::vector<std::pair<std::string, ecdsa::EcdsaSignature>> validator_signatures;
  std::vector<tx::MetaTransaction> transactions;
};

uint32_t signature_threshold(uint32_t validator_count); // floor(2V/3) + 1

Digest256 block_header_hash(const Block& block);
Bytes encode_block(const Block& block);
std::optional<Block> decode_block(BytesView data);

struct Metrics {
  uint64_t admitted = 0;
  std::map<std::string, uint64_t> rejected_by_reason;
  uint64_t blocks_finalized = 0;
  uint64_t tunnel_handshakes = 0;
  uint64_t tunnel_rehandshakes = 0;
  uint64_t records_tampered = 0;
  uint64_t records_rejected = 0;
  uint64_t role_rejections = 0;
  uint64_t adversary_attempts = 0;
  uint64_t adversary_successes = 0;
  uint64_t duplicates_dropped = 0;
  uint64_t txs_finalized = 0;
  uint64_t forged_finalized = 0;
  bool budget_exhausted = false;

  std::string to_jsonl() const;
  std::string to_csv() const;
};

class Simulation {
public:
  explicit Simulation(const SimConfig& config);

  // runs the configured scenario set to quiescence (or budget)
  const Metrics& run();

  // resets ledgers/pools/metrics but keeps the expensive world (keys, certs,
  // registry, tunnels) so seeded episode sweeps stay fast
  void reset_ledger(uint64_t new_seed);

  const Metrics& metrics() const { return metrics_; }
  const did::Registry& registry() const { return *registry_; }

  size_t node_count() const { return nodes_.size(); }
  Role node_role(size_t i) const { return nodes_[i]->role; }
  const std::string& node_did(size_t i) const { return nodes_[i]->did; }
  const std::vector<Block>& chain_of(size_t i) const { return nodes_[i]->chain; }
  size_t pool_size(size_t i) const { return nodes_[i]->pool.size(); }

  Digest256 chain_hash(size_t i) const;
  Digest256 state_hash() const; // registry + chains + dids
  Bytes chain_snapshot() const; // deterministic binary export
  std::string decision_log(size_t i) const;

  // all honest chains hash-equal
  bool chains_consistent() const;

  // direct injection used by tests: returns the admission decision the node
  // reached for an externally supplied meta-transaction
  pipeline::AdmissionDecision inject_metatx(size_t node, const tx::MetaTransaction& mtx);

  // One seeded episode of the post-signing tamper matrix: an adversary who
  // holds the writer's ECDSA key mutates each of the 7 inner fields and
  // injects the wire-consistent forgeries alongside the honest original.
  struct TamperEpisode {
    uint32_t honest_finalized = 0;
    uint32_t tampered_finalized = 0;
    uint32_t tampered_rejected = 0;
  };
  TamperEpisode run_tamper_episode(uint64_t seed);

private:
  struct Node {
    size_t index = 0;
    std::string name;
    Role role = Role::Observer;
    std::string did;
    ecdsa::EcdsaKeyPair eth;
    falcon::FalconKeyPair falcon;
    cert::PqCertificate certificate;
    pipeline::TransactionPool pool;
    std::vector<Block> chain;
    std::map<size_t, tunnel::TunnelSession> sessions; // peer -> session
    std::deque<std::pair<size_t, Bytes>> inbox;       // (from, plaintext payload)
    std::set<std::string> seen_hashes;                // admitted or finalized
    std::map<std::string, Block> pending_blocks;      // proposer state
    std::map<std::string, std::map<std::string, ecdsa::EcdsaSignature>> pending_sigs;
    std::vector<std::string> decisions;
  };

  void spawn();
  void open_tunnel(size_t a, size_t b);
  void deliver(size_t from, size_t to, const Bytes& payload);
  void broadcast(size_t from, const Bytes& payload, size_t except);
  void process_inbox(Node& node);
  void handle_metatx(Node& node, const tx::MetaTransaction& mtx, size_t from);
  void submit_writer_tx(Node& writer, uint32_t tx_index);
  void try_produce_block();
  void finalize_block(Node& node, const Block& block);
  void run_adversaries();
  bool quiescent() const;

  bool has_scenario(Scenario s) const;
  uint64_t rng_u64();
  Bytes rng_bytes(size_t n, std::string_view label);

  SimConfig config_;
  std::unique_ptr<cert::CertificateAuthority> ca_;
  std::unique_ptr<did::Registry> registry_;
  std::unique_ptr<entropy::EntropyService> entropy_service_;
  std::vector<std::unique_ptr<Node>> nodes_;
  Address relay_hub_{};
  pipeline::PipelineConfig pipeline_config_;
  Metrics metrics_;
  std::unique_ptr<falcon::FalconKeyPair> adversary_falcon_;
  uint64_t rng_counter_ = 0;
  uint32_t submitted_ = 0;
  uint64_t events_ = 0;
};

} // namespace pqchain::sim
