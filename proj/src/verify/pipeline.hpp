#pragma once

#include "common/bytes.hpp"
#include "did/registry.hpp"
#include "tx/transaction.hpp"

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace pqchain::pipeline {

enum class Verdict : uint8_t { Admit, Reject };

enum class Reason : uint8_t {
  None,
  NotRelayHub,
  SenderControlFailed,
  DidUnresolvable,
  PqSignatureInvalid,
  Malformed,
};

std::string_view reason_string(Reason reason);

enum class Backend : uint8_t { Metered, NativeFast };
enum class ChargingMode : uint8_t { OpcodeFlat, PrecompileTable };

// Cost model for the metered (in-VM interpreted) backend. The per-operation
// unit costs price one modeled EVM operation; the expansion factors translate
// one instrumented algorithmic event (sponge permutation, NTT butterfly,
// coefficient multiply, touched word) into the stream of interpreted EVM
// operations a pure-contract implementation would execute. The totals are a
// model of that implementation's cost, not mainnet-exact accounting.
struct GasModel {
  uint64_t hash_absorb_per_word = 36;
  uint64_t field_multiply = 5;
  uint64_t memory_word = 3;

  uint64_t hash_words_per_permutation = 17 * 64;
  uint64_t mults_per_field_op = 100;
  uint64_t words_per_memory_word = 800;

  uint64_t block_gas_limit = 12'000'000;
  uint32_t code_size_limit = 24'576;

  // NativeFast / PrecompileTable charging
  uint64_t precompile_base = 60;
  uint64_t precompile_per_word = 12;
};

struct VerifyOutcome {
  bool accept = false;
  uint64_t gas = 0;
};

// Metered backend: identical verdict to the plain verifier, with gas summed
// from instrumentation hooks inside the verification code path.
VerifyOutcome metered_falcon_verify(BytesView stream, BytesView signature,
                                    const falcon::PublicKey& public_key, const GasModel& model);

// Native backend: direct verification with opcode- or precompile-style
// charging.
VerifyOutcome native_fast_verify(BytesView stream, BytesView signature,
                                 const falcon::PublicKey& public_key, ChargingMode mode,
                                 const GasModel& model);

struct AdmissionDecision {
  Verdict verdict = Verdict::Reject;
  Reason reason = Reason::Malformed;
  uint64_t gas_metered = 0;
  Backend backend = Backend::NativeFast;
  // instrumentation: how many times each protocol step executed
  std::array<uint32_t, 3> step_executions{ 0, 0, 0 };
  std::array<uint64_t, 3> step_timings_us{ 0, 0, 0 };

  bool deterministic_equal(const AdmissionDecision& other) const
  {
    return verdict == other.verdict && reason == other.reason &&
           gas_metered == other.gas_metered && backend == other.backend &&
           step_executions == other.step_executions;
  }
};

struct PipelineConfig {
  Address relay_hub{};
  Backend backend = Backend::NativeFast;
  ChargingMode charging = ChargingMode::OpcodeFlat;
  GasModel gas_model;
  // optional permissioning predicates, disabled by default
  bool enforce_value_limit = false;
  Bytes max_value;
  bool enforce_gas_price_limit = false;
  Bytes max_gas_price;
};

bool check_entry_point(const tx::MetaTransaction& mtx, const Address& relay_hub);

// Entry-point check plus the ordered three-step verification protocol.
AdmissionDecision admit(const tx::MetaTransaction& mtx, const did::Registry& registry,
                        const PipelineConfig& config);

// Per-node admitted pool with wrapper-hash dedup.
class TransactionPool {
public:
  // true if newly inserted; false if already present
  bool insert(const tx::MetaTransaction& mtx);
  bool contains(const Digest256& hash) const;
  size_t size() const { return order_.size(); }
  const std::vector<tx::MetaTransaction>& ordered() const { return order_; }
  void erase(const Digest256& hash);

private:
  std::set<std::string> hashes_;
  std::vector<tx::MetaTransaction> order_;
};

// Append-only JSONL decision log plus the benchmark CSV emitter.
struct DecisionRecord {
  Digest256 tx_hash{};
  AdmissionDecision decision;
};

std::string decision_to_jsonl(const DecisionRecord& record);
void write_bench_csv(std::ostream& out, const std::vector<std::pair<std::string, uint64_t>>& rows,
                     uint64_t block_gas_limit);

} // namespace pqchain::pipeline
