#include "verify/pipeline.hpp"

#include "common/errors.hpp"
#include "crypto/keccak.hpp"

#include <chrono>
#include <ostream>

namespace pqchain::pipeline {

namespace {

uint64_t now_us()
{
  return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(
                                 std::chrono::steady_clock::now().time_since_epoch())
                                 .count());
}

bool value_leq(BytesView a, BytesView b)
{
  // minimal big-endian compare
  if (a.size() != b.size()) {
    return a.size() < b.size();
  }
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end()) ||
         std::equal(a.begin(), a.end(), b.begin());
}

} // namespace

std::string_view reason_string(Reason reason)
{
  switch (reason) {
    case Reason::None: return "None";
    case Reason::NotRelayHub: return "NotRelayHub";
    case Reason::SenderControlFailed: return "SenderControlFailed";
    case Reason::DidUnresolvable: return "DidUnresolvable";
    case Reason::PqSignatureInvalid: return "PqSignatureInvalid";
    case Reason::Malformed: return "Malformed";
  }
  return "Unknown";
}

VerifyOutcome metered_falcon_verify(BytesView stream, BytesView signature,
                                    const falcon::PublicKey& public_key, const GasModel& model)
{
  falcon::VerifyMeter meter;
  const auto status = falcon::verify(stream, signature, public_key, &meter);
  VerifyOutcome out;
  out.accept = status == falcon::VerifyStatus::Accept;
  const uint64_t hash_words = meter.shake_permutations * model.hash_words_per_permutation;
  const uint64_t field_ops = (meter.ntt_butterflies + meter.coeff_mults) * model.mults_per_field_op;
  const uint64_t mem_words = meter.memory_words * model.words_per_memory_word;
  out.gas = hash_words * model.hash_absorb_per_word + field_ops * model.field_multiply +
            mem_words * model.memory_word;
  return out;
}

VerifyOutcome native_fast_verify(BytesView stream, BytesView signature,
                                 const falcon::PublicKey& public_key, ChargingMode mode,
                                 const GasModel& model)
{
  VerifyOutcome out;
  out.accept = falcon::verify(stream, signature, public_key) == falcon::VerifyStatus::Accept;
  if (mode == ChargingMode::OpcodeFlat) {
    out.gas = 1;
  } else {
    const uint64_t words = (stream.size() + signature.size() + public_key.size() + 31) / 32;
    out.gas = model.precompile_base + words * model.precompile_per_word;
  }
  return out;
}

bool check_entry_point(const tx::MetaTransaction& mtx, const Address& relay_hub)
{
  return mtx.wrapper.tx.to.has_value() && *mtx.wrapper.tx.to == relay_hub &&
         mtx.relay_hub == relay_hub;
}

AdmissionDecision admit(const tx::MetaTransaction& mtx, const did::Registry& registry,
                        const PipelineConfig& config)
{
  AdmissionDecision d;
  d.backend = config.backend;

  // single entry point: the relay hub contract address
  if (!check_entry_point(mtx, config.relay_hub)) {
    d.reason = Reason::NotRelayHub;
    return d;
  }
  // optional permissioning predicates (disabled by default)
  if (config.enforce_value_limit &&
      !value_leq(mtx.wrapper.tx.value, config.max_value)) {
    d.reason = Reason::Malformed;
    return d;
  }
  if (config.enforce_gas_price_limit &&
      !value_leq(mtx.wrapper.tx.gas_price, config.max_gas_price)) {
    d.reason = Reason::Malformed;
    return d;
  }
  if (mtx.falcon_signature.size() != falcon::kSignatureLen) {
    d.reason = Reason::Malformed;
    return d;
  }

  // step 1: the sender must control the writer DID
  d.step_executions[0]++;
  const uint64_t t1 = now_us();
  const did::DidRecord* record = nullptr;
  {
    const auto sender = tx::recover_sender(mtx.wrapper);
    if (!sender) {
      d.reason = Reason::Malformed;
      d.step_timings_us[0] = now_us() - t1;
      return d;
    }
    if (!did::is_valid(mtx.writer_did)) {
      d.reason = Reason::DidUnresolvable;
      d.step_timings_us[0] = now_us() - t1;
      return d;
    }
    record = registry.resolve(mtx.writer_did);
    if (record == nullptr) {
      d.reason = Reason::DidUnresolvable;
      d.step_timings_us[0] = now_us() - t1;
      return d;
    }
    if (registry.controls(*sender, mtx.writer_did) != did::ControlsStatus::Controls) {
      d.reason = Reason::SenderControlFailed;
      d.step_timings_us[0] = now_us() - t1;
      return d;
    }
  }
  d.step_timings_us[0] = now_us() - t1;

  // step 2: resolve the post-quantum key from the same record
  d.step_executions[1]++;
  const uint64_t t2 = now_us();
  const did::DidRecord* pq_record = registry.resolve(mtx.writer_did);
  if (pq_record == nullptr) {
    d.reason = Reason::DidUnresolvable;
    d.step_timings_us[1] = now_us() - t2;
    return d;
  }
  const falcon::PublicKey falcon_key = pq_record->falcon_public_key;
  d.step_timings_us[1] = now_us() - t2;

  // step 3: verify the post-quantum signature over the inner signing stream
  d.step_executions[2]++;
  const uint64_t t3 = now_us();
  const Bytes stream = tx::signing_stream(mtx.inner.tx);
  VerifyOutcome outcome;
  if (config.backend == Backend::Metered) {
    outcome = metered_falcon_verify(stream, mtx.falcon_signature, falcon_key, config.gas_model);
  } else {
    outcome =
      native_fast_verify(stream, mtx.falcon_signature, falcon_key, config.charging,
                         config.gas_model);
  }
  d.gas_metered = outcome.gas;
  d.step_timings_us[2] = now_us() - t3;
  if (!outcome.accept) {
    d.reason = Reason::PqSignatureInvalid;
    return d;
  }
  d.verdict = Verdict::Admit;
  d.reason = Reason::None;
  return d;
}

bool TransactionPool::insert(const tx::MetaTransaction& mtx)
{
  const std::string key = to_hex(tx::wrapper_hash(mtx));
  if (!hashes_.insert(key).second) {
    return false;
  }
  order_.push_back(mtx);
  return true;
}

bool TransactionPool::contains(const Digest256& hash) const
{
  return hashes_.contains(to_hex(hash));
}

void TransactionPool::erase(const Digest256& hash)
{
  const std::string key = to_hex(hash);
  if (hashes_.erase(key) == 0) {
    return;
  }
  for (auto it = order_.begin(); it != order_.end(); ++it) {
    if (tx::wrapper_hash(*it) == hash) {
      order_.erase(it);
      break;
    }
  }
}

std::string decision_to_jsonl(const DecisionRecord& record)
{
  std::string out = "{\"tx_hash\":\"";
  out += to_hex(record.tx_hash);
  out += "\",\"verdict\":\"";
  out += record.decision.verdict == Verdict::Admit ? "Admit" : "Reject";
  out += "\",\"reason\":\"";
  out += reason_string(record.decision.reason);
  out += "\",\"backend\":\"";
  out += record.decision.backend == Backend::Metered ? "Metered" : "NativeFast";
  out += "\",\"gas\":";
  out += std::to_string(record.decision.gas_metered);
  out += ",\"step_timings_us\":[";
  for (int i = 0; i < 3; i++) {
    out += std::to_string(record.decision.step_timings_us[i]);
    if (i < 2) {
      out += ',';
    }
  }
  out += "]}";
  return out;
}

void write_bench_csv(std::ostream& out, const std::vector<std::pair<std::string, uint64_t>>& rows,
                     uint64_t block_gas_limit)
{
  out << "vector,gas,block_gas_limit,ratio\n";
  for (const auto& [name, gas] : rows) {
    out << name << ',' << gas << ',' << block_gas_limit << ','
        << double(gas) / double(block_gas_limit) << '\n';
  }
}

} // namespace pqchain::pipeline
