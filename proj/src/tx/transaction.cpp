#include "tx/transaction.hpp"

#include "common/errors.hpp"
#include "common/tlv.hpp"
#include "crypto/keccak.hpp"
#include "tx/rlp.hpp"

namespace pqchain::tx {

namespace {

Bytes strip_leading_zeros(BytesView b)
{
  size_t i = 0;
  while (i < b.size() && b[i] == 0) {
    i++;
  }
  return Bytes(b.begin() + i, b.end());
}

rlp::Item to_item(const Transaction& t)
{
  std::vector<rlp::Item> fields;
  fields.push_back(rlp::Item::uint(t.nonce));
  fields.push_back(rlp::Item::biguint(t.gas_price));
  fields.push_back(rlp::Item::uint(t.start_gas));
  fields.push_back(t.to ? rlp::Item::str(BytesView(*t.to)) : rlp::Item::str({}));
  fields.push_back(rlp::Item::biguint(t.value));
  fields.push_back(rlp::Item::str(t.data));
  return rlp::Item::list(std::move(fields));
}

std::optional<uint64_t> item_to_u64(const rlp::Item& it)
{
  if (it.is_list || it.bytes.size() > 8) {
    return std::nullopt;
  }
  if (!it.bytes.empty() && it.bytes[0] == 0) {
    return std::nullopt; // non-minimal integer
  }
  uint64_t v = 0;
  for (uint8_t b : it.bytes) {
    v = (v << 8) | b;
  }
  return v;
}

std::optional<Bytes> item_to_biguint(const rlp::Item& it, size_t max_len)
{
  if (it.is_list || it.bytes.size() > max_len) {
    return std::nullopt;
  }
  if (!it.bytes.empty() && it.bytes[0] == 0) {
    return std::nullopt;
  }
  return it.bytes;
}

std::optional<Transaction> fields_to_tx(const std::vector<rlp::Item>& f, uint64_t chain_id)
{
  Transaction t;
  const auto nonce = item_to_u64(f[0]);
  const auto gas_price = item_to_biguint(f[1], 32);
  const auto start_gas = item_to_u64(f[2]);
  const auto value = item_to_biguint(f[4], 32);
  if (!nonce || !gas_price || !start_gas || !value || f[3].is_list || f[5].is_list) {
    return std::nullopt;
  }
  if (!f[3].bytes.empty() && f[3].bytes.size() != 20) {
    return std::nullopt;
  }
  t.nonce = *nonce;
  t.gas_price = *gas_price;
  t.start_gas = *start_gas;
  if (!f[3].bytes.empty()) {
    Address a;
    std::copy(f[3].bytes.begin(), f[3].bytes.end(), a.begin());
    t.to = a;
  }
  t.value = *value;
  t.data = f[5].bytes;
  t.chain_id = chain_id;
  return t;
}

} // namespace

Bytes signing_stream(const Transaction& t)
{
  rlp::Item item = to_item(t);
  item.items.push_back(rlp::Item::uint(t.chain_id));
  item.items.push_back(rlp::Item::uint(0));
  item.items.push_back(rlp::Item::uint(0));
  return rlp::encode(item);
}

Digest256 signing_hash(const Transaction& t)
{
  return hash::keccak256(signing_stream(t));
}

SignedTransaction sign_inner(const Transaction& t, const ecdsa::EcdsaKeyPair& key)
{
  SignedTransaction stx;
  stx.tx = t;
  stx.tx.gas_price = strip_leading_zeros(t.gas_price);
  stx.tx.value = strip_leading_zeros(t.value);
  const auto sig = ecdsa::sign(signing_hash(stx.tx), key);
  stx.v = t.chain_id * 2 + 35 + static_cast<uint64_t>(sig.recovery_id);
  stx.r = sig.r;
  stx.s = sig.s;
  return stx;
}

std::optional<ecdsa::PublicKey> recover_sender(const SignedTransaction& stx)
{
  const uint64_t base = stx.tx.chain_id * 2 + 35;
  if (stx.v != base && stx.v != base + 1) {
    return std::nullopt;
  }
  if (!ecdsa::is_low_s(stx.s)) {
    return std::nullopt;
  }
  ecdsa::EcdsaSignature sig;
  sig.r = stx.r;
  sig.s = stx.s;
  sig.recovery_id = static_cast<int>(stx.v - base);
  return ecdsa::recover(signing_hash(stx.tx), sig);
}

std::optional<Address> sender_address(const SignedTransaction& stx)
{
  const auto pub = recover_sender(stx);
  if (!pub) {
    return std::nullopt;
  }
  return ecdsa::derive_address(*pub);
}

Bytes encode_signed(const SignedTransaction& stx)
{
  rlp::Item item = to_item(stx.tx);
  item.items.push_back(rlp::Item::uint(stx.v));
  item.items.push_back(rlp::Item::biguint(stx.r));
  item.items.push_back(rlp::Item::biguint(stx.s));
  return rlp::encode(item);
}

std::optional<SignedTransaction> decode_signed(BytesView data)
{
  const auto item = rlp::decode(data);
  if (!item || !item->is_list || item->items.size() != 9) {
    return std::nullopt;
  }
  const auto& f = item->items;
  const auto v = item_to_u64(f[6]);
  const auto r = item_to_biguint(f[7], 32);
  const auto s = item_to_biguint(f[8], 32);
  if (!v || !r || !s || *v < 37) {
    return std::nullopt;
  }
  const uint64_t chain_id = (*v - 35) / 2;
  auto t = fields_to_tx(f, chain_id);
  if (!t) {
    return std::nullopt;
  }
  SignedTransaction stx;
  stx.tx = *t;
  stx.v = *v;
  std::copy(r->begin(), r->end(), stx.r.begin() + (32 - r->size()));
  std::copy(s->begin(), s->end(), stx.s.begin() + (32 - s->size()));
  return stx;
}

Bytes encode_payload(const SignedTransaction& inner, const std::string& writer_did,
                     BytesView falcon_signature)
{
  tlv::Writer w("MTX1", 1);
  w.field(1, encode_signed(inner));
  w.field_str(2, writer_did);
  w.field(3, falcon_signature);
  return w.take();
}

MetaTransaction sign_outer(const SignedTransaction& inner, const WriterContext& writer,
                           BytesView falcon_entropy, const Address& relay_hub,
                           uint64_t wrapper_nonce)
{
  MetaTransaction mtx;
  mtx.relay_hub = relay_hub;
  mtx.inner = inner;
  mtx.writer_did = writer.did;

  const Bytes stream = signing_stream(inner.tx);
  const auto fsig = falcon::sign(stream, writer.falcon_secret, falcon_entropy);
  mtx.falcon_signature.assign(fsig.bytes.begin(), fsig.bytes.end());

  Transaction wrapper_tx;
  wrapper_tx.nonce = wrapper_nonce;
  wrapper_tx.start_gas = 1'000'000;
  wrapper_tx.to = relay_hub;
  wrapper_tx.data = encode_payload(inner, writer.did, mtx.falcon_signature);
  wrapper_tx.chain_id = inner.tx.chain_id;
  mtx.wrapper = sign_inner(wrapper_tx, writer.eth_key);
  return mtx;
}

MetaTransaction wrap_presigned(const SignedTransaction& inner, const std::string& writer_did,
                               BytesView falcon_signature, const Address& relay_hub,
                               uint64_t wrapper_nonce, const ecdsa::EcdsaKeyPair& wrapper_key)
{
  MetaTransaction mtx;
  mtx.relay_hub = relay_hub;
  mtx.inner = inner;
  mtx.writer_did = writer_did;
  mtx.falcon_signature.assign(falcon_signature.begin(), falcon_signature.end());

  Transaction wrapper_tx;
  wrapper_tx.nonce = wrapper_nonce;
  wrapper_tx.start_gas = 1'000'000;
  wrapper_tx.to = relay_hub;
  wrapper_tx.data = encode_payload(inner, writer_did, mtx.falcon_signature);
  wrapper_tx.chain_id = inner.tx.chain_id;
  mtx.wrapper = sign_inner(wrapper_tx, wrapper_key);
  return mtx;
}

Bytes encode_metatx(const MetaTransaction& mtx)
{
  return encode_signed(mtx.wrapper);
}

std::optional<MetaTransaction> decode_metatx(BytesView data)
{
  const auto wrapper = decode_signed(data);
  if (!wrapper || !wrapper->tx.to) {
    return std::nullopt;
  }
  MetaTransaction mtx;
  mtx.wrapper = *wrapper;
  mtx.relay_hub = *wrapper->tx.to;
  try {
    tlv::Reader r(wrapper->tx.data, "MTX1", 1);
    const Bytes inner_rlp = r.field(1);
    mtx.writer_did = r.field_str(2);
    mtx.falcon_signature = r.field(3);
    r.finish();
    const auto inner = decode_signed(inner_rlp);
    if (!inner) {
      return std::nullopt;
    }
    mtx.inner = *inner;
  } catch (const Error&) {
    return std::nullopt;
  }
  if (mtx.falcon_signature.size() != falcon::kSignatureLen) {
    return std::nullopt;
  }
  return mtx;
}

Digest256 wrapper_hash(const MetaTransaction& mtx)
{
  return hash::keccak256(encode_metatx(mtx));
}

} // namespace pqchain::tx
