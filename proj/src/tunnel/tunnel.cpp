#include "common/tlv.hpp"
#include "tunnel/tunnel.hpp"

#include "common/errors.hpp"
#include "crypto/aead.hpp"
#include "crypto/keccak.hpp"

namespace pqchain::tunnel {

namespace {

constexpr std::array<uint8_t, 8> kDirI2R = { 'i', '2', 'r', 0, 0, 0, 0, 0 };
constexpr std::array<uint8_t, 8> kDirR2I = { 'r', '2', 'i', 0, 0, 0, 0, 0 };

aead::Nonce record_nonce(const std::array<uint8_t, 8>& dir, uint64_t seq)
{
  aead::Nonce nonce{};
  std::copy(dir.begin(), dir.end(), nonce.begin());
  for (int i = 0; i < 8; i++) {
    nonce[8 + i] = static_cast<uint8_t>(seq >> (8 * (7 - i)));
  }
  return nonce;
}

void check_peer(const cert::PqCertificate& peer, const EndpointConfig& cfg)
{
  if (cert::verify_certificate(peer, cfg.ca_public, cfg.now) != cert::CheckResult::Accept) {
    throw Error(ErrorCode::CertificateRejected, "peer certificate failed validation");
  }
  if (!cfg.allowed_peers.contains(peer.subject.did)) {
    throw Error(ErrorCode::CertificateRejected, "peer DID not in the allow-list");
  }
}

Bytes sign_transcript(const Bytes& transcript, const falcon::SecretKey& key, BytesView entropy,
                      std::string_view label)
{
  Bytes msg = to_bytes(label);
  const Digest256 th = hash::keccak256(transcript);
  append(msg, BytesView(th));
  const auto sig = falcon::sign(msg, key, entropy);
  return Bytes(sig.bytes.begin(), sig.bytes.end());
}

bool verify_transcript_sig(const Bytes& transcript, BytesView signature,
                           const falcon::PublicKey& key, std::string_view label)
{
  Bytes msg = to_bytes(label);
  const Digest256 th = hash::keccak256(transcript);
  append(msg, BytesView(th));
  return falcon::verify(msg, signature, key) == falcon::VerifyStatus::Accept;
}

Digest256 confirm_mac(const kem::SharedSecret& ss, const Bytes& transcript,
                      std::string_view label)
{
  hash::Shake256 xof;
  xof.absorb(BytesView(ss));
  const Digest256 th = hash::keccak256(transcript);
  xof.absorb(BytesView(th));
  xof.absorb(to_bytes(label));
  Digest256 out;
  xof.squeeze(out.data(), out.size());
  return out;
}

void derive_traffic_keys(const kem::SharedSecret& ss, const Bytes& transcript,
                         std::array<uint8_t, 32>& i2r, std::array<uint8_t, 32>& r2i)
{
  hash::Shake256 xof;
  xof.absorb(BytesView(ss));
  const Digest256 th = hash::keccak256(transcript);
  xof.absorb(BytesView(th));
  uint8_t keys[64];
  xof.squeeze(keys, sizeof(keys));
  std::memcpy(i2r.data(), keys, 32);
  std::memcpy(r2i.data(), keys + 32, 32);
}

entropy::Frame expect_frame(const Bytes& raw, HsType type)
{
  const auto frame = entropy::parse_frame(raw);
  if (!frame || static_cast<uint8_t>(frame->type) != static_cast<uint8_t>(type)) {
    throw Error(ErrorCode::Malformed, "unexpected handshake frame");
  }
  return *frame;
}

} // namespace

Bytes TunnelSession::seal(BytesView plaintext)
{
  if (state_ != TunnelState::Open) {
    throw Error(ErrorCode::InvalidState, "seal on a session that is not Open");
  }
  if (send_seq_ >= max_records_) {
    state_ = TunnelState::Closed;
    throw Error(ErrorCode::InvalidState, "send window exhausted; renegotiate");
  }
  const auto& dir = role_ == Role::Initiator ? kDirI2R : kDirR2I;
  aead::Key key;
  std::copy(send_key_.begin(), send_key_.end(), key.begin());

  Bytes aad;
  append_u64be(aad, send_seq_);
  const Bytes boxed = aead::seal(key, record_nonce(dir, send_seq_), aad, plaintext);

  Bytes record;
  append_u32be(record, static_cast<uint32_t>(8 + boxed.size()));
  append_u64be(record, send_seq_);
  append(record, boxed);
  send_seq_++;
  return record;
}

Bytes TunnelSession::open(const Bytes& record)
{
  if (state_ != TunnelState::Open) {
    throw Error(ErrorCode::InvalidState, "open on a session that is not Open");
  }
  if (record.size() < 4 + 8 + aead::kTagLen) {
    state_ = TunnelState::Closed;
    throw Error(ErrorCode::TagInvalid, "truncated record");
  }
  const uint32_t len = read_u32be(record.data());
  if (record.size() != 4 + size_t(len)) {
    state_ = TunnelState::Closed;
    throw Error(ErrorCode::TagInvalid, "record length mismatch");
  }
  const uint64_t seq = read_u64be(record.data() + 4);
  if (seq != recv_seq_) {
    throw Error(ErrorCode::ReplayOrReorder, "record sequence out of order");
  }
  const auto& dir = role_ == Role::Initiator ? kDirR2I : kDirI2R;
  aead::Key key;
  std::copy(recv_key_.begin(), recv_key_.end(), key.begin());

  Bytes aad;
  append_u64be(aad, seq);
  const auto opened =
    aead::open(key, record_nonce(dir, seq), aad, BytesView(record).subspan(12));
  if (!opened) {
    state_ = TunnelState::Closed;
    throw Error(ErrorCode::TagInvalid, "record authentication failed");
  }
  recv_seq_++;
  return *opened;
}

InitiatorHandshake::InitiatorHandshake(EndpointConfig config, BytesView entropy)
  : config_(std::move(config))
  , entropy_(entropy.begin(), entropy.end())
{
  if (entropy_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "handshake requires entropy");
  }
}

Bytes InitiatorHandshake::hello()
{
  if (step_ != 0) {
    throw Error(ErrorCode::InvalidState, "hello already sent");
  }
  step_ = 1;
  hash::Shake256 xof;
  xof.absorb(to_bytes("pqchain/tunnel-nonce-i"));
  xof.absorb(entropy_);
  xof.squeeze(nonce_.data(), nonce_.size());

  tlv::Writer w("THLO", 1);
  w.field_str(1, config_.aead_algorithm);
  w.field(2, cert::encode_certificate(config_.certificate));
  w.field(3, BytesView(nonce_));
  const Bytes frame = entropy::make_frame(static_cast<entropy::FrameType>(HsType::Hello),
                                          w.take());
  append(transcript_, frame);
  return frame;
}

Bytes InitiatorHandshake::finish(const Bytes& response_frame)
{
  if (step_ != 1) {
    throw Error(ErrorCode::InvalidState, "finish out of order");
  }
  step_ = 2;
  const auto frame = expect_frame(response_frame, HsType::Response);

  tlv::Reader r(frame.payload, "TRSP", 1);
  const Bytes cert_bytes = r.field(1);
  const Bytes nonce_r = r.field(2);
  const Bytes kem_pub = r.field(3);
  const Bytes sig = r.field(4);
  r.finish();

  const auto peer = cert::decode_certificate(cert_bytes);
  if (!peer) {
    throw Error(ErrorCode::CertificateRejected, "undecodable peer certificate");
  }
  check_peer(*peer, config_);

  // the responder signs everything up to and excluding its signature
  Bytes signed_part = transcript_;
  {
    tlv::Writer prefix("TRSP", 1);
    prefix.field(1, cert_bytes);
    prefix.field(2, nonce_r);
    prefix.field(3, kem_pub);
    append(signed_part, prefix.take());
  }
  if (!verify_transcript_sig(signed_part, sig, peer->falcon_public_key, "tunnel-responder")) {
    throw Error(ErrorCode::SignatureInvalid, "responder transcript signature rejected");
  }
  append(transcript_, response_frame);
  session_.peer_cert_ = *peer;

  Bytes encap_entropy = to_bytes("pqchain/tunnel-encap");
  append(encap_entropy, entropy_);
  const auto enc = kem::encap(kem_pub, encap_entropy);
  shared_secret_ = enc.shared_secret;

  Bytes fin_prefix;
  {
    tlv::Writer w("TFIN", 1);
    w.field(1, enc.ciphertext);
    fin_prefix = w.take();
  }
  Bytes signed_fin = transcript_;
  append(signed_fin, fin_prefix);
  Bytes sig_entropy = to_bytes("pqchain/tunnel-sig-i");
  append(sig_entropy, entropy_);
  const Bytes my_sig =
    sign_transcript(signed_fin, config_.falcon_secret, sig_entropy, "tunnel-initiator");

  tlv::Writer w("TFIN", 1);
  w.field(1, enc.ciphertext);
  w.field(2, my_sig);
  const Bytes fin = entropy::make_frame(static_cast<entropy::FrameType>(HsType::Finish),
                                        w.take());
  append(transcript_, fin);
  return fin;
}

Bytes InitiatorHandshake::complete(const Bytes& confirm_frame)
{
  if (step_ != 2) {
    throw Error(ErrorCode::InvalidState, "complete out of order");
  }
  step_ = 3;
  const auto frame = expect_frame(confirm_frame, HsType::ConfirmResp);
  const Digest256 expected = confirm_mac(shared_secret_, transcript_, "confirm-responder");
  if (!ct_equal(frame.payload, BytesView(expected))) {
    throw Error(ErrorCode::ConfirmFailed, "responder confirmation rejected");
  }
  append(transcript_, confirm_frame);

  const Digest256 mine = confirm_mac(shared_secret_, transcript_, "confirm-initiator");
  const Bytes out = entropy::make_frame(static_cast<entropy::FrameType>(HsType::ConfirmInit),
                                        BytesView(mine));
  append(transcript_, out);

  session_.role_ = Role::Initiator;
  session_.local_cert_ = config_.certificate;
  derive_traffic_keys(shared_secret_, transcript_, session_.send_key_, session_.recv_key_);
  session_.max_records_ = config_.max_records;
  session_.state_ = TunnelState::Open;
  return out;
}

TunnelSession InitiatorHandshake::take_session()
{
  if (session_.state_ != TunnelState::Open) {
    throw Error(ErrorCode::InvalidState, "handshake not complete");
  }
  return std::move(session_);
}

ResponderHandshake::ResponderHandshake(EndpointConfig config, BytesView entropy)
  : config_(std::move(config))
  , entropy_(entropy.begin(), entropy.end())
{
  if (entropy_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "handshake requires entropy");
  }
  Bytes kem_entropy = to_bytes("pqchain/tunnel-kem");
  append(kem_entropy, entropy_);
  kem_keys_ = kem::keygen(kem_entropy);
}

Bytes ResponderHandshake::respond(const Bytes& hello_frame)
{
  if (step_ != 0) {
    throw Error(ErrorCode::InvalidState, "respond out of order");
  }
  step_ = 1;
  const auto frame = expect_frame(hello_frame, HsType::Hello);

  tlv::Reader r(frame.payload, "THLO", 1);
  const std::string aead_alg = r.field_str(1);
  const Bytes cert_bytes = r.field(2);
  const Bytes nonce_i = r.field(3);
  r.finish();

  if (aead_alg != config_.aead_algorithm) {
    throw Error(ErrorCode::ConfigError, "aead algorithm mismatch");
  }
  const auto peer = cert::decode_certificate(cert_bytes);
  if (!peer) {
    throw Error(ErrorCode::CertificateRejected, "undecodable peer certificate");
  }
  check_peer(*peer, config_);
  session_.peer_cert_ = *peer;
  append(transcript_, hello_frame);

  std::array<uint8_t, 32> nonce_r{};
  {
    hash::Shake256 xof;
    xof.absorb(to_bytes("pqchain/tunnel-nonce-r"));
    xof.absorb(entropy_);
    xof.squeeze(nonce_r.data(), nonce_r.size());
  }

  Bytes prefix;
  {
    tlv::Writer w("TRSP", 1);
    w.field(1, cert::encode_certificate(config_.certificate));
    w.field(2, BytesView(nonce_r));
    w.field(3, kem_keys_.public_key);
    prefix = w.take();
  }
  Bytes signed_part = transcript_;
  append(signed_part, prefix);
  Bytes sig_entropy = to_bytes("pqchain/tunnel-sig-r");
  append(sig_entropy, entropy_);
  const Bytes sig =
    sign_transcript(signed_part, config_.falcon_secret, sig_entropy, "tunnel-responder");

  tlv::Writer w("TRSP", 1);
  w.field(1, cert::encode_certificate(config_.certificate));
  w.field(2, BytesView(nonce_r));
  w.field(3, kem_keys_.public_key);
  w.field(4, sig);
  const Bytes out = entropy::make_frame(static_cast<entropy::FrameType>(HsType::Response),
                                        w.take());
  append(transcript_, out);
  return out;
}

Bytes ResponderHandshake::confirm(const Bytes& finish_frame)
{
  if (step_ != 1) {
    throw Error(ErrorCode::InvalidState, "confirm out of order");
  }
  step_ = 2;
  const auto frame = expect_frame(finish_frame, HsType::Finish);

  tlv::Reader r(frame.payload, "TFIN", 1);
  const Bytes ct = r.field(1);
  const Bytes sig = r.field(2);
  r.finish();

  Bytes signed_part = transcript_;
  {
    tlv::Writer prefix("TFIN", 1);
    prefix.field(1, ct);
    append(signed_part, prefix.take());
  }
  if (!verify_transcript_sig(signed_part, sig, session_.peer_cert_.falcon_public_key,
                             "tunnel-initiator")) {
    throw Error(ErrorCode::SignatureInvalid, "initiator transcript signature rejected");
  }
  append(transcript_, finish_frame);

  shared_secret_ = kem::decap(ct, kem_keys_);
  const Digest256 mine = confirm_mac(shared_secret_, transcript_, "confirm-responder");
  const Bytes out = entropy::make_frame(static_cast<entropy::FrameType>(HsType::ConfirmResp),
                                        BytesView(mine));
  append(transcript_, out);
  return out;
}

void ResponderHandshake::accept(const Bytes& confirm_frame)
{
  if (step_ != 2) {
    throw Error(ErrorCode::InvalidState, "accept out of order");
  }
  step_ = 3;
  const auto frame = expect_frame(confirm_frame, HsType::ConfirmInit);
  const Digest256 expected = confirm_mac(shared_secret_, transcript_, "confirm-initiator");
  if (!ct_equal(frame.payload, BytesView(expected))) {
    throw Error(ErrorCode::ConfirmFailed, "initiator confirmation rejected");
  }
  append(transcript_, confirm_frame);

  session_.role_ = Role::Responder;
  session_.local_cert_ = config_.certificate;
  derive_traffic_keys(shared_secret_, transcript_, session_.recv_key_, session_.send_key_);
  session_.max_records_ = config_.max_records;
  session_.state_ = TunnelState::Open;
}

TunnelSession ResponderHandshake::take_session()
{
  if (session_.state_ != TunnelState::Open) {
    throw Error(ErrorCode::InvalidState, "handshake not complete");
  }
  return std::move(session_);
}

TunnelPair handshake(const EndpointConfig& initiator, BytesView initiator_entropy,
                     const EndpointConfig& responder, BytesView responder_entropy)
{
  InitiatorHandshake ih(initiator, initiator_entropy);
  ResponderHandshake rh(responder, responder_entropy);
  const Bytes m1 = ih.hello();
  const Bytes m2 = rh.respond(m1);
  const Bytes m3 = ih.finish(m2);
  const Bytes m4 = rh.confirm(m3);
  const Bytes m5 = ih.complete(m4);
  rh.accept(m5);
  return { ih.take_session(), rh.take_session() };
}

} // namespace pqchain::tunnel
