#include "entropy/entropy.hpp"

#include "common/errors.hpp"
#include "crypto/aead.hpp"
#include "crypto/keccak.hpp"

#include <random>

namespace pqchain::entropy {

namespace {

constexpr std::array<uint8_t, 8> kDirC2S = { 'c', '2', 's', 0, 0, 0, 0, 0 };
constexpr std::array<uint8_t, 8> kDirS2C = { 's', '2', 'c', 0, 0, 0, 0, 0 };

aead::Nonce direction_nonce(const std::array<uint8_t, 8>& dir, uint64_t counter)
{
  aead::Nonce nonce{};
  std::copy(dir.begin(), dir.end(), nonce.begin());
  for (int i = 0; i < 8; i++) {
    nonce[8 + i] = static_cast<uint8_t>(counter >> (8 * (7 - i)));
  }
  return nonce;
}

aead::Key direction_key(const kem::SharedSecret& ss, std::string_view label)
{
  hash::Shake256 xof;
  xof.absorb(BytesView(ss));
  xof.absorb(to_bytes(label));
  aead::Key key;
  xof.squeeze(key.data(), key.size());
  return key;
}

SessionId sid_from(BytesView payload)
{
  SessionId sid{};
  std::copy(payload.begin(), payload.begin() + 16, sid.begin());
  return sid;
}

[[noreturn]] void throw_code(const std::string& code)
{
  static const std::map<std::string, ErrorCode> table = {
    { "AuthFailure", ErrorCode::AuthFailure },
    { "Timeout", ErrorCode::Timeout },
    { "ConfirmationMismatch", ErrorCode::ConfirmationMismatch },
    { "ReplayDetected", ErrorCode::ReplayDetected },
    { "SessionNotEstablished", ErrorCode::SessionNotEstablished },
  };
  const auto it = table.find(code);
  throw Error(it == table.end() ? ErrorCode::InvalidState : it->second,
              "entropy service reported " + code);
}

} // namespace

Bytes make_frame(FrameType type, BytesView payload)
{
  Bytes out;
  append_u32be(out, static_cast<uint32_t>(payload.size() + 1));
  out.push_back(static_cast<uint8_t>(type));
  append(out, payload);
  return out;
}

std::optional<Frame> parse_frame(BytesView data)
{
  if (data.size() < 5) {
    return std::nullopt;
  }
  const uint32_t len = read_u32be(data.data());
  if (len < 1 || data.size() != 4 + size_t(len)) {
    return std::nullopt;
  }
  Frame f;
  f.type = static_cast<FrameType>(data[4]);
  f.payload.assign(data.begin() + 5, data.end());
  return f;
}

Bytes encode_share(const BootstrapShare& s)
{
  Bytes out(s.session_id.begin(), s.session_id.end());
  append_u32be(out, s.index);
  append_u32be(out, s.total);
  append_u64be(out, s.expires_at);
  append(out, s.share);
  return out;
}

std::optional<BootstrapShare> decode_share(BytesView payload)
{
  if (payload.size() < 16 + 4 + 4 + 8) {
    return std::nullopt;
  }
  BootstrapShare s;
  s.session_id = sid_from(payload);
  s.index = read_u32be(payload.data() + 16);
  s.total = read_u32be(payload.data() + 20);
  s.expires_at = read_u64be(payload.data() + 24);
  s.share.assign(payload.begin() + 32, payload.end());
  return s;
}

std::vector<BootstrapShare> split_bootstrap_key(BytesView key, uint32_t n_shares,
                                                const SessionId& session_id, uint64_t expires_at,
                                                const std::function<void(uint8_t*, size_t)>& rng)
{
  if (n_shares < 2) {
    throw Error(ErrorCode::InvalidArgument, "need at least 2 shares");
  }
  if (key.empty()) {
    throw Error(ErrorCode::InvalidArgument, "empty key");
  }
  std::vector<BootstrapShare> shares(n_shares);
  Bytes last(key.begin(), key.end());
  for (uint32_t i = 0; i < n_shares; i++) {
    shares[i].session_id = session_id;
    shares[i].index = i + 1;
    shares[i].total = n_shares;
    shares[i].expires_at = expires_at;
    if (i + 1 < n_shares) {
      shares[i].share.resize(key.size());
      rng(shares[i].share.data(), key.size());
      for (size_t b = 0; b < key.size(); b++) {
        last[b] ^= shares[i].share[b];
      }
    }
  }
  shares[n_shares - 1].share = std::move(last);
  return shares;
}

Bytes recompose_bootstrap_key(const std::vector<BootstrapShare>& shares, uint64_t now,
                              std::set<SessionId>& consumed)
{
  if (shares.empty()) {
    throw Error(ErrorCode::MissingShare, "no shares supplied");
  }
  const SessionId sid = shares[0].session_id;
  const uint32_t total = shares[0].total;
  const size_t len = shares[0].share.size();
  std::set<uint32_t> seen;
  for (const auto& s : shares) {
    if (s.session_id != sid || s.total != total) {
      throw Error(ErrorCode::MixedSession, "shares from different sessions");
    }
    if (s.share.size() != len || s.index == 0 || s.index > total) {
      throw Error(ErrorCode::Malformed, "inconsistent share");
    }
    if (now >= s.expires_at) {
      throw Error(ErrorCode::Expired, "share past its timeout");
    }
    seen.insert(s.index);
  }
  if (seen.size() != total) {
    throw Error(ErrorCode::MissingShare, "share set incomplete");
  }
  if (!consumed.insert(sid).second) {
    throw Error(ErrorCode::ReusedKey, "bootstrap key already recomposed");
  }
  Bytes key(len, 0);
  for (const auto& s : shares) {
    for (size_t b = 0; b < len; b++) {
      key[b] ^= s.share[b];
    }
  }
  return key;
}

Digest256 protocol_mac(BytesView key, std::initializer_list<BytesView> transcript)
{
  hash::Shake256 xof;
  xof.absorb(key);
  for (const auto& part : transcript) {
    xof.absorb(part);
  }
  Digest256 mac;
  xof.squeeze(mac.data(), mac.size());
  return mac;
}

EntropyService::EntropyService(ServiceConfig config)
  : config_(std::move(config))
{
}

void EntropyService::fill_random(uint8_t* out, size_t n)
{
  if (!config_.seed.empty()) {
    hash::Shake256 xof;
    xof.absorb(config_.seed);
    Bytes ctr;
    append_u64be(ctr, rng_counter_++);
    xof.absorb(ctr);
    xof.squeeze(out, n);
    return;
  }
  std::random_device rd;
  for (size_t i = 0; i < n; i++) {
    out[i] = static_cast<uint8_t>(rd());
  }
}

EntropyBlock EntropyService::generate_entropy(size_t n_bytes)
{
  if (n_bytes == 0) {
    throw Error(ErrorCode::InvalidArgument, "entropy request of zero bytes");
  }
  EntropyBlock block;
  block.bytes.resize(n_bytes);
  fill_random(block.bytes.data(), n_bytes);
  block.source_id = config_.source_id;
  block.certified = config_.certified;
  block.sequence = ++sequence_;
  issued_blocks_.push_back(block.bytes);
  return block;
}

Bytes EntropyService::log_frame(Bytes frame)
{
  wire_log_.push_back(frame);
  return frame;
}

Bytes EntropyService::error_frame(std::string_view code)
{
  return log_frame(make_frame(FrameType::Error, to_bytes(code)));
}

EntropyService::BootstrapBundle EntropyService::begin_bootstrap(const std::string& node_id,
                                                                uint64_t now)
{
  BootstrapBundle bundle;
  fill_random(bundle.session_id.data(), bundle.session_id.size());

  ServerSession session;
  session.node_id = node_id;
  session.bootstrap_key.resize(32);
  fill_random(session.bootstrap_key.data(), session.bootstrap_key.size());
  fill_random(session.challenge.data(), session.challenge.size());

  const auto shares =
    split_bootstrap_key(session.bootstrap_key, config_.n_shares, bundle.session_id,
                        now + config_.share_timeout,
                        [this](uint8_t* p, size_t n) { fill_random(p, n); });
  for (const auto& s : shares) {
    bundle.share_frames.push_back(log_frame(make_frame(FrameType::Share, encode_share(s))));
  }
  sessions_[bundle.session_id] = std::move(session);
  return bundle;
}

Bytes EntropyService::handle_frame(const Bytes& raw, uint64_t now)
{
  (void)now;
  wire_log_.push_back(raw);
  const auto frame = parse_frame(raw);
  if (!frame || frame->payload.size() < 16) {
    return error_frame("Malformed");
  }
  const SessionId sid = sid_from(frame->payload);
  const auto it = sessions_.find(sid);
  if (it == sessions_.end()) {
    return error_frame("SessionNotEstablished");
  }
  ServerSession& session = it->second;
  const BytesView body = BytesView(frame->payload).subspan(16);

  switch (frame->type) {
    case FrameType::Auth: {
      if (body.empty()) {
        // hello: reply with the fresh challenge
        Bytes payload(sid.begin(), sid.end());
        append(payload, BytesView(session.challenge));
        return log_frame(make_frame(FrameType::Auth, payload));
      }
      if (session.auth_seen) {
        return error_frame("ReplayDetected");
      }
      if (body.size() != 32) {
        return error_frame("Malformed");
      }
      const Digest256 expected =
        protocol_mac(session.bootstrap_key,
                     { to_bytes("node-auth"), BytesView(sid), BytesView(session.challenge),
                       to_bytes(session.node_id) });
      if (!ct_equal(body, BytesView(expected))) {
        return error_frame("AuthFailure");
      }
      session.auth_seen = true;
      session.state = SessionState::Renegotiating;
      const Digest256 ack =
        protocol_mac(session.bootstrap_key,
                     { to_bytes("service-auth"), BytesView(sid), BytesView(session.challenge) });
      Bytes payload(sid.begin(), sid.end());
      append(payload, BytesView(ack));
      return log_frame(make_frame(FrameType::Auth, payload));
    }

    case FrameType::KemPub: {
      if (session.state != SessionState::Renegotiating) {
        return error_frame("SessionNotEstablished");
      }
      if (body.size() != kem::kPublicKeyLen + 32) {
        return error_frame("Malformed");
      }
      const BytesView kem_pub = body.subspan(0, kem::kPublicKeyLen);
      const BytesView mac = body.subspan(kem::kPublicKeyLen);
      const Digest256 expected =
        protocol_mac(session.bootstrap_key, { to_bytes("kem-pub"), BytesView(sid),
                                              BytesView(session.challenge), kem_pub });
      if (!ct_equal(mac, BytesView(expected))) {
        return error_frame("AuthFailure");
      }
      Bytes encap_entropy(sid.begin(), sid.end());
      Bytes extra(32);
      fill_random(extra.data(), extra.size());
      append(encap_entropy, extra);
      const auto enc = kem::encap(kem_pub, encap_entropy);
      session.shared_secret = enc.shared_secret;

      // no MAC here: in-flight tampering surfaces as ConfirmationMismatch
      Bytes payload(sid.begin(), sid.end());
      append(payload, enc.ciphertext);
      return log_frame(make_frame(FrameType::KemCt, payload));
    }

    case FrameType::Confirm: {
      if (session.state != SessionState::Renegotiating) {
        return error_frame("SessionNotEstablished");
      }
      if (body.size() != 32) {
        return error_frame("Malformed");
      }
      const Digest256 expected =
        protocol_mac(BytesView(session.shared_secret),
                     { to_bytes("confirm-node"), BytesView(sid), BytesView(session.challenge) });
      if (!ct_equal(body, BytesView(expected))) {
        session.state = SessionState::Closed;
        secure_zero(session.bootstrap_key);
        return error_frame("ConfirmationMismatch");
      }
      session.state = SessionState::Established;
      secure_zero(session.bootstrap_key);
      const Digest256 ack =
        protocol_mac(BytesView(session.shared_secret),
                     { to_bytes("confirm-service"), BytesView(sid), BytesView(session.challenge) });
      Bytes payload(sid.begin(), sid.end());
      append(payload, BytesView(ack));
      return log_frame(make_frame(FrameType::Confirm, payload));
    }

    case FrameType::EntropyReq: {
      if (session.state != SessionState::Established) {
        return error_frame("SessionNotEstablished");
      }
      if (body.size() < 8) {
        return error_frame("Malformed");
      }
      const uint64_t counter = read_u64be(body.data());
      if (counter != session.recv_counter) {
        return error_frame("ReplayDetected");
      }
      const auto key = direction_key(session.shared_secret, "entropy-c2s");
      const auto opened =
        aead::open(key, direction_nonce(kDirC2S, counter), BytesView(sid), body.subspan(8));
      if (!opened || opened->size() != 4) {
        return error_frame("AuthFailure");
      }
      session.recv_counter++;
      const uint32_t n = read_u32be(opened->data());
      if (n == 0) {
        return error_frame("Malformed");
      }
      const EntropyBlock block = generate_entropy(n);

      const auto resp_key = direction_key(session.shared_secret, "entropy-s2c");
      const Bytes boxed = aead::seal(resp_key, direction_nonce(kDirS2C, session.send_counter),
                                     BytesView(sid), block.bytes);
      Bytes payload(sid.begin(), sid.end());
      append_u64be(payload, session.send_counter);
      append(payload, boxed);
      session.send_counter++;
      return log_frame(make_frame(FrameType::EntropyResp, payload));
    }

    default:
      return error_frame("Malformed");
  }
}

void EntropyClient::establish(const std::vector<BootstrapShare>& shares, uint64_t now,
                              BytesView kem_entropy, const Transport& transport)
{
  if (state_ == SessionState::Established) {
    throw Error(ErrorCode::InvalidState, "session already established");
  }
  Bytes bootstrap_key = recompose_bootstrap_key(shares, now, consumed_);
  session_id_ = shares[0].session_id;
  const BytesView sid(session_id_);

  auto call = [&](FrameType type, Bytes payload) -> Frame {
    const Bytes resp = transport(make_frame(type, payload));
    const auto frame = parse_frame(resp);
    if (!frame) {
      state_ = SessionState::Closed;
      secure_zero(bootstrap_key);
      throw Error(ErrorCode::Malformed, "unparseable response frame");
    }
    if (frame->type == FrameType::Error) {
      state_ = SessionState::Closed;
      secure_zero(bootstrap_key);
      throw_code(std::string(frame->payload.begin(), frame->payload.end()));
    }
    return *frame;
  };

  // hello -> challenge
  const Frame challenge_frame = call(FrameType::Auth, Bytes(sid.begin(), sid.end()));
  if (challenge_frame.payload.size() != 32) {
    state_ = SessionState::Closed;
    secure_zero(bootstrap_key);
    throw Error(ErrorCode::Malformed, "bad challenge frame");
  }
  std::array<uint8_t, 16> challenge{};
  std::copy(challenge_frame.payload.begin() + 16, challenge_frame.payload.end(),
            challenge.begin());

  // authenticate under the bootstrap key
  const Digest256 mac = protocol_mac(
    bootstrap_key, { to_bytes("node-auth"), sid, BytesView(challenge), to_bytes(node_id_) });
  Bytes auth_payload(sid.begin(), sid.end());
  append(auth_payload, BytesView(mac));
  const Frame auth_ack = call(FrameType::Auth, auth_payload);
  const Digest256 expected_ack =
    protocol_mac(bootstrap_key, { to_bytes("service-auth"), sid, BytesView(challenge) });
  if (auth_ack.payload.size() != 48 ||
      !ct_equal(BytesView(auth_ack.payload).subspan(16), BytesView(expected_ack))) {
    state_ = SessionState::Closed;
    secure_zero(bootstrap_key);
    throw Error(ErrorCode::AuthFailure, "service authentication failed");
  }
  state_ = SessionState::Renegotiating;

  // KEM keypair, public key MAC-protected
  const auto kem_keys = kem::keygen(kem_entropy);
  const Digest256 pub_mac = protocol_mac(
    bootstrap_key, { to_bytes("kem-pub"), sid, BytesView(challenge), BytesView(kem_keys.public_key) });
  Bytes pub_payload(sid.begin(), sid.end());
  append(pub_payload, kem_keys.public_key);
  append(pub_payload, BytesView(pub_mac));
  const Frame ct_frame = call(FrameType::KemPub, pub_payload);
  if (ct_frame.payload.size() != 16 + kem::kCiphertextLen) {
    state_ = SessionState::Closed;
    secure_zero(bootstrap_key);
    throw Error(ErrorCode::Malformed, "bad encapsulation frame");
  }
  const BytesView ct = BytesView(ct_frame.payload).subspan(16, kem::kCiphertextLen);
  shared_secret_ = kem::decap(ct, kem_keys);

  // mutual key confirmation; the bootstrap key dies here either way
  const Digest256 confirm =
    protocol_mac(BytesView(shared_secret_), { to_bytes("confirm-node"), sid, BytesView(challenge) });
  secure_zero(bootstrap_key);
  Bytes confirm_payload(sid.begin(), sid.end());
  append(confirm_payload, BytesView(confirm));
  const Frame confirm_ack = call(FrameType::Confirm, confirm_payload);
  const Digest256 expected_confirm =
    protocol_mac(BytesView(shared_secret_), { to_bytes("confirm-service"), sid, BytesView(challenge) });
  if (confirm_ack.payload.size() != 48 ||
      !ct_equal(BytesView(confirm_ack.payload).subspan(16), BytesView(expected_confirm))) {
    state_ = SessionState::Closed;
    throw Error(ErrorCode::ConfirmationMismatch, "service key confirmation failed");
  }
  state_ = SessionState::Established;
}

Bytes EntropyClient::request_entropy(size_t n_bytes, const Transport& transport)
{
  if (state_ != SessionState::Established) {
    throw Error(ErrorCode::SessionNotEstablished, "entropy request outside Established");
  }
  if (n_bytes == 0 || n_bytes > 0xFFFFFFFFull) {
    throw Error(ErrorCode::InvalidArgument, "bad entropy request size");
  }
  const BytesView sid(session_id_);
  Bytes req;
  append_u32be(req, static_cast<uint32_t>(n_bytes));
  const auto key = direction_key(shared_secret_, "entropy-c2s");
  const Bytes boxed = aead::seal(key, direction_nonce(kDirC2S, send_counter_), sid, req);
  Bytes payload(sid.begin(), sid.end());
  append_u64be(payload, send_counter_);
  append(payload, boxed);
  send_counter_++;

  const Bytes resp = transport(make_frame(FrameType::EntropyReq, payload));
  const auto frame = parse_frame(resp);
  if (!frame) {
    throw Error(ErrorCode::Malformed, "unparseable response");
  }
  if (frame->type == FrameType::Error) {
    throw_code(std::string(frame->payload.begin(), frame->payload.end()));
  }
  if (frame->type != FrameType::EntropyResp || frame->payload.size() < 24) {
    throw Error(ErrorCode::Malformed, "bad entropy response");
  }
  const uint64_t counter = read_u64be(frame->payload.data() + 16);
  if (counter != recv_counter_) {
    state_ = SessionState::Closed;
    throw Error(ErrorCode::ReplayDetected, "response counter mismatch");
  }
  const auto resp_key = direction_key(shared_secret_, "entropy-s2c");
  const auto opened = aead::open(resp_key, direction_nonce(kDirS2C, counter), sid,
                                 BytesView(frame->payload).subspan(24));
  if (!opened) {
    state_ = SessionState::Closed;
    throw Error(ErrorCode::TagInvalid, "entropy response tampered");
  }
  recv_counter_++;
  return *opened;
}

} // namespace pqchain::entropy
