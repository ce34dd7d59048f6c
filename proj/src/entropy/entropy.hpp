#pragma once

#include "common/bytes.hpp"
#include "crypto/kyber.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pqchain::entropy {

// Wire frame: u32 length (big-endian) || u8 message-type || payload.
enum class FrameType : uint8_t {
  Share = 1,
  Auth = 2,
  KemPub = 3,
  KemCt = 4,
  Confirm = 5,
  EntropyReq = 6,
  EntropyResp = 7,
  Error = 255,
};

Bytes make_frame(FrameType type, BytesView payload);

struct Frame {
  FrameType type;
  Bytes payload;
};

std::optional<Frame> parse_frame(BytesView data);

using SessionId = std::array<uint8_t, 16>;

struct EntropyBlock {
  Bytes bytes;
  std::string source_id;
  bool certified = false;
  uint64_t sequence = 0;
};

struct BootstrapShare {
  SessionId session_id{};
  uint32_t index = 0; // 1-based
  uint32_t total = 0;
  Bytes share;
  uint64_t expires_at = 0;
};

Bytes encode_share(const BootstrapShare& share);
std::optional<BootstrapShare> decode_share(BytesView payload);

// XOR all-or-nothing split: shares 1..N-1 are fresh randomness, share N folds
// the key in; any proper subset is independent of the key.
std::vector<BootstrapShare> split_bootstrap_key(BytesView key, uint32_t n_shares,
                                                const SessionId& session_id, uint64_t expires_at,
                                                const std::function<void(uint8_t*, size_t)>& rng);

// Full-set XOR recomposition with timeout and consistency checks. The caller
// supplies the consumed-session set that enforces one-time use.
Bytes recompose_bootstrap_key(const std::vector<BootstrapShare>& shares, uint64_t now,
                              std::set<SessionId>& consumed);

// keyed MAC per the protocol: SHAKE256(key || transcript, 32)
Digest256 protocol_mac(BytesView key, std::initializer_list<BytesView> transcript);

struct ServiceConfig {
  std::string source_id = "qrng-sim";
  bool certified = false;        // live qRNG certification is mocked
  Bytes seed;                    // deterministic test mode when non-empty
  uint32_t n_shares = 3;
  uint64_t share_timeout = 30;   // logical ticks
  uint64_t session_max_age = 100000;
};

enum class SessionState {
  Bootstrapping,
  Renegotiating,
  Established,
  Closed,
};

// The entropy distribution endpoint. Sessions are driven frame-by-frame so
// tests and the simulator can tamper with the channel. Every frame that
// crosses the wire in either direction lands in wire_log().
class EntropyService {
public:
  explicit EntropyService(ServiceConfig config);

  // raw generation (never repeats a block)
  EntropyBlock generate_entropy(size_t n_bytes);

  struct BootstrapBundle {
    SessionId session_id{};
    std::vector<Bytes> share_frames; // one frame per delivery channel
  };
  BootstrapBundle begin_bootstrap(const std::string& node_id, uint64_t now);

  // processes one client frame, returns the response frame
  Bytes handle_frame(const Bytes& frame, uint64_t now);

  const std::vector<Bytes>& wire_log() const { return wire_log_; }
  const ServiceConfig& config() const { return config_; }

  // test hook: all blocks ever issued (for the non-reuse invariant)
  const std::vector<Bytes>& issued_blocks() const { return issued_blocks_; }

private:
  struct ServerSession {
    std::string node_id;
    Bytes bootstrap_key;
    std::array<uint8_t, 16> challenge{};
    SessionState state = SessionState::Bootstrapping;
    bool auth_seen = false;
    kem::SharedSecret shared_secret{};
    Digest256 transcript_hash{};
    uint64_t recv_counter = 0;
    uint64_t send_counter = 0;
  };

  Bytes log_frame(Bytes frame);
  Bytes error_frame(std::string_view code);

  ServiceConfig config_;
  uint64_t sequence_ = 0;
  uint64_t rng_counter_ = 0;
  std::map<SessionId, ServerSession> sessions_;
  std::vector<Bytes> wire_log_;
  std::vector<Bytes> issued_blocks_;

  void fill_random(uint8_t* out, size_t n);
};

// Node-side session. Drives the bootstrap/renegotiation protocol through a
// transport callable (frame in, response out), which is where tests inject
// an active attacker.
class EntropyClient {
public:
  using Transport = std::function<Bytes(const Bytes&)>;

  explicit EntropyClient(std::string node_id)
    : node_id_(std::move(node_id))
  {
  }

  // Recomposes the bootstrap key and runs: auth, KEM keypair exchange,
  // encapsulation, key confirmation. Throws on protocol failure; on success
  // the session is Established and the bootstrap key has been wiped.
  void establish(const std::vector<BootstrapShare>& shares, uint64_t now,
                 BytesView kem_entropy, const Transport& transport);

  // AEAD-protected entropy on demand.
  Bytes request_entropy(size_t n_bytes, const Transport& transport);

  SessionState state() const { return state_; }
  const SessionId& session_id() const { return session_id_; }
  const kem::SharedSecret& shared_secret() const { return shared_secret_; }

private:
  std::string node_id_;
  SessionId session_id_{};
  SessionState state_ = SessionState::Bootstrapping;
  kem::SharedSecret shared_secret_{};
  uint64_t send_counter_ = 0;
  uint64_t recv_counter_ = 0;
  std::set<SessionId> consumed_;
};

} // namespace pqchain::entropy
