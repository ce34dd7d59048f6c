#pragma once

#include "cert/certificates.hpp"
#include "common/bytes.hpp"
#include "crypto/kyber.hpp"
#include "entropy/entropy.hpp"

#include <set>
#include <string>

namespace pqchain::tunnel {

// Handshake frames reuse the length-prefixed framing with distinct type codes.
enum class HsType : uint8_t {
  Hello = 16,        // initiator: aead alg || cert || nonce_i
  Response = 17,     // responder: cert || nonce_r || kem pub || falcon sig over transcript
  Finish = 18,       // initiator: kem ct || falcon sig over transcript
  ConfirmResp = 19,  // responder -> initiator key confirmation
  ConfirmInit = 20,  // initiator -> responder key confirmation
};

enum class Role { Initiator, Responder };
enum class TunnelState { Handshaking, Open, Closed };

struct EndpointConfig {
  cert::PqCertificate certificate;
  falcon::SecretKey falcon_secret{};
  falcon::PublicKey ca_public{};
  std::set<std::string> allowed_peers; // peer DIDs; empty set admits nobody
  uint64_t now = 0;                    // logical clock for certificate windows
  std::string aead_algorithm = "xchacha20-poly1305";
  uint64_t max_records = 1ull << 40;   // renegotiation threshold per direction
};

// Record wire format: u32 length || u64 seq || ciphertext || 16-byte tag.
class TunnelSession {
public:
  TunnelState state() const { return state_; }
  Role role() const { return role_; }
  const cert::PqCertificate& peer_certificate() const { return peer_cert_; }

  Bytes seal(BytesView plaintext);
  Bytes open(const Bytes& record);

  uint64_t send_seq() const { return send_seq_; }
  uint64_t recv_seq() const { return recv_seq_; }

private:
  friend class InitiatorHandshake;
  friend class ResponderHandshake;

  Role role_ = Role::Initiator;
  TunnelState state_ = TunnelState::Closed;
  cert::PqCertificate local_cert_;
  cert::PqCertificate peer_cert_;
  std::array<uint8_t, 32> send_key_{};
  std::array<uint8_t, 32> recv_key_{};
  uint64_t send_seq_ = 0;
  uint64_t recv_seq_ = 0;
  uint64_t max_records_ = 0;
};

// Message-by-message drivers so tests and the simulator can interpose an
// active attacker on any flight.
class InitiatorHandshake {
public:
  InitiatorHandshake(EndpointConfig config, BytesView entropy);

  Bytes hello();
  // consumes the responder flight, emits the finish flight
  Bytes finish(const Bytes& response_frame);
  // consumes the responder confirmation, emits ours; session becomes Open
  Bytes complete(const Bytes& confirm_frame);

  TunnelSession take_session();

private:
  EndpointConfig config_;
  Bytes entropy_;
  Bytes transcript_;
  std::array<uint8_t, 32> nonce_{};
  kem::SharedSecret shared_secret_{};
  TunnelSession session_;
  int step_ = 0;
};

class ResponderHandshake {
public:
  ResponderHandshake(EndpointConfig config, BytesView entropy);

  // consumes hello, emits the responder flight
  Bytes respond(const Bytes& hello_frame);
  // consumes finish, emits our confirmation
  Bytes confirm(const Bytes& finish_frame);
  // consumes the initiator confirmation; session becomes Open
  void accept(const Bytes& confirm_frame);

  TunnelSession take_session();

private:
  EndpointConfig config_;
  Bytes entropy_;
  Bytes transcript_;
  kem::KemKeyPair kem_keys_;
  kem::SharedSecret shared_secret_{};
  TunnelSession session_;
  int step_ = 0;
};

// Runs the full 4-message handshake over direct call flow (no attacker).
struct TunnelPair {
  TunnelSession initiator;
  TunnelSession responder;
};
TunnelPair handshake(const EndpointConfig& initiator, BytesView initiator_entropy,
                     const EndpointConfig& responder, BytesView responder_entropy);

} // namespace pqchain::tunnel
