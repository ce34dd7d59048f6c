#pragma once

#include "did/registry.hpp"
#include "tx/transaction.hpp"

#include <atomic>
#include <map>
#include <memory>
#include <string>
#include <thread>

namespace pqchain::relay {

// The writer-node relay signer: wraps user transactions into Falcon-signed
// meta-transactions. Exposed over newline-delimited JSON-RPC 2.0 with the
// methods relay_send and relay_status.
class RelaySigner {
public:
  RelaySigner(tx::WriterContext writer, Address relay_hub, const did::Registry* registry,
              BytesView entropy_seed);

  // one JSON-RPC request line in, one response line out (no trailing newline)
  std::string handle_line(const std::string& line);

  uint64_t jobs_handled() const { return next_job_ - 1; }

private:
  tx::WriterContext writer_;
  Address relay_hub_{};
  const did::Registry* registry_;
  Bytes entropy_seed_;
  uint64_t next_job_ = 1;
  uint64_t wrapper_nonce_ = 0;
  std::map<uint64_t, std::string> jobs_; // job id -> status json fragment
};

// Blocking TCP server on 127.0.0.1 serving one RelaySigner; newline-delimited
// requests, one response line each.
class RelayServer {
public:
  RelayServer(std::shared_ptr<RelaySigner> signer, uint16_t port);
  ~RelayServer();

  uint16_t port() const { return port_; }
  void stop();

private:
  void serve();

  std::shared_ptr<RelaySigner> signer_;
  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::atomic<bool> running_{ false };
  std::thread thread_;
};

// Test/client helper: one round trip against a local relay server.
std::string relay_call(uint16_t port, const std::string& request_line);

} // namespace pqchain::relay
