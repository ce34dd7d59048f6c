#include "tx/relay_rpc.hpp"

#include "common/errors.hpp"

#include <json.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

namespace pqchain::relay {

using nlohmann::json;

namespace {

json rpc_error(const json& id, int code, const std::string& message)
{
  return json{ { "jsonrpc", "2.0" },
               { "id", id },
               { "error", json{ { "code", code }, { "message", message } } } };
}

Bytes dec_string_to_bytes(const std::string& dec)
{
  std::vector<int> digits;
  for (char c : dec) {
    if (c < '0' || c > '9') {
      throw Error(ErrorCode::Malformed, "non-decimal digit in integer field");
    }
    digits.push_back(c - '0');
  }
  Bytes out;
  while (!digits.empty()) {
    std::vector<int> quotient;
    int rem = 0;
    for (int d : digits) {
      const int cur = rem * 10 + d;
      quotient.push_back(cur / 256);
      rem = cur % 256;
    }
    out.insert(out.begin(), static_cast<uint8_t>(rem));
    size_t i = 0;
    while (i < quotient.size() && quotient[i] == 0) {
      i++;
    }
    digits.assign(quotient.begin() + i, quotient.end());
  }
  while (!out.empty() && out.front() == 0) {
    out.erase(out.begin());
  }
  return out;
}

tx::SignedTransaction inner_from_json(const json& j)
{
  tx::SignedTransaction stx;
  stx.tx.nonce = j.at("nonce").get<uint64_t>();
  stx.tx.gas_price = dec_string_to_bytes(j.at("gasprice").get<std::string>());
  stx.tx.start_gas = j.at("startgas").get<uint64_t>();
  const std::string to_hexstr = j.at("to").get<std::string>();
  if (!to_hexstr.empty()) {
    const Bytes to = from_hex(to_hexstr);
    if (to.size() != 20) {
      throw Error(ErrorCode::Malformed, "to must be 20 bytes");
    }
    Address a;
    std::copy(to.begin(), to.end(), a.begin());
    stx.tx.to = a;
  }
  stx.tx.value = dec_string_to_bytes(j.at("value").get<std::string>());
  stx.tx.data = from_hex(j.value("data", std::string()));
  stx.tx.chain_id = j.at("chain_id").get<uint64_t>();
  stx.v = j.at("v").get<uint64_t>();
  const Bytes r = from_hex(j.at("r").get<std::string>());
  const Bytes s = from_hex(j.at("s").get<std::string>());
  if (r.size() != 32 || s.size() != 32) {
    throw Error(ErrorCode::Malformed, "r/s must be 32 bytes");
  }
  std::copy(r.begin(), r.end(), stx.r.begin());
  std::copy(s.begin(), s.end(), stx.s.begin());
  return stx;
}

} // namespace

RelaySigner::RelaySigner(tx::WriterContext writer, Address relay_hub,
                         const did::Registry* registry, BytesView entropy_seed)
  : writer_(std::move(writer))
  , relay_hub_(relay_hub)
  , registry_(registry)
  , entropy_seed_(entropy_seed.begin(), entropy_seed.end())
{
}

std::string RelaySigner::handle_line(const std::string& line)
{
  json id = nullptr;
  try {
    const json req = json::parse(line);
    id = req.value("id", json(nullptr));
    if (req.value("jsonrpc", "") != "2.0") {
      return rpc_error(id, -32600, "jsonrpc must be 2.0").dump();
    }
    const std::string method = req.value("method", "");

    if (method == "relay_send") {
      const auto inner = inner_from_json(req.at("params").at("inner"));
      if (!tx::recover_sender(inner)) {
        return rpc_error(id, -32000, "inner transaction signature invalid").dump();
      }
      if (registry_ != nullptr) {
        const auto* record = registry_->resolve(writer_.did);
        if (record == nullptr) {
          return rpc_error(id, -32001, std::string(code_string(ErrorCode::UnregisteredWriter)))
            .dump();
        }
        if (record->eth_public_key != writer_.eth_key.public_key) {
          return rpc_error(id, -32002, std::string(code_string(ErrorCode::KeyMismatch))).dump();
        }
      }
      const uint64_t job = next_job_++;
      Bytes entropy = entropy_seed_;
      append_u64be(entropy, job);
      const auto mtx = tx::sign_outer(inner, writer_, entropy, relay_hub_, wrapper_nonce_++);
      const std::string hash_hex = to_hex(tx::wrapper_hash(mtx));
      const std::string mtx_hex = to_hex(tx::encode_metatx(mtx));
      jobs_[job] = "signed";
      return json{ { "jsonrpc", "2.0" },
                   { "id", id },
                   { "result",
                     json{ { "job", job }, { "wrapper_hash", hash_hex }, { "metatx", mtx_hex } } } }
        .dump();
    }

    if (method == "relay_status") {
      const uint64_t job = req.at("params").at("job").get<uint64_t>();
      const auto it = jobs_.find(job);
      if (it == jobs_.end()) {
        return rpc_error(id, -32004, "unknown job").dump();
      }
      return json{ { "jsonrpc", "2.0" },
                   { "id", id },
                   { "result", json{ { "job", job }, { "status", it->second } } } }
        .dump();
    }

    return rpc_error(id, -32601, "method not found").dump();
  } catch (const json::exception& e) {
    return rpc_error(id, -32700, std::string("parse error: ") + e.what()).dump();
  } catch (const Error& e) {
    return rpc_error(id, -32000, e.what()).dump();
  }
}

RelayServer::RelayServer(std::shared_ptr<RelaySigner> signer, uint16_t port)
  : signer_(std::move(signer))
{
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) {
    throw Error(ErrorCode::IoError, "socket() failed");
  }
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 8) != 0) {
    ::close(listen_fd_);
    throw Error(ErrorCode::IoError, "bind/listen failed");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  thread_ = std::thread([this] { serve(); });
}

RelayServer::~RelayServer()
{
  stop();
}

void RelayServer::stop()
{
  if (!running_.exchange(false)) {
    return;
  }
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (thread_.joinable()) {
    thread_.join();
  }
}

void RelayServer::serve()
{
  while (running_) {
    const int client = ::accept(listen_fd_, nullptr, nullptr);
    if (client < 0) {
      break;
    }
    std::string buffer;
    char chunk[4096];
    while (true) {
      const ssize_t n = ::read(client, chunk, sizeof(chunk));
      if (n <= 0) {
        break;
      }
      buffer.append(chunk, static_cast<size_t>(n));
      size_t nl;
      bool closed = false;
      while ((nl = buffer.find('\n')) != std::string::npos) {
        const std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (line.empty()) {
          continue;
        }
        const std::string response = signer_->handle_line(line) + "\n";
        if (::write(client, response.data(), response.size()) < 0) {
          closed = true;
          break;
        }
      }
      if (closed) {
        break;
      }
    }
    ::close(client);
  }
}

std::string relay_call(uint16_t port, const std::string& request_line)
{
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) {
    throw Error(ErrorCode::IoError, "socket() failed");
  }
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw Error(ErrorCode::IoError, "connect failed");
  }
  const std::string msg = request_line + "\n";
  if (::write(fd, msg.data(), msg.size()) < 0) {
    ::close(fd);
    throw Error(ErrorCode::IoError, "write failed");
  }
  std::string response;
  char chunk[4096];
  while (response.find('\n') == std::string::npos) {
    const ssize_t n = ::read(fd, chunk, sizeof(chunk));
    if (n <= 0) {
      break;
    }
    response.append(chunk, static_cast<size_t>(n));
  }
  ::close(fd);
  const size_t nl = response.find('\n');
  return nl == std::string::npos ? response : response.substr(0, nl);
}

} // namespace pqchain::relay
