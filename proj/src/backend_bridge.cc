// Copyright 2026 The spkmia Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "spkmia/backend_bridge.h"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

#include <openssl/evp.h>

#include "json.hpp"
#include "spkmia/error.h"

namespace spkmia {

using ordered_json = nlohmann::ordered_json;

std::string Base64Encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> Base64Decode(const std::string& text) {
  Require(text.size() % 4 == 0, ErrorCode::kProtocolError, "base64 length not a multiple of 4");
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  Require(n >= 0, ErrorCode::kProtocolError, "invalid base64 payload");
  // EVP_DecodeBlock keeps the padding bytes; strip them.
  std::size_t size = static_cast<std::size_t>(n);
  if (!text.empty() && text.back() == '=') --size;
  if (text.size() >= 2 && text[text.size() - 2] == '=') --size;
  out.resize(size);
  return out;
}

std::string EncodePcm(std::span<const float> samples) {
  static_assert(sizeof(float) == 4);
  std::vector<std::uint8_t> bytes(samples.size() * 4);
  std::memcpy(bytes.data(), samples.data(), bytes.size());
  return Base64Encode(bytes);
}

std::vector<float> DecodePcm(const std::string& b64) {
  const std::vector<std::uint8_t> bytes = Base64Decode(b64);
  Require(bytes.size() % 4 == 0, ErrorCode::kProtocolError,
          "pcm payload is not a whole number of f32 samples");
  std::vector<float> out(bytes.size() / 4);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

BackendBridge::BackendBridge(int read_fd, int write_fd, int child_pid, BridgeOptions options)
    : read_fd_(read_fd), write_fd_(write_fd), child_pid_(child_pid), options_(options) {}

BackendBridge::~BackendBridge() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  if (read_fd_ >= 0) ::close(read_fd_);
  if (child_pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(child_pid_, &status, WNOHANG) != 0) return;
      ::usleep(10000);
    }
    ::kill(child_pid_, SIGKILL);
    ::waitpid(child_pid_, &status, 0);
  }
}

std::shared_ptr<BackendBridge> BackendBridge::Spawn(const std::vector<std::string>& argv,
                                                    BridgeOptions options) {
  Require(!argv.empty(), ErrorCode::kInvalidArgument, "backend command is empty");
  ::signal(SIGPIPE, SIG_IGN);
  int to_child[2];
  int from_child[2];
  Require(::pipe(to_child) == 0 && ::pipe(from_child) == 0, ErrorCode::kIoError,
          std::string("pipe: ") + std::strerror(errno));
  const pid_t pid = ::fork();
  Require(pid >= 0, ErrorCode::kIoError, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  std::shared_ptr<BackendBridge> bridge(
      new BackendBridge(from_child[0], to_child[1], pid, options));
  bridge->Handshake();
  return bridge;
}

std::shared_ptr<BackendBridge> BackendBridge::Connect(const std::string& host, int port,
                                                      BridgeOptions options) {
  ::signal(SIGPIPE, SIG_IGN);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &result);
  Require(rc == 0, ErrorCode::kIoError, "resolve " + host + ": " + ::gai_strerror(rc));
  int fd = -1;
  for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(result);
  Require(fd >= 0, ErrorCode::kIoError, "cannot connect to " + host + ":" + service);
  std::shared_ptr<BackendBridge> bridge(new BackendBridge(fd, fd, -1, options));
  bridge->Handshake();
  return bridge;
}

void BackendBridge::SendLine(const std::string& line) const {
  std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(write_fd_, data.data() + off, data.size() - off);
    if (n < 0 && errno == EINTR) continue;
    Require(n > 0, ErrorCode::kIoError, std::string("backend write: ") + std::strerror(errno));
    off += static_cast<std::size_t>(n);
  }
}

std::string BackendBridge::ReadLine() const {
  const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    Require(left.count() > 0, ErrorCode::kTimeout, "backend did not answer in time");
    pollfd pfd{read_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0 && errno == EINTR) continue;
    Require(ready > 0, ErrorCode::kTimeout, "backend did not answer in time");
    char chunk[65536];
    const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
    if (n < 0 && errno == EINTR) continue;
    Require(n > 0, ErrorCode::kProtocolError, "backend closed the connection");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

namespace {

nlohmann::json ParseReply(const std::string& line) {
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    Fail(ErrorCode::kProtocolError, "malformed reply line: " + line.substr(0, 80));
  }
  Require(reply.is_object() && reply.contains("op") && reply["op"].is_string(),
          ErrorCode::kProtocolError, "reply without an op field");
  return reply;
}

}  // namespace

void BackendBridge::Handshake() {
  std::lock_guard<std::mutex> lock(mu_);
  ordered_json hello = {{"op", "hello"}, {"version", 1}};
  SendLine(hello.dump());
  const nlohmann::json reply = ParseReply(ReadLine());
  Require(reply["op"] == "hello", ErrorCode::kProtocolError, "expected a hello reply");
  Require(reply.contains("dim") && reply["dim"].is_number_integer() &&
              reply["dim"].get<long>() > 0,
          ErrorCode::kProtocolError, "hello reply lacks a positive dim");
  Require(reply.contains("sample_rate") && reply["sample_rate"].is_number_integer() &&
              reply["sample_rate"].get<long>() > 0,
          ErrorCode::kProtocolError, "hello reply lacks a positive sample_rate");
  dim_ = reply["dim"].get<std::size_t>();
  sample_rate_ = reply["sample_rate"].get<int>();
}

Embedding BackendBridge::Embed(const Voice& voice) const {
  std::lock_guard<std::mutex> lock(mu_);
  const std::int64_t id = next_id_++;
  ordered_json request = {{"op", "embed"},
                          {"id", id},
                          {"sample_rate", voice.sample_rate()},
                          {"pcm_b64", EncodePcm(voice.samples())}};
  SendLine(request.dump());
  const nlohmann::json reply = ParseReply(ReadLine());
  Require(reply.contains("id") && reply["id"].is_number_integer(), ErrorCode::kProtocolError,
          "reply without an integer id");
  Require(reply["id"].get<std::int64_t>() == id, ErrorCode::kProtocolError,
          "reply id " + reply["id"].dump() + " does not match request id " + std::to_string(id));
  if (reply["op"] == "error") {
    Fail(ErrorCode::kBackendError, reply.value("message", std::string("unspecified")));
  }
  Require(reply["op"] == "embed", ErrorCode::kProtocolError,
          "unexpected reply op " + reply["op"].dump());
  Require(reply.contains("embedding") && reply["embedding"].is_array(),
          ErrorCode::kProtocolError, "embed reply without an embedding array");
  const auto& arr = reply["embedding"];
  Require(arr.size() == dim_, ErrorCode::kDimensionMismatch,
          "backend returned " + std::to_string(arr.size()) + " values, advertised " +
              std::to_string(dim_));
  std::vector<double> values;
  values.reserve(arr.size());
  for (const auto& v : arr) {
    Require(v.is_number(), ErrorCode::kProtocolError, "non-numeric embedding entry");
    values.push_back(v.get<double>());
    Require(std::isfinite(values.back()), ErrorCode::kProtocolError,
            "non-finite embedding entry");
  }
  return Embedding(std::move(values));
}

}  // namespace spkmia
