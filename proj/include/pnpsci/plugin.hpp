#pragma once

// External denoisers over the PNPD protocol.
//
// The plugin is a child process; requests go to its stdin and replies come
// back on its stdout, one reply per request, in order. Every message is a
// 12-byte header followed by a body:
//
//   offset  size  field
//   0       4     magic "PNPD"
//   4       2     version, u16 LE (1)
//   6       2     type, u16 LE: 1 = denoise request, 2 = denoise reply, 3 = error
//   8       4     body length in bytes, u32 LE
//
//   request body: sigma (f64 LE) followed by a SCIT tensor
//   reply body:   a SCIT tensor with the request's dims
//   error body:   UTF-8 reason

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "pnpsci/denoisers.hpp"
#include "pnpsci/tensor_io.hpp"

namespace pnpsci {

inline constexpr std::uint16_t kPnpdVersion = 1;
inline constexpr std::size_t kPnpdHeaderSize = 12;

enum class PnpdType : std::uint16_t
{
  request = 1,
  reply = 2,
  error = 3,
};

struct PnpdHeader
{
  std::uint16_t version = kPnpdVersion;
  PnpdType type = PnpdType::request;
  std::uint32_t body_length = 0;
};

inline std::string encode_pnpd_header(PnpdType type, std::uint32_t body_length)
{
  std::string out = "PNPD";
  const auto v = kPnpdVersion;
  const auto t = static_cast<std::uint16_t>(type);
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(t & 0xff));
  out.push_back(static_cast<char>(t >> 8));
  detail::put_u32(out, body_length);
  return out;
}

inline PnpdHeader decode_pnpd_header(std::string_view bytes)
{
  if (bytes.size() < kPnpdHeaderSize)
    throw PluginError("PNPD header truncated");
  if (bytes.substr(0, 4) != "PNPD")
    throw PluginError("bad PNPD magic");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  PnpdHeader h;
  h.version = static_cast<std::uint16_t>(p[4] | (p[5] << 8));
  if (h.version != kPnpdVersion)
    throw PluginError("PNPD protocol version mismatch: got " + std::to_string(h.version) + ", expected " +
                      std::to_string(kPnpdVersion));
  const auto t = static_cast<std::uint16_t>(p[6] | (p[7] << 8));
  if (t < 1 || t > 3)
    throw PluginError("unknown PNPD message type " + std::to_string(t));
  h.type = static_cast<PnpdType>(t);
  h.body_length = detail::get_u32(p + 8);
  return h;
}

inline std::string encode_pnpd_request(const Tensor3& x, double sigma)
{
  std::string body;
  detail::put_u64(body, std::bit_cast<std::uint64_t>(sigma));
  body += encode_tensor(x, DType::f64);
  return encode_pnpd_header(PnpdType::request, static_cast<std::uint32_t>(body.size())) + body;
}

inline std::string encode_pnpd_reply(const Tensor3& x)
{
  const std::string body = encode_tensor(x, DType::f64);
  return encode_pnpd_header(PnpdType::reply, static_cast<std::uint32_t>(body.size())) + body;
}

inline std::string encode_pnpd_error(std::string_view reason)
{
  return encode_pnpd_header(PnpdType::error, static_cast<std::uint32_t>(reason.size())) + std::string(reason);
}

struct PnpdRequest
{
  double sigma = 0.0;
  Tensor3 x;
};

inline PnpdRequest decode_pnpd_request_body(std::string_view body)
{
  if (body.size() < 8)
    throw PluginError("PNPD request body truncated");
  PnpdRequest r;
  r.sigma = std::bit_cast<double>(detail::get_u64(reinterpret_cast<const unsigned char*>(body.data())));
  r.x = to_cube(decode_tensor(body.substr(8)));
  return r;
}

/// Interprets a reply body for a request of dims `expected`. Error messages
/// become PluginError carrying the plugin's reason.
inline Tensor3 decode_pnpd_reply(const PnpdHeader& h, std::string_view body, Dims3 expected)
{
  if (h.type == PnpdType::error)
    throw PluginError("plugin reported an error: " + std::string(body));
  if (h.type != PnpdType::reply)
    throw PluginError("expected a PNPD reply");
  Tensor3 out;
  try {
    out = to_cube(decode_tensor(body));
  } catch (const FormatError& e) {
    throw PluginError(std::string("malformed reply tensor: ") + e.what());
  }
  if (out.dims() != expected)
    throw PluginError("plugin reply dims " + to_string(out.dims()) + " do not match request dims " +
                      to_string(expected));
  return out;
}

/// A running plugin process connected through a socket pair on its stdin/stdout.
/// Not thread-safe; PluginDenoiser serializes access.
class PluginProcess
{
public:
  explicit PluginProcess(std::vector<std::string> argv, std::chrono::milliseconds timeout = std::chrono::seconds(30))
    : timeout_(timeout)
  {
    if (argv.empty())
      throw PluginError("empty plugin command");
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
      throw PluginError("socketpair failed");
    std::vector<char*> args;
    for (std::string& a : argv)
      args.push_back(a.data());
    args.push_back(nullptr);

    pid_ = ::fork();
    if (pid_ < 0) {
      ::close(sv[0]);
      ::close(sv[1]);
      throw PluginError("fork failed");
    }
    if (pid_ == 0) {
      ::dup2(sv[1], STDIN_FILENO);
      ::dup2(sv[1], STDOUT_FILENO);
      ::execvp(args[0], args.data());
      ::_exit(127);
    }
    ::close(sv[1]);
    fd_ = sv[0];
  }

  PluginProcess(const PluginProcess&) = delete;
  PluginProcess& operator=(const PluginProcess&) = delete;

  ~PluginProcess()
  {
    if (fd_ >= 0)
      ::close(fd_);
    if (pid_ > 0) {
      int status = 0;
      for (int tries = 0; tries < 50; ++tries) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_)
          return;
        ::usleep(10000);
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
  }

  /// Sends one request and blocks for its reply. After a transport or framing
  /// failure the stream position is unknown, so every later call fails too.
  Tensor3 denoise(const Tensor3& x, double sigma)
  {
    if (broken_)
      throw PluginError("plugin connection is unusable after an earlier failure: " + broken_reason_);
    std::string body;
    PnpdHeader h;
    try {
      write_all(encode_pnpd_request(x, sigma));
      h = decode_pnpd_header(read_exact(kPnpdHeaderSize));
      body = read_exact(h.body_length);
    } catch (const PluginError& e) {
      broken_ = true;
      broken_reason_ = e.what();
      throw;
    }
    return decode_pnpd_reply(h, body, x.dims());
  }

private:
  void write_all(std::string_view data)
  {
    while (!data.empty()) {
      const ssize_t n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR)
          continue;
        throw PluginError("plugin transport failure while writing");
      }
      data.remove_prefix(static_cast<std::size_t>(n));
    }
  }

  std::string read_exact(std::size_t count)
  {
    std::string out(count, '\0');
    std::size_t got = 0;
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    while (got < count) {
      const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0)
        throw PluginError("plugin timed out");
      pollfd pfd{fd_, POLLIN, 0};
      const int pr = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (pr < 0) {
        if (errno == EINTR)
          continue;
        throw PluginError("poll failed on plugin stream");
      }
      if (pr == 0)
        throw PluginError("plugin timed out");
      const ssize_t n = ::recv(fd_, out.data() + got, count - got, 0);
      if (n < 0) {
        if (errno == EINTR)
          continue;
        throw PluginError("plugin transport failure while reading");
      }
      if (n == 0)
        throw PluginError("plugin closed its output stream");
      got += static_cast<std::size_t>(n);
    }
    return out;
  }

  pid_t pid_ = -1;
  int fd_ = -1;
  std::chrono::milliseconds timeout_;
  bool broken_ = false;
  std::string broken_reason_;
};

/// Denoiser backed by a plugin process. Values pass through unclipped; the
/// plugin owns its output range.
class PluginDenoiser final : public Denoiser
{
public:
  PluginDenoiser(std::string label, std::shared_ptr<PluginProcess> process)
    : label_(std::move(label)), process_(std::move(process))
  {
  }

  std::string name() const override { return label_; }
  bool is_framewise() const override { return false; }

  Tensor3 apply(const Tensor3& x, double sigma) const override
  {
    std::lock_guard lock(mutex_);
    return process_->denoise(x, sigma);
  }

private:
  std::string label_;
  std::shared_ptr<PluginProcess> process_;
  mutable std::mutex mutex_;
};

/// One-shot convenience: D_sigma(x) through `process`.
inline Tensor3 plugin_denoise(PluginProcess& process, const Tensor3& x, double sigma)
{
  return process.denoise(x, sigma);
}

} // namespace pnpsci
