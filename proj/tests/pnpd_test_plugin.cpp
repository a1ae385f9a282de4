// Stand-alone PNPD plugin used by the tests. It speaks the wire format with
// its own parser, so protocol mistakes on either side show up as failures.
//
//   pnpd_test_plugin <mode>
//     echo         reply with the input tensor
//     gaussian     2D Gaussian blur, std 2*sigma, radius ceil(4*std), clamped borders, clipped to [0,1]
//     wrong-dims   reply with one extra frame
//     error        reply with an error message
//     stall        read the request and never answer
//     bad-version  reply with protocol version 2
//     exit         read the request and exit without replying

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace {

bool read_exact(void* dst, std::size_t n)
{
  auto* p = static_cast<char*>(dst);
  while (n > 0) {
    const ssize_t r = ::read(STDIN_FILENO, p, n);
    if (r <= 0)
      return false;
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

void write_all(const std::string& s)
{
  std::size_t off = 0;
  while (off < s.size()) {
    const ssize_t w = ::write(STDOUT_FILENO, s.data() + off, s.size() - off);
    if (w <= 0)
      ::_exit(3);
    off += static_cast<std::size_t>(w);
  }
}

template <typename T>
T load_le(const unsigned char* p)
{
  T v = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k)
    v |= static_cast<T>(p[k]) << (8 * k);
  return v;
}

template <typename T>
void store_le(std::string& s, T v)
{
  for (std::size_t k = 0; k < sizeof(T); ++k)
    s.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

std::string message(std::uint16_t version, std::uint16_t type, const std::string& body)
{
  std::string out = "PNPD";
  store_le<std::uint16_t>(out, version);
  store_le<std::uint16_t>(out, type);
  store_le<std::uint32_t>(out, static_cast<std::uint32_t>(body.size()));
  return out + body;
}

struct Cube
{
  std::uint32_t nx = 0, ny = 0, nb = 1;
  std::vector<double> v;
};

bool parse_cube(const std::string& s, std::size_t off, Cube& c)
{
  const auto* p = reinterpret_cast<const unsigned char*>(s.data()) + off;
  if (s.size() < off + 8 || std::memcmp(p, "SCIT", 4) != 0 || p[4] != 1 || p[5] != 2)
    return false;
  const unsigned rank = p[6];
  if ((rank != 2 && rank != 3) || s.size() < off + 8 + 4 * rank)
    return false;
  c.nx = load_le<std::uint32_t>(p + 8);
  c.ny = load_le<std::uint32_t>(p + 12);
  c.nb = rank == 3 ? load_le<std::uint32_t>(p + 16) : 1;
  const std::size_t n = std::size_t{c.nx} * c.ny * c.nb;
  const std::size_t head = 8 + 4 * rank;
  if (s.size() != off + head + 8 * n)
    return false;
  c.v.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto bits = load_le<std::uint64_t>(p + head + 8 * k);
    std::memcpy(&c.v[k], &bits, 8);
  }
  return true;
}

std::string encode_cube(const Cube& c)
{
  std::string s = "SCIT";
  s += std::string("\x01\x02\x03\x00", 4);
  store_le(s, c.nx);
  store_le(s, c.ny);
  store_le(s, c.nb);
  for (double x : c.v) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    store_le(s, bits);
  }
  return s;
}

Cube gaussian(const Cube& in, double sigma)
{
  Cube out = in;
  for (double& x : out.v)
    x = std::clamp(x, 0.0, 1.0);
  const double s = 2.0 * sigma;
  const long r = s > 0.0 ? static_cast<long>(std::ceil(4.0 * s)) : 0;
  if (r == 0)
    return out;
  const Cube src = out;
  const long rows = in.nx, cols = in.ny;
  for (std::size_t b = 0; b < in.nb; ++b) {
    const double* f = src.v.data() + b * rows * cols;
    double* g = out.v.data() + b * rows * cols;
    for (long i = 0; i < rows; ++i)
      for (long j = 0; j < cols; ++j) {
        double acc = 0.0, wsum = 0.0;
        for (long di = -r; di <= r; ++di)
          for (long dj = -r; dj <= r; ++dj) {
            const double w = std::exp(-static_cast<double>(di * di + dj * dj) / (2.0 * s * s));
            const long ii = std::clamp(i + di, 0L, rows - 1), jj = std::clamp(j + dj, 0L, cols - 1);
            acc += w * f[ii * cols + jj];
            wsum += w;
          }
        g[i * cols + j] = std::clamp(acc / wsum, 0.0, 1.0);
      }
  }
  return out;
}

} // namespace

int main(int argc, char** argv)
{
  const std::string mode = argc > 1 ? argv[1] : "echo";
  for (;;) {
    unsigned char head[12];
    if (!read_exact(head, sizeof head))
      return 0;
    if (std::memcmp(head, "PNPD", 4) != 0 || load_le<std::uint16_t>(head + 4) != 1 ||
        load_le<std::uint16_t>(head + 6) != 1)
      return 2;
    std::string body(load_le<std::uint32_t>(head + 8), '\0');
    if (!read_exact(body.data(), body.size()))
      return 2;

    if (mode == "stall") {
      ::pause();
      return 0;
    }
    if (mode == "exit")
      return 0;
    if (mode == "error") {
      write_all(message(1, 3, "synthetic failure"));
      continue;
    }

    Cube c;
    std::uint64_t sigma_bits = body.size() >= 8 ? load_le<std::uint64_t>(
                                                    reinterpret_cast<const unsigned char*>(body.data()))
                                                : 0;
    double sigma;
    std::memcpy(&sigma, &sigma_bits, 8);
    if (body.size() < 8 || !parse_cube(body, 8, c)) {
      write_all(message(1, 3, "malformed request"));
      continue;
    }

    if (mode == "gaussian")
      c = gaussian(c, sigma);
    else if (mode == "wrong-dims") {
      c.nb += 1;
      c.v.resize(std::size_t{c.nx} * c.ny * c.nb, 0.0);
    }
    write_all(message(mode == "bad-version" ? 2 : 1, 2, encode_cube(c)));
  }
}
