#include "cfisac/common.hpp"

#include <cmath>
#include <cstdio>

namespace cfisac {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) : root_(seed) {
  std::uint64_t s = seed;
  for (auto& w : state_) w = splitmix64(s);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::gauss() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0,1] so the log is finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

cx Rng::cgauss() {
  const double re = gauss();
  const double im = gauss();
  return cx(re, im) * M_SQRT1_2;
}

Rng Rng::fork(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  std::uint64_t s = root_ ^ 0xa0761d6478bd642full;
  std::uint64_t h = splitmix64(s);
  s ^= a + 0x8bb84b93962eacc9ull;
  h ^= splitmix64(s);
  s ^= b + 0x2d358dccaa6c78a5ull;
  h ^= splitmix64(s);
  s ^= c + 0x4b33a62ed433d4a3ull;
  h ^= splitmix64(s);
  return Rng(h);
}

bool approx_hermitian(const arma::cx_mat& m, double rel_tol) {
  const double scale = arma::norm(m, "fro");
  if (scale == 0.0) return true;
  return arma::norm(m - m.t().eval(), "fro") <= rel_tol * scale;
}

double min_eig_herm(const arma::cx_mat& m) {
  arma::vec ev;
  if (!arma::eig_sym(ev, hermitize(m))) {
    throw std::runtime_error("min_eig_herm: eigendecomposition failed");
  }
  return ev.min();
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

}  // namespace cfisac
