#pragma once
// Shared numeric utilities: complex linear algebra helpers, deterministic
// RNG streams, and dB conversions. All internal math is linear scale.

#include <armadillo>
#include <array>
#include <complex>
#include <cstdint>
#include <string>

namespace cfisac {

using cx = std::complex<double>;

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

// Deterministic RNG (xoshiro256++ seeded through splitmix64). Streams fork
// as pure functions of (root seed, tags), so parallel draws reproduce
// independent of thread scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double gauss();    // standard normal, Box-Muller with cached spare
  cx cgauss();       // circularly-symmetric complex Gaussian, unit variance
  Rng fork(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;

 private:
  std::array<std::uint64_t, 4> state_{};
  std::uint64_t root_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Hermitian helpers. arma .t() is the conjugate transpose for cx_mat.
inline arma::cx_mat hermitize(const arma::cx_mat& m) { return 0.5 * (m + m.t()); }
bool approx_hermitian(const arma::cx_mat& m, double rel_tol = 1e-10);
double min_eig_herm(const arma::cx_mat& m);

// Real inner product Re tr(A^H B); equals tr(AB) when both are Hermitian.
inline double ip(const arma::cx_mat& a, const arma::cx_mat& b) {
  return arma::accu(arma::real(arma::conj(a) % b));
}

std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t h = 14695981039346656037ull);
inline std::uint64_t fnv1a64_str(const std::string& s) {
  return fnv1a64(s.data(), s.size());
}
std::string hex64(std::uint64_t v);

}  // namespace cfisac
