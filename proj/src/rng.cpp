#include "clic/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace clic {

namespace {

constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline std::uint64_t mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t* hi) {
  const unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
  *hi = static_cast<std::uint64_t>(prod >> 64);
  return static_cast<std::uint64_t>(prod);
}

inline void philox_round(std::array<std::uint64_t, 4>& x,
                         const std::array<std::uint64_t, 2>& k) {
  std::uint64_t hi0, hi1;
  const std::uint64_t lo0 = mulhilo(kPhiloxM0, x[0], &hi0);
  const std::uint64_t lo1 = mulhilo(kPhiloxM1, x[2], &hi1);
  x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
}

inline std::array<std::uint64_t, 4> philox10(std::array<std::uint64_t, 4> ctr,
                                             std::array<std::uint64_t, 2> key) {
  for (int r = 0; r < 9; ++r) {
    philox_round(ctr, key);
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  philox_round(ctr, key);
  return ctr;
}

// SplitMix64 finalizer, used only to derive stream keys.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  key_ = {mix64(seed), mix64(seed ^ 0xA5A5A5A5A5A5A5A5ULL)};
}

Rng Rng::with_key(std::uint64_t k0, std::uint64_t k1) {
  Rng r;
  r.key_ = {k0, k1};
  return r;
}

Rng Rng::stream(std::uint64_t id) const {
  Rng child;
  child.key_ = {mix64(key_[0] ^ mix64(id)),
                mix64(key_[1] + 0x6A09E667F3BCC909ULL * (id + 1))};
  return child;
}

Rng Rng::stream(std::uint64_t a, std::uint64_t b) const {
  return stream(a).stream(b);
}

void Rng::refill() {
  // Counter is incremented before each block, matching numpy's Philox.
  for (int i = 0; i < 4; ++i) {
    if (++ctr_[i] != 0) break;  // carry
  }
  buf_ = philox10(ctr_, key_);
  bufpos_ = 0;
}

std::uint64_t Rng::next_u64() {
  if (bufpos_ >= 4) refill();
  return buf_[bufpos_++];
}

double Rng::uniform01() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

double Rng::exponential() { return -std::log(uniform01()); }

double Rng::chisq(int df) {
  if (df < 1) throw std::invalid_argument("chisq: df must be >= 1");
  double s = 0.0;
  for (int i = 0; i < df; ++i) {
    const double z = normal();
    s += z * z;
  }
  return s;
}

double Rng::laplace_unit() {
  // Laplace(0, b) with b = 1/sqrt(2) has unit variance.
  const double u = uniform01() - 0.5;
  const double b = 1.0 / std::sqrt(2.0);
  return (u < 0 ? 1.0 : -1.0) * b * std::log(1.0 - 2.0 * std::abs(u));
}

double Rng::student_t(int df) {
  if (df < 1) throw std::invalid_argument("student_t: df must be >= 1");
  return normal() / std::sqrt(chisq(df) / df);
}

}  // namespace clic
