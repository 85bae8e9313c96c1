#pragma once

// Counter-based random number generation (Philox4x64-10, as in numpy) with
// keyed substreams.  A stream is identified by a 128-bit key derived from the
// seed and a path of stream ids, so draws are reproducible and independent of
// iteration or thread order: give each replicate/subject its own stream
// instead of sharing one sequential generator.

#include <array>
#include <cstdint>

namespace clic {

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Root constructor with an explicit Philox key (used by tests against
  // reference vectors).
  static Rng with_key(std::uint64_t k0, std::uint64_t k1);

  // Derived substream; deterministic function of (this stream's key, id).
  Rng stream(std::uint64_t id) const;
  Rng stream(std::uint64_t a, std::uint64_t b) const;

  std::uint64_t next_u64();
  double uniform01();        // open interval (0,1)
  double normal();
  double exponential();      // rate 1
  double chisq(int df);      // df >= 1
  double laplace_unit();     // mean 0, variance 1
  double student_t(int df);  // df >= 1

 private:
  Rng() = default;
  void refill();

  std::array<std::uint64_t, 2> key_{};
  std::array<std::uint64_t, 4> ctr_{};
  std::array<std::uint64_t, 4> buf_{};
  int bufpos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace clic
