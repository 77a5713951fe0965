#pragma once

// Philox4x32-10 counter-based generator. Chosen over the stdlib engines so a
// (seed, stream) pair maps to the same draws on every platform and every
// worker partitioning: stream ids index realizations, the block counter
// advances within a stream, and no state is shared between threads.

#include <array>
#include <cmath>
#include <cstdint>

namespace noma {

class Philox {
 public:
  Philox(uint64_t seed, uint64_t stream)
      : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
        stream_lo_(static_cast<uint32_t>(stream)),
        stream_hi_(static_cast<uint32_t>(stream >> 32)) {}

  uint64_t next_u64() {
    if (pos_ == 2) refill();
    return buffer_[pos_++];
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (cosine branch only, so each call
  /// consumes exactly two uniforms and streams stay aligned).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Unit-mean exponential (e.g. Rayleigh fading power).
  double exponential() { return -std::log(1.0 - uniform()); }

 private:
  static constexpr uint32_t kMulA = 0xD2511F53u;
  static constexpr uint32_t kMulB = 0xCD9E8D57u;
  static constexpr uint32_t kWeylA = 0x9E3779B9u;
  static constexpr uint32_t kWeylB = 0xBB67AE85u;

  void refill() {
    std::array<uint32_t, 4> c = {static_cast<uint32_t>(block_),
                                 static_cast<uint32_t>(block_ >> 32), stream_lo_,
                                 stream_hi_};
    uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      const uint64_t p0 = static_cast<uint64_t>(kMulA) * c[0];
      const uint64_t p1 = static_cast<uint64_t>(kMulB) * c[2];
      c = {static_cast<uint32_t>(p1 >> 32) ^ c[1] ^ k0, static_cast<uint32_t>(p1),
           static_cast<uint32_t>(p0 >> 32) ^ c[3] ^ k1, static_cast<uint32_t>(p0)};
      k0 += kWeylA;
      k1 += kWeylB;
    }
    buffer_[0] = (static_cast<uint64_t>(c[1]) << 32) | c[0];
    buffer_[1] = (static_cast<uint64_t>(c[3]) << 32) | c[2];
    pos_ = 0;
    ++block_;
  }

  std::array<uint32_t, 2> key_;
  uint32_t stream_lo_;
  uint32_t stream_hi_;
  uint64_t block_ = 0;
  std::array<uint64_t, 2> buffer_{};
  int pos_ = 2;
};

}  // namespace noma
