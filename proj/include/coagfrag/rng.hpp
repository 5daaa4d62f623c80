#ifndef COAGFRAG_RNG_HPP
#define COAGFRAG_RNG_HPP

#include <cmath>
#include <cstdint>

namespace coagfrag {

// Philox4x32-10 counter-based generator. A (key, stream) pair selects an
// independent stream; draws depend only on (key, stream, counter), so replicas
// derived from the same master seed replay bit-identically on any platform.
class Philox {
 public:
  explicit Philox(uint64_t key, uint64_t stream = 0)
      : key0_(static_cast<uint32_t>(key)),
        key1_(static_cast<uint32_t>(key >> 32)),
        stream_lo_(static_cast<uint32_t>(stream)),
        stream_hi_(static_cast<uint32_t>(stream >> 32)) {}

  uint64_t next_u64() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    uint32_t c0 = static_cast<uint32_t>(counter_);
    uint32_t c1 = static_cast<uint32_t>(counter_ >> 32);
    ++counter_;
    uint32_t x0 = c0, x1 = c1, x2 = stream_lo_, x3 = stream_hi_;
    uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      uint64_t p0 = kMul0 * static_cast<uint64_t>(x0);
      uint64_t p1 = kMul1 * static_cast<uint64_t>(x2);
      uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
      uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
      uint32_t y0 = hi1 ^ x1 ^ k0;
      uint32_t y1 = lo1;
      uint32_t y2 = hi0 ^ x3 ^ k1;
      uint32_t y3 = lo0;
      x0 = y0; x1 = y1; x2 = y2; x3 = y3;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    spare_ = (static_cast<uint64_t>(x2) << 32) | x3;
    have_spare_ = true;
    return (static_cast<uint64_t>(x0) << 32) | x1;
  }

  /// Uniform on the open interval (0,1); never returns 0, safe for -log(u).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  /// Uniform integer in [0, n), n >= 1.
  uint64_t uniform_below(uint64_t n) {
    // modulo bias is < 2^-53 for the n used here; acceptable and replayable
    return next_u64() % n;
  }

 private:
  static constexpr uint32_t kMul0 = 0xD2511F53u;
  static constexpr uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

  uint32_t key0_, key1_;
  uint32_t stream_lo_, stream_hi_;
  uint64_t counter_ = 0;
  uint64_t spare_ = 0;
  bool have_spare_ = false;
};

}  // namespace coagfrag

#endif
