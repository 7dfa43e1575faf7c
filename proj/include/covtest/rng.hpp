#pragma once

#include <cmath>
#include <cstdint>

namespace covtest {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The key is the user seed and the high counter words select a
/// (stream, substream) pair, so per-replication substreams are cheap and
/// independent of scheduling order: CounterRng(seed, kind, rep) always
/// yields the same sequence no matter which thread runs the replication.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint32_t stream = 0,
                      std::uint32_t substream = 0)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        ctr2_(substream),
        ctr3_(stream) {}

  /// Raw 4x32 block for the given 64-bit block index.
  void block(std::uint64_t index, std::uint32_t out[4]) const {
    std::uint32_t c0 = static_cast<std::uint32_t>(index);
    std::uint32_t c1 = static_cast<std::uint32_t>(index >> 32);
    std::uint32_t c2 = ctr2_, c3 = ctr3_;
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = kMul0 * static_cast<std::uint64_t>(c0);
      const std::uint64_t p1 = kMul1 * static_cast<std::uint64_t>(c2);
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      c0 = hi1 ^ c1 ^ k0;
      c1 = lo1;
      c2 = hi0 ^ c3 ^ k1;
      c3 = lo0;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    out[0] = c0;
    out[1] = c1;
    out[2] = c2;
    out[3] = c3;
  }

  std::uint64_t next_u64() {
    if (lane_ == 0) {
      block(block_index_++, buf_);
      lane_ = 2;
      return (static_cast<std::uint64_t>(buf_[1]) << 32) | buf_[0];
    }
    lane_ = 0;
    return (static_cast<std::uint64_t>(buf_[3]) << 32) | buf_[2];
  }

  /// Uniform double in (0, 1).
  double uniform() {
    // 53-bit mantissa; bias away from exact 0 so log() is safe.
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Marsaglia polar method.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double v1, v2, s;
    do {
      v1 = 2.0 * uniform() - 1.0;
      v2 = 2.0 * uniform() - 1.0;
      s = v1 * v1 + v2 * v2;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v2 * scale;
    have_spare_ = true;
    return v1 * scale;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  std::uint32_t key0_, key1_, ctr2_, ctr3_;
  std::uint64_t block_index_ = 0;
  std::uint32_t buf_[4] = {0, 0, 0, 0};
  int lane_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Stream tags keeping the per-purpose substreams of one simulation run
/// disjoint.
namespace rng_stream {
inline constexpr std::uint32_t kDesign = 1;
inline constexpr std::uint32_t kResponse = 2;
inline constexpr std::uint32_t kCalibration = 3;
inline constexpr std::uint32_t kGeneric = 4;
}  // namespace rng_stream

}  // namespace covtest
