#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace arsv {

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
// A stream is (key, stream-id); the stream-id lives in the high counter
// words, so distinct stream-ids index disjoint 2^64-block counter spaces
// under the same key. Jumping to any position is O(1).
struct Philox4x32 {
  static constexpr std::uint32_t kW32A = 0x9E3779B9u;
  static constexpr std::uint32_t kW32B = 0xBB67AE85u;
  static constexpr std::uint32_t kM4x32A = 0xD2511F53u;
  static constexpr std::uint32_t kM4x32B = 0xCD9E8D57u;

  static std::array<std::uint32_t, 4> block(std::uint64_t key,
                                            std::uint64_t stream,
                                            std::uint64_t pos) {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(pos), static_cast<std::uint32_t>(pos >> 32),
        static_cast<std::uint32_t>(stream),
        static_cast<std::uint32_t>(stream >> 32)};
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM4x32A) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM4x32B) * ctr[2];
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
      k0 += kW32A;
      k1 += kW32B;
    }
    return ctr;
  }
};

// One independent substream of uniforms/normals. Copyable value type;
// copying forks the position (rarely what you want mid-sequence).
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_(seed), stream_(stream_id) {}

  std::uint64_t seed() const { return key_; }
  std::uint64_t stream_id() const { return stream_; }

  std::uint64_t next_u64() {
    if (u64_left_ == 0) refill();
    --u64_left_;
    return buf_[1 - u64_left_];
  }

  // Uniform on the open interval (0,1); 53 significant bits.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; draws come in pairs, one is cached.
  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * 3.14159265358979323846 * u2;
    cached_ = rad * std::sin(ang);
    have_cached_ = true;
    return rad * std::cos(ang);
  }

 private:
  void refill() {
    const auto b = Philox4x32::block(key_, stream_, pos_++);
    buf_[0] = (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
    buf_[1] = (static_cast<std::uint64_t>(b[3]) << 32) | b[2];
    u64_left_ = 2;
  }

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t pos_ = 0;
  std::uint64_t buf_[2] = {0, 0};
  int u64_left_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// Stream-id layout shared by the whole engine. Disjointness of the id
// space across kinds/paths/times/methods is what guarantees independent
// substreams under a single master seed.
enum class StreamKind : std::uint64_t {
  eval_path = 1,   // outer evaluation paths
  inner_mc = 2,    // per-quote sub-simulations
  generic = 3,     // CLI one-off simulations
};

constexpr std::uint64_t make_stream_id(StreamKind kind, std::uint64_t path,
                                       std::uint64_t t = 0,
                                       std::uint64_t method = 0) {
  return (static_cast<std::uint64_t>(kind) << 56) | ((method & 0xFFu) << 48) |
         ((t & 0xFFFFu) << 32) | (path & 0xFFFFFFFFu);
}

}  // namespace arsv
