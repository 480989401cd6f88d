#ifndef OCCUDEV_RNG_HPP_
#define OCCUDEV_RNG_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace occudev {

/// Identifies one replication: the derived random stream is a pure
/// function of (master_seed, replicate_index).
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t replicate_index = 0;

  friend bool operator==(const SeedSpec &, const SeedSpec &) = default;
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

} // namespace detail

/// Philox4x32-10 block function (Salmon et al., Random123).
class Philox4x32 {
public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter apply(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Counter-based 64-bit generator over Philox4x32-10. The key is a hash of
/// the seed spec; the third counter word selects a sub-stream (one per
/// coordinate of the driving Brownian motion), so sub-stream k does not
/// depend on how many other sub-streams are drawn.
class PhiloxStream {
public:
  using result_type = std::uint64_t;

  PhiloxStream(const SeedSpec &seed, std::uint32_t substream) {
    const std::uint64_t h = detail::splitmix64(
        detail::splitmix64(seed.master_seed) ^
        detail::splitmix64(seed.replicate_index + 0x632BE59BD9B4E019ULL));
    key_ = {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    substream_ = substream;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    if (cursor_ == kBufferWords) {
      refill();
    }
    return buffer_[cursor_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
  static constexpr std::size_t kBlocks = 16;
  static constexpr std::size_t kBufferWords = 2 * kBlocks;

  void refill() {
    for (std::size_t b = 0; b < kBlocks; ++b) {
      const std::uint64_t block = block_ + b;
      const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block),
                                    static_cast<std::uint32_t>(block >> 32),
                                    substream_, 0u};
      const auto out = Philox4x32::apply(ctr, key_);
      buffer_[2 * b] = (std::uint64_t{out[1]} << 32) | out[0];
      buffer_[2 * b + 1] = (std::uint64_t{out[3]} << 32) | out[2];
    }
    block_ += kBlocks;
    cursor_ = 0;
  }

  Philox4x32::Key key_{};
  std::uint32_t substream_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, kBufferWords> buffer_{};
  std::size_t cursor_ = kBufferWords;
};

} // namespace occudev

#endif // OCCUDEV_RNG_HPP_
