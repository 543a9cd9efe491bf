#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace tessperc {

//! Philox4x32 with 10 rounds (Salmon et al., SC'11). Pure function of (counter, key).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/// Tags separating the independent random streams used by one replicate.
enum class StreamTag : std::uint16_t {
  points = 1,
  coloring = 2,
  lattice_shift = 3,
  lines = 4,
  search = 5,
  cycle = 6,
  coin = 7,
  test = 99,
};

/// A counter-based random stream keyed by (master seed, replicate index, tag, sub-index).
///
/// Two streams with different keys never share a Philox block, so replicates can run on any
/// worker in any order and still draw identical numbers. Satisfies
/// UniformRandomBitGenerator with 64-bit output.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t master_seed, std::uint64_t replicate, StreamTag tag, std::uint16_t sub = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  //! Uniform double in [0, 1) with 53 random bits.
  double uniform();
  //! Uniform double in [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  //! Derived stream for a different tag of the same replicate.
  Stream fork(StreamTag tag, std::uint16_t sub = 0) const;

 private:
  std::uint64_t seed_;
  std::uint64_t replicate_;
  std::uint32_t tag_word_;
  std::uint32_t block_ = 0;
  bool have_spare_ = false;
  std::uint64_t spare_ = 0;
};

}  // namespace tessperc
