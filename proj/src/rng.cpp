#include "tessperc/rng.hpp"

#include <stdexcept>

namespace tessperc {

namespace {
constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}
}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

Stream::Stream(std::uint64_t master_seed, std::uint64_t replicate, StreamTag tag, std::uint16_t sub)
    : seed_(master_seed),
      replicate_(replicate),
      tag_word_((static_cast<std::uint32_t>(tag) << 16) | sub) {}

Stream::result_type Stream::operator()() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  if (block_ == std::numeric_limits<std::uint32_t>::max())
    throw std::overflow_error("random stream exhausted");
  PhiloxCounter ctr{block_++, tag_word_, static_cast<std::uint32_t>(replicate_),
                    static_cast<std::uint32_t>(replicate_ >> 32)};
  PhiloxKey key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  PhiloxCounter out = philox4x32_10(ctr, key);
  spare_ = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  have_spare_ = true;
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

double Stream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

Stream Stream::fork(StreamTag tag, std::uint16_t sub) const { return {seed_, replicate_, tag, sub}; }

}  // namespace tessperc
