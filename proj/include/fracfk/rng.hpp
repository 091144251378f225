#pragma once

#include <cstdint>
#include <random>

namespace fracfk {

enum class Stream : std::uint64_t {
  Path = 1,
  Branch = 2,
  Field = 3,
  Inner = 4,
  Moment = 5,
  Aux = 6,
};

[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x);

// Engine for the substream (seed, tag, a, b). The state depends only on the
// key, so index i draws the same numbers no matter which worker runs it.
[[nodiscard]] std::mt19937_64 substream(std::uint64_t seed, Stream tag,
                                        std::uint64_t a, std::uint64_t b = 0);

}  // namespace fracfk
