#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace jsd {

using Rng = std::mt19937_64;

// One master seed fans out to independent streams, keyed by a component label
// plus an index. Same (master, label, index) always yields the same stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t master, std::string_view label,
                    std::uint64_t index = 0) {
    return Rng{derive_seed(master, label, index)};
}

}  // namespace jsd
