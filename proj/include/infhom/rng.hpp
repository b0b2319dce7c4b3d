#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace infhom {

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Pure mixing of (master seed, stream label, index) into a substream seed.
/// The result does not depend on the order in which substreams are drawn.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0);

inline Engine make_engine(std::uint64_t master, std::string_view label, std::uint64_t index = 0) {
    return Engine(derive_seed(master, label, index));
}

/// Uniform draw on [a, b) that never returns b.
double uniform_in(Engine& eng, double a, double b);

/// Poisson-distributed count; mean 0 yields 0.
std::uint64_t poisson_count(Engine& eng, double mean);

}  // namespace infhom
