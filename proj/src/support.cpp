#include "infhom/extended_real.hpp"
#include "infhom/rng.hpp"

#include <cstdio>

namespace infhom {

std::string ExtReal::to_string() const {
    if (!finite_) return "inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value_);
    return buf;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index) {
    // FNV-1a over the label bytes
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(master) ^ splitmix64(h ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

double uniform_in(Engine& eng, double a, double b) {
    std::uniform_real_distribution<double> dist(a, b);
    for (;;) {
        const double x = dist(eng);
        if (x < b) return x;
    }
}

std::uint64_t poisson_count(Engine& eng, double mean) {
    if (!(mean > 0.0)) return 0;
    std::poisson_distribution<std::uint64_t> dist(mean);
    return dist(eng);
}

}  // namespace infhom
