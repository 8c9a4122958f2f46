#include "spinlab/rng.hpp"

namespace spinlab {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

Rng Rng::split(std::string_view name) const {
    return Rng(splitmix64(seed_ ^ splitmix64(fnv1a(name))));
}

Rng Rng::split(std::uint64_t index) const {
    return Rng(splitmix64(seed_ + splitmix64(index + 0x632be59bd9b4e019ULL)));
}

std::uint64_t Rng::next() { return engine_(); }

double Rng::uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Rejection sampling keeps the draw exactly uniform.
    std::uint64_t limit = max() - (max() % n);
    for (;;) {
        std::uint64_t x = next();
        if (x < limit) return x % n;
    }
}

}  // namespace spinlab
