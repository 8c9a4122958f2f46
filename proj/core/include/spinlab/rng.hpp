#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace spinlab {

// Seeded 64-bit stream. Child streams are derived by name so that every
// module draws from an independent, reproducible sequence.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed);

    Rng split(std::string_view name) const;
    Rng split(std::uint64_t index) const;

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next();
    result_type operator()() { return next(); }
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform on {0, ..., n-1}; n must be positive.
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p) { return uniform() < p; }

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace spinlab
