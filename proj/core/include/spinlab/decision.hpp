#pragma once

#include <string_view>

namespace spinlab {

// Answer of a decision r-approximate counting query.
enum class Decision {
    AtMostZhatOverR,  // Z <= Zhat / r
    AtLeastRZhat,     // Z >= r * Zhat
};

inline std::string_view to_string(Decision d) {
    return d == Decision::AtMostZhatOverR ? "Z<=Zhat/r" : "Z>=r*Zhat";
}

}  // namespace spinlab
