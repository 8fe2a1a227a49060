#pragma once

#include <cstdint>
#include <random>

#include "spectra_gap/matrix.hpp"

namespace spectra_gap {

/// Seeded standard-normal test matrices.
inline RealMatrix random_real(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    RealMatrix a(n, n);
    for (auto& x : a.data()) x = g(rng);
    return a;
}

inline RealMatrix random_symmetric(std::size_t n, std::uint64_t seed) {
    RealMatrix a = random_real(n, seed);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) a(j, i) = a(i, j);
    return a;
}

inline RealMatrix random_antisymmetric(std::size_t n, std::uint64_t seed) {
    RealMatrix a = random_real(n, seed);
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = 0.0;
        for (std::size_t j = 0; j < i; ++j) a(j, i) = -a(i, j);
    }
    return a;
}

inline ComplexMatrix random_complex(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    ComplexMatrix a(n, n);
    for (auto& x : a.data()) x = complex(g(rng), g(rng));
    return a;
}

} // namespace spectra_gap
