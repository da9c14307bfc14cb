#pragma once

#include <cstdint>

#include "heterodispatch/mix.hpp"

namespace hd {

std::int64_t binomial(int n, int k);  // 0 when k < 0 or k > n

// psi(m, n): number of subsets of {1..n} with cardinality at most m.
std::int64_t psi(int m, int n);

// Exact rational, for the per-mix averages below (denominators stay tiny).
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    // Nearest integer, ties to even.
    std::int64_t round_half_even() const;
};

// Closed-form cardinalities of the index sets for a given (s, d), plus the
// max / average sizes of their per-mix restrictions.
struct Cardinalities {
    std::int64_t n_mixes = 0;    // |D|
    std::int64_t n_triples = 0;  // |T|
    std::int64_t n_pairs = 0;    // |P|
    std::int64_t max_support = 0;
    std::int64_t max_triples_per_mix = 0;
    std::int64_t max_pairs_per_mix = 0;
    Rational avg_support;
    Rational avg_triples_per_mix;
    Rational avg_pairs_per_mix;
};

Cardinalities cardinalities(int s, int d);

// Per-mix restricted set sizes; m = number of queried classes in the mix.
std::int64_t triples_for_support(std::int64_t m);  // (m^2 + 3m) / 2
std::int64_t pairs_for_support(std::int64_t m);    // m + 1

}  // namespace hd
