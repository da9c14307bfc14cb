#include "heterodispatch/combinatorics.hpp"

#include <numeric>

#include "heterodispatch/common.hpp"

namespace hd {

std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n || n < 0) return 0;
    if (k > n - k) k = n - k;
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;  // exact at every step
    }
    return r;
}

std::int64_t psi(int m, int n) {
    require(n >= 0, "psi: negative ground-set size");
    std::int64_t total = 0;  // m < 0: empty sum
    for (int l = 0; l <= m; ++l) total += binomial(n, l);
    return total;
}

std::int64_t Rational::round_half_even() const {
    std::int64_t q = num / den;
    std::int64_t r = num % den;
    if (r < 0) {
        q -= 1;
        r += den;
    }
    std::int64_t twice = 2 * r;
    if (twice > den) return q + 1;
    if (twice < den) return q;
    return (q % 2 == 0) ? q : q + 1;  // tie: to even
}

std::int64_t triples_for_support(std::int64_t m) { return (m * m + 3 * m) / 2; }
std::int64_t pairs_for_support(std::int64_t m) { return m + 1; }

Cardinalities cardinalities(int s, int d) {
    require(s >= 1 && d >= 1, "cardinalities: s,d >= 1");
    require(s + d <= 30, "cardinalities: s + d too large for 64-bit evaluation");
    Cardinalities c;
    c.n_mixes = binomial(s + d - 1, d);

    // |T| = s*Psi(d-1, s-1) + sum_i { Psi(d-1, i-1) + sum_{j>i} Psi(d-2, j-2) },
    // indices 1-based as displayed.
    c.n_triples = s * psi(d - 1, s - 1);
    for (int i = 1; i <= s; ++i) {
        c.n_triples += psi(d - 1, i - 1);
        for (int j = i + 1; j <= s; ++j) c.n_triples += psi(d - 2, j - 2);
    }

    // |P| = Psi(d, s) + sum_{j=2..s} Psi(d-1, j-1).
    c.n_pairs = psi(d, s);
    for (int j = 2; j <= s; ++j) c.n_pairs += psi(d - 1, j - 1);

    const std::int64_t m = std::min(s, d);
    c.max_support = m;
    c.max_triples_per_mix = triples_for_support(m);
    c.max_pairs_per_mix = pairs_for_support(m);

    const std::int64_t S = s, D = d;
    c.avg_support = {S * D, S + D - 1};
    if (s + d >= 3) {
        c.avg_triples_per_mix = {S * D * (S * D + 3 * S + 3 * D - 7),
                                 2 * (S + D - 1) * (S + D - 2)};
    } else {
        c.avg_triples_per_mix = {2, 1};  // s = d = 1: the single mix has |T(d)| = 2
    }
    c.avg_pairs_per_mix = {S * D + S + D - 1, S + D - 1};
    return c;
}

}  // namespace hd
