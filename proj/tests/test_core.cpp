#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "heterodispatch/combinatorics.hpp"
#include "heterodispatch/index_sets.hpp"
#include "heterodispatch/problem_size.hpp"

using namespace hd;

TEST_CASE("mix enumeration: small spaces by hand") {
    MixSpace space(2, 2);
    REQUIRE(space.size() == 3);
    CHECK(space[0].counts == std::vector<int>{2, 0});
    CHECK(space[1].counts == std::vector<int>{1, 1});
    CHECK(space[2].counts == std::vector<int>{0, 2});

    CHECK(MixSpace(3, 3).size() == 10);
    CHECK(MixSpace(4, 5).size() == 56);
    CHECK(MixSpace(3, 4).size() == binomial(6, 4));
}

TEST_CASE("mix enumeration: counts and order invariants") {
    for (int s = 1; s <= 5; ++s) {
        for (int d = 1; d <= 5; ++d) {
            MixSpace space(s, d);
            CHECK(space.size() == binomial(s + d - 1, d));
            std::set<std::vector<int>> seen;
            for (int m = 0; m < space.size(); ++m) {
                CHECK(space[m].total() == d);
                seen.insert(space[m].counts);
                if (m > 0) CHECK(space[m - 1].counts > space[m].counts);  // reverse-lex
                CHECK(space.ordinal(space[m]) == m);
            }
            CHECK(static_cast<int>(seen.size()) == space.size());
        }
    }
}

TEST_CASE("gamma: worked example and hand-derived cases") {
    // s = d = 8, j = 5 (1-based) with mix (0,2,1,0,3,0,2,0) -> (0,6,1,0,1,0,0,0).
    QueryMix mix({0, 2, 1, 0, 3, 0, 2, 0});
    QueryMix got = gamma(4, mix, GammaVariant::Filler);
    CHECK(got.counts == std::vector<int>{0, 6, 1, 0, 1, 0, 0, 0});

    // Single-class mix is its own canonical form under the filler variant.
    QueryMix single = single_class_mix(4, 0, 7);
    CHECK(gamma(4, single, GammaVariant::Filler) == single);

    // s = 3, d = 3, j = 2 (1-based), mix (1,1,1) -> (2,1,0).
    CHECK(gamma(1, QueryMix({1, 1, 1}), GammaVariant::Filler).counts ==
          std::vector<int>{2, 1, 0});

    // Indicator variant drops the filler probes.
    CHECK(gamma(1, QueryMix({1, 1, 1}), GammaVariant::Indicator).counts ==
          std::vector<int>{1, 1, 0});
}

TEST_CASE("gamma: idempotence on both variants") {
    for (int s = 1; s <= 4; ++s) {
        for (int d = 1; d <= 5; ++d) {
            MixSpace space(s, d);
            for (int m = 0; m < space.size(); ++m) {
                for (int j = 0; j <= s; ++j) {
                    for (GammaVariant v : {GammaVariant::Filler, GammaVariant::Indicator}) {
                        QueryMix once = gamma(j, space[m], v);
                        CHECK(gamma(j, once, v) == once);
                    }
                }
            }
        }
    }
}

TEST_CASE("gamma variants induce the same key partition on weight-carrying pairs") {
    for (int s = 1; s <= 4; ++s) {
        for (int d = 1; d <= 5; ++d) {
            MixSpace space(s, d);
            // For pairs (j, mix) that admit some valid triple, the two keys
            // must identify each other: equal filler keys <=> equal indicator keys.
            std::map<std::pair<int, QueryMix>, std::pair<int, QueryMix>> filler_to_ind;
            std::map<std::pair<int, QueryMix>, std::pair<int, QueryMix>> ind_to_filler;
            for (int m = 0; m < space.size(); ++m) {
                for (int j = 0; j <= s; ++j) {
                    bool carries = false;
                    for (int i = 0; i <= j && i < s; ++i) {
                        if (space[m][i] == 0) continue;
                        if (j < s && space[m][j] == 0) continue;
                        carries = true;
                    }
                    if (!carries) continue;
                    auto fk = std::make_pair(j, gamma(j, space[m], GammaVariant::Filler));
                    auto ik = std::make_pair(j, gamma(j, space[m], GammaVariant::Indicator));
                    auto [it1, new1] = filler_to_ind.emplace(fk, ik);
                    CHECK(it1->second == ik);
                    auto [it2, new2] = ind_to_filler.emplace(ik, fk);
                    CHECK(it2->second == fk);
                }
            }
        }
    }
}

TEST_CASE("index sets: s=2, d=2 by exhaustive enumeration") {
    MixSpace space(2, 2);
    for (GammaVariant v : {GammaVariant::Filler, GammaVariant::Indicator}) {
        IndexSets sets = build_index_sets(space, v);
        CHECK(sets.n_triples() == 8);
        CHECK(sets.n_pairs() == 6);
        for (const TripleKey& t : sets.triples) {
            CHECK(t.i <= t.j);
            CHECK(t.key[t.i] > 0);
            if (t.j < 2) CHECK(t.key[t.j] > 0);
            CHECK(gamma(t.j, t.key, v) == t.key);
        }
    }
}

TEST_CASE("index sets match closed-form cardinalities for s,d <= 6") {
    for (int s = 1; s <= 6; ++s) {
        for (int d = 1; d <= 6; ++d) {
            MixSpace space(s, d);
            Cardinalities c = cardinalities(s, d);
            CHECK(c.n_mixes == space.size());

            for (GammaVariant v : {GammaVariant::Filler, GammaVariant::Indicator}) {
                IndexSets sets = build_index_sets(space, v);
                CHECK(sets.n_triples() == c.n_triples);
                CHECK(sets.n_pairs() == c.n_pairs);
            }

            // Per-mix restrictions: moments must match the closed forms exactly.
            std::int64_t sum_support = 0, sum_triples = 0, sum_pairs = 0;
            std::int64_t max_support = 0, max_triples = 0, max_pairs = 0;
            for (int m = 0; m < space.size(); ++m) {
                std::int64_t support = 0;
                for (int i = 0; i < s; ++i)
                    if (space[m][i] > 0) ++support;
                // Exhaustive |T(mix)|: pairs (i, j), i <= j, class i queried,
                // class j queried or j == s.
                std::int64_t t_count = 0, p_count = 0;
                for (int j = 0; j <= s; ++j) {
                    bool any = false;
                    for (int i = 0; i <= j && i < s; ++i) {
                        if (space[m][i] == 0) continue;
                        if (j < s && space[m][j] == 0) continue;
                        ++t_count;
                        any = true;
                    }
                    if (any) ++p_count;
                }
                CHECK(t_count == triples_for_support(support));
                CHECK(p_count == pairs_for_support(support));
                sum_support += support;
                sum_triples += t_count;
                sum_pairs += p_count;
                max_support = std::max(max_support, support);
                max_triples = std::max(max_triples, t_count);
                max_pairs = std::max(max_pairs, p_count);
            }
            CHECK(max_support == c.max_support);
            CHECK(max_triples == c.max_triples_per_mix);
            CHECK(max_pairs == c.max_pairs_per_mix);
            // avg * |D| == sum, compared exactly in integers.
            CHECK(c.avg_support.num * space.size() == sum_support * c.avg_support.den);
            CHECK(c.avg_triples_per_mix.num * space.size() ==
                  sum_triples * c.avg_triples_per_mix.den);
            CHECK(c.avg_pairs_per_mix.num * space.size() ==
                  sum_pairs * c.avg_pairs_per_mix.den);
        }
    }
}

TEST_CASE("index sets: jset lists exactly the busy-sum contributors") {
    for (int s = 1; s <= 4; ++s) {
        for (int d = 1; d <= 4; ++d) {
            MixSpace space(s, d);
            IndexSets sets = build_index_sets(space);
            std::set<TripleKey> triples(sets.triples.begin(), sets.triples.end());
            for (int i = 0; i < s; ++i) {
                for (int m = 0; m < space.size(); ++m) {
                    const auto& js = sets.jset[i][m];
                    for (std::size_t t = 0; t < js.size(); ++t) {
                        CHECK(js[t] > i);
                        CHECK(js[t] <= s);
                        if (t > 0) CHECK(js[t] > js[t - 1]);
                    }
                    // Membership agrees with the canonicalized triples.
                    for (int j = i + 1; j <= s; ++j) {
                        const bool listed =
                            std::find(js.begin(), js.end(), j) != js.end();
                        const bool in_t =
                            space[m][i] > 0 && (j == s || space[m][j] > 0) &&
                            triples.count(
                                TripleKey{i, j, gamma(j, space[m], sets.variant)}) > 0;
                        CHECK(listed == in_t);
                    }
                    if (space[m][i] == 0) CHECK(js.empty());
                }
            }
        }
    }
}

TEST_CASE("psi basics") {
    CHECK(psi(1, 1) == 2);
    CHECK(psi(2, 4) == 11);
    CHECK(psi(0, 7) == 1);
    CHECK(psi(5, 3) == 8);  // saturates at 2^n
}

TEST_CASE("cardinalities: spot values") {
    Cardinalities c22 = cardinalities(2, 2);
    CHECK(c22.avg_support.num * 3 == 4 * c22.avg_support.den);  // 4/3
    CHECK(c22.max_triples_per_mix == 5);
    CHECK(cardinalities(3, 4).n_mixes == 15);
}

TEST_CASE("problem sizes: quoted table cells") {
    ProblemSizeReport src3 = problem_size(Family::Src, 3, 4);
    CHECK(src3.max_size.vars == 9);
    CHECK(src3.max_size.lec == 1);
    CHECK(src3.max_size.nec == 6);
    CHECK(src3.max_size.dim == 2);

    ProblemSizeReport iid23 = problem_size(Family::Iid, 2, 3);
    CHECK(iid23.max_size.vars == 14);
    CHECK(iid23.max_size.lec == 7);
    CHECK(iid23.max_size.nec == 4);
    CHECK(iid23.max_size.dim == 3);

    ProblemSizeReport det22 = problem_size(Family::Det, 2, 2);
    CHECK(det22.max_size.vars == 9);
    CHECK(det22.subproblems == 3);

    ProblemSizeReport gen22 = problem_size(Family::Gen, 2, 2);
    CHECK(gen22.max_size.vars == 15);
    CHECK(gen22.max_size.lec == 7);
    CHECK(gen22.max_size.dim == gen22.max_size.vars - gen22.max_size.nec - gen22.max_size.lec);
    CHECK(gen22.max_size.ubc() == gen22.max_size.nec / 2);
}

TEST_CASE("rational rounding: ties go to even") {
    CHECK(Rational{13, 2}.round_half_even() == 6);   // 6.5 -> 6
    CHECK(Rational{5, 2}.round_half_even() == 2);    // 2.5 -> 2
    CHECK(Rational{7, 2}.round_half_even() == 4);    // 3.5 -> 4
    CHECK(Rational{17, 3}.round_half_even() == 6);   // 5.67 -> 6
    CHECK(Rational{7, 3}.round_half_even() == 2);    // 2.33 -> 2
    CHECK(Rational{8, 3}.round_half_even() == 3);    // 2.67 -> 3
}
