#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "heterodispatch/cid.hpp"
#include "heterodispatch/rng.hpp"

using namespace hd;

namespace {

std::vector<double> decreasing_mu(int s, SplitMix64& rng) {
    std::vector<double> mu(s);
    double v = 2.0 + rng.uniform();
    for (int i = 0; i < s; ++i) {
        mu[i] = v;
        v *= 0.4 + 0.4 * rng.uniform();
    }
    return mu;
}

SystemParams random_params(int s, int d, SplitMix64& rng) {
    std::vector<double> mu = decreasing_mu(s, rng);
    std::vector<double> q(s);
    double total = 0;
    for (int i = 0; i < s; ++i) {
        q[i] = 0.1 + rng.uniform();
        total += q[i];
    }
    double cap = 0;
    for (int i = 0; i < s; ++i) {
        q[i] /= total;
        cap += mu[i] * q[i];
    }
    for (int i = 0; i < s; ++i) mu[i] /= cap;  // normalize sum mu q = 1
    return SystemParams::make(s, d, 0.5, mu, q);
}

CidAssignment random_table(const IndexSets& sets, int s, SplitMix64& rng) {
    CidAssignment table(s, sets.variant);
    for (const auto& [pair, rows] : sets.pair_rows) {
        std::vector<double> w(rows.size());
        double total = 0;
        for (auto& v : w) {
            v = rng.exponential(1.0);
            total += v;
        }
        for (std::size_t r = 0; r < rows.size(); ++r)
            table.set(rows[r], pair.j, pair.key, w[r] / total);
    }
    return table;
}

}  // namespace

TEST_CASE("lookup: pruning and normalization") {
    MixSpace space(2, 2);
    IndexSets sets = build_index_sets(space);
    SystemParams params = SystemParams::make(2, 2, 0.5, {1.5, 0.5}, {0.5, 0.5});

    CidAssignment table(2, sets.variant);
    QueryMix mix({1, 1});
    // alpha_1(all-busy, (1,1)) = 0.7 forces alpha_2 = 0.3 on that row.
    table.set(0, 2, mix, 0.7);
    table.set(1, 2, mix, 0.3);
    table.set(0, 1, mix, 1.0);  // idle class-2 seen: keep the busy fast server
    table.set(1, 1, mix, 0.0);
    table.set(0, 0, single_class_mix(2, 0, 2), 1.0);
    table.set(0, 2, single_class_mix(2, 0, 2), 1.0);
    table.set(1, 1, single_class_mix(2, 1, 2), 1.0);
    table.set(1, 2, single_class_mix(2, 1, 2), 1.0);
    table.validate(sets);

    CHECK(table.lookup(1, 2, mix) == doctest::Approx(0.3));
    CHECK(table.lookup(1, 0, mix) == 0.0);  // j < i prunes
    CHECK(table.lookup(0, 1, single_class_mix(2, 0, 2)) == 0.0);  // d_j = 0 prunes

    // The "second kind" of table is representable: never assign to an idle
    // slow server, sometimes keep a busy fast one.
    CidAssignment second(2, sets.variant);
    second.set(0, 1, mix, 1.0);
    second.set(1, 1, mix, 0.0);
    CHECK(second.lookup(0, 1, mix) == 1.0);
    CHECK(second.lookup(1, 1, mix) == 0.0);
}

TEST_CASE("uniform and fastest-first constructors validate") {
    for (int s = 1; s <= 4; ++s) {
        for (int d = 1; d <= 4; ++d) {
            MixSpace space(s, d);
            IndexSets sets = build_index_sets(space);
            CidAssignment::uniform(sets, s).validate(sets);
            CidAssignment::fastest_first(sets, s).validate(sets);
        }
    }
}

TEST_CASE("r_idle: single-class closed forms") {
    MixSpace space1(1, 1);
    IndexSets sets1 = build_index_sets(space1);
    SystemParams p1 = SystemParams::make(1, 1, 0.5, {1.0}, {1.0});
    CidAssignment a1 = CidAssignment::uniform(sets1, 1);
    CHECK(r_idle(p1, {0.37}, a1, 0, space1[0]) == doctest::Approx(1.0).epsilon(1e-15));

    MixSpace space2(1, 2);
    IndexSets sets2 = build_index_sets(space2);
    SystemParams p2 = SystemParams::make(1, 2, 0.5, {1.0}, {1.0});
    CidAssignment a2 = CidAssignment::uniform(sets2, 1);
    for (double rho : {0.0, 0.25, 0.7, 0.99})
        CHECK(r_idle(p2, {rho}, a2, 0, space2[0]) ==
              doctest::Approx((1 + rho) / 2).epsilon(1e-14));
    // b_1 = 1 regardless of the mix: no faster class exists.
    CHECK(r_idle(p2, {0.9}, a2, 0, space2[0]) > 0.9);
}

TEST_CASE("r_busy: single-class closed forms and the two-class term") {
    MixSpace space1(1, 1);
    SystemParams p1 = SystemParams::make(1, 1, 0.5, {1.0}, {1.0});
    CidAssignment a1 = CidAssignment::uniform(build_index_sets(space1), 1);
    for (double rho : {0.2, 0.5, 0.9})
        CHECK(r_busy(p1, {rho}, a1, 0, space1[0]) == doctest::Approx(1.0).epsilon(1e-14));

    MixSpace space2(1, 2);
    SystemParams p2 = SystemParams::make(1, 2, 0.5, {1.0}, {1.0});
    CidAssignment a2 = CidAssignment::uniform(build_index_sets(space2), 1);
    for (double rho : {0.2, 0.5, 0.9})
        CHECK(r_busy(p2, {rho}, a2, 0, space2[0]) == doctest::Approx(rho / 2).epsilon(1e-14));
    CHECK(r_busy(p2, {0.0}, a2, 0, space2[0]) == 0.0);  // null-event convention

    // s=2, d=2, mix (1,1), tagged slow class: rho_1 * alpha_2(2,(1,1)).
    MixSpace space22(2, 2);
    IndexSets sets22 = build_index_sets(space22);
    SystemParams p22 = SystemParams::make(2, 2, 0.5, {1.5, 0.5}, {0.5, 0.5});
    SplitMix64 rng(11, 0);
    CidAssignment t22 = random_table(sets22, 2, rng);
    QueryMix mix({1, 1});
    const double rho1 = 0.63, rho2 = 0.41;
    const double expect = rho1 * t22.lookup(1, 2, mix);
    CHECK(r_busy(p22, {rho1, rho2}, t22, 1, mix) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("oracle agrees with closed forms: fixed small cases") {
    MixSpace space(1, 2);
    SystemParams params = SystemParams::make(1, 2, 0.5, {1.0}, {1.0});
    CidAssignment table = CidAssignment::uniform(build_index_sets(space), 1);
    for (double rho : {0.0, 0.3, 0.8}) {
        CHECK(oracle_assignment_prob(params, {rho}, table, 0, space[0], TaggedStatus::Idle) ==
              doctest::Approx(r_idle(params, {rho}, table, 0, space[0])).epsilon(1e-12));
        if (rho > 0)
            CHECK(oracle_assignment_prob(params, {rho}, table, 0, space[0],
                                         TaggedStatus::Busy) ==
                  doctest::Approx(r_busy(params, {rho}, table, 0, space[0])).epsilon(1e-12));
    }
}

TEST_CASE("oracle: zero idle weight means no idle assignment") {
    MixSpace space(2, 2);
    IndexSets sets = build_index_sets(space);
    SystemParams params = SystemParams::make(2, 2, 0.5, {1.5, 0.5}, {0.5, 0.5});
    CidAssignment table(2, sets.variant);
    QueryMix mix({1, 1});
    table.set(0, 0, single_class_mix(2, 0, 2), 0.0);
    CHECK(oracle_assignment_prob(params, {0.5, 0.5}, table, 0, single_class_mix(2, 0, 2),
                                 TaggedStatus::Idle) == 0.0);
}

TEST_CASE("oracle equivalence over randomized instances") {
    SplitMix64 rng(2024, 5);
    int checked = 0;
    for (int trial = 0; trial < 250; ++trial) {
        const int s = 1 + static_cast<int>(rng.uniform_int(4));
        const int d = 1 + static_cast<int>(rng.uniform_int(5));
        MixSpace space(s, d);
        IndexSets sets = build_index_sets(space);
        SystemParams params = random_params(s, d, rng);
        CidAssignment table = random_table(sets, s, rng);
        std::vector<double> rho(s);
        for (double& r : rho) r = rng.uniform() * 0.98;

        const int m = static_cast<int>(rng.uniform_int(space.size()));
        const QueryMix& mix = space[m];
        for (int i = 0; i < s; ++i) {
            if (mix[i] == 0) continue;
            const double oi =
                oracle_assignment_prob(params, rho, table, i, mix, TaggedStatus::Idle);
            const double ci = r_idle(params, rho, table, i, mix);
            CHECK(std::abs(oi - ci) <= 1e-10);
            const double ob =
                oracle_assignment_prob(params, rho, table, i, mix, TaggedStatus::Busy);
            const double cb = r_busy(params, rho, table, i, mix);
            CHECK(std::abs(ob - cb) <= 1e-10);
            CHECK(ci >= 0.0);
            CHECK(ci <= 1.0);
            CHECK(cb >= 0.0);
            CHECK(cb <= 1.0);
            ++checked;
        }
    }
    CHECK(checked > 200);
}
