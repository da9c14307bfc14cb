#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "heterodispatch/optimizer.hpp"

using namespace hd;

namespace {

SystemParams fig2_params(double lambda) {
    return SystemParams::make(3, 3, lambda, {2.0, 0.8, 0.4},
                              {1.0 / 3.0, 1.0 / 6.0, 1.0 / 2.0});
}

SystemParams fig4_params(double lambda) {
    return SystemParams::make(2, 4, lambda, {25.0 / 21.0, 5.0 / 21.0}, {0.8, 0.2});
}

double reevaluate(const SystemParams& params, const OptimizedPolicy& policy) {
    MixSpace space(params.s(), params.d());
    QueryDistribution pdist = lower(policy.rule, params, space);
    RateSolution sol = solve_fixed_point(params, space, pdist, policy.assign);
    REQUIRE(sol.converged);
    return mean_response_time(params, sol, ServiceSpec::exponential());
}

}  // namespace

TEST_CASE("sfc picks the largest-capacity class when it is the only stable one") {
    // Capacities are (2/3, 2/15, 1/5); only class 1 can carry lambda = 0.3.
    SystemParams params = fig2_params(0.3);
    OptimizedPolicy policy =
        optimize(OptimizationProblem(Family::Sfc, params), std::nullopt, Budget{2, 100}, 0);
    const auto* sfc = std::get_if<SfcRule>(&policy.rule);
    REQUIRE(sfc != nullptr);
    CHECK(sfc->class_index == 0);
    CHECK(policy.report.subproblems_solved == 1);  // the two others are infeasible
    CHECK(policy.objective == doctest::Approx(reevaluate(params, policy)).epsilon(1e-8));
}

TEST_CASE("sfc is infeasible beyond the best class capacity") {
    SystemParams params = fig2_params(0.7);  // max mu_i q_i = 2/3
    CHECK_THROWS_AS(
        static_cast<void>(optimize(OptimizationProblem(Family::Sfc, params), std::nullopt,
                                   Budget{1, 50}, 0)),
        Infeasible);
}

TEST_CASE("fixed balanced-routing assignment optimization stays feasible at high load") {
    SystemParams params = fig4_params(0.9);
    OptimizedPolicy policy = optimize(OptimizationProblem(params, QueryingRule{BrRule{}}),
                                      std::nullopt, Budget{4, 400}, 7);
    CHECK(policy.report.feasible);
    CHECK(std::isfinite(policy.objective));
    CHECK(policy.objective == doctest::Approx(reevaluate(params, policy)).epsilon(1e-8));
}

TEST_CASE("optimizer is deterministic in the rng seed") {
    SystemParams params = fig2_params(0.5);
    Budget b{3, 250};
    OptimizedPolicy a = optimize(OptimizationProblem(Family::Iid, params), std::nullopt, b, 42);
    OptimizedPolicy bb = optimize(OptimizationProblem(Family::Iid, params), std::nullopt, b, 42);
    CHECK(a.objective == bb.objective);
    CHECK(a.report.best_start == bb.report.best_start);
    const auto& pa = std::get<IidRule>(a.rule).ptilde;
    const auto& pb = std::get<IidRule>(bb.rule).ptilde;
    for (int i = 0; i < 3; ++i) CHECK(pa[i] == pb[i]);
}

TEST_CASE("det argmin reproduces its objective through the solver") {
    SystemParams params = fig4_params(0.5);
    OptimizedPolicy policy =
        optimize(OptimizationProblem(Family::Det, params), std::nullopt, Budget{3, 300}, 3);
    const auto* det = std::get_if<DetRule>(&policy.rule);
    REQUIRE(det != nullptr);
    CHECK(policy.objective == doctest::Approx(reevaluate(params, policy)).epsilon(1e-8));
    // At lambda = 0.5 > mu_2 q_2 = 1/21, slow-only mixes are skipped.
    CHECK(policy.report.subproblems_solved < 5);
}

TEST_CASE("seeded gen never loses to ind by more than the slack") {
    for (double lambda : {0.3, 0.8}) {
        SystemParams params = fig2_params(lambda);
        Budget b{3, 300};
        OptimizedPolicy ind =
            optimize(OptimizationProblem(Family::Ind, params), std::nullopt, b, 11);
        OptimizedPolicy seeded = optimize_gen_seeded(params, b, 11);
        CHECK(seeded.objective <= ind.objective + 1e-3);
    }
}

TEST_CASE("ind seeded with iid keeps the containment inequality") {
    SystemParams params = fig2_params(0.6);
    Budget b{3, 300};
    OptimizedPolicy iid = optimize(OptimizationProblem(Family::Iid, params), std::nullopt, b, 5);
    OptimizedPolicy ind_seeded =
        optimize(OptimizationProblem(Family::Ind, params), iid, b, 5);
    CHECK(ind_seeded.objective <= iid.objective + 1e-3);
}

TEST_CASE("src objective is permutation invariant for identical classes") {
    const double third = 1.0 / 3.0;
    SystemParams params =
        SystemParams::make_relaxed(3, 2, 0.5, {1.0, 1.0, 1.0}, {third, third, third});
    MixSpace space(3, 2);
    CidAssignment table = CidAssignment::uniform(build_index_sets(space), 3);

    auto objective_at = [&](std::vector<double> phat) {
        QueryDistribution pdist = lower(SrcRule{std::move(phat)}, params, space);
        RateSolution sol = solve_fixed_point(params, space, pdist, table);
        REQUIRE(sol.converged);
        return mean_response_time(params, sol, ServiceSpec::exponential());
    };
    const double base = objective_at({0.5, 0.3, 0.2});
    CHECK(objective_at({0.3, 0.2, 0.5}) == doctest::Approx(base).epsilon(1e-10));
    CHECK(objective_at({0.2, 0.5, 0.3}) == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("jsq-d series: d=1 is m/m/1 and d=2 exponents are 1,3,7,...") {
    for (double x : {0.1, 0.5, 0.9}) {
        CHECK(jsq_d_response_time(x, 2.0, 1) ==
              doctest::Approx(1.0 / (2.0 * (1 - x))).epsilon(1e-10));
    }
    // Direct sum with exponents 1, 3, 7, 15, ... at mu = 1.
    const double x = 0.7;
    double expect = 0, e = 1;
    while (true) {
        const double term = std::pow(x, e);
        expect += term;
        if (term < 1e-14) break;
        e = 2 * e + 1;
    }
    expect /= x;
    CHECK(jsq_d_response_time(x, 1.0, 2) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("src+jsq: homogeneous classes optimize to capacity-proportional querying") {
    SystemParams params =
        SystemParams::make_relaxed(3, 2, 0.7, {1.0, 1.0, 1.0}, {0.5, 0.3, 0.2});
    OptimizedPolicy policy = optimize_src_jsq(params, Budget{1, 4000});
    const auto& phat = std::get<SrcRule>(policy.rule).phat;
    for (int i = 0; i < 3; ++i)
        CHECK(phat[i] == doctest::Approx(params.mu(i) * params.q(i)).epsilon(5e-3));

    // Grid search over the simplex confirms no better point.
    double best_grid = 1e100;
    const int steps = 60;
    for (int a = 0; a <= steps; ++a) {
        for (int b = 0; a + b <= steps; ++b) {
            const double p0 = static_cast<double>(a) / steps;
            const double p1 = static_cast<double>(b) / steps;
            const double p2 = 1.0 - p0 - p1;
            double total = 0;
            bool ok = true;
            const std::vector<double> ph = {p0, p1, p2};
            for (int i = 0; i < 3 && ok; ++i) {
                if (ph[i] <= 1e-12) continue;
                const double x = params.lambda() * ph[i] / (params.q(i) * params.mu(i));
                if (x >= 1) ok = false;
                else total += ph[i] * jsq_d_response_time(x, params.mu(i), params.d());
            }
            if (ok) best_grid = std::min(best_grid, total);
        }
    }
    CHECK(policy.objective <= best_grid + 1e-6);
    CHECK(policy.cld_jsq);
}

TEST_CASE("degenerate single class: seeded gen equals plain gen") {
    SystemParams params = SystemParams::make(1, 2, 0.5, {1.0}, {1.0});
    Budget b{2, 100};
    OptimizedPolicy seeded = optimize_gen_seeded(params, b, 0);
    OptimizedPolicy plain =
        optimize(OptimizationProblem(Family::Gen, params), std::nullopt, b, 0);
    CHECK(seeded.objective == doctest::Approx(plain.objective).epsilon(1e-9));
    CHECK(seeded.objective == doctest::Approx(1.0 / (1.0 - 0.25)).epsilon(1e-7));
}

TEST_CASE("returned policies satisfy simplex feasibility") {
    SystemParams params = fig2_params(0.5);
    OptimizedPolicy policy =
        optimize(OptimizationProblem(Family::Iid, params), std::nullopt, Budget{2, 200}, 9);
    const auto& pt = std::get<IidRule>(policy.rule).ptilde;
    double total = 0;
    for (double v : pt) {
        CHECK(v >= -1e-10);
        total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));

    MixSpace space(3, 3);
    IndexSets sets = build_index_sets(space);
    policy.assign.validate(sets, 1e-10);
}
