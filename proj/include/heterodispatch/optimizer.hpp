#pragma once

#include <optional>

#include "heterodispatch/meanfield.hpp"

namespace hd {

struct Budget {
    int starts = 16;          // random starts (a seed start comes on top)
    int nm_iterations = 1200; // Nelder-Mead iterations per start
};

struct SolverReport {
    int starts = 0;
    int best_start = -1;  // 0 = seed start when one was given
    double runtime_s = 0;
    bool feasible = false;
    int subproblems_solved = 1;
};

struct OptimizedPolicy {
    QueryingRule rule;
    CidAssignment assign;
    double objective = 0;
    SolverReport report;
    bool cld_jsq = false;  // objective computed by the power-of-d series, not CID
};

struct OptimizationProblem {
    Family family = Family::Gen;
    SystemParams params;
    std::optional<QueryingRule> fixed_rule;  // required when family == FixedQR
    GammaVariant variant = kDefaultGammaVariant;

    OptimizationProblem(Family f, SystemParams p) : family(f), params(std::move(p)) {}
    OptimizationProblem(SystemParams p, QueryingRule rule)
        : family(Family::FixedQR), params(std::move(p)), fixed_rule(std::move(rule)) {}
};

// Joint querying/assignment optimization for one family. The decision vector
// holds only policy parameters; the rate fixed point is solved inside the
// objective. Throws Infeasible when the family has no stable member at the
// given load (or no start reaches one). Deterministic given rng_seed.
OptimizedPolicy optimize(const OptimizationProblem& problem,
                         const std::optional<OptimizedPolicy>& seed_policy,
                         const Budget& budget, std::uint64_t rng_seed);

// The warm-start heuristic: optimize IND, lift its policy into the GEN space,
// re-optimize GEN from that start, and accept the result only when it is no
// worse than the IND objective plus 1e-3; otherwise fall back to IND.
OptimizedPolicy optimize_gen_seeded(const SystemParams& params, const Budget& budget,
                                    std::uint64_t rng_seed);

// Mean response time of a homogeneous power-of-d system at per-server load x:
// (1/(x mu)) * sum_{m>=1} x^{(d^m - 1)/(d - 1)}, truncated at 1e-14 terms.
double jsq_d_response_time(double x, double mu, int d);

// Single-random-class querying with within-class shortest-queue assignment:
// the system splits into s independent homogeneous JSQ-d subsystems, so the
// objective is exact and only phat is optimized.
OptimizedPolicy optimize_src_jsq(const SystemParams& params, const Budget& budget);

}  // namespace hd
