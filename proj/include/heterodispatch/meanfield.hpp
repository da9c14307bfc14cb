#pragma once

#include <vector>

#include "heterodispatch/cid.hpp"
#include "heterodispatch/common.hpp"
#include "heterodispatch/querying.hpp"

namespace hd {

// Fixed point of the idle/busy arrival-rate equations for one policy.
struct RateSolution {
    std::vector<double> lambda_idle;  // per class
    std::vector<double> lambda_busy;
    std::vector<double> rho;
    double mean_T = 0;     // exponential-service objective at the solution
    double residual = 0;   // max |x - F(x)| over all 2s equations
    int iterations = 0;
    bool converged = false;
};

struct ServiceSpec {
    enum class Kind { Exponential, GeneralFCFS };
    Kind kind = Kind::Exponential;
    double c2 = 1.0;  // squared coefficient of variation, GeneralFCFS only

    static ServiceSpec exponential() { return {Kind::Exponential, 1.0}; }
    static ServiceSpec general_fcfs(double c2) { return {Kind::GeneralFCFS, c2}; }
};

struct SolveOptions {
    double tol = 1e-10;
    int max_damped_iters = 10000;
    int max_newton_iters = 50;
    double damping = 0.5;
    // Optional warm start for (lambda_idle, lambda_busy); default start is
    // lambda on every coordinate.
    std::vector<double> initial;  // size 2s when nonempty
    bool throw_on_instability = true;
};

// Solves the 2s-equation system. Throws InstabilityDetected when iterates pin
// some lambda_busy against its service rate (unless disabled via options);
// plain non-convergence is reported through converged = false with the best
// iterate attained.
RateSolution solve_fixed_point(const SystemParams& params, const MixSpace& space,
                               const QueryDistribution& pdist, const CidAssignment& assign,
                               const SolveOptions& opts = {});

// Objective at a converged solution under the given service model. For
// GeneralFCFS with c2 == 1 this coincides with the exponential value.
double mean_response_time(const SystemParams& params, const RateSolution& sol,
                          const ServiceSpec& service);

// |sum_i q_i * lambda_i - lambda| with lambda_i the status-weighted per-server
// arrival rate; vanishes at any true fixed point.
double conservation_gap(const SystemParams& params, const RateSolution& sol);

// Multi-start diagnostics for the uniqueness question: clusters the fixed
// points reached from random warm starts (plus the default start) and returns
// one representative per cluster, best objective first.
std::vector<RateSolution> solve_multi_start(const SystemParams& params, const MixSpace& space,
                                            const QueryDistribution& pdist,
                                            const CidAssignment& assign, int starts,
                                            std::uint64_t seed,
                                            const SolveOptions& opts = {});

}  // namespace hd
