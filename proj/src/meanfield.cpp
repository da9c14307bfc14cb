#include "heterodispatch/meanfield.hpp"

#include <algorithm>
#include <cmath>

#include "heterodispatch/combinatorics.hpp"
#include "heterodispatch/common.hpp"
#include "heterodispatch/rng.hpp"

namespace hd {

namespace {

constexpr double kBusyMarginFrac = 1e-9;  // lambda_busy < mu * (1 - margin)
constexpr int kPinnedLimit = 200;         // consecutive clamped iterations => unstable

// Per-policy tables so the iteration does no map lookups: for each mix with
// d_i > 0, the idle-row weight alpha_i(i, .) and the busy-row weights
// alpha_i(j, .) for j in J_i(d).
struct CompiledPolicy {
    int s = 0;
    std::vector<double> p;                              // mix weights
    std::vector<std::vector<int>> counts;               // [m][i]
    std::vector<std::vector<double>> alpha_idle;        // [m][i]
    std::vector<std::vector<std::vector<double>>> alpha_busy;  // [m][i][j-i-1] for j in i+1..s
};

CompiledPolicy compile_policy(const SystemParams& params, const MixSpace& space,
                              const QueryDistribution& pdist, const CidAssignment& assign) {
    const int s = params.s();
    CompiledPolicy cp;
    cp.s = s;
    cp.p = pdist.p;
    cp.counts.resize(space.size());
    cp.alpha_idle.assign(space.size(), std::vector<double>(s, 0.0));
    cp.alpha_busy.assign(space.size(),
                         std::vector<std::vector<double>>(s));
    for (int m = 0; m < space.size(); ++m) {
        const QueryMix& mix = space[m];
        cp.counts[m] = mix.counts;
        for (int i = 0; i < s; ++i) {
            if (mix[i] == 0) continue;
            cp.alpha_idle[m][i] = assign.lookup(i, i, mix);
            auto& row = cp.alpha_busy[m][i];
            row.resize(s - i, 0.0);
            for (int j = i + 1; j <= s; ++j) row[j - i - 1] = assign.lookup(i, j, mix);
        }
        // Reachable rows must be normalized, else the rate equations are fed a
        // sub- or super-stochastic assignment and converge to garbage.
        if (cp.p[m] > 0.0) {
            for (int j = 0; j <= s; ++j) {
                double row_sum = 0;
                bool any = false;
                for (int i = 0; i <= j && i < s; ++i) {
                    if (mix[i] == 0 || (j < s && mix[j] == 0)) continue;
                    any = true;
                    row_sum += assign.lookup(i, j, mix);
                }
                if (any && std::abs(row_sum - 1.0) > 1e-8)
                    throw std::invalid_argument(
                        "assignment table row does not sum to 1 on a queried mix");
            }
        }
    }
    return cp;
}

double idle_pick_factor(int di, double rho) {
    double total = 0;
    for (int a = 1; a <= di; ++a) {
        total += static_cast<double>(binomial(di - 1, a - 1)) *
                 std::pow(1.0 - rho, a - 1) * std::pow(rho, di - a) / a;
    }
    return total;
}

// One application of the fixed-point map: x = (lambda_idle, lambda_busy).
void apply_map(const SystemParams& params, const CompiledPolicy& cp,
               const std::vector<double>& x, std::vector<double>& out) {
    const int s = cp.s;
    std::vector<double> rho(s);
    for (int i = 0; i < s; ++i) {
        const double li = x[i], lb = x[s + i];
        double r = li / (params.mu(i) - lb + li);
        rho[i] = std::clamp(r, 0.0, 1.0 - 1e-12);
    }

    std::fill(out.begin(), out.end(), 0.0);
    const int n_mixes = static_cast<int>(cp.p.size());
    for (int m = 0; m < n_mixes; ++m) {
        const double pm = cp.p[m];
        if (pm == 0.0) continue;
        const auto& counts = cp.counts[m];

        double prefix = 1.0;  // prod_{l < i} rho_l^{d_l}
        for (int i = 0; i < s; ++i) {
            const int di = counts[i];
            if (di == 0) continue;

            const double ai = cp.alpha_idle[m][i];
            if (ai > 0.0)
                out[i] += pm * di * prefix * ai * idle_pick_factor(di, rho[i]);

            // Busy side in the rho_i -> 0 well-posed form:
            //   rho_i^{d_i-1} * sum_j (prod_{l<j, l!=i} rho_l^{d_l}) *
            //   (1 - rho_j^{d_j}) * alpha_i(j, .)
            const auto& row = cp.alpha_busy[m][i];
            double g = prefix;  // excludes class i
            double busy = 0.0;
            for (int j = i + 1; j <= s; ++j) {
                const double a = row[j - i - 1];
                const double survive =
                    (j == s) ? 1.0 : (1.0 - std::pow(rho[j], counts[j]));
                if (a > 0.0) busy += g * survive * a;
                if (j < s) g *= std::pow(rho[j], counts[j]);
            }
            out[s + i] += pm * std::pow(rho[i], di - 1) * busy;

            prefix *= std::pow(rho[i], di);
        }
    }
    for (int i = 0; i < s; ++i) {
        out[i] *= params.lambda() / params.q(i);
        out[s + i] *= params.lambda() / params.q(i);
    }
}

double clamp_busy(const SystemParams& params, std::vector<double>& x) {
    // Returns the worst overshoot past the margin (0 when untouched).
    double worst = 0.0;
    const int s = params.s();
    for (int i = 0; i < s; ++i) {
        const double cap = params.mu(i) * (1.0 - kBusyMarginFrac);
        if (x[s + i] > cap) {
            worst = std::max(worst, x[s + i] - cap);
            x[s + i] = cap;
        }
        x[i] = std::max(x[i], 0.0);
        x[s + i] = std::max(x[s + i], 0.0);
    }
    return worst;
}

double residual_of(const std::vector<double>& x, const std::vector<double>& fx) {
    double r = 0;
    for (std::size_t t = 0; t < x.size(); ++t) r = std::max(r, std::abs(fx[t] - x[t]));
    return r;
}

// Small dense solve for the Newton step; n = 2s <= 20.
bool solve_linear(std::vector<double>& A, std::vector<double>& b, int n) {
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(A[r * n + col]) > std::abs(A[piv * n + col])) piv = r;
        if (std::abs(A[piv * n + col]) < 1e-300) return false;
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(A[piv * n + c], A[col * n + c]);
            std::swap(b[piv], b[col]);
        }
        const double inv = 1.0 / A[col * n + col];
        for (int r = col + 1; r < n; ++r) {
            const double f = A[r * n + col] * inv;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < n; ++c) acc -= A[r * n + c] * b[c];
        b[r] = acc / A[r * n + r];
    }
    return true;
}

RateSolution finish(const SystemParams& params, const std::vector<double>& x,
                    double residual, int iters, bool converged) {
    const int s = params.s();
    RateSolution sol;
    sol.lambda_idle.assign(x.begin(), x.begin() + s);
    sol.lambda_busy.assign(x.begin() + s, x.end());
    sol.rho.resize(s);
    for (int i = 0; i < s; ++i) {
        sol.rho[i] = sol.lambda_idle[i] /
                     (params.mu(i) - sol.lambda_busy[i] + sol.lambda_idle[i]);
    }
    sol.residual = residual;
    sol.iterations = iters;
    sol.converged = converged;
    if (converged) sol.mean_T = mean_response_time(params, sol, ServiceSpec::exponential());
    return sol;
}

}  // namespace

RateSolution solve_fixed_point(const SystemParams& params, const MixSpace& space,
                               const QueryDistribution& pdist, const CidAssignment& assign,
                               const SolveOptions& opts) {
    require(space.s() == params.s() && space.d() == params.d(),
            "solve_fixed_point: space/params mismatch");
    require(pdist.size() == space.size(), "solve_fixed_point: distribution length mismatch");

    const int s = params.s();
    const int n = 2 * s;
    const CompiledPolicy cp = compile_policy(params, space, pdist, assign);

    std::vector<double> x(n, params.lambda());
    if (!opts.initial.empty()) {
        require(static_cast<int>(opts.initial.size()) == n, "initial iterate: wrong size");
        x = opts.initial;
    }
    clamp_busy(params, x);

    std::vector<double> fx(n), best_x = x;
    double best_res = std::numeric_limits<double>::infinity();
    int pinned_streak = 0;
    int iters = 0;

    for (; iters < opts.max_damped_iters; ++iters) {
        apply_map(params, cp, x, fx);
        const double res = residual_of(x, fx);
        if (res < best_res) {
            best_res = res;
            best_x = x;
        }
        if (res < opts.tol) return finish(params, x, res, iters, true);

        for (int t = 0; t < n; ++t) x[t] += opts.damping * (fx[t] - x[t]);
        const double overshoot = clamp_busy(params, x);
        if (overshoot > 0.0) {
            if (++pinned_streak >= kPinnedLimit) {
                if (opts.throw_on_instability) {
                    int worst = 0;
                    double worst_gap = -1;
                    for (int i = 0; i < s; ++i) {
                        const double gap = x[s + i] / params.mu(i);
                        if (gap > worst_gap) {
                            worst_gap = gap;
                            worst = i;
                        }
                    }
                    throw InstabilityDetected(
                        worst, "fixed-point iterates drive lambda_busy of class " +
                                   std::to_string(worst + 1) + " to its service rate");
                }
                return finish(params, best_x, best_res, iters, false);
            }
        } else {
            pinned_streak = 0;
        }
    }

    // Newton on G(x) = F(x) - x with a forward-difference Jacobian. The
    // difference points are left unclamped so that coordinates pinned at the
    // stability margin still produce nonzero columns.
    x = best_x;
    std::vector<double> g(n), gpert(n), xp(n), jac(n * n), step(n), trial(n);
    for (int it = 0; it < opts.max_newton_iters; ++it) {
        apply_map(params, cp, x, fx);
        for (int t = 0; t < n; ++t) g[t] = fx[t] - x[t];
        double res = residual_of(x, fx);
        if (res < best_res) {
            best_res = res;
            best_x = x;
        }
        if (res < opts.tol) return finish(params, x, res, iters + it, true);

        for (int c = 0; c < n; ++c) {
            xp = x;
            const double h = std::max(1e-8, 1e-8 * std::abs(x[c]));
            xp[c] += h;
            apply_map(params, cp, xp, gpert);
            for (int r = 0; r < n; ++r)
                jac[r * n + c] = ((gpert[r] - xp[r]) - g[r]) / h;
        }
        step = g;
        for (double& v : step) v = -v;
        if (!solve_linear(jac, step, n)) break;

        // step solves J * step = -G, so the Newton update is x + step.
        // Backtrack until the residual improves (or give up on this step).
        double scale = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 8; ++bt, scale *= 0.5) {
            trial = x;
            for (int t = 0; t < n; ++t) trial[t] += scale * step[t];
            clamp_busy(params, trial);
            apply_map(params, cp, trial, gpert);
            if (residual_of(trial, gpert) < res) {
                x = trial;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }

    apply_map(params, cp, best_x, fx);
    return finish(params, best_x, residual_of(best_x, fx), opts.max_damped_iters, false);
}

double mean_response_time(const SystemParams& params, const RateSolution& sol,
                          const ServiceSpec& service) {
    const int s = params.s();
    double total = 0;
    for (int i = 0; i < s; ++i) {
        const double li = sol.lambda_idle[i], lb = sol.lambda_busy[i];
        const double rho = sol.rho[i];
        if (lb >= params.mu(i))
            throw std::domain_error("mean_response_time: lambda_busy >= mu for class " +
                                    std::to_string(i + 1));
        const double rate = (1.0 - rho) * li + rho * lb;
        if (service.kind == ServiceSpec::Kind::Exponential) {
            total += params.q(i) * rate / (params.mu(i) - lb);
        } else {
            const double mu = params.mu(i);
            total += params.q(i) * rate *
                     ((1.0 + service.c2) * lb / (2.0 * mu * (mu - lb)) + 1.0 / mu);
        }
    }
    return total / params.lambda();
}

double conservation_gap(const SystemParams& params, const RateSolution& sol) {
    double throughput = 0;
    for (int i = 0; i < params.s(); ++i) {
        throughput += params.q(i) * ((1.0 - sol.rho[i]) * sol.lambda_idle[i] +
                                     sol.rho[i] * sol.lambda_busy[i]);
    }
    return std::abs(throughput - params.lambda());
}

std::vector<RateSolution> solve_multi_start(const SystemParams& params, const MixSpace& space,
                                            const QueryDistribution& pdist,
                                            const CidAssignment& assign, int starts,
                                            std::uint64_t seed, const SolveOptions& opts) {
    std::vector<RateSolution> distinct;
    auto consider = [&](const RateSolution& sol) {
        if (!sol.converged) return;
        for (const RateSolution& have : distinct) {
            double gap = 0;
            for (int i = 0; i < params.s(); ++i) {
                gap = std::max(gap, std::abs(have.lambda_idle[i] - sol.lambda_idle[i]));
                gap = std::max(gap, std::abs(have.lambda_busy[i] - sol.lambda_busy[i]));
            }
            if (gap < 1e-6) return;  // same fixed point
        }
        distinct.push_back(sol);
    };

    try {
        consider(solve_fixed_point(params, space, pdist, assign, opts));
    } catch (const InstabilityDetected&) {
    }
    SplitMix64 rng(seed, /*stream=*/0x6d66);
    for (int t = 0; t < starts; ++t) {
        SolveOptions o = opts;
        o.initial.resize(2 * params.s());
        for (int i = 0; i < params.s(); ++i) {
            o.initial[i] = rng.uniform() * params.mu(i);
            o.initial[params.s() + i] = rng.uniform() * params.mu(i) * 0.999;
        }
        try {
            consider(solve_fixed_point(params, space, pdist, assign, o));
        } catch (const InstabilityDetected&) {
        }
    }
    std::sort(distinct.begin(), distinct.end(),
              [](const RateSolution& a, const RateSolution& b) { return a.mean_T < b.mean_T; });
    return distinct;
}

}  // namespace hd
