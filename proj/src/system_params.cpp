#include "heterodispatch/system_params.hpp"

#include <cmath>

#include "heterodispatch/common.hpp"

namespace hd {

SystemParams SystemParams::checked(int s, int d, double lambda, std::vector<double> mu,
                                   std::vector<double> q, bool strict_speeds) {
    require(s >= 1, "s must be >= 1");
    require(d >= 1, "d must be >= 1");
    require(d <= 10, "d must be <= 10");
    require(lambda > 0 && std::isfinite(lambda), "lambda must be positive and finite");
    require(static_cast<int>(mu.size()) == s, "mu must have s entries");
    require(static_cast<int>(q.size()) == s, "q must have s entries");

    double cap = 0, qsum = 0;
    for (int i = 0; i < s; ++i) {
        require(mu[i] > 0 && std::isfinite(mu[i]), "mu must be positive and finite");
        require(q[i] > 0 && std::isfinite(q[i]), "q must be positive and finite");
        if (i > 0) {
            if (strict_speeds)
                require(mu[i] < mu[i - 1], "mu must be strictly decreasing");
            else
                require(mu[i] <= mu[i - 1], "mu must be non-increasing");
        }
        cap += mu[i] * q[i];
        qsum += q[i];
    }
    require(std::abs(qsum - 1.0) <= 1e-12, "q must sum to 1");
    require(std::abs(cap - 1.0) <= 1e-12, "mu.q normalization: sum mu_i q_i must equal 1");

    SystemParams p;
    p.s_ = s;
    p.d_ = d;
    p.lambda_ = lambda;
    p.mu_ = std::move(mu);
    p.q_ = std::move(q);
    return p;
}

SystemParams SystemParams::make(int s, int d, double lambda, std::vector<double> mu,
                                std::vector<double> q) {
    return checked(s, d, lambda, std::move(mu), std::move(q), /*strict_speeds=*/true);
}

SystemParams SystemParams::make_relaxed(int s, int d, double lambda, std::vector<double> mu,
                                        std::vector<double> q) {
    return checked(s, d, lambda, std::move(mu), std::move(q), /*strict_speeds=*/false);
}

SystemParams SystemParams::with_lambda(double lambda) const {
    return checked(s_, d_, lambda, mu_, q_, /*strict_speeds=*/false);
}

}  // namespace hd
