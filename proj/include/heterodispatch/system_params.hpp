#pragma once

#include <vector>

namespace hd {

// Environment tuple for the dispatching model: s server classes ordered by
// decreasing speed, d probes per arrival, per-server arrival rate lambda,
// service rates mu and class fractions q with sum_i mu_i q_i == 1.
class SystemParams {
public:
    static SystemParams make(int s, int d, double lambda, std::vector<double> mu,
                             std::vector<double> q);
    // Same checks except ties in mu are allowed (used by symmetry tests).
    static SystemParams make_relaxed(int s, int d, double lambda, std::vector<double> mu,
                                     std::vector<double> q);

    int s() const { return s_; }
    int d() const { return d_; }
    double lambda() const { return lambda_; }
    const std::vector<double>& mu() const { return mu_; }
    const std::vector<double>& q() const { return q_; }
    double mu(int i) const { return mu_[i]; }
    double q(int i) const { return q_[i]; }
    double speed_ratio(int i) const { return mu_[i] / mu_[s_ - 1]; }  // R_i

    SystemParams with_lambda(double lambda) const;

private:
    SystemParams() = default;
    static SystemParams checked(int s, int d, double lambda, std::vector<double> mu,
                                std::vector<double> q, bool strict_speeds);

    int s_ = 0, d_ = 0;
    double lambda_ = 0;
    std::vector<double> mu_, q_;
};

}  // namespace hd
