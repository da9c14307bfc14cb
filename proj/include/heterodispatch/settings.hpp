#pragma once

#include <vector>

#include "heterodispatch/system_params.hpp"

namespace hd {

// One generated problem instance. Speed ratios R are drawn from descending
// subsets of {1.25, 1.5, 2, 3, 5}; class fractions come from integer "shares"
// out of 6; mu is scaled so that sum mu_i q_i = 1.
struct ParameterSetting {
    int id = 0;
    int s = 0, d = 0;
    double lambda = 0;
    std::vector<double> R;      // s-1 entries, descending
    std::vector<int> shares;    // s positive entries summing to 6
    std::vector<double> mu, q;

    SystemParams params() const;
};

enum class LambdaGrid { Coarse, Fine };  // 0.05..0.95 / 0.02..0.98

std::vector<double> lambda_values(LambdaGrid grid);

// The full factorial design over s,d in {2,3,4}, the lambda grid, speed
// subsets and share compositions; 12825 settings on the coarse grid.
std::vector<ParameterSetting> generate_settings(LambdaGrid grid);

// Derive (mu, q) from a speed-ratio vector and share allocation.
void derive_mu_q(const std::vector<double>& R, const std::vector<int>& shares,
                 std::vector<double>& mu, std::vector<double>& q);

}  // namespace hd
