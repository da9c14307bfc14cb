#include "heterodispatch/settings.hpp"

#include <algorithm>
#include <functional>

#include "heterodispatch/common.hpp"
#include "heterodispatch/mix.hpp"

namespace hd {

SystemParams ParameterSetting::params() const {
    return SystemParams::make(s, d, lambda, mu, q);
}

std::vector<double> lambda_values(LambdaGrid grid) {
    std::vector<double> out;
    if (grid == LambdaGrid::Coarse) {
        for (int i = 1; i <= 19; ++i) out.push_back(i * 0.05);
    } else {
        for (int i = 1; i <= 49; ++i) out.push_back(i * 0.02);
    }
    return out;
}

void derive_mu_q(const std::vector<double>& R, const std::vector<int>& shares,
                 std::vector<double>& mu, std::vector<double>& q) {
    const int s = static_cast<int>(shares.size());
    require(static_cast<int>(R.size()) == s - 1, "derive_mu_q: need s-1 speed ratios");
    q.resize(s);
    int total = 0;
    for (int x : shares) total += x;
    for (int i = 0; i < s; ++i) q[i] = static_cast<double>(shares[i]) / total;

    double denom = q[s - 1];
    for (int i = 0; i < s - 1; ++i) denom += R[i] * q[i];
    const double mu_s = 1.0 / denom;
    mu.resize(s);
    mu[s - 1] = mu_s;
    for (int i = 0; i < s - 1; ++i) mu[i] = R[i] * mu_s;
}

namespace {

const std::vector<double> kSpeedPool = {1.25, 1.5, 2.0, 3.0, 5.0};

// All subsets of the speed pool of the given size, each sorted descending so
// that R_1 > R_2 > ... ; subsets enumerated in lexicographic index order.
std::vector<std::vector<double>> speed_subsets(int size) {
    std::vector<std::vector<double>> out;
    const int n = static_cast<int>(kSpeedPool.size());
    std::vector<int> idx(size);
    std::function<void(int, int)> rec = [&](int start, int chosen) {
        if (chosen == size) {
            std::vector<double> pick;
            for (int t = 0; t < size; ++t) pick.push_back(kSpeedPool[idx[t]]);
            std::sort(pick.rbegin(), pick.rend());
            out.push_back(pick);
            return;
        }
        for (int p = start; p < n; ++p) {
            idx[chosen] = p;
            rec(p + 1, chosen + 1);
        }
    };
    rec(0, 0);
    return out;
}

// Compositions of 6 into s positive parts, reverse-lexicographic.
std::vector<std::vector<int>> share_compositions(int s) {
    std::vector<std::vector<int>> out;
    MixSpace space(s, 6 - s);  // nonnegative compositions of 6-s, then +1 each
    for (int m = 0; m < space.size(); ++m) {
        std::vector<int> shares = space[m].counts;
        for (int& v : shares) v += 1;
        out.push_back(std::move(shares));
    }
    return out;
}

}  // namespace

std::vector<ParameterSetting> generate_settings(LambdaGrid grid) {
    std::vector<ParameterSetting> out;
    const std::vector<double> lambdas = lambda_values(grid);
    int id = 0;
    for (int s = 2; s <= 4; ++s) {
        const auto speeds = speed_subsets(s - 1);
        const auto shares = share_compositions(s);
        for (int d = 2; d <= 4; ++d) {
            for (double lambda : lambdas) {
                for (const auto& R : speeds) {
                    for (const auto& sh : shares) {
                        ParameterSetting ps;
                        ps.id = id++;
                        ps.s = s;
                        ps.d = d;
                        ps.lambda = lambda;
                        ps.R = R;
                        ps.shares = sh;
                        derive_mu_q(R, sh, ps.mu, ps.q);
                        out.push_back(std::move(ps));
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace hd
