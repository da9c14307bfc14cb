#include "heterodispatch/cid.hpp"

#include <cmath>

#include "heterodispatch/combinatorics.hpp"
#include "heterodispatch/common.hpp"

namespace hd {

CidAssignment CidAssignment::uniform(const IndexSets& sets, int s) {
    CidAssignment out(s, sets.variant);
    for (const auto& [pair, rows] : sets.pair_rows) {
        const double w = 1.0 / static_cast<double>(rows.size());
        for (int i : rows) out.alpha_[TripleKey{i, pair.j, pair.key}] = w;
    }
    return out;
}

CidAssignment CidAssignment::fastest_first(const IndexSets& sets, int s) {
    CidAssignment out(s, sets.variant);
    for (const auto& [pair, rows] : sets.pair_rows) {
        for (std::size_t r = 0; r < rows.size(); ++r)
            out.alpha_[TripleKey{rows[r], pair.j, pair.key}] = (r == 0) ? 1.0 : 0.0;
    }
    return out;
}

void CidAssignment::set(int i, int j, const QueryMix& mix, double value) {
    require(value >= -1e-15 && value <= 1.0 + 1e-12, "alpha value outside [0,1]");
    alpha_[TripleKey{i, j, gamma(j, mix, variant_)}] = value;
}

double CidAssignment::lookup(int i, int j, const QueryMix& mix) const {
    if (j < i) return 0.0;
    if (mix[i] == 0) return 0.0;
    if (j < s_ && mix[j] == 0) return 0.0;
    auto it = alpha_.find(TripleKey{i, j, gamma(j, mix, variant_)});
    return it == alpha_.end() ? 0.0 : it->second;
}

void CidAssignment::validate(const IndexSets& sets, double tol) const {
    for (const auto& [key, value] : alpha_) {
        require(value >= -tol && value <= 1.0 + tol, "alpha value outside [0,1]");
    }
    for (const auto& [pair, rows] : sets.pair_rows) {
        double total = 0;
        for (int i : rows) {
            auto it = alpha_.find(TripleKey{i, pair.j, pair.key});
            if (it != alpha_.end()) total += it->second;
        }
        require(std::abs(total - 1.0) <= tol, "alpha row does not sum to 1");
    }
}

namespace {

// E[1/A_i] with A_i - 1 ~ Binom(d_i - 1, 1 - rho), as the displayed sum.
double idle_pick_factor(int di, double rho) {
    double total = 0;
    for (int a = 1; a <= di; ++a) {
        total += static_cast<double>(binomial(di - 1, a - 1)) *
                 std::pow(1.0 - rho, a - 1) * std::pow(rho, di - a) / a;
    }
    return total;
}

}  // namespace

double r_idle(const SystemParams& params, const std::vector<double>& rho,
              const CidAssignment& assign, int i, const QueryMix& mix) {
    if (mix[i] == 0) return 0.0;
    double b = 1.0;
    for (int l = 0; l < i; ++l) b *= std::pow(rho[l], mix[l]);
    return b * assign.lookup(i, i, mix) * idle_pick_factor(mix[i], rho[i]);
}

double r_busy(const SystemParams& params, const std::vector<double>& rho,
              const CidAssignment& assign, int i, const QueryMix& mix) {
    const int s = params.s();
    if (mix[i] == 0) return 0.0;
    if (rho[i] <= 0.0) return 0.0;

    // b_j(d) / rho_i, accumulated without dividing so rho_i = 0 stays exact:
    // g = prod_{l < j, l != i} rho_l^{d_l}, then multiply by rho_i^{d_i - 1}.
    double g = 1.0;
    for (int l = 0; l < i; ++l) g *= std::pow(rho[l], mix[l]);
    const double tagged = std::pow(rho[i], mix[i] - 1);

    double total = 0.0;
    for (int j = i + 1; j <= s; ++j) {
        const double survive = (j == s) ? 1.0 : (1.0 - std::pow(rho[j], mix[j]));
        total += g * survive * assign.lookup(i, j, mix);
        if (j < s) g *= std::pow(rho[j], mix[j]);
    }
    return tagged * total / mix[i];
}

double oracle_assignment_prob(const SystemParams& params, const std::vector<double>& rho,
                              const CidAssignment& assign, int i, const QueryMix& mix,
                              TaggedStatus status) {
    const int s = params.s();
    require(params.d() <= 8, "oracle limited to d <= 8");
    if (mix[i] == 0) return 0.0;

    // The other d-1 queried servers, in class order.
    std::vector<int> other_class;
    for (int c = 0; c < s; ++c) {
        int copies = mix[c] - (c == i ? 1 : 0);
        for (int t = 0; t < copies; ++t) other_class.push_back(c);
    }
    const int n = static_cast<int>(other_class.size());

    double total = 0.0;
    for (int mask = 0; mask < (1 << n); ++mask) {
        double weight = 1.0;
        std::vector<int> idle(s, 0);
        if (status == TaggedStatus::Idle) idle[i] += 1;
        for (int t = 0; t < n; ++t) {
            int c = other_class[t];
            if (mask & (1 << t)) {
                weight *= 1.0 - rho[c];
                idle[c] += 1;
            } else {
                weight *= rho[c];
            }
        }
        if (weight == 0.0) continue;

        int j = s;  // fastest idle class; s encodes "none idle"
        for (int c = 0; c < s; ++c) {
            if (idle[c] > 0) {
                j = c;
                break;
            }
        }

        // Probability the tagged server wins under this configuration: the
        // dispatcher draws a class by alpha, then picks uniformly among that
        // class's idle servers if it has any, else among its queried servers.
        double p_win = 0.0;
        if (status == TaggedStatus::Idle) {
            if (j == i) p_win = assign.lookup(i, i, mix) / idle[i];
        } else {
            if (idle[i] == 0) p_win = assign.lookup(i, j, mix) / mix[i];
        }
        total += weight * p_win;
    }
    return total;
}

}  // namespace hd
