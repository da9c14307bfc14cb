#include "heterodispatch/querying.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "heterodispatch/common.hpp"

namespace hd {

void QueryDistribution::validate() const {
    double total = 0;
    for (double v : p) {
        require(v >= -1e-15 && std::isfinite(v), "query distribution entry negative");
        total += v;
    }
    require(std::abs(total - 1.0) <= 1e-12, "query distribution must sum to 1");
}

const char* rule_kind(const QueryingRule& rule) {
    struct Visitor {
        const char* operator()(const GenRule&) const { return "gen"; }
        const char* operator()(const IidRule&) const { return "iid"; }
        const char* operator()(const IndRule&) const { return "ind"; }
        const char* operator()(const DetRule&) const { return "det"; }
        const char* operator()(const SrcRule&) const { return "src"; }
        const char* operator()(const SfcRule&) const { return "sfc"; }
        const char* operator()(const UniRule&) const { return "uni"; }
        const char* operator()(const BrRule&) const { return "br"; }
    };
    return std::visit(Visitor{}, rule);
}

namespace {

void check_stochastic(const std::vector<double>& v, int s, const char* what) {
    require(static_cast<int>(v.size()) == s, std::string(what) + ": wrong length");
    double total = 0;
    for (double x : v) {
        require(x >= -1e-15 && std::isfinite(x), std::string(what) + ": negative entry");
        total += x;
    }
    require(std::abs(total - 1.0) <= 1e-10, std::string(what) + ": must sum to 1");
}

QueryDistribution multinomial_lowering(const std::vector<double>& ptilde,
                                       const MixSpace& space) {
    const int d = space.d();
    double dfact = 1;
    for (int i = 2; i <= d; ++i) dfact *= i;

    QueryDistribution out;
    out.p.resize(space.size());
    for (int m = 0; m < space.size(); ++m) {
        const QueryMix& mix = space[m];
        double v = dfact;
        for (int i = 0; i < space.s(); ++i) {
            for (int c = 1; c <= mix[i]; ++c) v *= ptilde[i] / c;
        }
        out.p[m] = v;
    }
    return out;
}

QueryDistribution point_mass(const QueryMix& mix, const MixSpace& space) {
    int m = space.ordinal(mix);
    require(m >= 0, "mix not in the space for (s, d)");
    QueryDistribution out;
    out.p.assign(space.size(), 0.0);
    out.p[m] = 1.0;
    return out;
}

// Probability that d independent probes with per-probe class distributions
// ptilde_u realize the mix `target`, summed over the ways the probe set can be
// partitioned into per-class blocks of the prescribed sizes.
double independent_mix_probability(const std::vector<std::vector<double>>& ptilde_u,
                                   const QueryMix& target) {
    const int d = static_cast<int>(ptilde_u.size());
    const int s = target.size();
    double total = 0.0;
    std::vector<int> taken(d, 0);

    // Assign, class by class, which still-free probes land on that class.
    std::function<void(int, double)> rec = [&](int cls, double weight) {
        if (cls == s) {
            total += weight;
            return;
        }
        const int need = target[cls];
        std::vector<int> free_ids;
        for (int u = 0; u < d; ++u)
            if (!taken[u]) free_ids.push_back(u);
        const int nfree = static_cast<int>(free_ids.size());
        if (need > nfree) return;

        std::vector<int> pick(need);
        std::function<void(int, int, double)> choose = [&](int start, int k, double w) {
            if (k == need) {
                for (int t = 0; t < need; ++t) taken[pick[t]] = 1;
                rec(cls + 1, w);
                for (int t = 0; t < need; ++t) taken[pick[t]] = 0;
                return;
            }
            for (int pos = start; pos <= nfree - (need - k); ++pos) {
                int u = free_ids[pos];
                pick[k] = u;
                choose(pos + 1, k + 1, w * ptilde_u[u][cls]);
            }
        };
        if (need == 0)
            rec(cls + 1, weight);
        else
            choose(0, 0, weight);
    };
    rec(0, 1.0);
    return total;
}

}  // namespace

QueryDistribution lower(const QueryingRule& rule, const SystemParams& params,
                        const MixSpace& space) {
    require(space.s() == params.s() && space.d() == params.d(),
            "mix space does not match system parameters");
    const int s = params.s();

    struct Visitor {
        const SystemParams& params;
        const MixSpace& space;
        int s;

        QueryDistribution operator()(const GenRule& r) const {
            require(r.p.size() == space.size(), "gen: distribution length mismatch");
            r.p.validate();
            return r.p;
        }
        QueryDistribution operator()(const IidRule& r) const {
            check_stochastic(r.ptilde, s, "iid ptilde");
            return multinomial_lowering(r.ptilde, space);
        }
        QueryDistribution operator()(const IndRule& r) const {
            require(static_cast<int>(r.ptilde_u.size()) == space.d(),
                    "ind: need one class distribution per probe");
            for (const auto& row : r.ptilde_u) check_stochastic(row, s, "ind ptilde_u");
            QueryDistribution out;
            out.p.resize(space.size());
            for (int m = 0; m < space.size(); ++m)
                out.p[m] = independent_mix_probability(r.ptilde_u, space[m]);
            return out;
        }
        QueryDistribution operator()(const DetRule& r) const {
            require(r.mix.size() == s && r.mix.total() == space.d(), "det: bad mix");
            return point_mass(r.mix, space);
        }
        QueryDistribution operator()(const SrcRule& r) const {
            check_stochastic(r.phat, s, "src phat");
            QueryDistribution out;
            out.p.assign(space.size(), 0.0);
            for (int i = 0; i < s; ++i) {
                int m = space.ordinal(single_class_mix(s, i, space.d()));
                out.p[m] = r.phat[i];
            }
            return out;
        }
        QueryDistribution operator()(const SfcRule& r) const {
            require(r.class_index >= 0 && r.class_index < s, "sfc: class out of range");
            return point_mass(single_class_mix(s, r.class_index, space.d()), space);
        }
        QueryDistribution operator()(const UniRule&) const {
            return multinomial_lowering(params.q(), space);
        }
        QueryDistribution operator()(const BrRule&) const {
            std::vector<double> ptilde(s);
            for (int i = 0; i < s; ++i) ptilde[i] = params.mu(i) * params.q(i);
            return multinomial_lowering(ptilde, space);
        }
    };

    QueryDistribution out = std::visit(Visitor{params, space, s}, rule);
    out.validate();
    return out;
}

StabilityVerdict stability_region(Family family, const SystemParams& params) {
    StabilityVerdict v;
    switch (family) {
        case Family::Src:
        case Family::Iid:
        case Family::Ind:
        case Family::Gen:
            v.stable_iff_lambda_below = 1.0;
            break;
        case Family::Sfc: {
            double best = 0;
            for (int i = 0; i < params.s(); ++i)
                best = std::max(best, params.mu(i) * params.q(i));
            v.stable_iff_lambda_below = best;
            break;
        }
        case Family::Det: {
            // Best mix queries the min(s, d) largest-capacity classes.
            std::vector<double> caps(params.s());
            for (int i = 0; i < params.s(); ++i) caps[i] = params.mu(i) * params.q(i);
            std::sort(caps.rbegin(), caps.rend());
            double total = 0;
            for (int i = 0; i < std::min(params.s(), params.d()); ++i) total += caps[i];
            v.stable_iff_lambda_below = total;
            break;
        }
        case Family::FixedQR:
            // Depends on the fixed rule; query via the rule overload instead.
            break;
    }
    return v;
}

StabilityVerdict stability_region(const QueryingRule& rule, const SystemParams& params) {
    StabilityVerdict v;
    struct Visitor {
        const SystemParams& params;
        StabilityVerdict& v;

        void operator()(const GenRule&) const { v.stable_iff_lambda_below = 1.0; }
        void operator()(const IidRule&) const { v.stable_iff_lambda_below = 1.0; }
        void operator()(const IndRule&) const { v.stable_iff_lambda_below = 1.0; }
        void operator()(const DetRule& r) const {
            double total = 0;
            for (int i = 0; i < params.s(); ++i)
                if (r.mix[i] > 0) total += params.mu(i) * params.q(i);
            v.stable_iff_lambda_below = total;
        }
        void operator()(const SrcRule& r) const {
            // Class i must absorb lambda*phat_i/q_i below capacity mu_i.
            double bound = std::numeric_limits<double>::infinity();
            for (int i = 0; i < params.s(); ++i)
                if (r.phat[i] > 0)
                    bound = std::min(bound, params.mu(i) * params.q(i) / r.phat[i]);
            v.stable_iff_lambda_below = bound;
        }
        void operator()(const SfcRule& r) const {
            v.stable_iff_lambda_below = params.mu(r.class_index) * params.q(r.class_index);
        }
        void operator()(const UniRule&) const {
            // Necessary condition only: unstable once some class is forced to
            // absorb more than its capacity through all-one-class queries.
            for (int i = 0; i < params.s(); ++i) {
                double bound = params.mu(i) / std::pow(params.q(i), params.d() - 1);
                if (params.lambda() > bound) v.necessary_violation = true;
            }
        }
        void operator()(const BrRule&) const { v.stable_iff_lambda_below = 1.0; }
    };
    std::visit(Visitor{params, v}, rule);
    return v;
}

}  // namespace hd
