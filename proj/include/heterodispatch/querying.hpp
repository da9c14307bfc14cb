#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "heterodispatch/mix.hpp"
#include "heterodispatch/problem_size.hpp"
#include "heterodispatch/system_params.hpp"

namespace hd {

// Probability mass over a MixSpace, in the space's mix order.
struct QueryDistribution {
    std::vector<double> p;

    double operator[](int m) const { return p[m]; }
    int size() const { return static_cast<int>(p.size()); }
    void validate() const;  // nonnegative, sums to 1 within 1e-12
};

// Native parameters of each querying-rule family. All probabilities are over
// classes (0-based); `Gen` carries a full mix distribution directly.
struct GenRule { QueryDistribution p; };
struct IidRule { std::vector<double> ptilde; };
struct IndRule { std::vector<std::vector<double>> ptilde_u; };  // [probe u][class]
struct DetRule { QueryMix mix; };
struct SrcRule { std::vector<double> phat; };
struct SfcRule { int class_index = 0; };
struct UniRule {};
struct BrRule {};

using QueryingRule =
    std::variant<GenRule, IidRule, IndRule, DetRule, SrcRule, SfcRule, UniRule, BrRule>;

const char* rule_kind(const QueryingRule& rule);

// Lower a rule's native parameters to the common mix distribution.
QueryDistribution lower(const QueryingRule& rule, const SystemParams& params,
                        const MixSpace& space);

// Stability verdict. For a family, `stable_iff_lambda_below` is the largest
// load at which some member stabilizes the system; for an individual rule it
// is the corresponding per-rule bound. UNI carries only a necessary condition,
// reported through `necessary_violation`.
struct StabilityVerdict {
    std::optional<double> stable_iff_lambda_below;
    bool necessary_violation = false;
};

StabilityVerdict stability_region(Family family, const SystemParams& params);
StabilityVerdict stability_region(const QueryingRule& rule, const SystemParams& params);

}  // namespace hd
