#pragma once

#include <map>

#include "heterodispatch/index_sets.hpp"
#include "heterodispatch/system_params.hpp"

namespace hd {

// A pruned class-and-idleness-differentiated assignment table. Entries are
// keyed by the triples that may carry weight; everything else reads as zero.
// For every (j, canonical mix) pair the stored weights over the allowed
// classes sum to one.
class CidAssignment {
public:
    CidAssignment() = default;
    CidAssignment(int s, GammaVariant variant) : s_(s), variant_(variant) {}

    // Equal weight on every allowed class of every pair.
    static CidAssignment uniform(const IndexSets& sets, int s);
    // All weight on the fastest allowed class of every pair (join the fastest
    // idle class when one exists).
    static CidAssignment fastest_first(const IndexSets& sets, int s);

    int s() const { return s_; }
    GammaVariant variant() const { return variant_; }

    void set(int i, int j, const QueryMix& mix, double value);
    // alpha_i(j, mix); canonicalizes the mix and applies the pruning.
    double lookup(int i, int j, const QueryMix& mix) const;

    const std::map<TripleKey, double>& entries() const { return alpha_; }

    // Row sums over P equal 1 within tol; all values within [0,1].
    void validate(const IndexSets& sets, double tol = 1e-10) const;

private:
    int s_ = 0;
    GammaVariant variant_ = kDefaultGammaVariant;
    std::map<TripleKey, double> alpha_;
};

// P(job lands on a tagged idle class-i server | queried, mix d):
// b_i(d) * alpha_i(i, gamma(i,d)) * E[1/(1+Binom(d_i-1, 1-rho_i))].
double r_idle(const SystemParams& params, const std::vector<double>& rho,
              const CidAssignment& assign, int i, const QueryMix& mix);

// P(job lands on a tagged busy class-i server | queried, mix d). Zero when
// d_i = 0 or rho_i = 0 (a busy tagged server is then a null event).
double r_busy(const SystemParams& params, const std::vector<double>& rho,
              const CidAssignment& assign, int i, const QueryMix& mix);

enum class TaggedStatus { Idle, Busy };

// Independent verifier for the closed forms above: enumerates all 2^(d-1)
// idle/busy configurations of the other queried servers, replays the CID
// assignment mechanics on each, and accumulates the tagged server's
// assignment probability.
double oracle_assignment_prob(const SystemParams& params, const std::vector<double>& rho,
                              const CidAssignment& assign, int i, const QueryMix& mix,
                              TaggedStatus status);

}  // namespace hd
