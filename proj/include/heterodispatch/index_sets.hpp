#pragma once

#include <map>
#include <vector>

#include "heterodispatch/mix.hpp"

namespace hd {

// A pruned-table key: assignment class i, fastest-idle class j (j == s means
// "all queried busy"), and the canonical mix under the chosen gamma variant.
struct TripleKey {
    int i = 0;
    int j = 0;
    QueryMix key;

    bool operator<(const TripleKey& o) const {
        if (i != o.i) return i < o.i;
        if (j != o.j) return j < o.j;
        return key < o.key;
    }
    bool operator==(const TripleKey& o) const {
        return i == o.i && j == o.j && key == o.key;
    }
};

struct PairKey {
    int j = 0;
    QueryMix key;

    bool operator<(const PairKey& o) const {
        if (j != o.j) return j < o.j;
        return key < o.key;
    }
};

// The pruned index sets for one (s, d): the triples that carry free assignment
// weights, the (j, mix) pairs that own a normalization constraint, and, per
// raw (i, mix), the j's contributing to the busy-arrival sum.
struct IndexSets {
    GammaVariant variant = kDefaultGammaVariant;
    std::vector<TripleKey> triples;                  // sorted, deduplicated
    std::map<PairKey, std::vector<int>> pair_rows;   // pair -> allowed classes i
    std::vector<std::vector<std::vector<int>>> jset; // [i][mix ordinal] -> j list

    std::int64_t n_triples() const { return static_cast<std::int64_t>(triples.size()); }
    std::int64_t n_pairs() const { return static_cast<std::int64_t>(pair_rows.size()); }
};

IndexSets build_index_sets(const MixSpace& space,
                           GammaVariant variant = kDefaultGammaVariant);

}  // namespace hd
