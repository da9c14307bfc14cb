#include "heterodispatch/index_sets.hpp"

#include <set>

namespace hd {

namespace {

// A raw (i, j, mix) combination can carry weight iff i <= j, class i is
// queried, and j (when a real class) is queried. Everything else is pinned to
// zero by the pruning.
bool raw_triple_valid(int i, int j, const QueryMix& mix, int s) {
    if (i > j) return false;
    if (mix[i] == 0) return false;
    if (j < s && mix[j] == 0) return false;
    return true;
}

}  // namespace

IndexSets build_index_sets(const MixSpace& space, GammaVariant variant) {
    const int s = space.s();
    IndexSets out;
    out.variant = variant;

    std::set<TripleKey> triples;
    for (int m = 0; m < space.size(); ++m) {
        const QueryMix& mix = space[m];
        for (int j = 0; j <= s; ++j) {
            QueryMix key;
            bool have_key = false;
            for (int i = 0; i <= j && i < s; ++i) {
                if (!raw_triple_valid(i, j, mix, s)) continue;
                if (!have_key) {
                    key = gamma(j, mix, variant);
                    have_key = true;
                }
                triples.insert(TripleKey{i, j, key});
            }
        }
    }
    out.triples.assign(triples.begin(), triples.end());

    for (const TripleKey& t : out.triples) out.pair_rows[PairKey{t.j, t.key}].push_back(t.i);

    out.jset.assign(s, std::vector<std::vector<int>>(space.size()));
    for (int i = 0; i < s; ++i) {
        for (int m = 0; m < space.size(); ++m) {
            const QueryMix& mix = space[m];
            if (mix[i] == 0) continue;
            for (int j = i + 1; j <= s; ++j) {
                if (!raw_triple_valid(i, j, mix, s)) continue;
                TripleKey probe{i, j, gamma(j, mix, variant)};
                if (triples.count(probe)) out.jset[i][m].push_back(j);
            }
        }
    }
    return out;
}

}  // namespace hd
