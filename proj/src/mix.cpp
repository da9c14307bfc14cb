#include "heterodispatch/mix.hpp"

#include "heterodispatch/common.hpp"

namespace hd {

int QueryMix::total() const {
    int t = 0;
    for (int c : counts) t += c;
    return t;
}

int QueryMix::fastest_queried() const {
    for (int i = 0; i < size(); ++i)
        if (counts[i] > 0) return i;
    return -1;
}

QueryMix single_class_mix(int s, int i, int d) {
    require(i >= 0 && i < s, "class index out of range");
    std::vector<int> c(s, 0);
    c[i] = d;
    return QueryMix(std::move(c));
}

namespace {

void emit_compositions(int s, int remaining, int pos, std::vector<int>& cur,
                       std::vector<QueryMix>& out) {
    if (pos == s - 1) {
        cur[pos] = remaining;
        out.emplace_back(cur);
        return;
    }
    // Descending first component gives reverse-lexicographic order overall.
    for (int c = remaining; c >= 0; --c) {
        cur[pos] = c;
        emit_compositions(s, remaining - c, pos + 1, cur, out);
    }
}

}  // namespace

MixSpace::MixSpace(int s, int d) : s_(s), d_(d) {
    require(s >= 1 && d >= 1, "MixSpace requires s >= 1 and d >= 1");
    require(s + d <= 30, "s + d too large for 64-bit combinatorics");
    std::vector<int> cur(s, 0);
    emit_compositions(s, d, 0, cur, mixes_);
    for (int m = 0; m < static_cast<int>(mixes_.size()); ++m) index_[mixes_[m]] = m;
}

int MixSpace::ordinal(const QueryMix& mix) const {
    auto it = index_.find(mix);
    return it == index_.end() ? -1 : it->second;
}

MixSpace enumerate_mixes(int s, int d) { return MixSpace(s, d); }

QueryMix gamma(int j, const QueryMix& mix, GammaVariant variant) {
    const int s = mix.size();
    require(j >= 0 && j <= s, "gamma: j out of range");
    std::vector<int> out(s, 0);
    int kept = 0;
    for (int i = 0; i < s; ++i) {
        if (mix[i] > 0 && i <= j) {
            out[i] = 1;
            ++kept;
        }
    }
    if (variant == GammaVariant::Filler) {
        int h = mix.fastest_queried();
        require(h >= 0, "gamma: empty mix");
        out[h] += mix.total() - kept;
    }
    return QueryMix(std::move(out));
}

}  // namespace hd
