#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace hd {

// Per-class query counts. counts[i] is the number of class-i servers probed;
// classes are 0-based and ordered by decreasing speed.
struct QueryMix {
    std::vector<int> counts;

    QueryMix() = default;
    explicit QueryMix(std::vector<int> c) : counts(std::move(c)) {}

    int size() const { return static_cast<int>(counts.size()); }
    int total() const;
    // Fastest class with a nonzero count; -1 for the all-zero vector.
    int fastest_queried() const;
    int operator[](int i) const { return counts[i]; }

    bool operator==(const QueryMix& o) const { return counts == o.counts; }
    bool operator<(const QueryMix& o) const { return counts < o.counts; }
};

// Point mass on class i: d probes, all of class i.
QueryMix single_class_mix(int s, int i, int d);

// All mixes of d probes over s classes, in reverse-lexicographic order on the
// count vectors, so (d,0,...,0) comes first. The order is part of the contract
// (ordinals index policy tables and CSV output).
class MixSpace {
public:
    MixSpace(int s, int d);

    int s() const { return s_; }
    int d() const { return d_; }
    int size() const { return static_cast<int>(mixes_.size()); }
    const QueryMix& operator[](int m) const { return mixes_[m]; }
    const std::vector<QueryMix>& mixes() const { return mixes_; }
    int ordinal(const QueryMix& mix) const;  // -1 if absent

private:
    int s_, d_;
    std::vector<QueryMix> mixes_;
    std::map<QueryMix, int> index_;
};

MixSpace enumerate_mixes(int s, int d);

// Canonicalization of (j, mix) keys. Two spellings of the same collapse map:
// Filler keeps keys inside the mix space by piling the leftover probes onto
// the fastest queried class; Indicator drops the leftover, producing the bare
// 0/1 support vector. Both induce the same partition on every pair that can
// carry an assignment weight, which is what the pruned tables key on.
enum class GammaVariant { Filler, Indicator };

inline constexpr GammaVariant kDefaultGammaVariant = GammaVariant::Indicator;

// j ranges over 0..s, where j == s encodes "no idle server queried".
QueryMix gamma(int j, const QueryMix& mix, GammaVariant variant);

}  // namespace hd
