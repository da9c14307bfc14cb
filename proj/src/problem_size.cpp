#include "heterodispatch/problem_size.hpp"

#include "heterodispatch/common.hpp"

namespace hd {

const char* family_name(Family f) {
    switch (f) {
        case Family::Gen: return "gen";
        case Family::Iid: return "iid";
        case Family::Ind: return "ind";
        case Family::Det: return "det";
        case Family::Src: return "src";
        case Family::Sfc: return "sfc";
        case Family::FixedQR: return "qr";
    }
    return "?";
}

Family family_from_name(const std::string& name) {
    if (name == "gen") return Family::Gen;
    if (name == "iid") return Family::Iid;
    if (name == "ind") return Family::Ind;
    if (name == "det") return Family::Det;
    if (name == "src") return Family::Src;
    if (name == "sfc") return Family::Sfc;
    if (name == "qr") return Family::FixedQR;
    throw std::invalid_argument("unknown family: " + name);
}

ProblemSizeReport problem_size(Family family, int s, int d) {
    require(s >= 1 && d >= 1, "problem_size: s,d >= 1");
    const Cardinalities c = cardinalities(s, d);
    const std::int64_t S = s, D = d;

    ProblemSizeReport r;
    r.family = family;
    ProblemSize p;
    switch (family) {
        case Family::Gen:
            p.vars = 2 * S + c.n_mixes + c.n_triples;
            p.lec = c.n_pairs + 1;
            p.nec = 2 * S;
            p.dim = c.n_mixes + c.n_triples - c.n_pairs - 1;
            break;
        case Family::Ind:
            p.vars = (D + 2) * S + c.n_triples;
            p.lec = c.n_pairs + D;
            p.nec = 2 * S;
            p.dim = D * S + c.n_triples - c.n_pairs - D;
            break;
        case Family::Iid:
            p.vars = 3 * S + c.n_triples;
            p.lec = c.n_pairs + 1;
            p.nec = 2 * S;
            p.dim = S + c.n_triples - c.n_pairs - 1;
            break;
        case Family::Det: {
            const std::int64_t m = c.max_support;
            p.vars = 2 * m + triples_for_support(m);
            p.lec = pairs_for_support(m);
            p.nec = 2 * m;
            p.dim = triples_for_support(m) - pairs_for_support(m);
            p.subproblems = c.n_mixes;

            // Averages over the mix space are exact rationals of the per-mix
            // support-size moments; round only for presentation.
            const Rational avg_m = c.avg_support;
            const Rational avg_t = c.avg_triples_per_mix;
            const Rational avg_p = c.avg_pairs_per_mix;
            ProblemSize a;
            a.vars = Rational{2 * avg_m.num * avg_t.den + avg_t.num * avg_m.den,
                              avg_m.den * avg_t.den}
                         .round_half_even();
            a.lec = avg_p.round_half_even();
            a.nec = Rational{2 * avg_m.num, avg_m.den}.round_half_even();
            a.dim = Rational{avg_t.num * avg_p.den - avg_p.num * avg_t.den,
                             avg_t.den * avg_p.den}
                        .round_half_even();
            a.subproblems = c.n_mixes;
            r.max_size = p;
            r.avg_size = a;
            r.subproblems = c.n_mixes;
            return r;
        }
        case Family::Src:
            // One simplex over s classes less its normalization: s - 1 free
            // dimensions (= VAR - NEC - LEC).
            p.vars = 3 * S;
            p.lec = 1;
            p.nec = 2 * S;
            p.dim = S - 1;
            break;
        case Family::Sfc:
            p.vars = 2;
            p.lec = 0;
            p.nec = 2;
            p.dim = 0;
            p.subproblems = S;
            r.subproblems = S;
            break;
        case Family::FixedQR:
            p.vars = 2 * S + c.n_triples;
            p.lec = c.n_pairs;
            p.nec = 2 * S;
            p.dim = c.n_triples - c.n_pairs;
            break;
    }
    r.max_size = p;
    r.avg_size = p;
    r.subproblems = p.subproblems;
    return r;
}

}  // namespace hd
