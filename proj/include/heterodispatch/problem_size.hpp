#pragma once

#include <cstdint>
#include <string>

#include "heterodispatch/combinatorics.hpp"

namespace hd {

enum class Family { Gen, Iid, Ind, Det, Src, Sfc, FixedQR };

const char* family_name(Family f);
Family family_from_name(const std::string& name);  // throws on unknown

struct ProblemSize {
    std::int64_t vars = 0;
    std::int64_t lec = 0;   // linear equality constraints
    std::int64_t nec = 0;   // nonlinear equality constraints
    std::int64_t dim = 0;   // free policy dimensions
    std::int64_t subproblems = 1;

    std::int64_t ubc() const { return nec / 2; }
};

// For DET the subproblems differ in size, so we carry the largest one and the
// per-mix average (rounded to nearest, ties to even).
struct ProblemSizeReport {
    Family family = Family::Gen;
    ProblemSize max_size;
    ProblemSize avg_size;  // == max_size except for DET
    std::int64_t subproblems = 1;
};

ProblemSizeReport problem_size(Family family, int s, int d);

}  // namespace hd
