#pragma once

#include <functional>
#include <vector>

namespace hd {

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0;
    int iterations = 0;
    int evaluations = 0;
};

struct NelderMeadOptions {
    int max_iterations = 2000;
    double f_tol = 1e-12;   // stop when the simplex's value spread drops below
    double x_tol = 1e-12;   // ...or its edge lengths do
    double initial_step = 0.15;
};

// Classic Nelder-Mead downhill simplex (reflection 1, expansion 2,
// contraction 1/2, shrink 1/2). Deterministic given the start point.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> start, const NelderMeadOptions& opts = {});

// Euclidean projection onto the probability simplex {x >= 0, sum x = 1}.
void project_to_simplex(double* x, int n);

}  // namespace hd
