#include "heterodispatch/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hd {

void project_to_simplex(double* x, int n) {
    // Sort descending, find the pivot of the water-filling threshold.
    std::vector<double> u(x, x + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0, tau = 0;
    int k = 0;
    for (int i = 0; i < n; ++i) {
        cum += u[i];
        const double t = (cum - 1.0) / (i + 1);
        if (u[i] - t > 0) {
            k = i + 1;
            tau = t;
        }
    }
    (void)k;
    for (int i = 0; i < n; ++i) x[i] = std::max(0.0, x[i] - tau);
}

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> start, const NelderMeadOptions& opts) {
    const int n = static_cast<int>(start.size());
    NelderMeadResult res;
    if (n == 0) {
        res.x = start;
        res.value = f(start);
        res.evaluations = 1;
        return res;
    }

    std::vector<std::vector<double>> simplex(n + 1, start);
    std::vector<double> fv(n + 1);
    for (int i = 0; i < n; ++i)
        simplex[i + 1][i] += (start[i] != 0.0 ? opts.initial_step * std::abs(start[i]) +
                                                    opts.initial_step * 0.5
                                              : opts.initial_step);
    int evals = 0;
    for (int i = 0; i <= n; ++i) fv[i] = (++evals, f(simplex[i]));

    std::vector<int> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);

    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return fv[a] < fv[b]; });
        const int best = order[0], worst = order[n], second_worst = order[n - 1];

        double spread = fv[worst] - fv[best];
        double size = 0;
        for (int i = 0; i < n; ++i)
            size = std::max(size, std::abs(simplex[worst][i] - simplex[best][i]));
        if (spread <= opts.f_tol && size <= opts.x_tol) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (int i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (int c = 0; c < n; ++c) centroid[c] += simplex[i][c];
        }
        for (int c = 0; c < n; ++c) centroid[c] /= n;

        for (int c = 0; c < n; ++c) xr[c] = centroid[c] + (centroid[c] - simplex[worst][c]);
        const double fr = (++evals, f(xr));

        if (fr < fv[best]) {
            for (int c = 0; c < n; ++c) xe[c] = centroid[c] + 2.0 * (centroid[c] - simplex[worst][c]);
            const double fe = (++evals, f(xe));
            if (fe < fr) {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second_worst]) {
            simplex[worst] = xr;
            fv[worst] = fr;
        } else {
            const bool outside = fr < fv[worst];
            if (outside) {
                for (int c = 0; c < n; ++c) xc[c] = centroid[c] + 0.5 * (xr[c] - centroid[c]);
            } else {
                for (int c = 0; c < n; ++c)
                    xc[c] = centroid[c] + 0.5 * (simplex[worst][c] - centroid[c]);
            }
            const double fc = (++evals, f(xc));
            if (fc < std::min(fr, fv[worst])) {
                simplex[worst] = xc;
                fv[worst] = fc;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (int c = 0; c < n; ++c)
                        simplex[i][c] = simplex[best][c] + 0.5 * (simplex[i][c] - simplex[best][c]);
                    fv[i] = (++evals, f(simplex[i]));
                }
            }
        }
    }

    int best = 0;
    for (int i = 1; i <= n; ++i)
        if (fv[i] < fv[best]) best = i;
    res.x = simplex[best];
    res.value = fv[best];
    res.iterations = iter;
    res.evaluations = evals;
    return res;
}

}  // namespace hd
