#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "tdtl/matrix.hpp"
#include "tdtl/rng.hpp"

namespace testutil {

inline tdtl::linalg::Matrix random_matrix(std::size_t r, std::size_t c, tdtl::Rng& rng,
                                          double lo = -1.0, double hi = 1.0) {
    tdtl::linalg::Matrix m(r, c);
    for (double& x : m.data) x = lo + (hi - lo) * rng.uniform();
    return m;
}

inline tdtl::linalg::Matrix random_symmetric(std::size_t n, tdtl::Rng& rng) {
    tdtl::linalg::Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = 2.0 * rng.uniform() - 1.0;
    return m;
}

// Central finite difference of a scalar function over a flat parameter vector.
inline std::vector<double> finite_diff(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = f(x);
        x[i] = orig - h;
        const double fm = f(x);
        x[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Largest relative error between analytic and numeric gradients, with an
// absolute floor so near-zero entries do not blow up the ratio.
inline double max_rel_error(const std::vector<double>& analytic,
                            const std::vector<double>& numeric, double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric[i]), floor});
        worst = std::max(worst, std::fabs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

}  // namespace testutil
