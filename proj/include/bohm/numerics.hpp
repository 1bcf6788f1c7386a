#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <span>
#include <thread>
#include <vector>

#include "bohm/errors.hpp"

namespace bohm {

/// Uniformly spaced closed grid [x_min, x_max] with n_points nodes.
struct UniformGrid {
    double x_min = 0.0;
    double x_max = 1.0;
    std::size_t n_points = 2;

    void validate() const {
        if (!(x_max > x_min)) throw InvalidParameter("grid: x_max must exceed x_min");
        if (n_points < 2) throw InvalidParameter("grid: n_points must be at least 2");
    }
    double spacing() const { return (x_max - x_min) / static_cast<double>(n_points - 1); }
    double point(std::size_t i) const {
        // Endpoints hit exactly; symmetric grids stay symmetric to the last bit.
        if (i + 1 == n_points) return x_max;
        return x_min + static_cast<double>(i) * spacing();
    }
    std::vector<double> points() const {
        std::vector<double> xs(n_points);
        for (std::size_t i = 0; i < n_points; ++i) xs[i] = point(i);
        return xs;
    }

    static UniformGrid symmetric(double half_width, std::size_t n_points) {
        return UniformGrid{-half_width, half_width, n_points};
    }
};

/// Composite Simpson rule on equally spaced samples. An even number of samples
/// closes with the 3/8 rule on the last four.
inline double simpson(std::span<const double> f, double dx) {
    const std::size_t n = f.size();
    if (n < 2) return 0.0;
    if (n == 2) return 0.5 * dx * (f[0] + f[1]);
    if (n == 3) return dx / 3.0 * (f[0] + 4.0 * f[1] + f[2]);
    std::size_t end = (n % 2 == 1) ? n : n - 3;
    double s = f[0] + f[end - 1];
    for (std::size_t i = 1; i + 1 < end; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * f[i];
    double total = s * dx / 3.0;
    if (end != n) total += 3.0 * dx / 8.0 * (f[n - 4] + 3.0 * f[n - 3] + 3.0 * f[n - 2] + f[n - 1]);
    return total;
}

/// Integrates f over [a, b] with n (odd) Simpson nodes.
template <class F>
double simpson(F&& f, double a, double b, std::size_t n) {
    if (n < 3) n = 3;
    if (n % 2 == 0) ++n;
    const UniformGrid g{a, b, n};
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = f(g.point(i));
    return simpson(vals, g.spacing());
}

/// Runs body(i) for i in [0, n) on all hardware threads. Each index is
/// processed exactly once; callers write results into pre-sized slots so
/// output order never depends on scheduling.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += workers) body(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace bohm
