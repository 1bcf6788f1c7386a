#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "bohm/errors.hpp"
#include "bohm/numerics.hpp"

namespace bohm {

/// Piecewise-linear CDF of a non-negative density tabulated on [x_min, x_max]
/// (trapezoid cell masses, uniform within each cell), with its exact inverse.
class TabulatedCdf {
public:
    static constexpr std::size_t default_points = std::size_t{1} << 14;
    static constexpr std::size_t max_points = std::size_t{1} << 20;
    static constexpr double moment_drift_tolerance = 1e-4;

    /// With `refine`, the number of points is doubled until the mean and
    /// variance of the tabulated distribution move by less than 1e-4
    /// (relative to the standard deviation and variance respectively).
    TabulatedCdf(const std::function<double(double)>& density, double x_min, double x_max,
                 std::size_t n_points = default_points, bool refine = true) {
        if (!(x_max > x_min)) throw InvalidParameter("sampling domain: x_max must exceed x_min");
        if (n_points < 2) n_points = 2;
        tabulate(density, x_min, x_max, n_points);
        while (refine && xs_.size() < max_points) {
            const double mean0 = mean(), var0 = variance();
            TabulatedCdf finer(density, x_min, x_max, 2 * xs_.size() - 1, false);
            const double sd = std::sqrt(std::max(var0, 0.0));
            const bool mean_ok = std::abs(finer.mean() - mean0) <= moment_drift_tolerance * std::max(sd, 1e-300);
            const bool var_ok = std::abs(finer.variance() - var0) <= moment_drift_tolerance * std::max(var0, 1e-300);
            *this = std::move(finer);
            if (mean_ok && var_ok) break;
        }
    }

    std::size_t size() const { return xs_.size(); }
    double x_min() const { return xs_.front(); }
    double x_max() const { return xs_.back(); }
    /// Integral of the raw (unnormalized) density over the domain.
    double total_mass() const { return mass_; }

    /// Normalized CDF at x (0 below the domain, 1 above).
    double cdf(double x) const {
        if (x <= xs_.front()) return 0.0;
        if (x >= xs_.back()) return 1.0;
        const double dx = xs_[1] - xs_[0];
        auto i = static_cast<std::size_t>((x - xs_.front()) / dx);
        i = std::min(i, xs_.size() - 2);
        const double frac = (x - xs_[i]) / dx;
        return cum_[i] + frac * (cum_[i + 1] - cum_[i]);
    }

    /// Inverse CDF for u in [0, 1].
    double quantile(double u) const {
        if (u <= 0.0) return first_positive();
        if (u >= 1.0) return last_positive();
        const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
        const std::size_t i = static_cast<std::size_t>(it - cum_.begin()) - 1;
        const double frac = (u - cum_[i]) / (cum_[i + 1] - cum_[i]);
        return xs_[i] + frac * (xs_[i + 1] - xs_[i]);
    }

    double mean() const {
        double m = 0.0;
        for (std::size_t i = 0; i + 1 < xs_.size(); ++i) m += (cum_[i + 1] - cum_[i]) * 0.5 * (xs_[i] + xs_[i + 1]);
        return m;
    }

    double variance() const {
        double m2 = 0.0;
        for (std::size_t i = 0; i + 1 < xs_.size(); ++i) {
            const double a = xs_[i], b = xs_[i + 1];
            m2 += (cum_[i + 1] - cum_[i]) * (a * a + a * b + b * b) / 3.0;
        }
        const double m = mean();
        return m2 - m * m;
    }

private:
    void tabulate(const std::function<double(double)>& density, double x_min, double x_max, std::size_t n) {
        const UniformGrid grid{x_min, x_max, n};
        xs_ = grid.points();
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i) {
            f[i] = density(xs_[i]);
            if (!std::isfinite(f[i]) || f[i] < 0.0)
                throw InvalidParameter("sampling density must be finite and non-negative (x = " +
                                       std::to_string(xs_[i]) + ")");
        }
        cum_.assign(n, 0.0);
        const double dx = grid.spacing();
        for (std::size_t i = 1; i < n; ++i) cum_[i] = cum_[i - 1] + 0.5 * dx * (f[i - 1] + f[i]);
        mass_ = cum_.back();
        if (!(mass_ > 1e-300) || !std::isfinite(mass_))
            throw DegenerateDensity("density has no mass on [" + std::to_string(x_min) + ", " +
                                    std::to_string(x_max) + "]");
        for (auto& c : cum_) c /= mass_;
        cum_.back() = 1.0;
    }

    double first_positive() const {
        for (std::size_t i = 0; i + 1 < cum_.size(); ++i)
            if (cum_[i + 1] > 0.0) return xs_[i];
        return xs_.front();
    }
    double last_positive() const {
        for (std::size_t i = cum_.size() - 1; i > 0; --i)
            if (cum_[i - 1] < 1.0) return xs_[i];
        return xs_.back();
    }

    std::vector<double> xs_;
    std::vector<double> cum_;
    double mass_ = 0.0;
};

}  // namespace bohm
