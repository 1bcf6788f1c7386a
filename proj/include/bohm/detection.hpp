#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "bohm/errors.hpp"
#include "bohm/numerics.hpp"
#include "bohm/rng.hpp"
#include "bohm/sampling.hpp"
#include "bohm/trajectory_engine.hpp"

namespace bohm {

/// 1D row of detector pixels with half-open bins [left, right).
struct PixelGrid {
    double x_min = -35.0;
    double x_max = 35.0;
    std::size_t n_pixels = 400;

    void validate() const {
        if (!(x_max > x_min)) throw InvalidParameter("pixel grid: x_max must exceed x_min");
        if (n_pixels < 1) throw InvalidParameter("pixel grid: n_pixels must be >= 1");
    }
    double pixel_width() const { return (x_max - x_min) / static_cast<double>(n_pixels); }
    double left_edge(std::size_t i) const {
        return i == n_pixels ? x_max : x_min + static_cast<double>(i) * pixel_width();
    }
    double center(std::size_t i) const { return 0.5 * (left_edge(i) + left_edge(i + 1)); }

    /// Pixel holding x, or n_pixels if x is outside [x_min, x_max).
    std::size_t index_of(double x) const {
        if (!(x >= x_min) || !(x < x_max)) return n_pixels;
        auto i = static_cast<std::size_t>((x - x_min) / pixel_width());
        i = std::min(i, n_pixels - 1);
        // Guard the division against rounding so edges belong to the right-hand pixel.
        while (i + 1 < n_pixels && x >= left_edge(i + 1)) ++i;
        while (i > 0 && x < left_edge(i)) --i;
        return i;
    }
};

/// Cumulative pixel counts of one exposure.
/// Invariant: sum(counts) == n_events + n_noise.
struct DetectionFrame {
    std::vector<std::uint64_t> counts;
    std::vector<std::uint64_t> signal_counts;
    std::uint64_t n_events = 0;     // signal events that landed on the grid
    std::uint64_t n_noise = 0;      // background events
    std::uint64_t n_discarded = 0;  // signal events outside the grid
    std::size_t exposure_label = 0;
};

/// Events are drawn in blocks; block b uses substream b of the seed, so any
/// prefix of the event stream is independent of how blocks are scheduled.
inline constexpr std::size_t event_block_size = 65536;

/// n_events i.i.d. arrival positions from rho_T on [x_min, x_max] by inverse
/// transform on the tabulated, normalized CDF.
inline std::vector<double> sample_arrivals(const TabulatedCdf& cdf, std::size_t n_events, std::uint64_t seed) {
    std::vector<double> xs(n_events);
    const std::size_t blocks = (n_events + event_block_size - 1) / event_block_size;
    parallel_for(blocks, [&](std::size_t b) {
        auto gen = substream(seed, b);
        const std::size_t end = std::min(n_events, (b + 1) * event_block_size);
        for (std::size_t i = b * event_block_size; i < end; ++i) xs[i] = cdf.quantile(uniform01(gen));
    });
    return xs;
}

inline std::vector<double> sample_arrivals(const Density1D& rho_T, double x_min, double x_max, std::size_t n_events,
                                           std::uint64_t seed) {
    if (n_events == 0) return {};
    return sample_arrivals(TabulatedCdf(rho_T, x_min, x_max), n_events, seed);
}

inline DetectionFrame bin_to_pixels(std::span<const double> positions, const PixelGrid& grid,
                                    std::size_t exposure_label = 0) {
    grid.validate();
    DetectionFrame frame;
    frame.exposure_label = exposure_label;
    frame.signal_counts.assign(grid.n_pixels, 0);
    for (double x : positions) {
        const std::size_t i = grid.index_of(x);
        if (i == grid.n_pixels) {
            ++frame.n_discarded;
        } else {
            ++frame.signal_counts[i];
            ++frame.n_events;
        }
    }
    frame.counts = frame.signal_counts;
    return frame;
}

/// Adds independent Poisson(noise_rate) counts to every pixel; pixel i draws
/// from substream i of the seed.
/// std::poisson_distribution is deterministic for a given standard library,
/// not across library implementations.
inline DetectionFrame add_background_noise(DetectionFrame frame, double noise_rate, std::uint64_t seed) {
    if (!(noise_rate >= 0.0) || !std::isfinite(noise_rate))
        throw InvalidParameter("noise_rate must be non-negative");
    if (noise_rate == 0.0) return frame;
    for (std::size_t i = 0; i < frame.counts.size(); ++i) {
        auto gen = substream(seed, i);
        std::poisson_distribution<std::uint64_t> poisson(noise_rate);
        const auto k = poisson(gen);
        frame.counts[i] += k;
        frame.n_noise += k;
    }
    return frame;
}

/// Cumulative exposures: frame k holds the first counts[k] events of a single
/// stream (so each frame's signal is a prefix of the next) plus fresh
/// background noise.
inline std::vector<DetectionFrame> exposure_series(const Density1D& rho_T, const PixelGrid& grid,
                                                   std::span<const std::size_t> counts, double noise_rate,
                                                   std::uint64_t seed) {
    grid.validate();
    if (!std::is_sorted(counts.begin(), counts.end()))
        throw InvalidParameter("exposure_series: counts must be ascending");
    std::vector<DetectionFrame> frames;
    if (counts.empty()) return frames;
    const TabulatedCdf cdf(rho_T, grid.x_min, grid.x_max);
    const auto events = sample_arrivals(cdf, counts.back(), seed);
    const std::uint64_t noise_seed = splitmix64(seed ^ 0x6e6f697365ULL);
    for (std::size_t k = 0; k < counts.size(); ++k) {
        auto frame = bin_to_pixels(std::span(events).first(counts[k]), grid, k);
        frames.push_back(add_background_noise(std::move(frame), noise_rate, splitmix64(noise_seed + k)));
    }
    return frames;
}

/// Normalized pixel probabilities of rho_T: integral over each pixel divided by
/// the integral over the whole grid.
inline std::vector<double> pixel_probabilities(const Density1D& rho_T, const PixelGrid& grid,
                                               std::size_t nodes_per_pixel = 33) {
    grid.validate();
    std::vector<double> p(grid.n_pixels);
    double total = 0.0;
    for (std::size_t i = 0; i < grid.n_pixels; ++i) {
        p[i] = simpson(rho_T, grid.left_edge(i), grid.left_edge(i + 1), nodes_per_pixel);
        total += p[i];
    }
    if (!(total > 0.0)) throw DegenerateDensity("pixel_probabilities: density has no mass on the grid");
    for (auto& v : p) v /= total;
    return p;
}

/// sum_i |counts_i / sum(counts) - p_i|.
inline double histogram_l1_distance(std::span<const std::uint64_t> counts, std::span<const double> probabilities) {
    if (counts.size() != probabilities.size()) throw InvalidParameter("histogram_l1_distance: size mismatch");
    double n = 0.0;
    for (auto c : counts) n += static_cast<double>(c);
    if (!(n > 0.0)) throw DegenerateDensity("histogram_l1_distance: empty histogram");
    double d = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) d += std::abs(static_cast<double>(counts[i]) / n - probabilities[i]);
    return d;
}

struct Visibility {
    double value = 0.0;
    double std_error = 0.0;
    double i_max = 0.0;  // mean counts per pixel near the maximum
    double i_min = 0.0;  // mean counts per pixel near the minima
};

/// Fringe visibility (I_max - I_min) / (I_max + I_min). Intensities are mean
/// counts per pixel within +/- half_window of the given maximum and minima
/// positions; the standard error assumes Poisson pixel counts.
inline Visibility fringe_visibility(std::span<const std::uint64_t> counts, const PixelGrid& grid, double x_max_fringe,
                                    std::span<const double> x_min_fringes, double half_window) {
    auto window_mean = [&](std::span<const double> centers, double& n_pix) {
        double sum = 0.0;
        n_pix = 0.0;
        for (std::size_t i = 0; i < grid.n_pixels; ++i) {
            for (double c : centers) {
                if (std::abs(grid.center(i) - c) <= half_window) {
                    sum += static_cast<double>(counts[i]);
                    n_pix += 1.0;
                    break;
                }
            }
        }
        if (n_pix == 0.0) throw ResolutionError("fringe_visibility: window holds no pixel");
        return sum / n_pix;
    };
    Visibility v;
    double n_max = 0.0, n_min = 0.0;
    const double maxima[] = {x_max_fringe};
    v.i_max = window_mean(maxima, n_max);
    v.i_min = window_mean(x_min_fringes, n_min);
    const double s = v.i_max + v.i_min;
    if (s == 0.0) return v;
    v.value = (v.i_max - v.i_min) / s;
    const double var_max = v.i_max / n_max, var_min = v.i_min / n_min;
    const double g_max = 2.0 * v.i_min / (s * s), g_min = -2.0 * v.i_max / (s * s);
    v.std_error = std::sqrt(g_max * g_max * var_max + g_min * g_min * var_min);
    return v;
}

}  // namespace bohm
