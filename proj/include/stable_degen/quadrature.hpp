#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace stable_degen {

using complex = std::complex<double>;

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre rule with n points on [a, b] (Newton iteration on P_n).
QuadratureRule gauss_legendre(std::size_t n, double a = -1.0, double b = 1.0);

/// Composite Gauss-Legendre over consecutive breakpoints. Each sub-interval
/// is further split so no panel is longer than max_panel.
QuadratureRule composite_gauss_legendre(std::span<const double> breakpoints, std::size_t order,
                                        double max_panel);

/// Pairwise (cascade) summation; result depends only on input order.
double pairwise_sum(std::span<const double> values);
complex pairwise_sum(std::span<const complex> values);

/// Trapezoid approximation of (1/2 pi i) \oint_{|z - center| = r} g(z) (z-center)^{-k} dz/(z-center),
/// i.e. the k-th Laurent coefficient of g around center.
template <typename F>
complex contour_mode(F&& g, complex center, double radius, std::size_t n_points, int k = 0) {
    std::vector<complex> terms(n_points);
    const double two_pi = 6.283185307179586476925286766559;
    for (std::size_t j = 0; j < n_points; ++j) {
        const double phi = two_pi * static_cast<double>(j) / static_cast<double>(n_points);
        const complex w = std::polar(radius, phi);
        terms[j] = g(center + w) * std::pow(w, -k);
    }
    return pairwise_sum(std::span<const complex>(terms)) / static_cast<double>(n_points);
}

/// Smooth monotone ramp: 0 for u <= lo, 1 for u >= hi, C-infinity in between.
double smooth_ramp(double u, double lo, double hi);

}  // namespace stable_degen
