#include "stable_degen/quadrature.hpp"

#include "stable_degen/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stable_degen {

QuadratureRule gauss_legendre(std::size_t n, double a, double b) {
    if (n == 0) throw ConfigError("gauss_legendre: need at least one node");
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p2) / static_cast<double>(j);
            }
            dp = static_cast<double>(n) * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = mid - half * x;
        rule.nodes[n - 1 - i] = mid + half * x;
        rule.weights[i] = half * w;
        rule.weights[n - 1 - i] = half * w;
    }
    return rule;
}

QuadratureRule composite_gauss_legendre(std::span<const double> breakpoints, std::size_t order,
                                        double max_panel) {
    QuadratureRule out;
    const QuadratureRule ref = gauss_legendre(order);
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
        const double a = breakpoints[k];
        const double b = breakpoints[k + 1];
        if (!(b > a)) continue;
        const auto panels =
            static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / max_panel)));
        const double h = (b - a) / static_cast<double>(panels);
        for (std::size_t p = 0; p < panels; ++p) {
            const double lo = a + h * static_cast<double>(p);
            for (std::size_t i = 0; i < order; ++i) {
                out.nodes.push_back(lo + 0.5 * h * (ref.nodes[i] + 1.0));
                out.weights.push_back(0.5 * h * ref.weights[i]);
            }
        }
    }
    return out;
}

namespace {

template <typename T>
T pairwise_impl(std::span<const T> v) {
    if (v.size() <= 8) {
        T acc{};
        for (const T& x : v) acc += x;
        return acc;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_impl(v.first(half)) + pairwise_impl(v.subspan(half));
}

}  // namespace

double pairwise_sum(std::span<const double> values) { return pairwise_impl(values); }
complex pairwise_sum(std::span<const complex> values) { return pairwise_impl(values); }

double smooth_ramp(double u, double lo, double hi) {
    if (u <= lo) return 0.0;
    if (u >= hi) return 1.0;
    const double x = (u - lo) / (hi - lo);
    const double a = std::exp(-1.0 / x);
    const double b = std::exp(-1.0 / (1.0 - x));
    return a / (a + b);
}

}  // namespace stable_degen
