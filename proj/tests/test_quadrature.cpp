#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stable_degen/errors.hpp"
#include "stable_degen/quadrature.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <utility>

using namespace stable_degen;

namespace {

double integrate(const QuadratureRule& q, double (*f)(double)) {
    double acc = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) acc += q.weights[i] * f(q.nodes[i]);
    return acc;
}

}  // namespace

TEST_CASE("gauss_legendre is exact through degree 2n-1") {
    for (std::size_t n : {1u, 2u, 5u, 12u, 40u}) {
        const QuadratureRule q = gauss_legendre(n, -1.0, 2.0);
        REQUIRE(q.nodes.size() == n);
        for (std::size_t k = 0; k < 2 * n; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += q.weights[i] * std::pow(q.nodes[i], static_cast<double>(k));
            const double exact = (std::pow(2.0, k + 1.0) - std::pow(-1.0, k + 1.0)) / (k + 1.0);
            CHECK(acc == doctest::Approx(exact).epsilon(1e-12).scale(1.0));
        }
    }
}

TEST_CASE("gauss_legendre nodes are ordered, interior and symmetric") {
    const QuadratureRule q = gauss_legendre(17);
    for (std::size_t i = 0; i + 1 < q.nodes.size(); ++i) CHECK(q.nodes[i] < q.nodes[i + 1]);
    CHECK(q.nodes.front() > -1.0);
    CHECK(q.nodes.back() < 1.0);
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        CHECK(q.nodes[i] == doctest::Approx(-q.nodes[q.nodes.size() - 1 - i]).scale(1.0).epsilon(1e-15));
        CHECK(q.weights[i] > 0.0);
    }
    CHECK(std::accumulate(q.weights.begin(), q.weights.end(), 0.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(gauss_legendre(0), ConfigError);
}

TEST_CASE("composite rule splits long intervals") {
    const double bp[] = {0.0, 1.0, 4.0};
    const QuadratureRule q = composite_gauss_legendre(bp, 8, 1.0);
    CHECK(q.nodes.size() == 4 * 8);
    CHECK(integrate(q, [](double x) { return std::exp(-x); }) == doctest::Approx(1.0 - std::exp(-4.0)).epsilon(1e-14));
    CHECK(integrate(q, [](double x) { return std::sin(x); }) == doctest::Approx(1.0 - std::cos(4.0)).epsilon(1e-13));
    const double empty[] = {1.0, 1.0};
    CHECK(composite_gauss_legendre(empty, 4, 1.0).nodes.empty());
}

TEST_CASE("pairwise_sum accuracy and determinism") {
    std::vector<double> v(100000, 0.1);
    CHECK(pairwise_sum(std::span<const double>(v)) == doctest::Approx(10000.0).epsilon(1e-14));
    std::mt19937_64 gen(9);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<complex> c(1023);
    for (auto& x : c) x = {n(gen), n(gen)};
    const complex a = pairwise_sum(std::span<const complex>(c));
    const complex b = pairwise_sum(std::span<const complex>(c));
    CHECK(a == b);
    complex plain{};
    for (const auto& x : c) plain += x;
    CHECK(std::abs(a - plain) < 1e-11);
    CHECK(pairwise_sum(std::span<const double>()) == 0.0);
}

TEST_CASE("contour_mode extracts Laurent coefficients") {
    const complex center(0.3, -0.2);
    const auto g = [&](complex z) {
        const complex w = z - center;
        return complex(2.0, 1.0) / (w * w) + complex(-0.5, 0.25) / w + complex(1.5, 0.0) + complex(0.0, 4.0) * w * w * w;
    };
    const std::pair<int, complex> modes[] = {{-2, {2.0, 1.0}}, {-1, {-0.5, 0.25}}, {0, {1.5, 0.0}}, {1, {0.0, 0.0}}, {3, {0.0, 4.0}}};
    for (double r : {0.05, 0.3, 1.0, 2.5}) {
        // rounding floor: largest sample magnitude times r^{-k}
        const double peak = std::sqrt(5.0) / (r * r) + 0.56 / r + 1.5 + 4.0 * r * r * r;
        for (const auto& [k, c] : modes)
            CHECK(std::abs(contour_mode(g, center, r, 16, k) - c) < 1e-14 * peak * std::pow(r, -k));
    }
}

TEST_CASE("contour_mode on an analytic function converges geometrically") {
    // e^z: k-th coefficient 1/k!
    const auto g = [](complex z) { return std::exp(z); };
    CHECK(std::abs(contour_mode(g, 0.0, 1.0, 32, 0) - 1.0) < 1e-15);
    CHECK(std::abs(contour_mode(g, 0.0, 1.0, 32, 4) - 1.0 / 24.0) < 1e-15);
}

TEST_CASE("smooth_ramp") {
    CHECK(smooth_ramp(-1.0, 0.0, 1.0) == 0.0);
    CHECK(smooth_ramp(0.0, 0.0, 1.0) == 0.0);
    CHECK(smooth_ramp(1.0, 0.0, 1.0) == 1.0);
    CHECK(smooth_ramp(0.5, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    double prev = 0.0;
    for (int i = 1; i < 100; ++i) {
        const double u = 2.0 + 3.0 * i / 100.0;
        const double v = smooth_ramp(u, 2.0, 5.0);
        CHECK(v >= prev);
        CHECK(v + smooth_ramp(7.0 - u, 2.0, 5.0) == doctest::Approx(1.0).epsilon(1e-14));
        prev = v;
    }
}
