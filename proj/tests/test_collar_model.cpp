#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stable_degen/collar_model.hpp"
#include "stable_degen/errors.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

using namespace stable_degen;
using namespace stable_degen::collar;

namespace {

constexpr double pi = std::numbers::pi;

// Gaussian curvature -Lap(log rho) / rho^2 by the 5-point stencil, one Richardson step.
double fd_curvature(const std::function<double(complex)>& rho, complex p, double h) {
    const auto lr = [&](complex q) { return std::log(rho(q)); };
    const auto lap = [&](double s) {
        return (lr(p + s) + lr(p - s) + lr(p + complex(0, s)) + lr(p - complex(0, s)) - 4.0 * lr(p)) / (s * s);
    };
    const double r = rho(p);
    return -(4.0 * lap(0.5 * h) - lap(h)) / 3.0 / (r * r);
}

complex random_wedge_point(std::mt19937_64& gen, double lambda) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = std::exp(2.0 * pi * lambda * u(gen));
    const double a = lambda + (pi - 2.0 * lambda) * u(gen);
    return std::polar(r, a);
}

// Area of {sin theta < pi lambda / eps} in the wedge metric, as a 1D integral
// over theta of 2 pi lambda / sin^2 theta.
double thin_area_theta_integral(double lambda, double eps) {
    const double th = std::asin(pi * lambda / eps);
    const int n = 4000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = th + (pi - 2.0 * th) * i / n;
        const double b = th + (pi - 2.0 * th) * (i + 1) / n;
        // Simpson per panel
        const auto f = [&](double t) { return 2.0 * pi * lambda / (std::sin(t) * std::sin(t)); };
        acc += (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
    }
    return acc;
}

}  // namespace

TEST_CASE("CollarChart core length and domain") {
    const CollarChart c(0.1);
    CHECK(c.core_length() == doctest::Approx(2.0 * pi * 0.1).epsilon(1e-15));
    CHECK(c.contains(complex(0.0, 1.0)));
    CHECK_FALSE(c.contains(complex(0.0, 0.5)));
    CHECK_THROWS_AS(CollarChart(0.0), ConfigError);
    CHECK_THROWS_AS(CollarChart(2.0), ConfigError);
}

TEST_CASE("collar_domain is A'_lambda") {
    const double lambda = 0.2;
    const auto d = collar_domain(lambda);
    CHECK(d.r_inner == doctest::Approx(std::exp(-(pi - lambda) / lambda)).epsilon(1e-15));
    CHECK(d.r_outer == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(d.kind == DensityKind::HyperbolicAnnulus);
}

TEST_CASE("z_to_tau at z = i") {
    const complex tau = z_to_tau(complex(0.0, 1.0), 0.1);
    CHECK(tau.real() == doctest::Approx(std::exp(-pi / 0.2)).epsilon(1e-13));
    CHECK(std::abs(tau.imag()) < 1e-22);
    CHECK(tau.real() == doctest::Approx(1.507e-7).epsilon(1e-3));
}

TEST_CASE("z_to_tau maps arg z = lambda to the outer circle") {
    const double lambda = 0.1;
    CHECK(std::abs(z_to_tau(std::polar(1.3, lambda), lambda)) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("z_to_tau identifies |z| = 1 with |z| = e^{2 pi lambda}") {
    const double lambda = 0.1;
    const double a = 1.1;
    const complex t1 = z_to_tau(std::polar(1.0, a), lambda);
    const complex t2 = z_to_tau(std::polar(std::exp(2.0 * pi * lambda), a), lambda);
    CHECK(std::abs(t1 - t2) < 1e-15);
}

TEST_CASE("z_to_tau rejects points outside the wedge") {
    CHECK_THROWS_AS(z_to_tau(complex(0.0, 0.5), 0.1), ConfigError);
    CHECK_THROWS_AS(z_to_tau(std::polar(1.2, 0.05), 0.1), ConfigError);
    CHECK_THROWS_AS(tau_to_z(complex(0.9, 0.0), 0.1), ConfigError);
}

TEST_CASE("z <-> tau round trip on the fundamental domain") {
    std::mt19937_64 gen(11);
    double worst = 0.0;
    for (double lambda : {0.005, 0.01, 0.02, 0.05, 0.08, 0.1, 0.15, 0.2, 0.25, 0.3}) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 1000; ++i) {
            // |z| in [1, e^{2 pi lambda}) so arg tau stays in [0, 2 pi)
            const double r = std::exp(2.0 * pi * lambda * u(gen) * (1.0 - 1e-12));
            const double a = lambda + (pi - 2.0 * lambda) * u(gen);
            const complex z = std::polar(r, a);
            worst = std::max(worst, std::abs(tau_to_z(z_to_tau(z, lambda), lambda) - z) / std::abs(z));
        }
    }
    CHECK(worst < 1e-14);
}

TEST_CASE("im_z_of_tau closed values") {
    const double lambda = 0.15;
    CHECK(im_z_of_tau(complex(std::exp(-1.0), 0.0), lambda) == doctest::Approx(std::sin(lambda)).epsilon(1e-14));
    const complex peak(std::exp(-pi / (2.0 * lambda)), 0.0);
    CHECK(im_z_of_tau(peak, lambda) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(im_z_of_tau(complex(0.0, 0.0), lambda), ConfigError);
}

TEST_CASE("im_z_of_tau agrees with the inverse map") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double lambda = 0.12;
    const auto d = collar_domain(lambda);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double lr = std::log(d.r_inner) + (std::log(d.r_outer) - std::log(d.r_inner)) * u(gen);
        const complex tau = std::polar(std::exp(lr), 2.0 * pi * u(gen));
        const double v = im_z_of_tau(tau, lambda);
        CHECK(v > 0.0);
        worst = std::max(worst, std::abs(v - tau_to_z(tau, lambda).imag()));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("annulus and punctured-disk densities closed forms") {
    const double r = 1e-3;
    const auto ann = AnnulusChart::annulus(r, 1.0);
    const double len = std::log(1.0 / r);
    const complex core(std::sqrt(r), 0.0);
    CHECK(annulus_hyperbolic_density(core, ann) == doctest::Approx(pi / (len * std::sqrt(r))).epsilon(1e-14));
    CHECK(annulus_core_length(ann) == doctest::Approx(2.0 * pi * pi / len).epsilon(1e-15));
    const auto disk = AnnulusChart::punctured_disk();
    CHECK(annulus_hyperbolic_density(complex(std::exp(-2.0), 0.0), disk) ==
          doctest::Approx(std::exp(2.0) / 2.0).epsilon(1e-14));
    CHECK_THROWS_AS(annulus_hyperbolic_density(complex(1.0, 0.0), ann), ConfigError);
    CHECK_THROWS_AS(annulus_hyperbolic_density(complex(0.0, 0.0), disk), ConfigError);
}

TEST_CASE("core circle length integrates to 2 pi^2 / L") {
    const auto ann = AnnulusChart::annulus(1e-4, 1.0);
    const double rc = std::sqrt(1e-4);
    const int n = 64;
    double acc = 0.0;
    for (int k = 0; k < n; ++k)
        acc += annulus_hyperbolic_density(std::polar(rc, 2.0 * pi * k / n), ann) * rc * 2.0 * pi / n;
    CHECK(acc == doctest::Approx(annulus_core_length(ann)).epsilon(1e-13));
}

TEST_CASE("densities have curvature -1 by finite differences") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto ann = AnnulusChart::annulus(1e-3, 1.0);
    const auto disk = AnnulusChart::punctured_disk();
    double worst_ann = 0.0;
    double worst_disk = 0.0;
    double worst_wedge = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double lr = std::log(1e-3) * (0.05 + 0.9 * u(gen));
        const complex tau = std::polar(std::exp(lr), 2.0 * pi * u(gen));
        const double h = 2e-3 * std::abs(tau);
        worst_ann = std::max(worst_ann, std::abs(fd_curvature([&](complex q) { return annulus_hyperbolic_density(q, ann); }, tau, h) + 1.0));
        const complex td = std::polar(std::exp(-8.0 * (0.02 + u(gen))), 2.0 * pi * u(gen));
        worst_disk = std::max(worst_disk, std::abs(fd_curvature([&](complex q) { return annulus_hyperbolic_density(q, disk); }, td, 2e-3 * std::abs(td) * std::min(1.0, -std::log(std::abs(td)))) + 1.0));
        const complex z = random_wedge_point(gen, 0.1);
        worst_wedge = std::max(worst_wedge, std::abs(fd_curvature(wedge_density, z, 2e-3 * z.imag()) + 1.0));
    }
    CHECK(worst_ann < 1e-6);
    CHECK(worst_disk < 1e-6);
    CHECK(worst_wedge < 1e-6);
}

TEST_CASE("collar_injectivity_radius") {
    const double lambda = 0.05;
    const complex core(std::exp(-pi / (2.0 * lambda)), 0.0);
    CHECK(collar_injectivity_radius(core, lambda) == doctest::Approx(pi * lambda).epsilon(1e-14));
    for (double th : {0.2, 0.7, 1.3}) {
        const complex a(std::exp(-th / lambda), 0.0);
        const complex b(std::exp(-(pi - th) / lambda), 0.0);
        CHECK(collar_injectivity_radius(a, lambda) == doctest::Approx(collar_injectivity_radius(b, lambda)).epsilon(1e-12));
        CHECK(collar_injectivity_radius(a, lambda) > pi * lambda);
    }
}

TEST_CASE("thin level angle") {
    CHECK(std::sin(thin_level_angle(0.01, 0.5)) == doctest::Approx(0.02 * pi).epsilon(1e-14));
    CHECK(collar_has_thin_part(0.01, 0.5));
    CHECK_FALSE(collar_has_thin_part(0.2, 0.5));
    CHECK_THROWS_AS(thin_level_angle(0.2, 0.5), ConfigError);
}

TEST_CASE("pointwise_m_norm scalings") {
    for (int m = 1; m <= 4; ++m) CHECK(pointwise_m_norm(1.0, complex(0.0, 1.0), m) == doctest::Approx(1.0));
    CHECK(pointwise_m_norm(8.0, complex(0.3, 0.5), 3) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(pointwise_m_norm(1.0, complex(1.0, 0.0), 2), ConfigError);
}

TEST_CASE("pointwise norm in z agrees with the tau chain rule") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double lambda = 0.1;
    const auto d = collar_domain(lambda);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        const double lr = std::log(d.r_inner) + (std::log(d.r_outer) - std::log(d.r_inner)) * (0.01 + 0.98 * u(gen));
        const complex tau = std::polar(std::exp(lr), 2.0 * pi * u(gen));
        const complex u_val(u(gen) - 0.5, u(gen) - 0.5);
        for (int m = 1; m <= 3; ++m) {
            // u (dtau/tau)^m = f dz^m with f = u / (tau dz/dtau)^m
            const complex z = tau_to_z(tau, lambda);
            const complex dz = z * lambda / (complex(0.0, 1.0) * tau);
            const complex f = u_val / std::pow(tau * dz, m);
            const double a = pointwise_m_norm(f, z, m);
            const double b = pointwise_m_norm_tau(u_val, tau, lambda, m);
            worst = std::max(worst, std::abs(a - b) / a);
        }
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("pointwise norm invariant under the deck identification") {
    const double lambda = 0.1;
    const complex z = std::polar(1.05, 1.2);
    const complex zz = z * std::exp(2.0 * pi * lambda);
    const complex f(0.3, -0.7);
    // f(z) dz^m pulled back along z -> c z has coefficient f / c^m
    const double c = std::exp(2.0 * pi * lambda);
    for (int m = 1; m <= 3; ++m) CHECK(pointwise_m_norm(f / std::pow(c, m), zz, m) == doctest::Approx(pointwise_m_norm(f, z, m)).epsilon(1e-13));
}

TEST_CASE("thin collar volume: quadrature, theta integral and closed form") {
    for (double lambda : {0.01, 0.03, 0.1}) {
        const double eps = 0.5;
        const double q = thin_collar_volume(lambda, eps, 64, 64);
        CHECK(q == doctest::Approx(thin_area_theta_integral(lambda, eps)).epsilon(1e-8));
        CHECK(q == doctest::Approx(thin_collar_volume_closed_form(lambda, eps)).epsilon(1e-8));
    }
}

TEST_CASE("thin collar volume limits") {
    double prev = INFINITY;
    double eps = 0.5;
    for (; eps > 0.04; eps /= 2.0) {
        const double v = thin_collar_volume(0.01, eps);
        CHECK(v < prev);
        CHECK(v < 4.0 * eps);
        prev = v;
    }
    double last = 0.0;
    for (double lambda : {0.1, 0.05, 0.01, 0.005}) {
        const double v = thin_collar_volume(lambda, 0.5);
        CHECK(v > last);
        last = v;
    }
    CHECK(last < 4.0 * 0.5);
    CHECK(thin_collar_volume(0.5 / pi, 0.5) == 0.0);
}
