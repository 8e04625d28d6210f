#include "stable_degen/collar_model.hpp"

#include "stable_degen/errors.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace stable_degen::collar {

namespace {
constexpr double pi = std::numbers::pi;

void check_lambda(double lambda) {
    if (!(lambda > 0.0) || !(lambda < pi / 2.0))
        throw ConfigError("collar: dilation lambda must lie in (0, pi/2)");
}
}  // namespace

CollarChart::CollarChart(double lambda) : lambda_(lambda) { check_lambda(lambda); }

double CollarChart::core_length() const { return 2.0 * pi * lambda_; }

bool CollarChart::contains(complex z, double tol) const {
    const double r = std::abs(z);
    const double a = std::arg(z);
    return r >= 1.0 - tol && r <= std::exp(2.0 * pi * lambda_) + tol && a >= lambda_ - tol &&
           a <= pi - lambda_ + tol;
}

AnnulusChart AnnulusChart::annulus(double r_inner, double r_outer) {
    if (!(r_inner > 0.0) || !(r_inner < r_outer))
        throw ConfigError("annulus chart: need 0 < r_inner < r_outer");
    return {r_inner, r_outer, DensityKind::HyperbolicAnnulus};
}

AnnulusChart AnnulusChart::punctured_disk(double r_outer) {
    if (!(r_outer > 0.0)) throw ConfigError("punctured disk: radius must be positive");
    return {0.0, r_outer, DensityKind::PuncturedDisk};
}

bool AnnulusChart::contains_open(complex tau) const {
    const double r = std::abs(tau);
    return r > r_inner && r < r_outer;
}

AnnulusChart collar_domain(double lambda) {
    check_lambda(lambda);
    return AnnulusChart::annulus(std::exp(-(pi - lambda) / lambda), std::exp(-1.0));
}

AnnulusChart collar_uniformizing_annulus(double lambda) {
    check_lambda(lambda);
    return AnnulusChart::annulus(std::exp(-pi / lambda), 1.0);
}

complex z_to_tau(complex z, double lambda) {
    check_lambda(lambda);
    const double r = std::abs(z);
    double a = std::arg(z);
    if (a < 0.0) a += 2.0 * pi;
    const double tol = 1e-12;
    if (!(r >= 1.0 - tol && r <= std::exp(2.0 * pi * lambda) * (1.0 + tol)) ||
        !(a >= lambda - tol && a <= pi - lambda + tol))
        throw ConfigError("z_to_tau: z outside the wedge domain");
    // tau = exp(i ln z / lambda)
    return std::polar(std::exp(-a / lambda), std::log(r) / lambda);
}

complex tau_to_z(complex tau, double lambda) {
    check_lambda(lambda);
    const AnnulusChart dom = collar_domain(lambda);
    const double rt = std::abs(tau);
    const double tol = 1e-12;
    if (!(rt >= dom.r_inner * (1.0 - tol) && rt <= dom.r_outer * (1.0 + tol)))
        throw ConfigError("tau_to_z: tau outside the annulus A'_lambda");
    double at = std::arg(tau);
    if (at < 0.0) at += 2.0 * pi;
    return std::polar(std::exp(lambda * at), -lambda * std::log(rt));
}

double im_z_of_tau(complex tau, double lambda) {
    if (tau == complex(0.0, 0.0)) throw ConfigError("im_z_of_tau: tau = 0");
    double at = std::arg(tau);
    if (at < 0.0) at += 2.0 * pi;
    return -std::exp(lambda * at) * std::sin(lambda * std::log(std::abs(tau)));
}

complex dz_dtau(complex tau, double lambda) {
    return tau_to_z(tau, lambda) * lambda / (complex(0.0, 1.0) * tau);
}

double wedge_density(complex z) {
    if (!(z.imag() > 0.0)) throw ConfigError("wedge_density: need Im z > 0");
    return 1.0 / z.imag();
}

double annulus_hyperbolic_density(complex tau, const AnnulusChart& chart) {
    if (!chart.contains_open(tau)) throw ConfigError("annulus density: tau not strictly inside the chart");
    const double r = std::abs(tau);
    if (chart.kind == DensityKind::PuncturedDisk) {
        // cusp metric of the punctured disk of radius r_outer
        return 1.0 / (r * std::log(chart.r_outer / r));
    }
    const double len = std::log(chart.r_outer / chart.r_inner);
    return (pi / len) / (r * std::sin(pi * std::log(chart.r_outer / r) / len));
}

double annulus_core_length(const AnnulusChart& chart) {
    if (chart.kind == DensityKind::PuncturedDisk) return 0.0;
    return 2.0 * pi * pi / std::log(chart.r_outer / chart.r_inner);
}

double collar_injectivity_radius(complex tau, double lambda) {
    check_lambda(lambda);
    const double theta = -lambda * std::log(std::abs(tau));
    if (!(theta > 0.0 && theta < pi)) throw ConfigError("collar_injectivity_radius: tau outside the collar");
    return pi * lambda / std::sin(theta);
}

bool collar_has_thin_part(double lambda, double epsilon) { return pi * lambda < epsilon; }

double thin_level_angle(double lambda, double epsilon) {
    const double s = pi * lambda / epsilon;
    if (s > 1.0) throw ConfigError("thin_level_angle: collar is entirely thick (pi lambda > epsilon)");
    return std::asin(s);
}

double pointwise_m_norm(complex f_value, complex z, int m) {
    if (m < 1) throw ConfigError("pointwise_m_norm: m must be >= 1");
    if (!(z.imag() > 0.0)) throw ConfigError("pointwise_m_norm: need Im z > 0");
    return std::pow(z.imag(), m) * std::abs(f_value);
}

double pointwise_m_norm_tau(complex u_value, complex tau, double lambda, int m) {
    // f dz^m = h dtau^m, u = h tau^m; the wedge metric in tau is |dz/dtau| / Im z.
    const double rho_tau = std::abs(dz_dtau(tau, lambda)) / im_z_of_tau(tau, lambda);
    return std::abs(u_value) / std::pow(std::abs(tau) * rho_tau, m);
}

double thin_collar_volume(double lambda, double epsilon, std::size_t radial_order,
                          std::size_t angular_order) {
    check_lambda(lambda);
    if (!(epsilon > 0.0)) throw ConfigError("thin_collar_volume: epsilon must be positive");
    if (!collar_has_thin_part(lambda, epsilon)) return 0.0;
    const double theta = thin_level_angle(lambda, epsilon);
    const AnnulusChart uni = collar_uniformizing_annulus(lambda);
    // log-radius band of the thin part
    const double lo = -(pi - theta) / lambda;
    const double hi = -theta / lambda;
    const double bp[] = {lo, hi};
    const QuadratureRule radial = composite_gauss_legendre(bp, radial_order, 0.25 / lambda);
    std::vector<double> terms;
    terms.reserve(radial.nodes.size() * angular_order);
    const double dphi = 2.0 * pi / static_cast<double>(angular_order);
    for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
        const double r = std::exp(radial.nodes[i]);
        for (std::size_t k = 0; k < angular_order; ++k) {
            const complex tau = std::polar(r, dphi * static_cast<double>(k));
            const double rho_r = annulus_hyperbolic_density(tau, uni) * r;
            // area element r^2 d(log r) dphi
            terms.push_back(radial.weights[i] * dphi * rho_r * rho_r);
        }
    }
    return pairwise_sum(std::span<const double>(terms));
}

double thin_collar_volume_closed_form(double lambda, double epsilon) {
    const double s = pi * lambda / epsilon;
    if (s >= 1.0) return 0.0;
    return 4.0 * epsilon * std::sqrt(1.0 - s * s);
}

}  // namespace stable_degen::collar
