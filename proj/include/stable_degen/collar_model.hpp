#pragma once

#include "stable_degen/quadrature.hpp"

namespace stable_degen::collar {

/// The wedge quotient {1 <= |z| <= e^{2 pi lambda}, lambda <= arg z <= pi - lambda}
/// with |z| = 1 glued to |z| = e^{2 pi lambda}, carrying |dz| / Im z.
class CollarChart {
public:
    explicit CollarChart(double lambda);

    double dilation() const { return lambda_; }
    /// Length of the core geodesic {arg z = pi/2} in the wedge metric.
    double core_length() const;
    /// Contains z up to the circle identification (arg branch [0, pi)).
    bool contains(complex z, double tol = 1e-12) const;

private:
    double lambda_;
};

enum class DensityKind { HyperbolicAnnulus, PuncturedDisk };

/// {r_inner < |tau| < r_outer} with its complete hyperbolic metric, or the
/// punctured disk {0 < |tau| < r_outer} with the cusp metric when r_inner = 0.
struct AnnulusChart {
    double r_inner = 0.0;
    double r_outer = 1.0;
    DensityKind kind = DensityKind::PuncturedDisk;

    static AnnulusChart annulus(double r_inner, double r_outer);
    static AnnulusChart punctured_disk(double r_outer = 1.0);
    bool contains_open(complex tau) const;
};

/// A'_lambda = {exp(-(pi-lambda)/lambda) <= |tau| <= e^{-1}}: the image of the wedge chart.
AnnulusChart collar_domain(double lambda);
/// {e^{-pi/lambda} < |tau| < 1}: the annulus whose complete metric is the wedge metric.
AnnulusChart collar_uniformizing_annulus(double lambda);

complex z_to_tau(complex z, double lambda);
/// Inverse on A'_lambda; arg tau taken in [0, 2 pi) so ln|z| lands in [0, 2 pi lambda).
complex tau_to_z(complex tau, double lambda);
double im_z_of_tau(complex tau, double lambda);
/// dz/dtau = z lambda / (i tau).
complex dz_dtau(complex tau, double lambda);

double wedge_density(complex z);
double annulus_hyperbolic_density(complex tau, const AnnulusChart& chart);
/// Closed-form hyperbolic length of the core circle of a finite annulus.
double annulus_core_length(const AnnulusChart& chart);

/// Half the length of the core-parallel loop through tau: pi lambda / sin(-lambda ln|tau|).
double collar_injectivity_radius(complex tau, double lambda);
bool collar_has_thin_part(double lambda, double epsilon);
/// Angle theta in (0, pi/2] with sin theta = pi lambda / epsilon; the thin band
/// is theta < -lambda ln|tau| < pi - theta.
double thin_level_angle(double lambda, double epsilon);

/// (Im z)^m |f|.
double pointwise_m_norm(complex f_value, complex z, int m);
/// The same norm for u(tau) (dtau/tau)^m, using the wedge metric written in tau.
double pointwise_m_norm_tau(complex u_value, complex tau, double lambda, int m);

/// Area of {inj < epsilon} by tensor quadrature of the density in log-polar tau.
double thin_collar_volume(double lambda, double epsilon, std::size_t radial_order = 48,
                          std::size_t angular_order = 64);
/// 4 eps sqrt(1 - (pi lambda / eps)^2), zero when pi lambda >= eps.
double thin_collar_volume_closed_form(double lambda, double epsilon);

}  // namespace stable_degen::collar
