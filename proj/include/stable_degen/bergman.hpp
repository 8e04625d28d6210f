#pragma once

#include "stable_degen/differentials.hpp"
#include "stable_degen/linalg.hpp"

#include <cstdint>
#include <vector>

namespace stable_degen::bergman {

struct QuadratureOrders {
    int radial = 24;            // Gauss-Legendre points per panel in ln|tau| inside the branch chart
    int angular = 128;          // trapezoid points on branch circles
    int outer_radial = 24;      // Gauss-Legendre points in 1/|tau| between the chart and the cell boundary
    int outer_angular = 16;     // Gauss-Legendre points per angular panel outside the chart
    double max_panel = 1.0;     // longest radial panel in ln|tau|
    double max_angle_panel = 0.5;

    QuadratureOrders doubled() const;
};

inline constexpr int kMinRadialOrder = 24;
inline constexpr int kMinAngularOrder = 64;

struct EpsilonProductConfig {
    double epsilon = 0.25;
    double margulis_cap = 0.5;
    QuadratureOrders orders;
    /// Integrate over all of X_t instead of X_epsilon (diagnostic; undefined at a node).
    bool full_surface = false;
};

/// Throws ConfigError on epsilon outside (0, cap), cap >= pi, or orders below the minima.
void validate(const EpsilonProductConfig& cfg);

/// Radius on a branch chart above which the branch is in the epsilon-thick part
/// (the middle circle when the collar has no thin part).
double thick_cut_radius(const diff::PlumbedSurface& surface, diff::Branch br, double epsilon);

/// Quadrature nodes in one branch coordinate. The nodes of all branches of a
/// component tile its Voronoi cells around the marked points; weights include
/// area and the metric factor of |u|^2 for weight m.
struct ChartBlock {
    int component = 0;
    int point = 0;
    std::vector<complex> coords;
    std::vector<double> weights;
};

struct QuadraturePlan {
    int m = 3;
    std::vector<ChartBlock> blocks;
    std::size_t size() const;
};

QuadraturePlan build_plan(const diff::PlumbedSurface& surface, int m, const EpsilonProductConfig& cfg);

/// Section values on all plan nodes (rows in plan order, one column per section).
CMatrix plan_values(const QuadraturePlan& plan, const diff::SectionLayout& layout, const CMatrix& coefficients);

/// sum_q w_q conj(a_q) b_q, pairwise summed.
CMatrix weighted_gram(const CMatrix& values, const std::vector<double>& weights);
std::vector<double> plan_weights(const QuadraturePlan& plan);

complex epsilon_inner_product(const diff::MDifferential& s1, const diff::MDifferential& s2,
                              const EpsilonProductConfig& cfg);

struct GramMatrix {
    CMatrix entries;
    RVector eigenvalues;          // ascending
    double condition_number = 0.0;
    /// Max |G(2n) - G(n)|_{ab} / sqrt(G_aa G_bb) under doubled orders; negative if not run.
    double richardson_change = -1.0;
};

inline constexpr double kRichardsonTolerance = 1e-8;

/// Throws NumericalError if the result is not positive definite, or if
/// `richardson` is set and doubling moves an entry by more than kRichardsonTolerance.
GramMatrix gram_matrix(const diff::SectionBasis& basis, const EpsilonProductConfig& cfg, bool richardson = false);
GramMatrix gram_from_entries(const CMatrix& entries);

struct OrthonormalBasis {
    CMatrix transform;            // upper triangular, input basis -> orthonormal
    diff::SectionBasis sections;  // input basis transformed
};

OrthonormalBasis orthonormalize(const diff::SectionBasis& basis, const GramMatrix& gram);

struct SamplePlan {
    std::vector<diff::ChartPoint> points;  // component charts only
};

/// Points of the component cores at branch-chart distance >= 1.2 from every
/// marked point, drawn deterministically from the seed.
SamplePlan default_sample_plan(const diff::NodalCurveModel& model, int per_component, std::uint64_t seed);

struct EmbeddedCloud {
    CMatrix vectors;              // sections x samples, unit columns
    std::vector<double> raw_norms;
    double min_norm = 0.0;
};

/// Throws NumericalError if a sample maps to the zero vector.
EmbeddedCloud embed_cloud(const OrthonormalBasis& onb, const SamplePlan& samples);
double min_pairwise_fs_distance(const EmbeddedCloud& cloud);

struct NormComparisonReport {
    std::vector<double> ratios;
    double max_ratio = 0.0;
    double min_ratio = 0.0;
};

/// ||s||_{eps/2} / ||s||_eps. Throws NumericalError if ||s||_eps = 0.
double norm_ratio(const diff::MDifferential& s, const EpsilonProductConfig& cfg_eps,
                  const EpsilonProductConfig& cfg_eps_half);
NormComparisonReport norm_comparison(const OrthonormalBasis& onb, const EpsilonProductConfig& cfg_eps,
                                     const EpsilonProductConfig& cfg_eps_half);

Alignment align_clouds(const EmbeddedCloud& a, const EmbeddedCloud& b);

}  // namespace stable_degen::bergman
