#pragma once

#include "stable_degen/linalg.hpp"
#include "stable_degen/quadrature.hpp"
#include "stable_degen/surface_model.hpp"

#include <memory>
#include <string>
#include <vector>

namespace stable_degen::diff {

/// A rational component: the Riemann sphere with finitely many marked points.
/// Every marked point is one branch of a node.
struct Component {
    std::vector<complex> points;
};

struct Branch {
    int component = 0;
    int point = 0;
    bool operator==(const Branch&) const = default;
};

/// Two marked points identified to a node; smoothing uses tau_b = t / tau_a.
struct PlumbingNode {
    Branch a;
    Branch b;
};

struct NodalCurveModel {
    std::string name;
    std::vector<Component> components;
    std::vector<PlumbingNode> nodes;

    /// Arithmetic genus #nodes - #components + 1 (all components rational).
    int genus() const;
};

/// Throws ConfigError unless every component has >= 3 marked points, every
/// marked point is used by exactly one node, points are distinct, the dual
/// graph is connected and the genus is >= 2.
void validate_model(const NodalCurveModel& model);

/// One sphere, four marked points, two self-nodes (g = 2).
NodalCurveModel two_self_node_model();
/// Two spheres joined at three nodes (g = 2).
NodalCurveModel dollar_sign_model();
/// One sphere, six marked points, three self-nodes (g = 3).
NodalCurveModel three_self_node_model();
/// Maximal degeneration along a pants graph: one thrice-marked sphere per vertex.
NodalCurveModel model_from_pants_graph(const surface::PantsGraph& graph);

/// h^0(m K) for a smooth genus-g curve: (2m-1)(g-1) for m >= 2, g for m = 1.
int dimension(int genus, int m);

/// Radius in the branch coordinate of the gluing annulus {|t|/R <= |tau| <= R}.
inline constexpr double kAnnulusRadius = 0.36787944117144233;  // e^{-1}
/// The grafted metric is the exact collar metric for |tau| <= kAnnulusRadius and
/// is blended into the reference sphere metric up to kBlendRadius.
inline constexpr double kBlendRadius = 0.6;
/// Branch chart tau = (x - p) / rho_p with rho_p = kChartFraction * (distance to nearest other point).
inline constexpr double kChartFraction = 0.45;

struct NodeAnnulus {
    complex t{0.0, 0.0};
    double middle_radius = 0.0;  // sqrt|t|: the circle fixed by tau -> t / tau
    double lambda = 0.0;         // wedge dilation with e^{-pi/lambda} = |t|; 0 at a node
    double modulus = 0.0;        // ln(R^2 / |t|)
    double core_length = 0.0;    // 2 pi^2 / ln(R^2/|t|), hyperbolic core of the gluing annulus
    double collar_core_length = 0.0;  // 2 pi lambda, core of the grafted collar metric
};

/// X_t: component charts (sphere minus the disks |tau| <= |t|) glued along node annuli.
struct PlumbedSurface {
    NodalCurveModel model;
    std::vector<NodeAnnulus> annuli;                  // per node
    std::vector<std::vector<double>> chart_scale;     // rho per marked point
    std::vector<std::vector<int>> node_at;            // node index per marked point

    int genus() const { return model.genus(); }
    bool is_nodal(int node) const { return annuli[static_cast<std::size_t>(node)].t == complex(0.0, 0.0); }
    Branch partner(Branch br) const;
    const NodeAnnulus& annulus_at(Branch br) const;
    /// tau on the partner branch of the point tau on br.
    complex transition(Branch br, complex tau) const;
};

/// t = 0 entries are left as nodes. Throws ConfigError if some |t| >= R^2.
PlumbedSurface build_plumbed_surface(const NodalCurveModel& model, const std::vector<complex>& t);
PlumbedSurface build_plumbed_surface(const NodalCurveModel& model, complex t);

enum class ChartKind { Component, Branch };

/// A point of X_t in a chart: component coordinate x, or branch coordinate tau.
struct ChartPoint {
    ChartKind kind = ChartKind::Component;
    int component = 0;
    int point = 0;  // marked point for branch charts
    complex coord{0.0, 0.0};
};

/// Throws ConfigError if the point lies outside its chart.
void check_chart_point(const PlumbedSurface& surface, const ChartPoint& p);
/// Branch coordinate of a component point lying inside that branch chart.
ChartPoint to_branch_chart(const PlumbedSurface& surface, Branch br, complex x);
ChartPoint to_component_chart(const PlumbedSurface& surface, const ChartPoint& p);

/// Round-sphere density 2 / (1 + |x|^2).
double reference_density(complex x);
/// Grafted metric density in the coordinate of the given chart.
double grafted_density(const PlumbedSurface& surface, const ChartPoint& p);
/// Injectivity radius of the collar metric at a branch point, +inf outside the collar.
double branch_injectivity_radius(const PlumbedSurface& surface, Branch br, complex tau);

/// One unknown: the coefficient of (x - p)^{-order} on a component, stored in
/// units of rho^{order-m} s^{max(order-m,0)} so that all unknowns are O(1).
struct Column {
    int component = 0;
    int point = 0;
    int order = 1;
    bool operator==(const Column&) const = default;
};

struct SectionLayout {
    std::shared_ptr<const PlumbedSurface> surface;
    int m = 3;
    int truncation = 0;  // K; pole orders up to m + K at smoothed nodes
    std::vector<Column> columns;

    /// Factor converting a stored unknown to the coefficient of (x - p)^{-order}.
    double column_scale(std::size_t c) const;
    /// Beyond this |x| columns are evaluated through their expansion at infinity
    /// with the orders killed by holomorphy dropped.
    double far_radius(int component) const;
    /// Values of all columns at component points (dx^m frame); rows = points.
    CMatrix component_values(int component, const std::vector<complex>& x) const;
    /// Values of all columns in the (dtau/tau)^m frame of a branch coordinate;
    /// tau may lie beyond the branch chart as long as x avoids the other marked points.
    CMatrix branch_values(Branch br, const std::vector<complex>& tau) const;
};

/// An m-differential on X_t given by principal parts at the marked points.
struct MDifferential {
    std::shared_ptr<const SectionLayout> layout;
    CVector coefficients;

    int m() const { return layout->m; }
};

struct EvaluatedValue {
    complex value{0.0, 0.0};  // dx^m frame on components, (dtau/tau)^m on branches
    double norm = 0.0;        // pointwise norm for the grafted metric
};

EvaluatedValue evaluate(const MDifferential& s, const ChartPoint& p);

enum class BasisSource { NodalSolve, PlumbedSolve, Fixture };

struct SectionBasis {
    std::shared_ptr<const SectionLayout> layout;
    CMatrix coefficients;         // columns x sections
    RVector singular_values;      // of the constraint matrix
    double gap = 0.0;             // kept / discarded singular-value ratio
    int constraint_rank = 0;
    BasisSource source = BasisSource::NodalSolve;

    int size() const { return static_cast<int>(coefficients.cols()); }
    MDifferential section(int i) const;
    SectionBasis transformed(const CMatrix& t) const;
};

inline constexpr double kRankGap = 1e6;

/// Principal parts of order <= m, one order-zero matching condition per node.
SectionBasis nodal_basis(const NodalCurveModel& model, int m);
/// Principal parts of order <= m + K at smoothed nodes; Laurent modes -K..K of
/// u_a(tau) - (-1)^m u_b(t / tau) are matched on the middle circle of each node.
SectionBasis plumbed_basis(const NodalCurveModel& model, const std::vector<complex>& t, int m, int truncation = -1);
SectionBasis plumbed_basis(const NodalCurveModel& model, complex t, int m, int truncation = -1);
/// Solves on an existing surface (all nodes honoured, t = 0 ones as nodes).
SectionBasis solve_basis(std::shared_ptr<const PlumbedSurface> surface, int m, int truncation);

int default_truncation(int m);

/// Columns selected by pivoted QR on a nodal basis: the normalization Z (P Z)^{-1}
/// with these pivots gives a basis that varies continuously with t.
std::vector<Column> canonical_pivots(const SectionBasis& nodal);
SectionBasis canonicalize(const SectionBasis& basis, const std::vector<Column>& pivots);

/// Laurent coefficient c_k of u on |tau| = r by n-point trapezoid quadrature.
complex laurent_coefficient(const MDifferential& s, Branch br, double r, int k = 0, std::size_t n = 64);
/// (1 / 2 pi i) \oint_{|tau| = r} u dtau / tau.
complex residue_coefficient(const MDifferential& s, Branch br, double r, std::size_t n = 64);
/// c_{-K} .. c_{K} on |tau| = r.
std::vector<complex> laurent_tail(const MDifferential& s, Branch br, int truncation, double r, std::size_t n = 0);
/// |u_b(0) - (-1)^m u_a(0)|, both by residue_coefficient at radius r.
double node_matching_defect(const MDifferential& s, int node, double r = 0.25);
/// Max of |u_a(tau) - (-1)^m u_b(t / tau)| on the middle circle, sampled more
/// finely than the matching grid. Zero at an unsmoothed node.
double gluing_defect(const MDifferential& s, int node);
/// max |u| over the collar part of the node divided by max |u| on its boundary circles.
double envelope_ratio(const MDifferential& s, int node);

/// Genus-2 fixture y^2 = f(x), deg f = 6: sections x^a y^b (dx/y)^m.
struct HyperellipticSection {
    int power_x = 0;
    int power_y = 0;
    int order_at_infinity = 0;     // at each of the two points over x = infinity
    int order_at_branch_point = 0;
};

struct HyperellipticFixture {
    std::vector<complex> roots;
    int m = 3;
    std::vector<HyperellipticSection> sections;
    BasisSource source = BasisSource::Fixture;
};

std::vector<complex> default_hyperelliptic_roots();
/// Throws ConfigError for m outside {2, 3}, root count != 6 or repeated roots.
HyperellipticFixture hyperelliptic_fixture_basis(int m, const std::vector<complex>& roots = default_hyperelliptic_roots());
/// Coefficient of (dx)^m: x^a y^{b - m}.
complex evaluate(const HyperellipticSection& s, int m, complex x, complex y);

}  // namespace stable_degen::diff
