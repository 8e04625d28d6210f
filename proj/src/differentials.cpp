#include "stable_degen/differentials.hpp"

#include "stable_degen/collar_model.hpp"
#include "stable_degen/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace stable_degen::diff {

namespace {

constexpr double kPi = std::numbers::pi;

double sign_power(int m) { return (m % 2 == 0) ? 1.0 : -1.0; }

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

constexpr double kFarFactor = 3.0;

}  // namespace

int NodalCurveModel::genus() const {
    return static_cast<int>(nodes.size()) - static_cast<int>(components.size()) + 1;
}

void validate_model(const NodalCurveModel& model) {
    if (model.components.empty()) throw ConfigError("nodal model has no components");
    std::vector<std::vector<int>> used(model.components.size());
    for (std::size_t c = 0; c < model.components.size(); ++c) {
        const auto& pts = model.components[c].points;
        if (pts.size() < 3)
            throw ConfigError("component " + std::to_string(c) + " is unstable: fewer than 3 special points");
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (!std::isfinite(pts[i].real()) || !std::isfinite(pts[i].imag()))
                throw ConfigError("marked point is not finite");
            for (std::size_t j = i + 1; j < pts.size(); ++j)
                if (std::abs(pts[i] - pts[j]) < 1e-9) throw ConfigError("marked points coincide");
        }
        used[c].assign(pts.size(), 0);
    }
    std::vector<int> parent(model.components.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[idx(x)] != x) x = parent[idx(x)] = parent[idx(parent[idx(x)])];
        return x;
    };
    auto check_branch = [&](const Branch& b) {
        if (b.component < 0 || idx(b.component) >= model.components.size())
            throw ConfigError("node references a missing component");
        const auto& pts = model.components[idx(b.component)].points;
        if (b.point < 0 || idx(b.point) >= pts.size()) throw ConfigError("node references a missing marked point");
        ++used[idx(b.component)][idx(b.point)];
    };
    for (const auto& n : model.nodes) {
        check_branch(n.a);
        check_branch(n.b);
        if (n.a == n.b) throw ConfigError("node joins a marked point to itself");
        parent[idx(find(n.a.component))] = find(n.b.component);
    }
    for (const auto& u : used)
        for (int k : u)
            if (k != 1) throw ConfigError("every marked point must be a branch of exactly one node");
    for (std::size_t c = 0; c < model.components.size(); ++c)
        if (find(static_cast<int>(c)) != find(0)) throw ConfigError("nodal model is disconnected");
    if (model.genus() < 2) throw ConfigError("nodal model has arithmetic genus < 2");
}

NodalCurveModel two_self_node_model() {
    NodalCurveModel m;
    m.name = "two_self_node";
    m.components.push_back({{complex(1.0, 0.0), complex(0.3, 1.1), complex(-1.2, 0.2), complex(-0.1, -0.9)}});
    m.nodes.push_back({{0, 0}, {0, 2}});
    m.nodes.push_back({{0, 1}, {0, 3}});
    return m;
}

NodalCurveModel dollar_sign_model() {
    NodalCurveModel m;
    m.name = "dollar_sign";
    m.components.push_back({{complex(1.0, 0.0), complex(-0.5, 0.9), complex(-0.6, -0.8)}});
    m.components.push_back({{complex(0.9, 0.2), complex(-0.4, 0.95), complex(-0.5, -0.85)}});
    for (int i = 0; i < 3; ++i) m.nodes.push_back({{0, i}, {1, i}});
    return m;
}

NodalCurveModel three_self_node_model() {
    NodalCurveModel m;
    m.name = "three_self_node";
    m.components.push_back({{complex(1.0, 0.0), complex(0.45, 0.9), complex(-0.55, 0.85), complex(-1.05, 0.1),
                             complex(-0.4, -0.9), complex(0.55, -0.8)}});
    for (int i = 0; i < 3; ++i) m.nodes.push_back({{0, i}, {0, i + 3}});
    return m;
}

NodalCurveModel model_from_pants_graph(const surface::PantsGraph& graph) {
    const auto verdict = surface::validate_pants_graph(graph);
    if (!verdict.accepted) throw ConfigError("pants graph rejected: " + verdict.violations.front());
    NodalCurveModel m;
    m.name = "pants_graph_g" + std::to_string(graph.genus);
    for (int v = 0; v < graph.vertex_count; ++v) {
        Component c;
        for (int k = 0; k < 3; ++k) c.points.push_back(std::polar(1.0, 2.0 * kPi * k / 3.0));
        m.components.push_back(c);
    }
    std::vector<int> next(idx(graph.vertex_count), 0);
    for (const auto& e : graph.edges) {
        const Branch a{e[0], next[idx(e[0])]++};
        const Branch b{e[1], next[idx(e[1])]++};
        m.nodes.push_back({a, b});
    }
    return m;
}

int dimension(int genus, int m) {
    if (genus < 2) throw ConfigError("dimension: genus must be >= 2");
    if (m < 1) throw ConfigError("dimension: weight must be >= 1");
    return m == 1 ? genus : (2 * m - 1) * (genus - 1);
}

Branch PlumbedSurface::partner(Branch br) const {
    const auto& n = model.nodes[idx(node_at[idx(br.component)][idx(br.point)])];
    return n.a == br ? n.b : n.a;
}

const NodeAnnulus& PlumbedSurface::annulus_at(Branch br) const {
    return annuli[idx(node_at[idx(br.component)][idx(br.point)])];
}

complex PlumbedSurface::transition(Branch br, complex tau) const {
    const auto& an = annulus_at(br);
    if (an.t == complex(0.0, 0.0)) throw ConfigError("transition: node is not smoothed");
    if (tau == complex(0.0, 0.0)) throw ConfigError("transition: tau = 0");
    return an.t / tau;
}

PlumbedSurface build_plumbed_surface(const NodalCurveModel& model, const std::vector<complex>& t) {
    validate_model(model);
    if (t.size() != model.nodes.size()) throw ConfigError("one smoothing parameter per node is required");
    PlumbedSurface s;
    s.model = model;
    for (const complex& tn : t) {
        const double at = std::abs(tn);
        if (!std::isfinite(at)) throw ConfigError("smoothing parameter is not finite");
        if (at >= kAnnulusRadius * kAnnulusRadius) throw ConfigError("smoothing parameter violates |t| < R^2");
        NodeAnnulus an;
        an.t = tn;
        if (at > 0.0) {
            an.middle_radius = std::sqrt(at);
            an.lambda = kPi / std::log(1.0 / at);
            an.modulus = std::log(kAnnulusRadius * kAnnulusRadius / at);
            an.core_length = 2.0 * kPi * kPi / an.modulus;
            an.collar_core_length = 2.0 * kPi * an.lambda;
        } else {
            an.modulus = std::numeric_limits<double>::infinity();
        }
        s.annuli.push_back(an);
    }
    for (const auto& c : model.components) {
        std::vector<double> scale;
        for (std::size_t i = 0; i < c.points.size(); ++i) {
            double d = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < c.points.size(); ++j)
                if (j != i) d = std::min(d, std::abs(c.points[i] - c.points[j]));
            scale.push_back(kChartFraction * d);
        }
        s.chart_scale.push_back(scale);
        s.node_at.emplace_back(c.points.size(), -1);
    }
    for (std::size_t n = 0; n < model.nodes.size(); ++n) {
        const auto& nd = model.nodes[n];
        s.node_at[idx(nd.a.component)][idx(nd.a.point)] = static_cast<int>(n);
        s.node_at[idx(nd.b.component)][idx(nd.b.point)] = static_cast<int>(n);
    }
    return s;
}

PlumbedSurface build_plumbed_surface(const NodalCurveModel& model, complex t) {
    return build_plumbed_surface(model, std::vector<complex>(model.nodes.size(), t));
}

void check_chart_point(const PlumbedSurface& surface, const ChartPoint& p) {
    if (p.component < 0 || idx(p.component) >= surface.model.components.size())
        throw ConfigError("chart point: no such component");
    if (!std::isfinite(p.coord.real()) || !std::isfinite(p.coord.imag()))
        throw ConfigError("chart point: coordinate is not finite");
    const auto& pts = surface.model.components[idx(p.component)].points;
    if (p.kind == ChartKind::Component) {
        for (std::size_t q = 0; q < pts.size(); ++q) {
            const double r = std::abs(p.coord - pts[q]) / surface.chart_scale[idx(p.component)][q];
            const double removed = std::abs(surface.annuli[idx(surface.node_at[idx(p.component)][q])].t);
            if (!(r > removed)) throw ConfigError("chart point: inside a removed disk");
        }
        return;
    }
    if (p.point < 0 || idx(p.point) >= pts.size()) throw ConfigError("chart point: no such marked point");
    const double r = std::abs(p.coord);
    const double removed = std::abs(surface.annulus_at({p.component, p.point}).t);
    if (!(r > removed && r < 1.0)) throw ConfigError("chart point: outside the branch chart");
}

ChartPoint to_branch_chart(const PlumbedSurface& surface, Branch br, complex x) {
    const auto& pts = surface.model.components[idx(br.component)].points;
    ChartPoint p{ChartKind::Branch, br.component, br.point,
                 (x - pts[idx(br.point)]) / surface.chart_scale[idx(br.component)][idx(br.point)]};
    check_chart_point(surface, p);
    return p;
}

ChartPoint to_component_chart(const PlumbedSurface& surface, const ChartPoint& p) {
    if (p.kind == ChartKind::Component) return p;
    const auto& pts = surface.model.components[idx(p.component)].points;
    ChartPoint q{ChartKind::Component, p.component, 0,
                 pts[idx(p.point)] + surface.chart_scale[idx(p.component)][idx(p.point)] * p.coord};
    check_chart_point(surface, q);
    return q;
}

double reference_density(complex x) { return 2.0 / (1.0 + std::norm(x)); }

namespace {

double collar_density(const NodeAnnulus& an, double r) {
    if (an.t == complex(0.0, 0.0))
        return collar::annulus_hyperbolic_density(complex(r, 0.0), collar::AnnulusChart::punctured_disk(1.0));
    return collar::annulus_hyperbolic_density(complex(r, 0.0), collar::AnnulusChart::annulus(std::abs(an.t), 1.0));
}

double own_branch_density(const PlumbedSurface& s, Branch br, complex tau) {
    const double r = std::abs(tau);
    const NodeAnnulus& an = s.annulus_at(br);
    if (r <= kAnnulusRadius) return collar_density(an, r);
    const double rho = s.chart_scale[idx(br.component)][idx(br.point)];
    const complex x = s.model.components[idx(br.component)].points[idx(br.point)] + rho * tau;
    const double ref = reference_density(x) * rho;
    if (r >= kBlendRadius) return ref;
    const double b = smooth_ramp(r, kAnnulusRadius, kBlendRadius);
    return std::exp((1.0 - b) * std::log(collar_density(an, r)) + b * std::log(ref));
}

double branch_density(const PlumbedSurface& s, Branch br, complex tau) {
    const NodeAnnulus& an = s.annulus_at(br);
    if (an.t != complex(0.0, 0.0) && std::abs(tau) < an.middle_radius) {
        const complex sigma = an.t / tau;
        return own_branch_density(s, s.partner(br), sigma) * std::abs(an.t) / std::norm(tau);
    }
    return own_branch_density(s, br, tau);
}

}  // namespace

double grafted_density(const PlumbedSurface& surface, const ChartPoint& p) {
    check_chart_point(surface, p);
    if (p.kind == ChartKind::Branch) return branch_density(surface, {p.component, p.point}, p.coord);
    const auto& pts = surface.model.components[idx(p.component)].points;
    for (std::size_t q = 0; q < pts.size(); ++q) {
        const double rho = surface.chart_scale[idx(p.component)][q];
        const complex tau = (p.coord - pts[q]) / rho;
        if (std::abs(tau) < kBlendRadius)
            return branch_density(surface, {p.component, static_cast<int>(q)}, tau) / rho;
    }
    return reference_density(p.coord);
}

double branch_injectivity_radius(const PlumbedSurface& surface, Branch br, complex tau) {
    const NodeAnnulus& an = surface.annulus_at(br);
    double r = std::abs(tau);
    if (an.t != complex(0.0, 0.0) && r < an.middle_radius) r = std::abs(an.t) / r;
    if (r > kAnnulusRadius) return std::numeric_limits<double>::infinity();
    if (an.t == complex(0.0, 0.0)) return kPi / std::log(1.0 / r);
    const double theta = an.lambda * std::log(1.0 / r);
    return kPi * an.lambda / std::sin(theta);
}

double SectionLayout::far_radius(int component) const {
    double r = kFarFactor;
    for (const complex& p : surface->model.components[idx(component)].points) r = std::max(r, kFarFactor * std::abs(p));
    return r;
}

double SectionLayout::column_scale(std::size_t c) const {
    const Column& col = columns[c];
    const double rho = surface->chart_scale[idx(col.component)][idx(col.point)];
    const double s = surface->annulus_at({col.component, col.point}).middle_radius;
    const int excess = std::max(col.order - m, 0);
    return std::pow(rho, col.order - m) * std::pow(s, excess);
}

CMatrix SectionLayout::component_values(int component, const std::vector<complex>& x) const {
    CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(columns.size()));
    const auto& pts = surface->model.components[idx(component)].points;
    const double far = far_radius(component);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const Column& col = columns[c];
        if (col.component != component) continue;
        const double rho = surface->chart_scale[idx(component)][idx(col.point)];
        const double s = surface->annulus_at({col.component, col.point}).middle_radius;
        const int excess = std::max(col.order - m, 0);
        const double factor = std::pow(rho, -m) * std::pow(s, excess);
        const complex p = pts[idx(col.point)];
        for (std::size_t q = 0; q < x.size(); ++q) {
            auto& v = out(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(c));
            if (std::abs(x[q]) < far) {
                v = factor * std::pow(rho / (x[q] - p), col.order);
                continue;
            }
            // Far from the marked points only the x^{-q}, q >= 2m, part of the
            // expansion of (x - p)^{-j} survives in a holomorphic section.
            const complex z = p / x[q];
            const int j = col.order;
            const int n0 = std::max(0, 2 * m - j);
            complex term = binomial(j - 1 + n0, n0) * std::pow(z, n0);
            complex sum = 0.0;
            for (int n = n0; n < n0 + 400; ++n) {
                sum += term;
                if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
                term *= z * static_cast<double>(j + n) / static_cast<double>(n + 1);
            }
            v = factor * std::pow(rho, col.order) * std::pow(x[q], -j) * sum;
        }
    }
    return out;
}

CMatrix SectionLayout::branch_values(Branch br, const std::vector<complex>& tau) const {
    const auto& pts = surface->model.components[idx(br.component)].points;
    const double rho = surface->chart_scale[idx(br.component)][idx(br.point)];
    const double s = surface->annulus_at(br).middle_radius;
    std::vector<complex> x(tau.size());
    for (std::size_t q = 0; q < tau.size(); ++q) x[q] = pts[idx(br.point)] + rho * tau[q];
    CMatrix out = component_values(br.component, x);
    const double far = far_radius(br.component);
    for (std::size_t q = 0; q < tau.size(); ++q) {
        const complex frame = std::pow(rho * tau[q], m);
        if (std::abs(x[q]) >= far) {
            out.row(static_cast<Eigen::Index>(q)) *= frame;
            continue;
        }
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const Column& col = columns[c];
            if (col.component != br.component) continue;
            auto& v = out(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(c));
            if (col.point == br.point) {
                v = col.order <= m ? std::pow(tau[q], m - col.order) : std::pow(s / tau[q], col.order - m);
            } else {
                v *= frame;
            }
        }
    }
    return out;
}

EvaluatedValue evaluate(const MDifferential& s, const ChartPoint& p) {
    const PlumbedSurface& surf = *s.layout->surface;
    check_chart_point(surf, p);
    const double rho = grafted_density(surf, p);
    EvaluatedValue out;
    if (p.kind == ChartKind::Component) {
        out.value = (s.layout->component_values(p.component, {p.coord}) * s.coefficients)(0);
        out.norm = std::abs(out.value) * std::pow(rho, -s.m());
    } else {
        out.value = (s.layout->branch_values({p.component, p.point}, {p.coord}) * s.coefficients)(0);
        out.norm = std::abs(out.value) * std::pow(std::abs(p.coord) * rho, -s.m());
    }
    return out;
}

MDifferential SectionBasis::section(int i) const {
    if (i < 0 || i >= size()) throw ConfigError("section index out of range");
    return MDifferential{layout, coefficients.col(i)};
}

SectionBasis SectionBasis::transformed(const CMatrix& t) const {
    if (t.rows() != coefficients.cols()) throw ConfigError("basis transform has the wrong shape");
    SectionBasis out = *this;
    out.coefficients = coefficients * t;
    return out;
}

int default_truncation(int m) { return m + 8; }

SectionBasis solve_basis(std::shared_ptr<const PlumbedSurface> surface, int m, int truncation) {
    if (m < 2) throw ConfigError("basis solve requires m >= 2");
    bool smoothed = false;
    for (const auto& an : surface->annuli) smoothed = smoothed || an.t != complex(0.0, 0.0);
    if (smoothed && truncation < m + 4) throw ConfigError("truncation K must be >= m + 4");
    auto layout = std::make_shared<SectionLayout>();
    layout->surface = surface;
    layout->m = m;
    layout->truncation = smoothed ? truncation : 0;
    const auto& comps = surface->model.components;
    for (std::size_t c = 0; c < comps.size(); ++c)
        for (std::size_t i = 0; i < comps[c].points.size(); ++i) {
            const bool nodal = surface->is_nodal(surface->node_at[c][i]);
            const int max_order = nodal ? m : m + layout->truncation;
            for (int j = 1; j <= max_order; ++j)
                layout->columns.push_back({static_cast<int>(c), static_cast<int>(i), j});
        }
    const auto n_cols = static_cast<Eigen::Index>(layout->columns.size());

    std::vector<CVector> rows;
    // Holomorphy at infinity: coefficients of x^{-q}, q = 1 .. 2m - 1, vanish.
    for (std::size_t c = 0; c < comps.size(); ++c)
        for (int q = 1; q <= 2 * m - 1; ++q) {
            CVector row = CVector::Zero(n_cols);
            for (Eigen::Index k = 0; k < n_cols; ++k) {
                const Column& col = layout->columns[idx(static_cast<int>(k))];
                if (idx(col.component) != c || col.order > q) continue;
                const complex p = comps[c].points[idx(col.point)];
                row(k) = binomial(q - 1, q - col.order) * std::pow(p, q - col.order) *
                         layout->column_scale(static_cast<std::size_t>(k));
            }
            rows.push_back(row);
        }
    const double sign = sign_power(m);
    for (std::size_t n = 0; n < surface->model.nodes.size(); ++n) {
        const auto& nd = surface->model.nodes[n];
        const auto& an = surface->annuli[n];
        if (an.t == complex(0.0, 0.0)) {
            CVector row = CVector::Zero(n_cols);
            for (Eigen::Index k = 0; k < n_cols; ++k) {
                const Column& col = layout->columns[idx(static_cast<int>(k))];
                if (col.order != m) continue;
                if (Branch{col.component, col.point} == nd.b) row(k) += 1.0;
                if (Branch{col.component, col.point} == nd.a) row(k) -= sign;
            }
            rows.push_back(row);
            continue;
        }
        const int kt = layout->truncation;
        const std::size_t n_pts = static_cast<std::size_t>(4 * kt + 16);
        std::vector<complex> tau(n_pts), sigma(n_pts);
        std::vector<double> phi(n_pts);
        for (std::size_t q = 0; q < n_pts; ++q) {
            phi[q] = 2.0 * kPi * static_cast<double>(q) / static_cast<double>(n_pts);
            tau[q] = std::polar(an.middle_radius, phi[q]);
            sigma[q] = an.t / tau[q];
        }
        const CMatrix d = layout->branch_values(nd.a, tau) - sign * layout->branch_values(nd.b, sigma);
        for (int k = -kt; k <= kt; ++k) {
            CVector row = CVector::Zero(n_cols);
            for (std::size_t q = 0; q < n_pts; ++q)
                row += d.row(static_cast<Eigen::Index>(q)).transpose() * std::polar(1.0, -k * phi[q]);
            rows.push_back(row / static_cast<double>(n_pts));
        }
    }
    CMatrix a(static_cast<Eigen::Index>(rows.size()), n_cols);
    for (std::size_t r = 0; r < rows.size(); ++r) a.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    normalize_rows(a);
    const Nullspace ns = numerical_nullspace(a, kRankGap);

    SectionBasis out;
    out.layout = layout;
    out.coefficients = ns.basis;
    out.singular_values = ns.singular_values;
    out.gap = ns.gap;
    out.constraint_rank = ns.rank;
    out.source = smoothed ? BasisSource::PlumbedSolve : BasisSource::NodalSolve;
    const int target = dimension(surface->genus(), m);
    if (out.size() != target || ns.gap < kRankGap) {
        std::ostringstream msg;
        msg << "basis solve: kernel dimension " << out.size() << " (expected " << target << "), singular-value gap "
            << ns.gap;
        if (smoothed) msg << "; increase the truncation K or |t|";
        throw NumericalError(msg.str());
    }
    return out;
}

SectionBasis nodal_basis(const NodalCurveModel& model, int m) {
    auto surface = std::make_shared<const PlumbedSurface>(
        build_plumbed_surface(model, std::vector<complex>(model.nodes.size(), complex(0.0, 0.0))));
    return solve_basis(surface, m, 0);
}

SectionBasis plumbed_basis(const NodalCurveModel& model, const std::vector<complex>& t, int m, int truncation) {
    for (const complex& tn : t)
        if (tn == complex(0.0, 0.0)) throw ConfigError("plumbed_basis requires 0 < |t|");
    auto surface = std::make_shared<const PlumbedSurface>(build_plumbed_surface(model, t));
    return solve_basis(surface, m, truncation < 0 ? default_truncation(m) : truncation);
}

SectionBasis plumbed_basis(const NodalCurveModel& model, complex t, int m, int truncation) {
    return plumbed_basis(model, std::vector<complex>(model.nodes.size(), t), m, truncation);
}

std::vector<Column> canonical_pivots(const SectionBasis& nodal) {
    const CMatrix zt = nodal.coefficients.transpose();
    Eigen::ColPivHouseholderQR<CMatrix> qr(zt);
    std::vector<Column> out;
    const auto& perm = qr.colsPermutation().indices();
    for (int i = 0; i < nodal.size(); ++i) out.push_back(nodal.layout->columns[idx(perm(i))]);
    return out;
}

SectionBasis canonicalize(const SectionBasis& basis, const std::vector<Column>& pivots) {
    if (static_cast<int>(pivots.size()) != basis.size()) throw ConfigError("pivot count differs from basis size");
    CMatrix pz(basis.size(), basis.size());
    for (std::size_t i = 0; i < pivots.size(); ++i) {
        const auto& cols = basis.layout->columns;
        const auto it = std::find(cols.begin(), cols.end(), pivots[i]);
        if (it == cols.end()) throw ConfigError("pivot column absent from basis layout");
        pz.row(static_cast<Eigen::Index>(i)) = basis.coefficients.row(it - cols.begin());
    }
    Eigen::FullPivLU<CMatrix> lu(pz);
    if (!lu.isInvertible()) throw NumericalError("canonicalize: pivot block is singular");
    return basis.transformed(lu.inverse());
}

namespace {

void check_branch_radius(const MDifferential& s, Branch br, double r) {
    const double removed = std::abs(s.layout->surface->annulus_at(br).t);
    if (!(r > removed && r < 1.0)) throw ConfigError("contour radius outside the branch chart");
}

CVector circle_values(const MDifferential& s, Branch br, double r, std::size_t n, double offset = 0.0) {
    std::vector<complex> tau(n);
    for (std::size_t q = 0; q < n; ++q)
        tau[q] = std::polar(r, 2.0 * kPi * (static_cast<double>(q) + offset) / static_cast<double>(n));
    return s.layout->branch_values(br, tau) * s.coefficients;
}

}  // namespace

complex laurent_coefficient(const MDifferential& s, Branch br, double r, int k, std::size_t n) {
    check_branch_radius(s, br, r);
    if (n == 0) throw ConfigError("contour needs at least one point");
    const CVector u = circle_values(s, br, r, n);
    std::vector<complex> terms(n);
    for (std::size_t q = 0; q < n; ++q) {
        const double phi = 2.0 * kPi * static_cast<double>(q) / static_cast<double>(n);
        terms[q] = u(static_cast<Eigen::Index>(q)) * std::polar(std::pow(r, -k), -k * phi);
    }
    return pairwise_sum(std::span<const complex>(terms)) / static_cast<double>(n);
}

complex residue_coefficient(const MDifferential& s, Branch br, double r, std::size_t n) {
    return laurent_coefficient(s, br, r, 0, n);
}

std::vector<complex> laurent_tail(const MDifferential& s, Branch br, int truncation, double r, std::size_t n) {
    if (n == 0) n = static_cast<std::size_t>(std::max(64, 4 * truncation + 16));
    std::vector<complex> out;
    for (int k = -truncation; k <= truncation; ++k) out.push_back(laurent_coefficient(s, br, r, k, n));
    return out;
}

double node_matching_defect(const MDifferential& s, int node, double r) {
    const auto& nd = s.layout->surface->model.nodes.at(idx(node));
    const complex ua = residue_coefficient(s, nd.a, r);
    const complex ub = residue_coefficient(s, nd.b, r);
    return std::abs(ub - sign_power(s.m()) * ua);
}

double gluing_defect(const MDifferential& s, int node) {
    const auto& surf = *s.layout->surface;
    const auto& nd = surf.model.nodes.at(idx(node));
    const auto& an = surf.annuli[idx(node)];
    if (an.t == complex(0.0, 0.0)) return 0.0;
    const std::size_t n = static_cast<std::size_t>(8 * (s.layout->truncation + s.m()) + 64);
    std::vector<complex> tau(n), sigma(n);
    for (std::size_t q = 0; q < n; ++q) {
        tau[q] = std::polar(an.middle_radius, 2.0 * kPi * (static_cast<double>(q) + 0.5) / static_cast<double>(n));
        sigma[q] = an.t / tau[q];
    }
    const CVector d = s.layout->branch_values(nd.a, tau) * s.coefficients -
                      sign_power(s.m()) * (s.layout->branch_values(nd.b, sigma) * s.coefficients);
    return d.cwiseAbs().maxCoeff();
}

double envelope_ratio(const MDifferential& s, int node) {
    const auto& surf = *s.layout->surface;
    const auto& nd = surf.model.nodes.at(idx(node));
    const auto& an = surf.annuli[idx(node)];
    const double inner = an.t == complex(0.0, 0.0) ? 1e-6 : an.middle_radius;
    constexpr std::size_t kAngles = 64, kRadii = 40;
    double inside = 0.0, boundary = 0.0;
    for (const Branch br : {nd.a, nd.b}) {
        boundary = std::max(boundary, circle_values(s, br, kAnnulusRadius, kAngles).cwiseAbs().maxCoeff());
        for (std::size_t i = 0; i < kRadii; ++i) {
            const double f = static_cast<double>(i) / static_cast<double>(kRadii - 1);
            const double r = std::exp(std::log(inner) + f * (std::log(kAnnulusRadius) - std::log(inner)));
            inside = std::max(inside, circle_values(s, br, r, kAngles, 0.5).cwiseAbs().maxCoeff());
        }
    }
    return boundary > 0.0 ? inside / boundary : 0.0;
}

std::vector<complex> default_hyperelliptic_roots() {
    return {complex(-2.0, 0.0), complex(-1.0, 0.3), complex(-0.3, 0.5),
            complex(0.4, -0.2), complex(1.1, 0.0),  complex(2.3, 0.4)};
}

HyperellipticFixture hyperelliptic_fixture_basis(int m, const std::vector<complex>& roots) {
    if (m < 2 || m > 3) throw ConfigError("hyperelliptic fixture supports m in {2, 3}");
    if (roots.size() != 6) throw ConfigError("hyperelliptic fixture needs a sextic (6 roots)");
    for (std::size_t i = 0; i < roots.size(); ++i)
        for (std::size_t j = i + 1; j < roots.size(); ++j)
            if (std::abs(roots[i] - roots[j]) < 1e-8) throw ConfigError("hyperelliptic fixture: repeated root");
    // Valuations: over x = infinity v(x) = -1, v(y) = -3, v(dx/y) = 1; at a
    // Weierstrass point e, v(x - e) = 2, v(y) = 1, v(dx/y) = 0.
    bool zero_root = false;
    for (const complex& r : roots) zero_root = zero_root || std::abs(r) < 1e-8;
    HyperellipticFixture fx;
    fx.roots = roots;
    fx.m = m;
    auto add = [&](int a, int b) {
        HyperellipticSection s;
        s.power_x = a;
        s.power_y = b;
        s.order_at_infinity = -a - 3 * b + m;
        s.order_at_branch_point = (zero_root ? 2 * a : 0) + b;
        if (s.order_at_infinity < 0 || s.order_at_branch_point < 0)
            throw InvariantError("hyperelliptic fixture produced a section with a pole");
        fx.sections.push_back(s);
    };
    for (int a = 0; a <= m; ++a) add(a, 0);
    for (int a = 0; a <= m - 3; ++a) add(a, 1);
    return fx;
}

complex evaluate(const HyperellipticSection& s, int m, complex x, complex y) {
    return std::pow(x, s.power_x) * std::pow(y, s.power_y - m);
}

}  // namespace stable_degen::diff
