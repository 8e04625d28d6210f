#include "stable_degen/bergman.hpp"

#include "stable_degen/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace stable_degen::bergman {

using diff::Branch;
using diff::ChartKind;
using diff::PlumbedSurface;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kDyadicCuts = 12;
constexpr int kBlendPanels = 4;

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

}  // namespace

QuadratureOrders QuadratureOrders::doubled() const {
    QuadratureOrders d = *this;
    d.radial *= 2;
    d.angular *= 2;
    d.outer_radial *= 2;
    d.outer_angular *= 2;
    return d;
}

std::size_t QuadraturePlan::size() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.coords.size();
    return n;
}

void validate(const EpsilonProductConfig& cfg) {
    if (!(cfg.epsilon > 0.0) || !(cfg.epsilon < cfg.margulis_cap))
        throw ConfigError("epsilon must satisfy 0 < epsilon < margulis_cap");
    if (!(cfg.margulis_cap < kPi)) throw ConfigError("margulis_cap must be < pi");
    if (cfg.orders.radial < kMinRadialOrder) throw ConfigError("radial quadrature order below 24");
    if (cfg.orders.angular < kMinAngularOrder) throw ConfigError("angular quadrature order below 64");
    if (cfg.orders.outer_radial < kMinRadialOrder || cfg.orders.outer_angular < 8)
        throw ConfigError("outer quadrature order below the minimum");
    if (!(cfg.orders.max_panel > 0.0) || !(cfg.orders.max_angle_panel > 0.0))
        throw ConfigError("panel lengths must be positive");
}

double thick_cut_radius(const PlumbedSurface& surface, Branch br, double epsilon) {
    const auto& an = surface.annulus_at(br);
    if (an.t == complex(0.0, 0.0)) return std::exp(-kPi / epsilon);
    const double y = kPi * an.lambda / epsilon;
    if (y >= 1.0) return an.middle_radius;
    return std::exp(-std::asin(y) / an.lambda);
}

namespace {

constexpr double kTwoPi = 2.0 * kPi;

double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    return a < 0.0 ? a + kTwoPi : a;
}

/// Distance from p_q to the boundary of its Voronoi cell along direction phi (inf if unbounded).
struct VoronoiCell {
    std::vector<double> dist;    // |p_r - p_q|
    std::vector<double> angle;   // arg(p_r - p_q)

    double boundary(double phi) const {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < dist.size(); ++r) {
            const double c = std::cos(phi - angle[r]);
            if (c > 0.0) best = std::min(best, 0.5 * dist[r] / c);
        }
        return best;
    }

    /// Angles where the boundary function is not analytic.
    std::vector<double> kinks() const {
        std::vector<double> out = {0.0, kTwoPi};
        for (std::size_t r = 0; r < dist.size(); ++r) {
            out.push_back(wrap_angle(angle[r] + 0.5 * kPi));
            out.push_back(wrap_angle(angle[r] - 0.5 * kPi));
            for (std::size_t u = r + 1; u < dist.size(); ++u) {
                const double a = dist[u] * std::cos(angle[r]) - dist[r] * std::cos(angle[u]);
                const double b = dist[u] * std::sin(angle[r]) - dist[r] * std::sin(angle[u]);
                if (a == 0.0 && b == 0.0) continue;
                const double phi = std::atan2(-a, b);
                out.push_back(wrap_angle(phi));
                out.push_back(wrap_angle(phi + kPi));
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
};

double branch_lower_radius(const PlumbedSurface& surface, Branch br, const EpsilonProductConfig& cfg) {
    const auto& an = surface.annulus_at(br);
    if (cfg.full_surface) {
        if (an.t == complex(0.0, 0.0)) throw ConfigError("full-surface product diverges at a node");
        return an.middle_radius;
    }
    return thick_cut_radius(surface, br, cfg.epsilon);
}

ChartBlock branch_block(const PlumbedSurface& surface, Branch br, int m, const EpsilonProductConfig& cfg) {
    const auto& pts = surface.model.components[idx(br.component)].points;
    const complex p = pts[idx(br.point)];
    const double rho = surface.chart_scale[idx(br.component)][idx(br.point)];
    ChartBlock blk;
    blk.component = br.component;
    blk.point = br.point;

    // Inside the chart: ln|tau| from the thick cut to 0.
    const double lower = branch_lower_radius(surface, br, cfg);
    std::vector<double> breaks = {std::log(lower), 0.0};
    // Cut levels of 2^k epsilon are shared breakpoints, so the plan for epsilon/2
    // contains the plan for epsilon node for node.
    for (int k = 1; k <= kDyadicCuts; ++k) {
        const double r = thick_cut_radius(surface, br, std::ldexp(cfg.epsilon, k));
        if (r > lower * (1.0 + 1e-12) && r < diff::kAnnulusRadius) breaks.push_back(std::log(r));
    }
    // The blend between the collar and reference metrics gets its own short panels.
    const double b0 = std::log(diff::kAnnulusRadius), b1 = std::log(diff::kBlendRadius);
    for (int k = 0; k <= kBlendPanels; ++k) breaks.push_back(b0 + (b1 - b0) * k / kBlendPanels);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    const QuadratureRule radial =
        composite_gauss_legendre(breaks, static_cast<std::size_t>(cfg.orders.radial), cfg.orders.max_panel);
    const int na = cfg.orders.angular;
    const double wphi = kTwoPi / static_cast<double>(na);
    for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
        const double r = std::exp(radial.nodes[i]);
        for (int j = 0; j < na; ++j) {
            const complex tau = std::polar(r, kTwoPi * j / na);
            const double dens = diff::grafted_density(surface, {ChartKind::Branch, br.component, br.point, tau});
            blk.coords.push_back(tau);
            blk.weights.push_back(std::pow(r * dens, 2 - 2 * m) * radial.weights[i] * wphi);
        }
    }

    // Outside the chart, up to the Voronoi cell boundary, in w = 1/|tau|.
    VoronoiCell cell;
    for (std::size_t q = 0; q < pts.size(); ++q) {
        if (static_cast<int>(q) == br.point) continue;
        cell.dist.push_back(std::abs(pts[q] - p));
        cell.angle.push_back(std::arg(pts[q] - p));
    }
    const std::vector<double> kinks = cell.kinks();
    const QuadratureRule angles = composite_gauss_legendre(kinks, static_cast<std::size_t>(cfg.orders.outer_angular),
                                                           cfg.orders.max_angle_panel);
    const QuadratureRule unit = gauss_legendre(static_cast<std::size_t>(cfg.orders.outer_radial), 0.0, 1.0);
    for (std::size_t a = 0; a < angles.nodes.size(); ++a) {
        const double phi = angles.nodes[a];
        const double edge = cell.boundary(phi) / rho;  // in units of the chart radius
        const double w_lo = std::isfinite(edge) ? 1.0 / edge : 0.0;
        if (!(w_lo < 1.0)) throw InvariantError("branch chart leaves its Voronoi cell");
        for (std::size_t i = 0; i < unit.nodes.size(); ++i) {
            const double w = w_lo + (1.0 - w_lo) * unit.nodes[i];
            const double r = 1.0 / w;
            const complex tau = std::polar(r, phi);
            const double dens = diff::reference_density(p + rho * tau) * rho;
            blk.coords.push_back(tau);
            blk.weights.push_back(std::pow(r * dens, 2 - 2 * m) / w * (1.0 - w_lo) * unit.weights[i] *
                                  angles.weights[a]);
        }
    }
    return blk;
}

}  // namespace

QuadraturePlan build_plan(const PlumbedSurface& surface, int m, const EpsilonProductConfig& cfg) {
    validate(cfg);
    QuadraturePlan plan;
    plan.m = m;
    const auto& comps = surface.model.components;
    for (std::size_t c = 0; c < comps.size(); ++c)
        for (std::size_t i = 0; i < comps[c].points.size(); ++i)
            plan.blocks.push_back(branch_block(surface, {static_cast<int>(c), static_cast<int>(i)}, m, cfg));
    return plan;
}

CMatrix plan_values(const QuadraturePlan& plan, const diff::SectionLayout& layout, const CMatrix& coefficients) {
    CMatrix out(static_cast<Eigen::Index>(plan.size()), coefficients.cols());
    Eigen::Index row = 0;
    constexpr std::size_t kChunk = 2048;
    for (const auto& blk : plan.blocks) {
        for (std::size_t start = 0; start < blk.coords.size(); start += kChunk) {
            const std::size_t stop = std::min(blk.coords.size(), start + kChunk);
            const std::vector<complex> pts(blk.coords.begin() + static_cast<std::ptrdiff_t>(start),
                                           blk.coords.begin() + static_cast<std::ptrdiff_t>(stop));
            const CMatrix basis = layout.branch_values({blk.component, blk.point}, pts);
            out.middleRows(row, basis.rows()) = basis * coefficients;
            row += basis.rows();
        }
    }
    return out;
}

std::vector<double> plan_weights(const QuadraturePlan& plan) {
    std::vector<double> w;
    w.reserve(plan.size());
    for (const auto& blk : plan.blocks) w.insert(w.end(), blk.weights.begin(), blk.weights.end());
    return w;
}

CMatrix weighted_gram(const CMatrix& values, const std::vector<double>& weights) {
    const Eigen::Index n = values.cols();
    const auto q = static_cast<std::size_t>(values.rows());
    if (weights.size() != q) throw ConfigError("weighted_gram: weight count mismatch");
    CMatrix g(n, n);
    std::vector<complex> terms(q);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a; b < n; ++b) {
            for (std::size_t k = 0; k < q; ++k) {
                const auto kk = static_cast<Eigen::Index>(k);
                terms[k] = weights[k] * (std::conj(values(kk, a)) * values(kk, b));
            }
            const complex v = pairwise_sum(std::span<const complex>(terms));
            g(a, b) = a == b ? complex(v.real(), 0.0) : v;
            g(b, a) = std::conj(g(a, b));
        }
    }
    return g;
}

complex epsilon_inner_product(const diff::MDifferential& s1, const diff::MDifferential& s2,
                              const EpsilonProductConfig& cfg) {
    if (s1.layout != s2.layout) throw ConfigError("sections live on different atlases");
    const QuadraturePlan plan = build_plan(*s1.layout->surface, s1.m(), cfg);
    CMatrix coeffs(s1.coefficients.size(), 2);
    coeffs.col(0) = s1.coefficients;
    coeffs.col(1) = s2.coefficients;
    const CMatrix g = weighted_gram(plan_values(plan, *s1.layout, coeffs), plan_weights(plan));
    return g(0, 1);
}

GramMatrix gram_from_entries(const CMatrix& entries) {
    GramMatrix g;
    g.entries = entries;
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(entries);
    g.eigenvalues = eig.eigenvalues();
    const double lo = g.eigenvalues.size() ? g.eigenvalues(0) : 1.0;
    const double hi = g.eigenvalues.size() ? g.eigenvalues(g.eigenvalues.size() - 1) : 1.0;
    g.condition_number = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    return g;
}

namespace {

CMatrix gram_entries(const diff::SectionBasis& basis, const EpsilonProductConfig& cfg) {
    const QuadraturePlan plan = build_plan(*basis.layout->surface, basis.layout->m, cfg);
    return weighted_gram(plan_values(plan, *basis.layout, basis.coefficients), plan_weights(plan));
}

}  // namespace

GramMatrix gram_matrix(const diff::SectionBasis& basis, const EpsilonProductConfig& cfg, bool richardson) {
    GramMatrix g = gram_from_entries(gram_entries(basis, cfg));
    if (!(g.eigenvalues.size() == 0 || g.eigenvalues(0) > 0.0))
        throw NumericalError("Gram matrix is not positive definite (dependent basis or quadrature failure)");
    if (richardson) {
        EpsilonProductConfig fine = cfg;
        fine.orders = cfg.orders.doubled();
        const CMatrix g2 = gram_entries(basis, fine);
        double worst = 0.0;
        for (Eigen::Index a = 0; a < g2.rows(); ++a)
            for (Eigen::Index b = 0; b < g2.cols(); ++b) {
                const double scale = std::sqrt(g.entries(a, a).real() * g.entries(b, b).real());
                worst = std::max(worst, std::abs(g2(a, b) - g.entries(a, b)) / scale);
            }
        g.richardson_change = worst;
        if (worst > kRichardsonTolerance)
            throw NumericalError("quadrature orders insufficient: doubling moved the Gram matrix by " +
                                 std::to_string(worst));
    }
    return g;
}

OrthonormalBasis orthonormalize(const diff::SectionBasis& basis, const GramMatrix& gram) {
    if (gram.entries.rows() != basis.size()) throw ConfigError("Gram matrix does not match the basis");
    OrthonormalBasis onb;
    onb.transform = cholesky_whitening(gram.entries);
    onb.sections = basis.transformed(onb.transform);
    return onb;
}

SamplePlan default_sample_plan(const diff::NodalCurveModel& model, int per_component, std::uint64_t seed) {
    diff::validate_model(model);
    if (per_component < 1) throw ConfigError("sample count must be positive");
    const auto surface = diff::build_plumbed_surface(model, complex(0.0, 0.0));
    std::mt19937_64 gen(seed);
    auto uniform = [&gen]() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    SamplePlan plan;
    for (std::size_t c = 0; c < model.components.size(); ++c) {
        const auto& pts = model.components[c].points;
        int found = 0;
        for (int attempt = 0; found < per_component; ++attempt) {
            if (attempt > 100000) throw ConfigError("sample plan: no room on the component core");
            const complex x(3.6 * uniform() - 1.8, 3.6 * uniform() - 1.8);
            if (std::abs(x) > 1.8) continue;
            bool ok = true;
            for (std::size_t q = 0; q < pts.size(); ++q)
                ok = ok && std::abs(x - pts[q]) >= 1.2 * surface.chart_scale[c][q];
            if (!ok) continue;
            plan.points.push_back({ChartKind::Component, static_cast<int>(c), 0, x});
            ++found;
        }
    }
    return plan;
}

EmbeddedCloud embed_cloud(const OrthonormalBasis& onb, const SamplePlan& samples) {
    const auto& layout = *onb.sections.layout;
    const Eigen::Index d = onb.sections.size();
    EmbeddedCloud cloud;
    cloud.vectors.resize(d, static_cast<Eigen::Index>(samples.points.size()));
    for (std::size_t k = 0; k < samples.points.size(); ++k) {
        const auto& p = samples.points[k];
        if (p.kind != ChartKind::Component) throw ConfigError("samples must be given in component charts");
        diff::check_chart_point(*layout.surface, p);
        const CVector v = (layout.component_values(p.component, {p.coord}) * onb.sections.coefficients).transpose();
        cloud.raw_norms.push_back(v.norm());
        cloud.vectors.col(static_cast<Eigen::Index>(k)) = v;
    }
    double top = 0.0;
    for (double n : cloud.raw_norms) top = std::max(top, n);
    cloud.min_norm = cloud.raw_norms.empty() ? 0.0 : *std::min_element(cloud.raw_norms.begin(), cloud.raw_norms.end());
    if (!(cloud.min_norm > 1e-14 * top) || !(top > 0.0))
        throw NumericalError("embed_cloud: a sample maps to the zero vector (base point)");
    for (Eigen::Index k = 0; k < cloud.vectors.cols(); ++k)
        cloud.vectors.col(k) /= cloud.raw_norms[static_cast<std::size_t>(k)];
    return cloud;
}

double min_pairwise_fs_distance(const EmbeddedCloud& cloud) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < cloud.vectors.cols(); ++i)
        for (Eigen::Index j = i + 1; j < cloud.vectors.cols(); ++j)
            best = std::min(best, fs_distance(cloud.vectors.col(i), cloud.vectors.col(j)));
    return best;
}

double norm_ratio(const diff::MDifferential& s, const EpsilonProductConfig& cfg_eps,
                  const EpsilonProductConfig& cfg_eps_half) {
    const double a = epsilon_inner_product(s, s, cfg_eps).real();
    if (!(a > 0.0)) throw NumericalError("norm_ratio: section has zero epsilon-norm");
    const double b = epsilon_inner_product(s, s, cfg_eps_half).real();
    return std::sqrt(b / a);
}

NormComparisonReport norm_comparison(const OrthonormalBasis& onb, const EpsilonProductConfig& cfg_eps,
                                     const EpsilonProductConfig& cfg_eps_half) {
    const CMatrix g1 = gram_entries(onb.sections, cfg_eps);
    const CMatrix g2 = gram_entries(onb.sections, cfg_eps_half);
    NormComparisonReport rep;
    for (Eigen::Index a = 0; a < g1.rows(); ++a) {
        if (!(g1(a, a).real() > 0.0)) throw NumericalError("norm_comparison: zero epsilon-norm");
        rep.ratios.push_back(std::sqrt(g2(a, a).real() / g1(a, a).real()));
    }
    rep.max_ratio = rep.ratios.empty() ? 0.0 : *std::max_element(rep.ratios.begin(), rep.ratios.end());
    rep.min_ratio = rep.ratios.empty() ? 0.0 : *std::min_element(rep.ratios.begin(), rep.ratios.end());
    return rep;
}

Alignment align_clouds(const EmbeddedCloud& a, const EmbeddedCloud& b) { return unitary_align(a.vectors, b.vectors); }

}  // namespace stable_degen::bergman
