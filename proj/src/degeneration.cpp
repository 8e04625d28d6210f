#include "stable_degen/degeneration.hpp"

#include "stable_degen/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

namespace stable_degen::degen {

namespace {

using bergman::EpsilonProductConfig;
using diff::SectionBasis;

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

constexpr double kResidueRadius = 0.25;

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("STABLE_DEGEN_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0 && v <= 256) return static_cast<int>(v);
        throw ConfigError("STABLE_DEGEN_WORKERS must be an integer in 1..256");
    }
    return 1;
}

// Runs fn(i) for i in [0, n); results are written by index so the outcome
// does not depend on scheduling. The first exception (lowest index) is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    const auto run = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) run(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < w; ++k)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) run(i);
            });
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

EpsilonProductConfig with_epsilon(const EpsilonProductConfig& cfg, double eps) {
    EpsilonProductConfig out = cfg;
    out.epsilon = eps;
    return out;
}

double max_abs_offset_identity(const CMatrix& g) {
    const CMatrix d = g - CMatrix::Identity(g.rows(), g.cols());
    return d.cwiseAbs().maxCoeff();
}

CMatrix node_residues(const SectionBasis& sections) {
    const auto& nodes = sections.layout->surface->model.nodes;
    CMatrix r(static_cast<Eigen::Index>(nodes.size()), sections.size());
    for (int a = 0; a < sections.size(); ++a) {
        const auto s = sections.section(a);
        for (std::size_t n = 0; n < nodes.size(); ++n)
            r(static_cast<Eigen::Index>(n), a) = diff::residue_coefficient(s, nodes[n].a, kResidueRadius);
    }
    return r;
}

FamilyPoint compute_point(const FamilySpec& spec, const SectionBasis& raw, const std::vector<diff::Column>& pivots,
                          const bergman::SamplePlan& samples) {
    FamilyPoint p;
    const auto& surface = *raw.layout->surface;
    p.basis = diff::canonicalize(raw, pivots);
    const EpsilonProductConfig half = with_epsilon(spec.product, 0.5 * spec.product.epsilon);
    p.gram = bergman::gram_matrix(p.basis, spec.product, spec.richardson);
    p.gram_half = bergman::gram_matrix(p.basis, half, false);
    p.onb = bergman::orthonormalize(p.basis, p.gram);
    const CMatrix& t = p.onb.transform;
    const CMatrix g1 = t.adjoint() * p.gram.entries * t;
    const CMatrix g2 = t.adjoint() * p.gram_half.entries * t;

    FamilyStep& st = p.step;
    st.t = surface.annuli.empty() ? complex(0.0, 0.0) : surface.annuli.front().t;
    st.dimension = p.basis.size();
    st.basis_gap = raw.gap;
    st.gram_condition = p.gram.condition_number;
    st.richardson_change = p.gram.richardson_change;
    st.orthonormality_error = max_abs_offset_identity(g1);
    st.max_ratio = 0.0;
    st.min_ratio = INFINITY;
    for (Eigen::Index i = 0; i < g2.rows(); ++i) {
        const double r = std::sqrt(g2(i, i).real() / g1(i, i).real());
        st.max_ratio = std::max(st.max_ratio, r);
        st.min_ratio = std::min(st.min_ratio, r);
    }
    const auto& nodes = surface.model.nodes;
    for (int a = 0; a < p.onb.sections.size(); ++a) {
        const auto s = p.onb.sections.section(a);
        for (std::size_t n = 0; n < nodes.size(); ++n) {
            const int node = static_cast<int>(n);
            st.max_node_defect = std::max(st.max_node_defect, diff::node_matching_defect(s, node, kResidueRadius));
            if (!surface.is_nodal(node)) {
                st.max_gluing_defect = std::max(st.max_gluing_defect, diff::gluing_defect(s, node));
                st.max_envelope_ratio = std::max(st.max_envelope_ratio, diff::envelope_ratio(s, node));
            }
        }
    }
    p.cloud = bergman::embed_cloud(p.onb, samples);
    st.min_sample_norm = p.cloud.min_norm;
    st.min_pairwise_fs = bergman::min_pairwise_fs_distance(p.cloud);
    if (!surface.annuli.empty()) {
        st.collar_lambda = surface.annuli.front().lambda;
        st.gluing_core_length = surface.annuli.front().core_length;
    }
    p.residues = node_residues(p.onb.sections);
    return p;
}

double schedule_modulus(const std::vector<complex>& s, std::size_t i) { return std::abs(s[i]); }

void check_schedule(const std::vector<complex>& schedule) {
    if (schedule.empty()) throw ConfigError("schedule is empty");
    const double r2 = diff::kAnnulusRadius * diff::kAnnulusRadius;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const double a = schedule_modulus(schedule, i);
        if (!std::isfinite(a) || a <= 0.0) throw ConfigError("schedule entries must be nonzero and finite");
        if (a >= r2) throw ConfigError("schedule entry has |t| >= R^2");
        if (i > 0 && !(a < schedule_modulus(schedule, i - 1)))
            throw ConfigError("schedule must be strictly decreasing in modulus");
    }
}

}  // namespace

void validate(const FamilySpec& spec) {
    diff::validate_model(spec.model);
    check_schedule(spec.schedule);
    if (spec.m < 2) throw ConfigError("family weight m must be >= 2");
    bergman::validate(spec.product);
    if (spec.truncation != -1 && spec.truncation < spec.m + 4)
        throw ConfigError("truncation must be -1 or >= m + 4");
    if (spec.samples_per_component < 1) throw ConfigError("samples_per_component must be >= 1");
    if (!(spec.ratio_cap >= 0.0) || !std::isfinite(spec.ratio_cap)) throw ConfigError("ratio_cap must be >= 0");
    if (spec.workers < 0) throw ConfigError("workers must be >= 0");
}

std::vector<complex> decade_schedule(double first, int count, double arg) {
    if (!(first > 0.0) || count < 1) throw ConfigError("decade_schedule needs first > 0 and count >= 1");
    std::vector<complex> out;
    for (int i = 0; i < count; ++i) out.push_back(std::polar(first / std::pow(10.0, i), arg));
    return out;
}

std::vector<complex> geometric_schedule(double base, double floor, double arg, double ceiling) {
    if (!(base > 1.0) || !(floor > 0.0) || !(floor <= ceiling) || !(ceiling < 1.0))
        throw ConfigError("geometric_schedule needs base > 1 and 0 < floor <= ceiling < 1");
    std::vector<complex> out;
    for (int i = 1;; ++i) {
        const double v = std::pow(base, -i);
        if (v < floor) break;
        if (v <= ceiling) out.push_back(std::polar(v, arg));
    }
    return out;
}

bool tail_decreasing(const std::vector<double>& x, int count) {
    if (count < 2 || x.size() < idx(count)) return false;
    for (std::size_t i = x.size() - idx(count) + 1; i < x.size(); ++i)
        if (!(x[i] < x[i - 1])) return false;
    return true;
}

BoundedSplit bounded_section_split(const CMatrix& residues, double relative_floor) {
    BoundedSplit out;
    const Eigen::Index d = residues.cols();
    Eigen::JacobiSVD<CMatrix> svd(residues, Eigen::ComputeFullV);
    RVector sv = RVector::Zero(d);
    sv.head(svd.singularValues().size()) = svd.singularValues();
    out.residue_singular_values = sv;
    const double scale = std::max({sv.size() > 0 ? sv(0) : 0.0, residues.cwiseAbs().maxCoeff(), 1.0});
    out.threshold = 10.0 * relative_floor * scale;
    int bounded = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
        if (sv(i) < out.threshold) ++bounded;
        if (sv(i) > 0.5 * out.threshold && sv(i) < 2.0 * out.threshold) out.inconclusive = true;
    }
    out.bounded = bounded;
    out.unbounded = static_cast<int>(d) - bounded;
    const CMatrix& v = svd.matrixV();
    out.bounded_subspace = v.rightCols(bounded);
    out.labels.assign(idx(static_cast<int>(d)), false);
    for (Eigen::Index i = d - bounded; i < d; ++i) out.labels[static_cast<std::size_t>(i)] = true;
    return out;
}

RVector split_subspace_cosines(const BoundedSplit& a, const BoundedSplit& b) {
    if (a.bounded_subspace.rows() != b.bounded_subspace.rows())
        throw ConfigError("split subspaces live in different dimensions");
    if (a.bounded_subspace.cols() == 0 || b.bounded_subspace.cols() == 0) return RVector();
    return principal_cosines(a.bounded_subspace, b.bounded_subspace);
}

FamilyRun run_family(const FamilySpec& spec) {
    validate(spec);
    const int workers = resolve_workers(spec.workers);
    FamilyRun run;
    ConvergenceReport& rep = run.report;
    rep.model = spec.model.name;
    rep.m = spec.m;
    rep.epsilon = spec.product.epsilon;

    const SectionBasis nodal = diff::nodal_basis(spec.model, spec.m);
    const auto pivots = diff::canonical_pivots(nodal);
    const auto samples = bergman::default_sample_plan(spec.model, spec.samples_per_component, spec.seed);
    const int k = spec.truncation < 0 ? diff::default_truncation(spec.m) : spec.truncation;

    const std::size_t n = spec.schedule.size();
    std::vector<std::optional<FamilyPoint>> points(n);
    std::vector<std::string> failures(n);
    std::optional<FamilyPoint> limit;
    std::string limit_failure;
    const std::size_t jobs = n + (spec.include_limit ? 1 : 0);
    std::mutex mu;
    parallel_for(jobs, workers, [&](std::size_t i) {
        try {
            if (i == n) {
                auto p = compute_point(spec, nodal, pivots, samples);
                std::lock_guard<std::mutex> lock(mu);
                limit = std::move(p);
                return;
            }
            const SectionBasis raw = diff::plumbed_basis(spec.model, spec.schedule[i], spec.m, k);
            auto p = compute_point(spec, raw, pivots, samples);
            std::lock_guard<std::mutex> lock(mu);
            points[i] = std::move(p);
        } catch (const NumericalError& e) {
            std::lock_guard<std::mutex> lock(mu);
            (i == n ? limit_failure : failures[i]) = e.what();
        }
    });

    for (std::size_t i = 0; i < n; ++i) {
        if (!points[i]) {
            rep.complete = false;
            rep.failure = "t index " + std::to_string(i) + ": " + failures[i];
            break;
        }
        run.points.push_back(std::move(*points[i]));
    }
    if (spec.include_limit && !limit && rep.complete) {
        rep.complete = false;
        rep.failure = "nodal limit: " + limit_failure;
    }
    run.limit_point = std::move(limit);

    for (std::size_t i = 1; i < run.points.size(); ++i) {
        const auto al = bergman::align_clouds(run.points[i - 1].cloud, run.points[i].cloud);
        run.points[i].step.aligned_distance = al.residual;
    }
    if (run.limit_point)
        for (auto& p : run.points) p.step.distance_to_limit = bergman::align_clouds(p.cloud, run.limit_point->cloud).residual;

    std::vector<double> aligned;
    std::vector<double> defects;
    rep.max_ratio = 0.0;
    double min_ratio = INFINITY;
    for (const auto& p : run.points) {
        if (!run.points.empty() && &p != &run.points.front()) aligned.push_back(p.step.aligned_distance);
        defects.push_back(p.step.max_node_defect);
        rep.max_ratio = std::max(rep.max_ratio, p.step.max_ratio);
        min_ratio = std::min(min_ratio, p.step.min_ratio);
    }
    if (!run.points.empty()) {
        rep.split = bounded_section_split(run.points.back().residues);
        for (auto& p : run.points) p.step.bounded = bounded_section_split(p.residues).bounded;
    }
    for (const auto& p : run.points) rep.steps.push_back(p.step);
    if (run.limit_point) rep.limit = run.limit_point->step;

    rep.cauchy = rep.complete && tail_decreasing(aligned, 3);
    rep.defect_decreasing = rep.complete && tail_decreasing(defects, 3);
    rep.ratio_bounded = rep.complete && !run.points.empty() && min_ratio >= 1.0 - 1e-10 &&
                        (spec.ratio_cap <= 0.0 || rep.max_ratio <= spec.ratio_cap);
    return run;
}

CMatrix robustness_transform(const SectionBasis& basis, const EpsilonProductConfig& cfg1,
                             const EpsilonProductConfig& cfg2) {
    const auto g1 = bergman::gram_matrix(basis, cfg1);
    const auto g2 = bergman::gram_matrix(basis, cfg2);
    const CMatrix t1 = cholesky_whitening(g1.entries);
    const CMatrix t2 = cholesky_whitening(g2.entries);
    return t2.triangularView<Eigen::Upper>().solve(t1);
}

RobustnessReport epsilon_robustness(const FamilySpec& spec, double eps1, double eps2) {
    validate(spec);
    const EpsilonProductConfig c1 = with_epsilon(spec.product, eps1);
    const EpsilonProductConfig c2 = with_epsilon(spec.product, eps2);
    bergman::validate(c1);
    bergman::validate(c2);
    const int workers = resolve_workers(spec.workers);
    RobustnessReport rep;
    rep.eps1 = eps1;
    rep.eps2 = eps2;
    const auto pivots = diff::canonical_pivots(diff::nodal_basis(spec.model, spec.m));
    const int k = spec.truncation < 0 ? diff::default_truncation(spec.m) : spec.truncation;
    const std::size_t n = spec.schedule.size();
    std::vector<std::optional<CMatrix>> g(n);
    std::vector<std::string> failures(n);
    parallel_for(n, workers, [&](std::size_t i) {
        try {
            const auto basis = diff::canonicalize(diff::plumbed_basis(spec.model, spec.schedule[i], spec.m, k), pivots);
            g[i] = robustness_transform(basis, c1, c2);
        } catch (const NumericalError& e) {
            failures[i] = e.what();
        }
    });
    std::vector<double> inc;
    for (std::size_t i = 0; i < n; ++i) {
        if (!g[i]) {
            rep.complete = false;
            rep.failure = "t index " + std::to_string(i) + ": " + failures[i];
            break;
        }
        RobustnessStep st;
        st.t = spec.schedule[i];
        st.transform = *g[i];
        st.condition_number = condition_number(st.transform);
        if (!rep.steps.empty()) {
            st.increment = (st.transform - rep.steps.back().transform).norm();
            inc.push_back(st.increment);
        }
        rep.max_condition = std::max(rep.max_condition, st.condition_number);
        rep.steps.push_back(std::move(st));
    }
    rep.increments_decreasing = rep.complete && tail_decreasing(inc, 3);
    return rep;
}

UniquenessVerdict schedule_uniqueness_check(const FamilySpec& spec, const std::vector<complex>& schedule_a,
                                            const std::vector<complex>& schedule_b, double tolerance) {
    if (!(tolerance > 0.0)) throw ConfigError("uniqueness tolerance must be positive");
    FamilySpec a = spec;
    a.schedule = schedule_a;
    a.include_limit = false;
    FamilySpec b = spec;
    b.schedule = schedule_b;
    b.include_limit = false;
    validate(a);
    validate(b);
    UniquenessVerdict v;
    v.tolerance = tolerance;
    v.final_t_a = schedule_a.back();
    v.final_t_b = schedule_b.back();
    const auto ra = run_family(a);
    if (!ra.report.complete) {
        v.complete = false;
        v.failure = "schedule A: " + ra.report.failure;
        return v;
    }
    const bool same = schedule_a == schedule_b;
    const auto rb = same ? ra : run_family(b);
    if (!rb.report.complete) {
        v.complete = false;
        v.failure = "schedule B: " + rb.report.failure;
        return v;
    }
    const auto al = bergman::align_clouds(ra.points.back().cloud, rb.points.back().cloud);
    v.residual = al.residual;
    v.unitary = al.unitary;
    v.degenerate = al.degenerate;
    v.pass = v.residual < tolerance;
    return v;
}

}  // namespace stable_degen::degen
