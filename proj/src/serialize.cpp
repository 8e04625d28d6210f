#include "stable_degen/serialize.hpp"

#include "stable_degen/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <sstream>

namespace stable_degen::io {

namespace {

std::string str_real(double x) { return format_real(x); }

std::string str_complex(complex z) { return format_real(z.real()) + "," + format_real(z.imag()); }

double core_length(double lambda, bool paper) { return paper ? lambda : 2.0 * std::numbers::pi * lambda; }

}  // namespace

std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return std::signbit(x) ? "-0" : "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Json real(double x) { return format_real(x); }

Json complex_json(complex z) { return Json{{"re", real(z.real())}, {"im", real(z.imag())}}; }

Json matrix_json(const CMatrix& a) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(complex_json(a(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json vector_json(const RVector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(real(v(i)));
    return out;
}

Json reals_json(const std::vector<double>& v) {
    Json out = Json::array();
    for (double x : v) out.push_back(real(x));
    return out;
}

double parse_real(const Json& j, const std::string& what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (!s.empty() && end == s.c_str() + s.size()) return v;
    }
    throw ConfigError(what + ": expected a number or decimal string");
}

complex parse_complex(const Json& j, const std::string& what) {
    if (j.is_array()) {
        if (j.size() != 2) throw ConfigError(what + ": complex arrays need two entries");
        return {parse_real(j[0], what), parse_real(j[1], what)};
    }
    if (j.is_object()) {
        if (!j.contains("re") || !j.contains("im")) throw ConfigError(what + ": complex objects need re and im");
        return {parse_real(j.at("re"), what), parse_real(j.at("im"), what)};
    }
    return {parse_real(j, what), 0.0};
}

Json to_json(const surface::PantsGraph& g) {
    Json edges = Json::array();
    for (const auto& e : g.edges) edges.push_back(Json::array({e[0], e[1]}));
    return Json{{"genus", g.genus},
                {"vertex_count", g.vertex_count},
                {"edges", edges},
                {"canonical_code", surface::canonical_code(g)}};
}

Json to_json(const surface::ThickThinReport& r, bool paper) {
    Json collars = Json::array();
    for (const auto& c : r.collar_params)
        collars.push_back(Json{{"edge", c.edge},
                               {"length", real(c.length)},
                               {"dilation", real(c.dilation)},
                               {"half_width", real(c.half_width)},
                               {"thin_half_width", real(c.thin_half_width)},
                               {"cusp", c.cusp},
                               {"core_length", real(paper ? c.dilation : c.length)}});
    return Json{{"short_edges", r.short_edges}, {"collars", collars}, {"thin_volume", real(r.thin_volume)}};
}

Json to_json(const diff::NodalCurveModel& model) {
    Json comps = Json::array();
    for (const auto& c : model.components) {
        Json pts = Json::array();
        for (const auto& p : c.points) pts.push_back(complex_json(p));
        comps.push_back(std::move(pts));
    }
    Json nodes = Json::array();
    for (const auto& n : model.nodes)
        nodes.push_back(Json::array({Json::array({n.a.component, n.a.point}), Json::array({n.b.component, n.b.point})}));
    return Json{{"name", model.name}, {"genus", model.genus()}, {"components", comps}, {"nodes", nodes}};
}

Json to_json(const diff::SectionBasis& basis) {
    const auto& layout = *basis.layout;
    Json columns = Json::array();
    for (const auto& c : layout.columns) columns.push_back(Json::array({c.component, c.point, c.order}));
    Json t = Json::array();
    for (const auto& an : layout.surface->annuli) t.push_back(complex_json(an.t));
    const char* source = basis.source == diff::BasisSource::NodalSolve   ? "nodal"
                         : basis.source == diff::BasisSource::PlumbedSolve ? "plumbed"
                                                                           : "fixture";
    return Json{{"source", source},
                {"m", layout.m},
                {"truncation", layout.truncation},
                {"genus", layout.surface->genus()},
                {"dimension", basis.size()},
                {"expected_dimension", diff::dimension(layout.surface->genus(), layout.m)},
                {"t", t},
                {"constraint_rank", basis.constraint_rank},
                {"gap", real(basis.gap)},
                {"singular_values", vector_json(basis.singular_values)},
                {"columns", columns},
                {"coefficients", matrix_json(basis.coefficients)}};
}

Json to_json(const bergman::GramMatrix& gram) {
    return Json{{"entries", matrix_json(gram.entries)},
                {"eigenvalues", vector_json(gram.eigenvalues)},
                {"condition_number", real(gram.condition_number)},
                {"richardson_change", real(gram.richardson_change)}};
}

Json to_json(const bergman::EmbeddedCloud& cloud) {
    return Json{{"vectors", matrix_json(cloud.vectors)},
                {"raw_norms", reals_json(cloud.raw_norms)},
                {"min_norm", real(cloud.min_norm)},
                {"min_pairwise_fs", real(bergman::min_pairwise_fs_distance(cloud))}};
}

Json to_json(const degen::FamilyStep& s, bool paper) {
    return Json{{"t", complex_json(s.t)},
                {"dimension", s.dimension},
                {"basis_gap", real(s.basis_gap)},
                {"gram_condition", real(s.gram_condition)},
                {"richardson_change", real(s.richardson_change)},
                {"orthonormality_error", real(s.orthonormality_error)},
                {"max_node_defect", real(s.max_node_defect)},
                {"max_gluing_defect", real(s.max_gluing_defect)},
                {"max_envelope_ratio", real(s.max_envelope_ratio)},
                {"max_ratio", real(s.max_ratio)},
                {"min_ratio", real(s.min_ratio)},
                {"min_sample_norm", real(s.min_sample_norm)},
                {"min_pairwise_fs", real(s.min_pairwise_fs)},
                {"aligned_distance", real(s.aligned_distance)},
                {"distance_to_limit", real(s.distance_to_limit)},
                {"collar_lambda", real(s.collar_lambda)},
                {"collar_core_length", real(core_length(s.collar_lambda, paper))},
                {"gluing_core_length", real(s.gluing_core_length)},
                {"bounded", s.bounded}};
}

Json to_json(const degen::BoundedSplit& split) {
    Json labels = Json::array();
    for (bool b : split.labels) labels.push_back(b ? "bounded" : "unbounded");
    return Json{{"bounded", split.bounded},
                {"unbounded", split.unbounded},
                {"inconclusive", split.inconclusive},
                {"threshold", real(split.threshold)},
                {"residue_singular_values", vector_json(split.residue_singular_values)},
                {"adapted_labels", labels}};
}

Json to_json(const degen::ConvergenceReport& r, bool paper) {
    Json steps = Json::array();
    for (const auto& s : r.steps) steps.push_back(to_json(s, paper));
    return Json{{"model", r.model},
                {"m", r.m},
                {"epsilon", real(r.epsilon)},
                {"length_convention", paper ? "lambda" : "2 pi lambda"},
                {"steps", steps},
                {"limit", r.limit ? to_json(*r.limit, paper) : Json(nullptr)},
                {"split", to_json(r.split)},
                {"flags", Json{{"cauchy", r.cauchy}, {"defect_decreasing", r.defect_decreasing}, {"ratio_bounded", r.ratio_bounded}}},
                {"max_ratio", real(r.max_ratio)},
                {"complete", r.complete},
                {"failure", r.failure}};
}

Json to_json(const degen::RobustnessReport& r) {
    Json steps = Json::array();
    for (const auto& s : r.steps)
        steps.push_back(Json{{"t", complex_json(s.t)},
                             {"condition_number", real(s.condition_number)},
                             {"increment", real(s.increment)},
                             {"transform", matrix_json(s.transform)}});
    return Json{{"eps1", real(r.eps1)},
                {"eps2", real(r.eps2)},
                {"steps", steps},
                {"max_condition", real(r.max_condition)},
                {"increments_decreasing", r.increments_decreasing},
                {"complete", r.complete},
                {"failure", r.failure}};
}

Json to_json(const degen::UniquenessVerdict& v) {
    return Json{{"pass", v.pass},
                {"residual", real(v.residual)},
                {"tolerance", real(v.tolerance)},
                {"final_t_a", complex_json(v.final_t_a)},
                {"final_t_b", complex_json(v.final_t_b)},
                {"degenerate", v.degenerate},
                {"unitary", matrix_json(v.unitary)},
                {"complete", v.complete},
                {"failure", v.failure}};
}

std::string steps_csv(const std::vector<degen::FamilyStep>& steps, bool paper) {
    std::ostringstream os;
    os << "t_re,t_im,abs_t,gram_condition,max_node_defect,max_gluing_defect,max_envelope_ratio,max_ratio,min_ratio,"
          "min_sample_norm,min_pairwise_fs,aligned_distance,distance_to_limit,collar_lambda,collar_core_length,bounded\n";
    for (const auto& s : steps) {
        os << str_complex(s.t) << ',' << str_real(std::abs(s.t)) << ',' << str_real(s.gram_condition) << ','
           << str_real(s.max_node_defect) << ',' << str_real(s.max_gluing_defect) << ','
           << str_real(s.max_envelope_ratio) << ',' << str_real(s.max_ratio) << ',' << str_real(s.min_ratio) << ','
           << str_real(s.min_sample_norm) << ',' << str_real(s.min_pairwise_fs) << ','
           << str_real(s.aligned_distance) << ',' << str_real(s.distance_to_limit) << ','
           << str_real(s.collar_lambda) << ',' << str_real(core_length(s.collar_lambda, paper)) << ',' << s.bounded
           << '\n';
    }
    return os.str();
}

std::string robustness_csv(const degen::RobustnessReport& r) {
    std::ostringstream os;
    os << "t_re,t_im,abs_t,condition_number,increment\n";
    for (const auto& s : r.steps)
        os << str_complex(s.t) << ',' << str_real(std::abs(s.t)) << ',' << str_real(s.condition_number) << ','
           << str_real(s.increment) << '\n';
    return os.str();
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace stable_degen::io
