#pragma once

#include "stable_degen/bergman.hpp"
#include "stable_degen/degeneration.hpp"
#include "stable_degen/differentials.hpp"
#include "stable_degen/surface_model.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace stable_degen::io {

using Json = nlohmann::json;

/// 17 significant digits; "nan", "inf", "-inf" for non-finite values.
std::string format_real(double x);
Json real(double x);
Json complex_json(complex z);
Json matrix_json(const CMatrix& a);
Json vector_json(const RVector& v);
Json reals_json(const std::vector<double>& v);

/// Accepts a JSON number or a decimal string. Throws ConfigError otherwise.
double parse_real(const Json& j, const std::string& what);
/// A real, [re, im], or {"re": .., "im": ..}.
complex parse_complex(const Json& j, const std::string& what);

Json to_json(const surface::PantsGraph& g);
Json to_json(const surface::ThickThinReport& r, bool paper_normalization);
Json to_json(const diff::NodalCurveModel& model);
Json to_json(const diff::SectionBasis& basis);
Json to_json(const bergman::GramMatrix& gram);
Json to_json(const bergman::EmbeddedCloud& cloud);
Json to_json(const degen::FamilyStep& step, bool paper_normalization);
Json to_json(const degen::BoundedSplit& split);
Json to_json(const degen::ConvergenceReport& report, bool paper_normalization);
Json to_json(const degen::RobustnessReport& report);
Json to_json(const degen::UniquenessVerdict& verdict);

/// One row per t.
std::string steps_csv(const std::vector<degen::FamilyStep>& steps, bool paper_normalization);
std::string robustness_csv(const degen::RobustnessReport& report);

/// Two-space indented dump with a trailing newline.
std::string dump(const Json& j);

std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t h);

}  // namespace stable_degen::io
