#pragma once

#include "stable_degen/bergman.hpp"
#include "stable_degen/differentials.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stable_degen::degen {

struct FamilySpec {
    diff::NodalCurveModel model;
    std::vector<complex> schedule;          // t_i, strictly decreasing in modulus
    int m = 3;
    bergman::EpsilonProductConfig product;  // epsilon, cap and quadrature orders
    int truncation = -1;                    // K; -1 selects m + 8
    int samples_per_component = 24;
    std::uint64_t seed = 1;
    bool richardson = false;                // doubled-order check of every Gram matrix
    bool include_limit = true;              // also embed the nodal curve (t = 0)
    double ratio_cap = 0.0;                 // frozen cap on max norm ratio; 0 disables the flag
    int workers = 0;                        // 0: STABLE_DEGEN_WORKERS or 1
};

/// Throws ConfigError on an invalid spec (before any computation).
void validate(const FamilySpec& spec);

/// Decades t = first * 10^{-i}, i = 0 .. count-1, rotated by e^{i arg}.
std::vector<complex> decade_schedule(double first, int count, double arg = 0.0);
/// t_i = base^{-i} for the i with floor <= base^{-i} <= ceiling, rotated by e^{i arg}.
std::vector<complex> geometric_schedule(double base, double floor, double arg = 0.0, double ceiling = 0.1);

struct BoundedSplit {
    int bounded = 0;
    int unbounded = 0;
    bool inconclusive = false;
    double threshold = 0.0;
    RVector residue_singular_values;
    /// Columns span the bounded directions (coordinates in the ONB).
    CMatrix bounded_subspace;
    /// Per index of the residue-adapted ONB: true if bounded.
    std::vector<bool> labels;
};

struct FamilyStep {
    complex t{0.0, 0.0};
    int dimension = 0;
    double basis_gap = 0.0;
    double gram_condition = 0.0;
    double richardson_change = -1.0;
    double orthonormality_error = 0.0;   // max |Gram(ONB) - I|
    double max_node_defect = 0.0;
    double max_gluing_defect = 0.0;
    double max_envelope_ratio = 0.0;
    double max_ratio = 0.0;
    double min_ratio = 0.0;
    double min_sample_norm = 0.0;
    double min_pairwise_fs = 0.0;
    double aligned_distance = -1.0;      // to the previous step; negative for the first
    double distance_to_limit = -1.0;     // negative without a limit embedding
    double collar_lambda = 0.0;
    double gluing_core_length = 0.0;
    int bounded = 0;
};

struct FamilyPoint {
    FamilyStep step;
    diff::SectionBasis basis;            // canonical input basis
    bergman::GramMatrix gram;
    bergman::GramMatrix gram_half;       // epsilon / 2
    bergman::OrthonormalBasis onb;
    bergman::EmbeddedCloud cloud;
    CMatrix residues;                    // nodes x ONB sections, u_a(0)
};

struct ConvergenceReport {
    std::string model;
    int m = 3;
    double epsilon = 0.0;
    std::vector<FamilyStep> steps;
    std::optional<FamilyStep> limit;
    BoundedSplit split;
    bool cauchy = false;              // last three aligned distances decreasing
    bool defect_decreasing = false;   // max node defect decreasing over the last three steps
    bool ratio_bounded = false;       // every ratio >= 1 and max ratio <= cap
    double max_ratio = 0.0;
    bool complete = true;
    std::string failure;
};

struct FamilyRun {
    ConvergenceReport report;
    std::vector<FamilyPoint> points;
    std::optional<FamilyPoint> limit_point;
};

/// Per t: plumbed basis, canonical normalization, Gram, Cholesky ONB, embedded
/// cloud; consecutive clouds unitary-aligned. On a basis or Gram failure the
/// report is returned incomplete, holding the steps computed before it.
FamilyRun run_family(const FamilySpec& spec);

/// Split of the ONB at the last step by the rank of the node-residue matrix.
BoundedSplit bounded_section_split(const CMatrix& residues, double relative_floor = 1e-12);
/// Cosines of principal angles between two bounded subspaces.
RVector split_subspace_cosines(const BoundedSplit& a, const BoundedSplit& b);

struct RobustnessStep {
    complex t{0.0, 0.0};
    CMatrix transform;         // g_t with ONB_eps1 = ONB_eps2 * g_t
    double condition_number = 0.0;
    double increment = -1.0;   // ||g_t - g_prev||_F; negative for the first step
};

struct RobustnessReport {
    double eps1 = 0.0;
    double eps2 = 0.0;
    std::vector<RobustnessStep> steps;
    double max_condition = 0.0;
    bool increments_decreasing = false;  // over the last three increments
    bool complete = true;
    std::string failure;
};

RobustnessReport epsilon_robustness(const FamilySpec& spec, double eps1, double eps2);
/// g(eps_a, eps_c) against g(eps_b, eps_c) g(eps_a, eps_b) for one basis.
CMatrix robustness_transform(const diff::SectionBasis& basis, const bergman::EpsilonProductConfig& cfg1,
                             const bergman::EpsilonProductConfig& cfg2);

struct UniquenessVerdict {
    bool pass = false;
    double residual = 0.0;
    double tolerance = 0.0;
    complex final_t_a{0.0, 0.0};
    complex final_t_b{0.0, 0.0};
    CMatrix unitary;
    bool degenerate = false;
    bool complete = true;
    std::string failure;
};

UniquenessVerdict schedule_uniqueness_check(const FamilySpec& spec, const std::vector<complex>& schedule_a,
                                            const std::vector<complex>& schedule_b, double tolerance = 1e-3);

/// Max over the last `count` consecutive steps of whether x decreases strictly.
bool tail_decreasing(const std::vector<double>& x, int count = 3);

}  // namespace stable_degen::degen
