#pragma once

#include <array>
#include <string>
#include <vector>

namespace stable_degen::surface {

/// Trivalent graph of a pants decomposition. Vertices are pants, edges are
/// the decomposition curves; an edge may join a vertex to itself.
struct PantsGraph {
    int genus = 2;
    int vertex_count = 2;
    std::vector<std::array<int, 2>> edges;

    bool operator==(const PantsGraph&) const = default;
};

struct GraphVerdict {
    bool accepted = false;
    std::vector<std::string> violations;
};

/// Lengths and twists per edge. A zero length marks a node.
struct FNCoordinates {
    std::vector<double> lengths;
    std::vector<double> twists;
    double bers_bound = 0.0;
    bool bers_normalized = false;
};

struct ThickThinConfig {
    double epsilon = 0.25;
    double margulis_cap = 0.5;
};

struct CollarParams {
    int edge = 0;
    double length = 0.0;
    double dilation = 0.0;        // lambda = length / 2 pi
    double half_width = 0.0;      // collar-lemma half width (inf for a cusp pair)
    double thin_half_width = 0.0; // Fermi distance of the inj = epsilon level
    bool cusp = false;
};

struct ThickThinReport {
    std::vector<int> short_edges;
    std::vector<CollarParams> collar_params;
    double thin_volume = 0.0;
};

GraphVerdict validate_pants_graph(const PantsGraph& graph);

/// All connected trivalent multigraphs with 2g-2 vertices, one representative
/// per isomorphism class, ordered by canonical code.
std::vector<PantsGraph> enumerate_pants_graphs(int genus);

/// Canonical adjacency code: lexicographically least upper-triangular
/// multiplicity list over all vertex relabelings.
std::vector<int> canonical_code(const PantsGraph& graph);

/// Lengths of the three seams of the right-angled hexagon decomposition; seam k
/// is opposite cuff k (joins cuffs i and j).
std::array<double, 3> pants_seam_lengths(double l1, double l2, double l3);

/// Collar-lemma half width arcsinh(1 / sinh(l/2)).
double collar_halfwidth(double length);

void validate_fn(const FNCoordinates& fn, int genus);
void validate_thick_thin(const ThickThinConfig& cfg);

ThickThinReport thick_thin_decompose(const FNCoordinates& fn, const ThickThinConfig& cfg);

/// Total hyperbolic area: 2g-2 in the convention where vol = -chi, or
/// 2 pi (2g-2) for curvature -1.
double surface_volume(int genus, bool euler_normalized);

}  // namespace stable_degen::surface
