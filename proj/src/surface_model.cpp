#include "stable_degen/surface_model.hpp"

#include "stable_degen/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

namespace stable_degen::surface {

namespace {

int edge_target(int genus) { return 3 * genus - 3; }
int vertex_target(int genus) { return 2 * genus - 2; }

std::vector<std::vector<int>> adjacency(const PantsGraph& g) {
    std::vector<std::vector<int>> a(g.vertex_count, std::vector<int>(g.vertex_count, 0));
    for (const auto& e : g.edges) {
        if (e[0] == e[1]) {
            a[e[0]][e[0]] += 1;
        } else {
            a[e[0]][e[1]] += 1;
            a[e[1]][e[0]] += 1;
        }
    }
    return a;
}

bool connected(int n, const std::vector<std::array<int, 2>>& edges) {
    if (n == 0) return false;
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (const auto& e : edges) parent[find(e[0])] = find(e[1]);
    const int root = find(0);
    for (int v = 1; v < n; ++v)
        if (find(v) != root) return false;
    return true;
}

std::vector<int> code_under(const std::vector<std::vector<int>>& a, const std::vector<int>& perm) {
    const int n = static_cast<int>(perm.size());
    std::vector<int> code;
    code.reserve(n * (n + 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) code.push_back(a[perm[i]][perm[j]]);
    return code;
}

PantsGraph graph_from_code(int genus, int n, const std::vector<int>& code) {
    PantsGraph g;
    g.genus = genus;
    g.vertex_count = n;
    std::size_t k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j, ++k)
            for (int c = 0; c < code[k]; ++c) g.edges.push_back({i, j});
    return g;
}

}  // namespace

GraphVerdict validate_pants_graph(const PantsGraph& graph) {
    GraphVerdict v;
    if (graph.genus < 2) v.violations.push_back("genus < 2");
    if (graph.vertex_count != vertex_target(graph.genus))
        v.violations.push_back("vertex count != 2g-2");
    if (static_cast<int>(graph.edges.size()) != edge_target(graph.genus))
        v.violations.push_back("edge count != 3g-3");
    bool in_range = true;
    for (const auto& e : graph.edges)
        if (e[0] < 0 || e[1] < 0 || e[0] >= graph.vertex_count || e[1] >= graph.vertex_count)
            in_range = false;
    if (!in_range || graph.vertex_count <= 0) {
        v.violations.push_back("edge endpoint out of range");
        return v;
    }
    std::vector<int> incidence(graph.vertex_count, 0);
    for (const auto& e : graph.edges) {
        incidence[e[0]] += 1;
        incidence[e[1]] += 1;
    }
    for (int d : incidence)
        if (d != 3) {
            v.violations.push_back("vertex incidence != 3");
            break;
        }
    if (!connected(graph.vertex_count, graph.edges)) v.violations.push_back("graph is disconnected");
    v.accepted = v.violations.empty();
    return v;
}

std::vector<int> canonical_code(const PantsGraph& graph) {
    const auto a = adjacency(graph);
    std::vector<int> perm(graph.vertex_count);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = code_under(a, perm);
    while (std::next_permutation(perm.begin(), perm.end())) {
        auto c = code_under(a, perm);
        if (c < best) best = std::move(c);
    }
    return best;
}

std::vector<PantsGraph> enumerate_pants_graphs(int genus) {
    if (genus < 2 || genus > 4) throw ConfigError("enumerate_pants_graphs: genus must be in [2, 4]");
    const int n = vertex_target(genus);
    // Fill the upper triangle (loops on the diagonal) slot by slot, tracking
    // remaining degree per vertex; a loop uses two units of degree.
    std::vector<std::pair<int, int>> slots;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) slots.emplace_back(i, j);
    std::set<std::vector<int>> seen;
    std::vector<int> code(slots.size(), 0);
    std::vector<int> remaining(n, 3);

    std::function<void(std::size_t)> fill = [&](std::size_t k) {
        if (k == slots.size()) {
            if (std::any_of(remaining.begin(), remaining.end(), [](int r) { return r != 0; })) return;
            PantsGraph g = graph_from_code(genus, n, code);
            if (!connected(n, g.edges)) return;
            seen.insert(canonical_code(g));
            return;
        }
        const auto [i, j] = slots[k];
        // Once the row of i is passed, its degree must be exhausted.
        const int cap = (i == j) ? remaining[i] / 2 : std::min(remaining[i], remaining[j]);
        for (int c = 0; c <= cap; ++c) {
            code[k] = c;
            if (i == j) {
                remaining[i] -= 2 * c;
            } else {
                remaining[i] -= c;
                remaining[j] -= c;
            }
            const bool row_done = (j == n - 1);
            if (!row_done || remaining[i] == 0) fill(k + 1);
            if (i == j) {
                remaining[i] += 2 * c;
            } else {
                remaining[i] += c;
                remaining[j] += c;
            }
        }
        code[k] = 0;
    };
    fill(0);

    std::vector<PantsGraph> out;
    out.reserve(seen.size());
    for (const auto& c : seen) out.push_back(graph_from_code(genus, n, c));
    return out;
}

std::array<double, 3> pants_seam_lengths(double l1, double l2, double l3) {
    if (!(l1 > 0.0) || !(l2 > 0.0) || !(l3 > 0.0))
        throw ConfigError("pants_seam_lengths: cuff lengths must be positive");
    const std::array<double, 3> l{l1, l2, l3};
    std::array<double, 3> seams{};
    for (int k = 0; k < 3; ++k) {
        const double li = l[(k + 1) % 3] / 2.0;
        const double lj = l[(k + 2) % 3] / 2.0;
        const double lk = l[k] / 2.0;
        const double c = (std::cosh(li) * std::cosh(lj) + std::cosh(lk)) / (std::sinh(li) * std::sinh(lj));
        seams[k] = std::acosh(c);
    }
    return seams;
}

double collar_halfwidth(double length) {
    if (!(length > 0.0)) throw ConfigError("collar_halfwidth: length must be positive");
    return std::asinh(1.0 / std::sinh(length / 2.0));
}

void validate_fn(const FNCoordinates& fn, int genus) {
    const auto n = static_cast<std::size_t>(edge_target(genus));
    if (fn.lengths.size() != n) throw ConfigError("FN coordinates: need 3g-3 lengths");
    if (!fn.twists.empty() && fn.twists.size() != n) throw ConfigError("FN coordinates: need 3g-3 twists");
    for (double l : fn.lengths) {
        if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("FN coordinates: lengths must be >= 0");
        if (fn.bers_normalized && l > fn.bers_bound)
            throw ConfigError("FN coordinates: length exceeds the Bers bound");
    }
    for (double t : fn.twists)
        if (!std::isfinite(t)) throw ConfigError("FN coordinates: twists must be finite");
    if (fn.bers_normalized && !(fn.bers_bound > 0.0)) throw ConfigError("FN coordinates: Bers bound must be positive");
}

void validate_thick_thin(const ThickThinConfig& cfg) {
    if (!(cfg.epsilon > 0.0) || !(cfg.epsilon < cfg.margulis_cap))
        throw ConfigError("thick-thin config: need 0 < epsilon < margulis_cap");
}

ThickThinReport thick_thin_decompose(const FNCoordinates& fn, const ThickThinConfig& cfg) {
    validate_thick_thin(cfg);
    ThickThinReport report;
    std::vector<double> pieces;
    for (std::size_t j = 0; j < fn.lengths.size(); ++j) {
        const double l = fn.lengths[j];
        if (!(l / 2.0 < cfg.epsilon)) continue;
        CollarParams cp;
        cp.edge = static_cast<int>(j);
        cp.length = l;
        cp.dilation = l / (2.0 * std::numbers::pi);
        if (l == 0.0) {
            // Pair of cusps: each cusp region with horocycle length < 2 eps has area 2 eps.
            cp.cusp = true;
            cp.half_width = std::numeric_limits<double>::infinity();
            cp.thin_half_width = std::numeric_limits<double>::infinity();
            pieces.push_back(4.0 * cfg.epsilon);
        } else {
            cp.half_width = collar_halfwidth(l);
            // Loop through distance d from the core has length l cosh d.
            cp.thin_half_width = std::acosh(2.0 * cfg.epsilon / l);
            pieces.push_back(2.0 * l * std::sinh(std::min(cp.half_width, cp.thin_half_width)));
        }
        report.short_edges.push_back(cp.edge);
        report.collar_params.push_back(cp);
    }
    report.thin_volume = pieces.empty() ? 0.0 : std::accumulate(pieces.begin(), pieces.end(), 0.0);
    return report;
}

double surface_volume(int genus, bool euler_normalized) {
    if (genus < 2) throw ConfigError("surface_volume: genus must be >= 2");
    const double v = 2.0 * genus - 2.0;
    return euler_normalized ? v : 2.0 * std::numbers::pi * v;
}

}  // namespace stable_degen::surface
