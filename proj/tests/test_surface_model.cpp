#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stable_degen/errors.hpp"
#include "stable_degen/surface_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

using namespace stable_degen;
using namespace stable_degen::surface;

namespace {

PantsGraph theta_graph() { return {2, 2, {{0, 1}, {0, 1}, {0, 1}}}; }
PantsGraph dumbbell_graph() { return {2, 2, {{0, 0}, {0, 1}, {1, 1}}}; }

// Symmetric adjacency multiplicities, loops on the diagonal.
using Adjacency = std::vector<std::vector<int>>;

Adjacency permuted(const Adjacency& a, const std::vector<int>& p) {
    const std::size_t n = a.size();
    Adjacency b(n, std::vector<int>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) b[static_cast<std::size_t>(p[i])][static_cast<std::size_t>(p[j])] = a[i][j];
    return b;
}

Adjacency least_form(const Adjacency& a) {
    std::vector<int> p(a.size());
    std::iota(p.begin(), p.end(), 0);
    Adjacency best = a;
    do {
        best = std::min(best, permuted(a, p));
    } while (std::next_permutation(p.begin(), p.end()));
    return best;
}

bool connected(const Adjacency& a) {
    std::vector<bool> seen(a.size(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        for (std::size_t w = 0; w < a.size(); ++w)
            if (a[v][w] > 0 && !seen[w]) {
                seen[w] = true;
                stack.push_back(w);
            }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

// Every assignment of loop counts and edge multiplicities with degree 3 per
// vertex, deduplicated by exhaustive relabeling.
std::size_t brute_force_trivalent_count(int vertices) {
    const auto n = static_cast<std::size_t>(vertices);
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) slots.emplace_back(i, j);
    std::set<Adjacency> classes;
    Adjacency a(n, std::vector<int>(n, 0));
    std::vector<int> degree(n, 0);
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (k == slots.size()) {
            if (std::all_of(degree.begin(), degree.end(), [](int d) { return d == 3; }) && connected(a))
                classes.insert(least_form(a));
            return;
        }
        const auto [i, j] = slots[k];
        for (int mult = 0; mult <= 3; ++mult) {
            const int di = i == j ? 2 * mult : mult;
            const int dj = i == j ? 0 : mult;
            if (degree[i] + di > 3 || degree[j] + dj > 3) break;
            degree[i] += di;
            degree[j] += dj;
            a[i][j] = a[j][i] = mult;
            rec(k + 1);
            degree[i] -= di;
            degree[j] -= dj;
            a[i][j] = a[j][i] = 0;
        }
    };
    rec(0);
    return classes.size();
}

}  // namespace

TEST_CASE("validate_pants_graph accepts both genus-2 graphs") {
    CHECK(validate_pants_graph(theta_graph()).accepted);
    CHECK(validate_pants_graph(dumbbell_graph()).accepted);
}

TEST_CASE("validate_pants_graph rejects a vertex of incidence 2") {
    const PantsGraph g{2, 1, {{0, 0}}};
    const auto v = validate_pants_graph(g);
    CHECK_FALSE(v.accepted);
    CHECK_FALSE(v.violations.empty());
}

TEST_CASE("validate_pants_graph rejects a disconnected graph") {
    // Two disjoint theta graphs have the right degrees but g = 3 needs a connected graph on 4 vertices.
    const PantsGraph g{3, 4, {{0, 1}, {0, 1}, {0, 1}, {2, 3}, {2, 3}, {2, 3}}};
    CHECK_FALSE(validate_pants_graph(g).accepted);
}

TEST_CASE("enumerate_pants_graphs genus 2 gives the theta and dumbbell graphs") {
    const auto graphs = enumerate_pants_graphs(2);
    REQUIRE(graphs.size() == 2);
    std::set<std::vector<int>> codes;
    for (const auto& g : graphs) {
        CHECK(validate_pants_graph(g).accepted);
        codes.insert(canonical_code(g));
    }
    CHECK(codes.count(canonical_code(theta_graph())) == 1);
    CHECK(codes.count(canonical_code(dumbbell_graph())) == 1);
}

TEST_CASE("enumerate_pants_graphs matches brute force for genus 3 and 4") {
    CHECK(enumerate_pants_graphs(3).size() == brute_force_trivalent_count(4));
    CHECK(enumerate_pants_graphs(4).size() == brute_force_trivalent_count(6));
}

TEST_CASE("enumerated graphs are trivalent with 3g-3 edges and distinct codes") {
    for (int g = 2; g <= 4; ++g) {
        const auto graphs = enumerate_pants_graphs(g);
        std::set<std::vector<int>> codes;
        for (const auto& pg : graphs) {
            std::vector<int> deg(static_cast<std::size_t>(2 * g - 2), 0);
            for (const auto& e : pg.edges) {
                ++deg[static_cast<std::size_t>(e[0])];
                ++deg[static_cast<std::size_t>(e[1])];
            }
            CHECK(std::all_of(deg.begin(), deg.end(), [](int d) { return d == 3; }));
            CHECK(static_cast<int>(pg.edges.size()) == 3 * g - 3);
            codes.insert(canonical_code(pg));
        }
        CHECK(codes.size() == graphs.size());
        CHECK(enumerate_pants_graphs(g) == graphs);
    }
}

TEST_CASE("enumerate_pants_graphs rejects unsupported genus") {
    CHECK_THROWS_AS(enumerate_pants_graphs(1), ConfigError);
    CHECK_THROWS_AS(enumerate_pants_graphs(5), ConfigError);
}

TEST_CASE("canonical_code is invariant under relabeling") {
    const PantsGraph a{2, 2, {{1, 1}, {1, 0}, {0, 0}}};
    CHECK(canonical_code(a) == canonical_code(dumbbell_graph()));
}

TEST_CASE("pants_seam_lengths for the regular pants with cosh(l/2) = 2") {
    const double l = 2.0 * std::acosh(2.0);
    const auto s = pants_seam_lengths(l, l, l);
    for (double x : s) CHECK(x == doctest::Approx(std::acosh(2.0)).epsilon(1e-12));
    CHECK(std::acosh(2.0) == doctest::Approx(1.316958).epsilon(1e-6));
}

TEST_CASE("pants_seam_lengths relabels with its inputs") {
    const auto a = pants_seam_lengths(0.7, 1.3, 2.9);
    const auto b = pants_seam_lengths(1.3, 0.7, 2.9);
    CHECK(a[0] == doctest::Approx(b[1]).epsilon(1e-14));
    CHECK(a[1] == doctest::Approx(b[0]).epsilon(1e-14));
    CHECK(a[2] == doctest::Approx(b[2]).epsilon(1e-14));
}

TEST_CASE("pants seams diverge as all cuffs shrink") {
    double prev = 0.0;
    for (double l : {1.0, 0.1, 0.01, 0.001}) {
        const auto s = pants_seam_lengths(l, l, l);
        CHECK(s[0] > prev);
        prev = s[0];
    }
    CHECK(prev > 10.0);
    CHECK_THROWS_AS(pants_seam_lengths(0.0, 1.0, 1.0), ConfigError);
}

TEST_CASE("collar_halfwidth closed forms and monotonicity") {
    CHECK(collar_halfwidth(2.0 * std::asinh(1.0)) == doctest::Approx(std::asinh(1.0)).epsilon(1e-14));
    CHECK(collar_halfwidth(2.0) > collar_halfwidth(3.0));
    CHECK(collar_halfwidth(1e-8) > 19.0);
    CHECK_THROWS_AS(collar_halfwidth(0.0), ConfigError);
    CHECK_THROWS_AS(collar_halfwidth(-1.0), ConfigError);
}

TEST_CASE("collar identity sinh(w) sinh(l/2) = 1 at random lengths") {
    std::mt19937_64 gen(20240611);
    std::uniform_real_distribution<double> dist(1e-6, 10.0);
    for (int i = 0; i < 1000; ++i) {
        const double l = dist(gen);
        CHECK(std::abs(std::sinh(collar_halfwidth(l)) * std::sinh(l / 2.0) - 1.0) < 1e-12);
    }
}

TEST_CASE("thick_thin_decompose: no short curves") {
    const FNCoordinates fn{{1.8, 1.8, 1.8}, {0.0, 0.0, 0.0}};
    const auto r = thick_thin_decompose(fn, {0.5, 0.6});
    CHECK(r.short_edges.empty());
    CHECK(r.thin_volume == 0.0);
}

TEST_CASE("thick_thin_decompose: one short curve matches the closed-form collar volume") {
    const FNCoordinates fn{{0.01, 1.8, 1.8}, {}};
    const ThickThinConfig cfg{0.5, 0.6};
    const auto r = thick_thin_decompose(fn, cfg);
    REQUIRE(r.short_edges == std::vector<int>{0});
    const double w = std::min(std::asinh(1.0 / std::sinh(0.005)), std::acosh(2.0 * 0.5 / 0.01));
    CHECK(std::abs(r.thin_volume - 2.0 * 0.01 * std::sinh(w)) < 1e-9);
}

TEST_CASE("thick_thin_decompose: two short curves") {
    const FNCoordinates fn{{0.01, 0.02, 1.8}, {}};
    const auto r = thick_thin_decompose(fn, {0.5, 0.6});
    CHECK(r.short_edges.size() == 2);
}

TEST_CASE("thick_thin_decompose: zero lengths are cusp pairs") {
    const FNCoordinates fn{{0.0, 1.0, 1.0}, {}};
    const auto r = thick_thin_decompose(fn, {0.25, 0.5});
    REQUIRE(r.collar_params.size() == 1);
    CHECK(r.collar_params[0].cusp);
    CHECK(std::isinf(r.collar_params[0].half_width));
}

TEST_CASE("thick_thin short count never exceeds 3g-3") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> dist(0.0, 2.0);
    for (int g = 2; g <= 4; ++g)
        for (int trial = 0; trial < 200; ++trial) {
            FNCoordinates fn;
            for (int j = 0; j < 3 * g - 3; ++j) fn.lengths.push_back(trial % 5 == 0 ? 0.0 : dist(gen));
            const auto r = thick_thin_decompose(fn, {0.45, 0.5});
            CHECK(static_cast<int>(r.short_edges.size()) <= 3 * g - 3);
        }
}

TEST_CASE("thin volume is monotone in epsilon and tends to zero") {
    const FNCoordinates fn{{0.05, 0.3, 1.0}, {}};
    double prev = INFINITY;
    for (double eps = 0.5; eps > 1e-3; eps /= 2.0) {
        const double v = thick_thin_decompose(fn, {eps, 0.6}).thin_volume;
        CHECK(v <= prev);
        prev = v;
    }
    CHECK(prev < 1e-12);
}

TEST_CASE("validate_fn and validate_thick_thin preconditions") {
    CHECK_THROWS_AS(validate_fn({{1.0, 1.0}, {}}, 2), ConfigError);
    CHECK_THROWS_AS(validate_fn({{1.0, -1.0, 1.0}, {}}, 2), ConfigError);
    FNCoordinates bers{{1.0, 5.0, 1.0}, {}, 4.0, true};
    CHECK_THROWS_AS(validate_fn(bers, 2), ConfigError);
    bers.bers_bound = 6.0;
    CHECK_NOTHROW(validate_fn(bers, 2));
    CHECK_THROWS_AS(validate_thick_thin({0.6, 0.5}), ConfigError);
    CHECK_THROWS_AS(validate_thick_thin({0.0, 0.5}), ConfigError);
}

TEST_CASE("surface_volume conventions") {
    CHECK(surface_volume(2, true) == 2.0);
    CHECK(surface_volume(2, false) == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-15));
    CHECK(surface_volume(3, false) / surface_volume(3, true) == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-15));
    CHECK_THROWS_AS(surface_volume(1, true), ConfigError);
}
