#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <vector>

#include <multimesh/core/dart.hpp>
#include <multimesh/core/link.hpp>
#include <multimesh/core/mesh.hpp>

#include "support/builders.hpp"

using namespace mm;
using namespace mmtest;

namespace {

// Independent enumeration of the distinct k-simplices straight from the alive
// facet list, bypassing the mesh's derived indices.
std::set<std::vector<Index>> brute_simplices(const Mesh& m, int k)
{
    std::set<std::vector<Index>> out;
    for (Index f : m.alive_facets()) {
        auto verts = m.facet_vertices(f);
        std::vector<Index> sorted(verts.begin(), verts.end());
        std::sort(sorted.begin(), sorted.end());
        const int n = static_cast<int>(sorted.size());
        for (int mask = 0; mask < (1 << n); ++mask) {
            if (__builtin_popcount(mask) != k + 1) continue;
            std::vector<Index> sub;
            for (int i = 0; i < n; ++i)
                if (mask & (1 << i)) sub.push_back(sorted[i]);
            out.insert(sub);
        }
    }
    if (k == 0)
        for (Index v : m.alive_vertices()) out.insert({v});
    return out;
}

std::set<std::vector<Index>> as_sets(const std::vector<Simplex>& xs)
{
    std::set<std::vector<Index>> out;
    for (const Simplex& s : xs) out.insert({s.vertices().begin(), s.vertices().end()});
    return out;
}

std::vector<Dart> all_darts(const Mesh& m)
{
    std::vector<Dart> out;
    for (Index f : m.alive_facets()) {
        auto verts = m.facet_vertices(f);
        std::vector<Index> sorted(verts.begin(), verts.end());
        std::sort(sorted.begin(), sorted.end());
        do {
            Dart d;
            d.facet = f;
            std::copy(sorted.begin(), sorted.end(), d.order.begin());
            out.push_back(d);
        } while (std::next_permutation(sorted.begin(), sorted.end()));
    }
    return out;
}

} // namespace

TEST_CASE("simplex ordering and faces")
{
    Simplex t({3, 1, 2});
    REQUIRE(t.dim() == 2);
    REQUIRE(t.vertex_at(0) == 1);
    REQUIRE(t.vertex_at(2) == 3);
    REQUIRE(t.contains(2));
    REQUIRE(!t.contains(4));
    REQUIRE(t.contains(Simplex::edge(1, 3)));

    auto fs = t.faces();
    REQUIRE(fs.size() == 6); // 3 vertices + 3 edges
    REQUIRE(fs.front().dim() == 0);
    REQUIRE(fs.back().dim() == 1);

    Simplex tet({0, 1, 2, 3});
    REQUIRE(tet.faces().size() == 14); // 4 + 6 + 4

    REQUIRE(t.opposite_of(2) == Simplex::edge(1, 3));
    REQUIRE(t.with_substituted(3, 7) == Simplex({1, 2, 7}));
    REQUIRE_THROWS_AS(Simplex({1, 1, 2}), Error);
}

TEST_CASE("simplex counts against subset enumeration")
{
    struct Case {
        Mesh mesh;
        std::vector<Index> counts; // per dimension
        std::int64_t chi;
    };
    std::vector<Case> cases;
    cases.push_back({single_triangle(), {3, 3, 1}, 1});
    cases.push_back({two_triangle_quad(), {4, 5, 2}, 1});
    cases.push_back({hexagon_fan(), {7, 12, 6}, 1});
    cases.push_back({tetra_boundary(), {4, 6, 4}, 2});
    cases.push_back({single_tet(), {4, 6, 4, 1}, 1});
    cases.push_back({two_tets(), {5, 9, 7, 2}, 1});
    cases.push_back({path_mesh(4), {5, 4}, 1});
    cases.push_back({cycle_mesh(6), {6, 6}, 0});
    cases.push_back({grid_patch(3, 3), {9, 16, 8}, 1});
    cases.push_back({point_cloud(5), {5}, 5});

    for (auto& c : cases) {
        REQUIRE(c.mesh.validate().valid());
        for (int k = 0; k <= c.mesh.dimension(); ++k) {
            auto brute = brute_simplices(c.mesh, k);
            REQUIRE(as_sets(c.mesh.simplices(k)) == brute);
            REQUIRE(c.mesh.simplex_count(k) == c.counts[k]);
            REQUIRE(static_cast<Index>(brute.size()) == c.counts[k]);
        }
        REQUIRE(c.mesh.euler_characteristic() == c.chi);
    }
}

TEST_CASE("membership and boundary queries")
{
    Mesh m = two_triangle_quad();
    REQUIRE(m.contains(Simplex::edge(0, 1)));
    REQUIRE(m.contains(Simplex::vertex(3)));
    REQUIRE(!m.contains(Simplex::edge(2, 3)));
    REQUIRE(m.is_edge(0, 2));
    REQUIRE(!m.is_edge(0, 0));
    REQUIRE(!m.is_boundary_face(Simplex::edge(0, 1)));
    REQUIRE(m.is_boundary_face(Simplex::edge(0, 2)));
    REQUIRE(m.vertex_on_boundary(0));
    REQUIRE(m.vertex_on_boundary(2));
    REQUIRE(m.boundary_faces().size() == 4);

    Mesh closed = tetra_boundary();
    REQUIRE(closed.boundary_faces().empty());
    for (Index v : closed.alive_vertices()) REQUIRE(!closed.vertex_on_boundary(v));
}

TEST_CASE("validity violations carry the right witness")
{
    SECTION("three facets over one edge break manifoldness")
    {
        Mesh m(2);
        add_vertices(m, 5);
        m.add_facet({0, 1, 2});
        m.add_facet({0, 1, 3});
        m.add_facet({0, 1, 4});
        auto rep = m.validate();
        REQUIRE(rep.structurally_sound());
        REQUIRE(rep.violations.size() == 1);
        REQUIRE(rep.violations[0].condition == Condition::Manifold);
        REQUIRE(rep.violations[0].witness == Simplex::edge(0, 1));
    }
    SECTION("duplicate facet breaks the intersection condition")
    {
        Mesh m(2);
        add_vertices(m, 3);
        m.add_facet({0, 1, 2});
        m.add_facet({2, 0, 1});
        auto rep = m.validate();
        REQUIRE(rep.violations.size() == 1);
        REQUIRE(rep.violations[0].condition == Condition::Intersection);
        REQUIRE(rep.violations[0].witness == Simplex({0, 1, 2}));
    }
    SECTION("vertex outside every facet breaks pureness")
    {
        Mesh m = single_triangle();
        Index v = m.add_vertex();
        auto rep = m.validate();
        REQUIRE(rep.violations.size() == 1);
        REQUIRE(rep.violations[0].condition == Condition::Pure);
        REQUIRE(rep.violations[0].witness == Simplex::vertex(v));
    }
    SECTION("facet over a dead vertex is structural, not a violation")
    {
        Mesh m = single_triangle();
        m.kill_vertex(2);
        auto rep = m.validate();
        REQUIRE(!rep.structurally_sound());
        REQUIRE(!rep.valid());
    }
}

TEST_CASE("switch operations satisfy the dart group laws")
{
    std::vector<Mesh> meshes;
    meshes.push_back(two_triangle_quad());
    meshes.push_back(hexagon_fan());
    meshes.push_back(tetra_boundary());
    meshes.push_back(two_tets());
    meshes.push_back(path_mesh(3));

    for (const Mesh& m : meshes) {
        const int dim = m.dimension();
        for (const Dart& d : all_darts(m)) {
            REQUIRE(dart_valid(m, d));
            for (int k = 0; k <= dim; ++k) {
                if (!can_switch(m, d, k)) {
                    REQUIRE(k == dim); // only the facet switch can be blocked
                    continue;
                }
                Dart e = dart_switch(m, d, k);
                REQUIRE(dart_valid(m, e));
                REQUIRE(e != d);
                REQUIRE(dart_switch(m, e, k) == d);
                // All slots except k keep their simplex.
                for (int j = 0; j <= dim; ++j) {
                    if (j == k) continue;
                    REQUIRE(dart_simplex(m, e, j) == dart_simplex(m, d, j));
                }
                REQUIRE(dart_simplex(m, e, k) != dart_simplex(m, d, k));
                // Distant switches commute.
                for (int j = k + 2; j <= dim; ++j) {
                    if (!can_switch(m, d, j)) continue;
                    Dart a = dart_switch(m, dart_switch(m, d, k), j);
                    Dart b = dart_switch(m, dart_switch(m, d, j), k);
                    REQUIRE(a == b);
                }
            }
        }
    }
}

TEST_CASE("facet switch crosses the shared face")
{
    Mesh m = two_triangle_quad();
    Dart d;
    d.facet = 0;
    d.order = {0, 1, 2, invalid_index};
    REQUIRE(can_switch(m, d, 2));
    Dart e = dart_switch(m, d, 2);
    REQUIRE(e.facet == 1);
    REQUIRE(e.order[0] == 0);
    REQUIRE(e.order[1] == 1);
    REQUIRE(e.order[2] == 3);

    Dart boundary;
    boundary.facet = 0;
    boundary.order = {0, 2, 1, invalid_index};
    REQUIRE(!can_switch(m, boundary, 2));
    REQUIRE_THROWS_AS(dart_switch(m, boundary, 2), Error);
}

TEST_CASE("darts_of counts follow the cofacet formula")
{
    // count = cofacets * (k+1)! * (dim-k)!
    Mesh quad = two_triangle_quad();
    REQUIRE(darts_of(quad, Simplex::edge(0, 1)).size() == 4); // 2 * 2 * 1
    REQUIRE(darts_of(quad, Simplex::edge(0, 2)).size() == 2); // 1 * 2 * 1
    REQUIRE(darts_of(quad, Simplex::vertex(2)).size() == 2);  // 1 * 1 * 2
    REQUIRE(darts_of(quad, Simplex::vertex(0)).size() == 4);  // 2 * 1 * 2
    REQUIRE(darts_of(quad, Simplex({0, 1, 2})).size() == 6);  // 1 * 6 * 1

    Mesh fan = hexagon_fan();
    REQUIRE(darts_of(fan, Simplex::vertex(0)).size() == 12); // 6 * 1 * 2

    Mesh tet = single_tet();
    REQUIRE(darts_of(tet, Simplex::edge(0, 1)).size() == 4);    // 1 * 2 * 2
    REQUIRE(darts_of(tet, Simplex({0, 1, 2, 3})).size() == 24); // 1 * 24 * 1

    // Every enumerated dart selects s at its slot and is valid.
    for (const Dart& d : darts_of(quad, Simplex::edge(0, 1))) {
        REQUIRE(dart_valid(quad, d));
        REQUIRE(dart_simplex(quad, d, 1) == Simplex::edge(0, 1));
    }
}

TEST_CASE("dart seating from a vertex prefix")
{
    Mesh m = two_tets();
    const Index prefix[] = {4, 1};
    Dart d = dart_from_prefix(m, 1, std::span<const Index>(prefix, 2));
    REQUIRE(d.order[0] == 4);
    REQUIRE(d.order[1] == 1);
    REQUIRE(d.order[2] == 0);
    REQUIRE(d.order[3] == 2);
    REQUIRE(dart_valid(m, d));
    const Index bad[] = {3, 4};
    REQUIRE_THROWS_AS(dart_from_prefix(m, 1, std::span<const Index>(bad, 2)), Error);
}

TEST_CASE("link matches subset enumeration")
{
    // Independent oracle: t is in link(s) iff s and t are disjoint and their
    // union is a subset of some alive facet.
    auto brute_link = [](const Mesh& m, const Simplex& s) {
        std::set<std::vector<Index>> out;
        for (Index f : m.alive_facets()) {
            const Simplex fs = m.facet_simplex(f);
            if (!fs.contains(s)) continue;
            std::vector<Index> rest;
            for (Index v : fs.vertices())
                if (!s.contains(v)) rest.push_back(v);
            for (int mask = 1; mask < (1 << rest.size()); ++mask) {
                std::vector<Index> sub;
                for (size_t i = 0; i < rest.size(); ++i)
                    if (mask & (1 << i)) sub.push_back(rest[i]);
                std::sort(sub.begin(), sub.end());
                out.insert(sub);
            }
        }
        return out;
    };

    std::vector<Mesh> meshes;
    meshes.push_back(hexagon_fan());
    meshes.push_back(tetra_boundary());
    meshes.push_back(two_tets());
    meshes.push_back(grid_patch(3, 3));
    for (const Mesh& m : meshes)
        for (int k = 0; k <= m.dimension(); ++k)
            for (const Simplex& s : m.simplices(k)) REQUIRE(as_sets(link(m, s)) == brute_link(m, s));

    // Frozen spot checks.
    Mesh fan = hexagon_fan();
    auto l = link(fan, Simplex::edge(0, 1)); // interior edge center-ring
    REQUIRE(as_sets(l) == std::set<std::vector<Index>>{{2}, {6}});
    auto lv = link(fan, Simplex::vertex(0));
    REQUIRE(lv.size() == 12); // ring: 6 vertices + 6 edges

    Mesh edge(1);
    add_vertices(edge, 2);
    edge.add_facet({0, 1});
    REQUIRE(as_sets(link(edge, Simplex::vertex(0))) == std::set<std::vector<Index>>{{1}});
    REQUIRE(link(edge, Simplex::edge(0, 1)).empty());
}

TEST_CASE("derived indices stay consistent under edits")
{
    Mesh m = grid_patch(4, 3);
    REQUIRE(m.derived_state_consistent());
    m.kill_facet(0);
    m.substitute_vertex(3, m.facet_vertices(3)[0], m.add_vertex());
    REQUIRE(m.derived_state_consistent());
}
