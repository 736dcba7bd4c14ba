#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include <multimesh/mm/multimesh.hpp>

#include "support/builders.hpp"
#include "support/generators.hpp"
#include "support/mm_dump.hpp"

using namespace mm;
using namespace mmtest;

namespace {

Dart mkdart(Index facet, std::initializer_list<Index> ord)
{
    Dart d;
    d.facet = facet;
    int i = 0;
    for (Index v : ord) d.order[i++] = v;
    return d;
}

std::set<Simplex> alive_facet_simplices(const Mesh& m)
{
    std::set<Simplex> out;
    for (Index f : m.alive_facets()) out.insert(m.facet_simplex(f));
    return out;
}

// Three triangles hanging off the edge (0, 1) plus one more off vertex 2;
// collapsing (0, 1) keeps the complex valid while the edges (0, 2) and (1, 2)
// lose every containing facet.
Mesh tri_strip()
{
    Mesh m(2);
    add_vertices(m, 9);
    m.add_facet({0, 1, 2});
    m.add_facet({2, 3, 4});
    m.add_facet({0, 5, 6});
    m.add_facet({1, 7, 8});
    return m;
}

// Three tets; collapsing (0, 1) deletes the first and leaves the edge (2, 3)
// with no containing facet while both endpoints stay attached elsewhere.
Mesh tet_fan()
{
    Mesh m(3);
    add_vertices(m, 8);
    m.add_facet({0, 1, 2, 3});
    m.add_facet({1, 2, 4, 5});
    m.add_facet({0, 3, 6, 7});
    return m;
}

// All alive darts of one facet.
std::vector<Dart> facet_darts(const Mesh& m, Index f)
{
    return darts_of(m, m.facet_simplex(f));
}

void require_all_valid(const MultiMesh& mmx)
{
    for (int n = 0; n < mmx.node_count(); ++n) {
        INFO("node " << n);
        REQUIRE(mmx.mesh(n).validate().valid());
    }
    REQUIRE(mmx.check_maps().empty());
}

} // namespace

TEST_CASE("transport commutes with switches and inverts exactly", "[anchor]")
{
    MultiMesh mmx;
    mmx.add_root(hexagon_fan());
    mmx.add_child_from_facet_cover(
        0, hexagon_fan(), {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}});
    const Mesh& parent = mmx.mesh(0);
    const Mesh& child = mmx.mesh(1);
    const ContainmentMap& cm = mmx.map_to_parent(1);

    for (Index f : child.alive_facets()) {
        const auto& a = cm.anchor(f);
        REQUIRE(a.has_value());
        REQUIRE(anchor_valid(child, parent, *a));
        for (const Dart& d : facet_darts(child, f)) {
            const Dart p = transport_to_parent(child, *a, d);
            REQUIRE(dart_valid(parent, p));
            // Same switch sequence upstairs and downstairs, any order.
            for (int k = 0; k < child.dimension(); ++k) {
                const Dart lhs = transport_to_parent(child, *a, dart_switch(child, d, k));
                const Dart rhs = dart_switch(parent, p, k);
                REQUIRE(lhs == rhs);
            }
            REQUIRE(transport_to_child(child, *a, p) == d);
        }
        // Slot images agree with per-vertex lookup.
        for (int i = 0; i <= child.dimension(); ++i)
            REQUIRE(anchor_image_vertex(*a, child.dimension(), a->child.order[i])
                    == a->parent.order[i]);
        REQUIRE_THROWS_AS(anchor_image_vertex(*a, child.dimension(), 99), Error);
    }
}

TEST_CASE("mirror child stores identity anchors", "[anchor]")
{
    MultiMesh mmx;
    mmx.add_root(single_triangle());
    mmx.add_child_from_facet_cover(0, single_triangle(), {{0, 0}});
    const auto& a = mmx.map_to_parent(1).anchor(0);
    REQUIRE(a.has_value());
    REQUIRE(*a == Anchor{mkdart(0, {0, 1, 2}), mkdart(0, {0, 1, 2})});
    REQUIRE(transport_to_parent(mmx.mesh(1), *a, mkdart(0, {1, 2, 0})) == mkdart(0, {1, 2, 0}));
    REQUIRE(transport_to_parent(mmx.mesh(1), *a, mkdart(0, {2, 1, 0})) == mkdart(0, {2, 1, 0}));
}

TEST_CASE("tagged edge child anchors complete the parent facet", "[anchor][construction]")
{
    MultiMesh mmx;
    mmx.add_root(single_triangle());
    std::vector<Index> v2p;
    const int c = mmx.add_child_from_tags(
        0, 1, {Simplex::edge(0, 2), Simplex::edge(0, 1)}, &v2p);
    REQUIRE(v2p == std::vector<Index>{0, 1, 2});

    const Mesh& child = mmx.mesh(c);
    REQUIRE(child.dimension() == 1);
    REQUIRE(alive_facet_simplices(child)
            == std::set<Simplex>{Simplex::edge(0, 1), Simplex::edge(0, 2)});

    // Tags are sorted before ids are assigned: facet 0 is (0,1), facet 1 is (0,2).
    const auto& cm = mmx.map_to_parent(c);
    REQUIRE(*cm.anchor(0) == Anchor{mkdart(0, {0, 1}), mkdart(0, {0, 1, 2})});
    REQUIRE(*cm.anchor(1) == Anchor{mkdart(1, {0, 2}), mkdart(0, {0, 2, 1})});

    const auto& a1 = *cm.anchor(1);
    REQUIRE(transport_to_parent(child, a1, mkdart(1, {2, 0})) == mkdart(0, {2, 0, 1}));
    REQUIRE(transport_to_child(child, a1, mkdart(0, {2, 0, 1})) == mkdart(1, {2, 0}));
    // A parent dart whose leading slots leave the anchored image has no source.
    REQUIRE_THROWS_AS(transport_to_child(child, a1, mkdart(0, {1, 2, 0})), Error);
}

TEST_CASE("construction rejects broken input with a witness", "[construction]")
{
    SECTION("root must be set once and be valid")
    {
        MultiMesh mmx;
        mmx.add_root(single_triangle());
        REQUIRE_THROWS_AS(mmx.add_root(single_triangle()), Error);

        Mesh bad(1);
        add_vertices(bad, 3);
        bad.add_facet({0, 1}); // vertex 2 lies in no facet
        MultiMesh other;
        REQUIRE_THROWS_AS(other.add_root(std::move(bad)), Error);
    }
    SECTION("facet cover must reach every parent facet")
    {
        MultiMesh mmx;
        mmx.add_root(two_triangle_quad());
        REQUIRE_THROWS_AS(
            mmx.add_child_from_facet_cover(0, single_triangle(), {{0, 0}}), Error);
    }
    SECTION("facet cover rejects a doubly paired child facet")
    {
        MultiMesh mmx;
        mmx.add_root(two_triangle_quad());
        REQUIRE_THROWS_AS(
            mmx.add_child_from_facet_cover(0, two_triangle_quad(), {{0, 0}, {0, 1}}),
            Error);
    }
    SECTION("facet cover rejects contradictory vertex identifications")
    {
        MultiMesh mmx;
        mmx.add_root(hexagon_fan());
        // Crossing the first two fan triangles maps child vertex 2 to both 3 and 1.
        REQUIRE_THROWS_WITH(
            mmx.add_child_from_facet_cover(
                0, hexagon_fan(), {{0, 1}, {1, 0}, {2, 2}, {3, 3}, {4, 4}, {5, 5}}),
            Catch::Matchers::ContainsSubstring("maps to parent vertices"));
    }
    SECTION("tags must be parent simplices of the stated dimension")
    {
        MultiMesh mmx;
        mmx.add_root(tetra_boundary());
        REQUIRE_THROWS_AS(mmx.add_child_from_tags(0, 1, {Simplex({0, 1, 2})}), Error);
        REQUIRE_THROWS_AS(mmx.add_child_from_tags(0, 1, {Simplex::edge(0, 5)}), Error);
        REQUIRE_THROWS_AS(mmx.add_child_from_tags(0, 1, {}), Error);
    }
    SECTION("tagged sets must form a valid complex")
    {
        MultiMesh mmx;
        mmx.add_root(tetra_boundary());
        // Three edges through vertex 0: three cofacets on one vertex.
        REQUIRE_THROWS_WITH(
            mmx.add_child_from_tags(
                0, 1, {Simplex::edge(0, 1), Simplex::edge(0, 2), Simplex::edge(0, 3)}),
            Catch::Matchers::ContainsSubstring("not a valid complex"));
    }
    SECTION("map dimensions must agree with the meshes")
    {
        MultiMesh mmx;
        mmx.add_root(two_triangle_quad());
        REQUIRE_THROWS_AS(mmx.add_child(0, path_mesh(2), ContainmentMap(0, 2)), Error);
    }
}

TEST_CASE("simplex maps navigate the tree", "[maps]")
{
    MultiMesh mmx;
    mmx.add_root(grid_patch(3, 3));
    std::vector<Index> v2p;
    const std::vector<Simplex> boundary{
        Simplex::edge(0, 1), Simplex::edge(1, 2), Simplex::edge(2, 5), Simplex::edge(5, 8),
        Simplex::edge(7, 8), Simplex::edge(6, 7), Simplex::edge(3, 6), Simplex::edge(0, 3)};
    const int c = mmx.add_child_from_tags(0, 1, boundary, &v2p);
    REQUIRE(v2p == std::vector<Index>{0, 1, 2, 3, 5, 6, 7, 8});
    const int gc = mmx.add_child_from_tags(c, 0, {Simplex::vertex(0)});
    const int c2 = mmx.add_child_from_tags(0, 0, {Simplex::vertex(0)});

    SECTION("tree shape")
    {
        REQUIRE(mmx.node_count() == 4);
        REQUIRE(mmx.parent_of(gc) == c);
        REQUIRE(mmx.children_of(0) == std::vector<int>{c, c2});
        REQUIRE(mmx.depth(gc) == 2);
        REQUIRE(mmx.lca(gc, c2) == 0);
        REQUIRE(mmx.lca(gc, c) == c);
    }
    SECTION("map_up composes images")
    {
        REQUIRE(mmx.map_up(c, Simplex::vertex(4), 0) == Simplex::vertex(5));
        REQUIRE(mmx.map_up(c, Simplex::edge(4, 7), 0) == Simplex::edge(5, 8));
        REQUIRE(mmx.map_up(gc, Simplex::vertex(0), 0) == Simplex::vertex(0));
        REQUIRE(mmx.map_up(c, Simplex::edge(0, 1), c) == Simplex::edge(0, 1));
        REQUIRE_THROWS_AS(mmx.map_up(c2, Simplex::vertex(0), c), Error);
    }
    SECTION("map_down folds pre-images")
    {
        REQUIRE(mmx.map_down(0, Simplex::edge(2, 5), c)
                == std::vector<Simplex>{Simplex::edge(2, 4)});
        REQUIRE(mmx.map_down(0, Simplex::vertex(4), c).empty());
        REQUIRE(mmx.map_down(0, Simplex::vertex(0), gc)
                == std::vector<Simplex>{Simplex::vertex(0)});
        REQUIRE(mmx.map_down(0, Simplex::edge(0, 1), gc).empty());
    }
    SECTION("map_between routes through the common ancestor")
    {
        REQUIRE(mmx.map_between(gc, Simplex::vertex(0), c2)
                == std::vector<Simplex>{Simplex::vertex(0)});
        REQUIRE(mmx.map_between(c2, Simplex::vertex(0), gc)
                == std::vector<Simplex>{Simplex::vertex(0)});
        REQUIRE(mmx.map_between(c, Simplex::vertex(1), c2).empty());
    }
    SECTION("pre-image queries agree with brute enumeration")
    {
        const Mesh& pm = mmx.mesh(0);
        const Mesh& cmsh = mmx.mesh(c);
        const auto& cm = mmx.map_to_parent(c);
        for (int k = 0; k <= 1; ++k) {
            std::map<Simplex, std::vector<Simplex>> expect;
            for (const Simplex& s : cmsh.simplices(k))
                expect[cm.image(cmsh, pm, s)].push_back(s);
            for (const Simplex& p : pm.simplices(k)) {
                auto got = cm.preimages(cmsh, pm, p);
                auto it = expect.find(p);
                std::vector<Simplex> want = it == expect.end() ? std::vector<Simplex>{}
                                                               : it->second;
                std::sort(want.begin(), want.end());
                INFO("parent simplex dim " << k);
                REQUIRE(got == want);
            }
        }
        // A parent simplex above the child dimension has no pre-image.
        REQUIRE(cm.preimages(cmsh, pm, pm.facet_simplex(0)).empty());
    }
    SECTION("parent facet user lists match the stored anchors")
    {
        const Mesh& pm = mmx.mesh(0);
        const Mesh& cmsh = mmx.mesh(c);
        const auto& cm = mmx.map_to_parent(c);
        std::map<Index, std::vector<Index>> expect;
        for (Index f : cmsh.alive_facets()) expect[cm.anchor(f)->parent.facet].push_back(f);
        for (Index pf = 0; pf < pm.facet_count(); ++pf) {
            auto got = cm.users_of_parent_facet(cmsh, pm, pf);
            auto it = expect.find(pf);
            REQUIRE(got == (it == expect.end() ? std::vector<Index>{} : it->second));
        }
    }
    SECTION("maps start clean")
    {
        require_all_valid(mmx);
    }
}

TEST_CASE("synchronized split propagates to every pre-image", "[split]")
{
    SECTION("mirror twin splits along and keeps identity anchors")
    {
        MultiMesh mmx;
        mmx.add_root(two_triangle_quad());
        const int a = mmx.add_child_from_facet_cover(0, two_triangle_quad(),
                                                         {{0, 0}, {1, 1}});
        const int b = mmx.add_child_from_tags(0, 1, {Simplex::edge(0, 1)});

        auto res = mmx.propagate_split(0, 0, 1);
        REQUIRE(res.accepted);
        require_all_valid(mmx);

        auto roots = res.records_for(0);
        REQUIRE(roots.size() == 1);
        REQUIRE(roots[0]->kind == OpKind::Split);
        REQUIRE(roots[0]->edge == Simplex::edge(0, 1));
        REQUIRE(roots[0]->new_vertex == 4);
        REQUIRE(roots[0]->deleted_facets == std::vector<Index>{0, 1});
        REQUIRE(roots[0]->created_facets == std::vector<Index>{2, 3, 4, 5});

        REQUIRE(mmx.mesh(0).alive_facet_count() == 4);
        REQUIRE(mmx.mesh(0).euler_characteristic() == 1);
        REQUIRE(alive_facet_simplices(mmx.mesh(0))
                == std::set<Simplex>{Simplex({0, 4, 2}), Simplex({4, 1, 2}),
                                     Simplex({0, 4, 3}), Simplex({4, 1, 3})});

        // The twin's mesh evolves identically and every anchor stays identity.
        REQUIRE(alive_facet_simplices(mmx.mesh(a)) == alive_facet_simplices(mmx.mesh(0)));
        for (Index f : mmx.mesh(a).alive_facets())
            REQUIRE(mmx.map_to_parent(a).anchor(f)->parent.facet == f);

        // The seam child split its only edge; the halves sit on the new halves.
        REQUIRE(alive_facet_simplices(mmx.mesh(b))
                == std::set<Simplex>{Simplex::edge(0, 2), Simplex::edge(2, 1)});
        REQUIRE(mmx.map_up(b, Simplex::vertex(2), 0) == Simplex::vertex(4));
        REQUIRE(mmx.map_up(b, Simplex::edge(0, 2), 0) == Simplex::edge(0, 4));
        REQUIRE(mmx.map_to_parent(b).anchor(1)->parent.facet == 2);
        REQUIRE(mmx.map_to_parent(b).anchor(2)->parent.facet == 3);
    }
    SECTION("splitting away from a seam re-hosts its anchor")
    {
        MultiMesh mmx;
        mmx.add_root(two_triangle_quad());
        const int b = mmx.add_child_from_tags(0, 1, {Simplex::edge(0, 1)});
        auto res = mmx.propagate_split(0, 0, 2);
        REQUIRE(res.accepted);
        require_all_valid(mmx);
        REQUIRE(res.records_for(b).empty());
        // The seam edge did not split but its host facet did: re-seated to the
        // other facet over (0, 1).
        REQUIRE(mmx.map_to_parent(b).anchor(0)->parent.facet == 1);
        REQUIRE(mmx.map_up(b, Simplex::edge(0, 1), 0) == Simplex::edge(0, 1));
    }
    SECTION("a double cover splits twice per root split")
    {
        MultiMesh mmx;
        mmx.add_root(cycle_mesh(4));
        const int c = mmx.add_child_from_facet_cover(
            0, cycle_mesh(8),
            {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 0}, {5, 1}, {6, 2}, {7, 3}});
        const auto& cm = mmx.map_to_parent(c);
        REQUIRE(cm.preimages(mmx.mesh(c), mmx.mesh(0), Simplex::edge(0, 1))
                == std::vector<Simplex>{Simplex::edge(0, 1), Simplex::edge(4, 5)});

        auto res = mmx.propagate_split(0, 0, 1);
        REQUIRE(res.accepted);
        require_all_valid(mmx);
        REQUIRE(mmx.mesh(0).alive_facet_count() == 5);
        REQUIRE(mmx.mesh(c).alive_facet_count() == 10);
        REQUIRE(res.records_for(c).size() == 2);
        // Both cover mid-points map to the single root mid-point.
        REQUIRE(mmx.map_up(c, Simplex::vertex(8), 0) == Simplex::vertex(4));
        REQUIRE(mmx.map_up(c, Simplex::vertex(9), 0) == Simplex::vertex(4));
        REQUIRE(mmx.map_down(0, Simplex::vertex(4), c)
                == std::vector<Simplex>{Simplex::vertex(8), Simplex::vertex(9)});
    }
    SECTION("a rejected invariant rolls the split back byte for byte")
    {
        MultiMesh mmx;
        mmx.add_root(two_triangle_quad());
        mmx.add_child_from_tags(0, 1, {Simplex::edge(0, 1)});
        const auto before = dump_multimesh(mmx);
        auto res = mmx.propagate_split(0, 0, 1, [](const PropagationResult&) { return false; });
        REQUIRE_FALSE(res.accepted);
        REQUIRE(res.reason == "rejected by invariant");
        REQUIRE(dump_multimesh(mmx) == before);
    }
}

TEST_CASE("synchronized collapse slides seams instead of breaking them", "[collapse]")
{
    SECTION("collapsing next to a seam relocates the seam edge")
    {
        MultiMesh mmx;
        mmx.add_root(two_triangle_quad());
        const int b = mmx.add_child_from_tags(0, 1, {Simplex::edge(0, 1)});

        REQUIRE(mmx.multimesh_link_condition(0, 2, 0));
        auto oracle = mm_collapse_oracle(mmx, 0, 2, 0);
        REQUIRE(oracle.valid);

        auto res = mmx.propagate_collapse(0, 2, 0);
        REQUIRE(res.accepted);
        require_all_valid(mmx);
        REQUIRE(alive_facet_simplices(mmx.mesh(0)) == std::set<Simplex>{Simplex({2, 1, 3})});
        // The seam still has both vertices; its image slid from (0,1) to (1,2).
        REQUIRE(mmx.mesh(b).alive_facet_count() == 1);
        REQUIRE(mmx.map_up(b, Simplex::edge(0, 1), 0) == Simplex::edge(1, 2));
        REQUIRE(res.records_for(b).empty());
    }
    SECTION("collapsing the seam itself fails at the root first")
    {
        MultiMesh mmx;
        mmx.add_root(two_triangle_quad());
        mmx.add_child_from_tags(0, 1, {Simplex::edge(0, 1)});
        auto detail = mmx.link_condition_detail(0, 0, 1);
        REQUIRE_FALSE(detail.ok);
        REQUIRE_THAT(detail.reason,
                     Catch::Matchers::ContainsSubstring("node 0")
                         && Catch::Matchers::ContainsSubstring("lose all facets"));
        REQUIRE_FALSE(mm_collapse_oracle(mmx, 0, 0, 1).valid);

        const auto before = dump_multimesh(mmx);
        auto res = mmx.propagate_collapse(0, 0, 1);
        REQUIRE_FALSE(res.accepted);
        REQUIRE(dump_multimesh(mmx) == before);
    }
    SECTION("a ring child follows a fan collapse")
    {
        MultiMesh mmx;
        mmx.add_root(hexagon_fan());
        const std::vector<Simplex> ring{Simplex::edge(1, 2), Simplex::edge(2, 3),
                                        Simplex::edge(3, 4), Simplex::edge(4, 5),
                                        Simplex::edge(5, 6), Simplex::edge(6, 1)};
        const int c = mmx.add_child_from_tags(0, 1, ring);

        // Ring edge: the pair restricts to the child and shrinks the ring.
        REQUIRE(mmx.multimesh_link_condition(0, 1, 2));
        auto res = mmx.propagate_collapse(0, 1, 2);
        REQUIRE(res.accepted);
        require_all_valid(mmx);
        REQUIRE(mmx.mesh(0).alive_facet_count() == 5);
        REQUIRE(mmx.mesh(c).alive_facet_count() == 5);
        REQUIRE(mmx.map_up(c, Simplex::edge(0, 2), 0) == Simplex::edge(1, 3));
    }
    SECTION("a spoke collapse relocates a ring vertex")
    {
        MultiMesh mmx;
        mmx.add_root(hexagon_fan());
        const std::vector<Simplex> ring{Simplex::edge(1, 2), Simplex::edge(2, 3),
                                        Simplex::edge(3, 4), Simplex::edge(4, 5),
                                        Simplex::edge(5, 6), Simplex::edge(6, 1)};
        const int c = mmx.add_child_from_tags(0, 1, ring);

        REQUIRE(mmx.multimesh_link_condition(0, 0, 1));
        REQUIRE(mm_collapse_oracle(mmx, 0, 0, 1).valid);
        auto res = mmx.propagate_collapse(0, 0, 1);
        REQUIRE(res.accepted);
        require_all_valid(mmx);
        // No child pair existed, yet child vertex 0 (over parent 1) re-seats
        // onto the merge survivor.
        REQUIRE(res.records_for(c).empty());
        REQUIRE(mmx.mesh(c).alive_facet_count() == 6);
        REQUIRE(mmx.map_up(c, Simplex::vertex(0), 0) == Simplex::vertex(0));
        REQUIRE(mmx.map_up(c, Simplex::edge(0, 1), 0) == Simplex::edge(0, 2));
    }
    SECTION("initiating at the child or the root gives the same result")
    {
        auto build = [] {
            MultiMesh mmx;
            mmx.add_root(grid_patch(3, 3));
            mmx.add_child_from_tags(
                0, 1,
                {Simplex::edge(0, 1), Simplex::edge(1, 2), Simplex::edge(2, 5),
                 Simplex::edge(5, 8), Simplex::edge(7, 8), Simplex::edge(6, 7),
                 Simplex::edge(3, 6), Simplex::edge(0, 3)});
            return mmx;
        };
        MultiMesh from_root = build();
        MultiMesh from_child = build();
        REQUIRE(from_root.multimesh_link_condition(0, 0, 1));
        REQUIRE(from_child.multimesh_link_condition(1, 0, 1));
        REQUIRE(from_root.propagate_collapse(0, 0, 1).accepted);
        REQUIRE(from_child.propagate_collapse(1, 0, 1).accepted);
        REQUIRE(dump_multimesh(from_root) == dump_multimesh(from_child));
        require_all_valid(from_root);
    }
    SECTION("a double cover collapses twice per root pair")
    {
        MultiMesh mmx;
        mmx.add_root(cycle_mesh(4));
        const int c = mmx.add_child_from_facet_cover(
            0, cycle_mesh(8),
            {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 0}, {5, 1}, {6, 2}, {7, 3}});
        REQUIRE(mmx.multimesh_link_condition(0, 0, 1));
        REQUIRE(mm_collapse_oracle(mmx, 0, 0, 1).valid);
        auto res = mmx.propagate_collapse(0, 0, 1);
        REQUIRE(res.accepted);
        require_all_valid(mmx);
        REQUIRE(mmx.mesh(0).alive_facet_count() == 3);
        REQUIRE(mmx.mesh(c).alive_facet_count() == 6);
        REQUIRE(res.records_for(c).size() == 2);
    }
}

TEST_CASE("vanished edges force child merges", "[collapse][forcing]")
{
    SECTION("a curve over a dying edge contracts it and survives")
    {
        MultiMesh mmx;
        mmx.add_root(tri_strip());
        const int c = mmx.add_child_from_tags(0, 1,
                                              {Simplex::edge(0, 2), Simplex::edge(0, 5)});
        REQUIRE(mmx.multimesh_link_condition(0, 0, 1));
        REQUIRE(mm_collapse_oracle(mmx, 0, 0, 1).valid);
        auto res = mmx.propagate_collapse(0, 0, 1);
        REQUIRE(res.accepted);
        require_all_valid(mmx);
        // Forced merge: the curve edge over (0,2) contracted into the vertex
        // that stays attached; the other branch survives as is.
        REQUIRE(mmx.mesh(c).alive_facet_count() == 1);
        auto child_records = res.records_for(c);
        REQUIRE(child_records.size() == 1);
        REQUIRE(child_records[0]->kind == OpKind::Collapse);
        REQUIRE(mmx.map_up(c, Simplex::edge(0, 2), 0) == Simplex::edge(0, 5));
    }
    SECTION("two dying edges forcing the same vertex two ways is contradictory")
    {
        MultiMesh mmx;
        mmx.add_root(tri_strip());
        mmx.add_child_from_tags(0, 1, {Simplex::edge(0, 2), Simplex::edge(1, 2)});
        auto detail = mmx.link_condition_detail(0, 0, 1);
        REQUIRE_FALSE(detail.ok);
        REQUIRE_THAT(detail.reason,
                     Catch::Matchers::ContainsSubstring("contradictory"));
        REQUIRE_FALSE(mm_collapse_oracle(mmx, 0, 0, 1).valid);
        const auto before = dump_multimesh(mmx);
        REQUIRE_FALSE(mmx.propagate_collapse(0, 0, 1).accepted);
        REQUIRE(dump_multimesh(mmx) == before);
    }
    SECTION("a dying edge detached from the merge class falls back deterministically")
    {
        // The vanished edge (2,3) has neither endpoint in the merge class, so
        // its pre-image contracts toward the smaller vertex id.
        MultiMesh base;
        base.add_root(tet_fan());

        MultiMesh lone = base;
        lone.add_child_from_tags(0, 1, {Simplex::edge(2, 3)});
        REQUIRE_FALSE(lone.multimesh_link_condition(0, 0, 1));
        REQUIRE_FALSE(mm_collapse_oracle(lone, 0, 0, 1).valid);

        MultiMesh path = base;
        const int c = path.add_child_from_tags(0, 1,
                                               {Simplex::edge(2, 3), Simplex::edge(2, 4)});
        REQUIRE(path.multimesh_link_condition(0, 0, 1));
        REQUIRE(mm_collapse_oracle(path, 0, 0, 1).valid);
        auto res = path.propagate_collapse(0, 0, 1);
        REQUIRE(res.accepted);
        require_all_valid(path);
        REQUIRE(path.mesh(c).alive_facet_count() == 1);
        REQUIRE(path.map_up(c, Simplex::edge(0, 2), 0) == Simplex::edge(2, 4));
        REQUIRE_FALSE(path.mesh(c).vertex_alive(1));
    }
}

TEST_CASE("collapse propagates down three levels", "[collapse]")
{
    MultiMesh mmx;
    mmx.add_root(grid_patch(3, 3));
    const int c = mmx.add_child_from_tags(
        0, 1,
        {Simplex::edge(0, 1), Simplex::edge(1, 2), Simplex::edge(2, 5), Simplex::edge(5, 8),
         Simplex::edge(7, 8), Simplex::edge(6, 7), Simplex::edge(3, 6), Simplex::edge(0, 3)});
    const int gc = mmx.add_child_from_tags(c, 0, {Simplex::vertex(0)});
    REQUIRE(mmx.map_to_parent(gc).anchor(0)->parent.facet == 0);

    REQUIRE(mmx.multimesh_link_condition(0, 0, 1));
    REQUIRE(mm_collapse_oracle(mmx, 0, 0, 1).valid);
    auto res = mmx.propagate_collapse(0, 0, 1);
    REQUIRE(res.accepted);
    require_all_valid(mmx);
    // The boundary cycle shrank; its dying facet hosted the point child, which
    // re-seated onto a surviving edge.
    REQUIRE(mmx.mesh(c).alive_facet_count() == 7);
    REQUIRE(mmx.map_to_parent(gc).anchor(0)->parent.facet == 1);
    REQUIRE(mmx.map_up(gc, Simplex::vertex(0), 0) == Simplex::vertex(0));
}

TEST_CASE("volume collapses carry embedded surfaces", "[collapse][3d]")
{
    SECTION("a shared-face surface re-seats into the surviving tet")
    {
        MultiMesh mmx;
        mmx.add_root(two_tets());
        const int c = mmx.add_child_from_tags(0, 2, {Simplex({0, 1, 2})});
        REQUIRE(mmx.map_to_parent(c).anchor(0)->parent.facet == 0);

        REQUIRE(mmx.multimesh_link_condition(0, 0, 3));
        auto res = mmx.propagate_collapse(0, 0, 3);
        REQUIRE(res.accepted);
        require_all_valid(mmx);
        REQUIRE(mmx.mesh(0).alive_facet_count() == 1);
        REQUIRE(mmx.map_to_parent(c).anchor(0)->parent.facet == 1);
        REQUIRE(res.records_for(c).empty());
    }
    SECTION("a surface pinned to the collapsing edge is rejected everywhere")
    {
        MultiMesh mmx;
        mmx.add_root(two_tets());
        mmx.add_child_from_tags(0, 2, {Simplex({0, 1, 3})});
        auto detail = mmx.link_condition_detail(0, 0, 3);
        REQUIRE_FALSE(detail.ok);
        REQUIRE_THAT(detail.reason, Catch::Matchers::ContainsSubstring("node 1"));
        REQUIRE_FALSE(mm_collapse_oracle(mmx, 0, 0, 3).valid);
        const auto before = dump_multimesh(mmx);
        REQUIRE_FALSE(mmx.propagate_collapse(0, 0, 3).accepted);
        REQUIRE(dump_multimesh(mmx) == before);
    }
    SECTION("a surface triangle slides off a dying tet")
    {
        MultiMesh mmx;
        mmx.add_root(two_tets());
        const int c = mmx.add_child_from_tags(0, 2, {Simplex({1, 2, 3})});
        REQUIRE(mmx.multimesh_link_condition(0, 0, 3));
        auto res = mmx.propagate_collapse(0, 0, 3);
        REQUIRE(res.accepted);
        require_all_valid(mmx);
        REQUIRE(mmx.map_up(c, Simplex({0, 1, 2}), 0) == Simplex({0, 1, 2}));
        REQUIRE(mmx.map_to_parent(c).anchor(0)->parent.facet == 1);
    }
    SECTION("a closed surface collapse that duplicates facets is rejected")
    {
        MultiMesh mmx;
        mmx.add_root(tetra_boundary());
        mmx.add_child_from_tags(
            0, 1, {Simplex::edge(0, 1), Simplex::edge(1, 2), Simplex::edge(0, 2)});
        auto detail = mmx.link_condition_detail(0, 0, 1);
        REQUIRE_FALSE(detail.ok);
        REQUIRE_THAT(detail.reason,
                     Catch::Matchers::ContainsSubstring("node 0")
                         && Catch::Matchers::ContainsSubstring("coincide"));
        REQUIRE_FALSE(mm_collapse_oracle(mmx, 0, 0, 1).valid);
    }
}

TEST_CASE("edge swap is a split plus a guarded collapse", "[swap]")
{
    SECTION("diagonal swap on a quad")
    {
        MultiMesh mmx;
        mmx.add_root(two_triangle_quad());
        auto res = mmx.propagate_swap(0, 0, 1);
        REQUIRE(res.accepted);
        require_all_valid(mmx);
        REQUIRE(alive_facet_simplices(mmx.mesh(0))
                == std::set<Simplex>{Simplex({0, 2, 3}), Simplex({1, 2, 3})});
        REQUIRE(mmx.mesh(0).is_edge(2, 3));
        REQUIRE_FALSE(mmx.mesh(0).is_edge(0, 1));
        REQUIRE(mmx.mesh(0).euler_characteristic() == 1);
        auto records = res.records_for(0);
        REQUIRE(records.size() == 2);
        REQUIRE(records[0]->kind == OpKind::Split);
        REQUIRE(records[1]->kind == OpKind::Collapse);
    }
    SECTION("an explicit target in the link gives the same surface")
    {
        MultiMesh mmx;
        mmx.add_root(two_triangle_quad());
        auto res = mmx.propagate_swap(0, 0, 1, 3);
        REQUIRE(res.accepted);
        REQUIRE(alive_facet_simplices(mmx.mesh(0))
                == std::set<Simplex>{Simplex({0, 2, 3}), Simplex({1, 2, 3})});
    }
    SECTION("a target outside the link is refused outright")
    {
        MultiMesh mmx;
        mmx.add_root(two_triangle_quad());
        REQUIRE_THROWS_AS(mmx.propagate_swap(0, 0, 1, 1), Error);
        REQUIRE_THROWS_AS(mmx.propagate_swap(0, 2, 0, 3), Error);
    }
    SECTION("a boundary swap rejects and rolls everything back")
    {
        MultiMesh mmx;
        mmx.add_root(two_triangle_quad());
        mmx.add_child_from_tags(0, 1, {Simplex::edge(0, 2)});
        const auto before = dump_multimesh(mmx);
        auto res = mmx.propagate_swap(0, 0, 2);
        REQUIRE_FALSE(res.accepted);
        REQUIRE_THAT(res.reason, Catch::Matchers::ContainsSubstring("swap collapse rejected"));
        REQUIRE(dump_multimesh(mmx) == before);
    }
    SECTION("a seam child slides around the swapped edge")
    {
        MultiMesh mmx;
        mmx.add_root(two_triangle_quad());
        const int b = mmx.add_child_from_tags(0, 1, {Simplex::edge(0, 1)});
        auto res = mmx.propagate_swap(0, 0, 1); // target defaults to 2
        REQUIRE(res.accepted);
        require_all_valid(mmx);
        REQUIRE(alive_facet_simplices(mmx.mesh(b))
                == std::set<Simplex>{Simplex::edge(0, 2), Simplex::edge(2, 1)});
        REQUIRE(mmx.map_up(b, Simplex::edge(0, 2), 0) == Simplex::edge(0, 2));
        REQUIRE(mmx.map_up(b, Simplex::edge(2, 1), 0) == Simplex::edge(1, 2));
    }
    SECTION("swaps relocate no surviving vertex")
    {
        MultiMesh mmx;
        mmx.add_root(grid_patch(3, 3));
        mmx.set_collapse_policy(0, CollapsePolicy::Midpoint);
        const int pos = mmx.mesh(0).find_attribute_double("position", 0);
        auto res = mmx.propagate_swap(0, 1, 4); // target defaults to 0
        REQUIRE(res.accepted);
        REQUIRE(mmx.mesh(0).is_edge(0, 5));
        REQUIRE_FALSE(mmx.mesh(0).is_edge(1, 4));
        auto p = mmx.mesh(0).attr_d(pos, 0);
        REQUIRE(p[0] == 0.0);
        REQUIRE(p[1] == 0.0);
    }
}

TEST_CASE("collapse policies steer survivor attributes", "[collapse][attributes]")
{
    MultiMesh keep;
    keep.add_root(grid_patch(3, 3));
    const int pos = keep.mesh(0).find_attribute_double("position", 0);
    REQUIRE(keep.propagate_collapse(0, 0, 1).accepted);
    REQUIRE(keep.mesh(0).attr_d(pos, 0)[0] == 0.0);

    MultiMesh mid;
    mid.add_root(grid_patch(3, 3));
    mid.set_collapse_policy(0, CollapsePolicy::Midpoint);
    REQUIRE(mid.propagate_collapse(0, 0, 1).accepted);
    REQUIRE(mid.mesh(0).attr_d(pos, 0)[0] == 0.5);
    REQUIRE(mid.mesh(0).attr_d(pos, 0)[1] == 0.0);
}

TEST_CASE("copies are independent and rejections are exact no-ops", "[transactions]")
{
    MultiMesh mmx;
    mmx.add_root(two_triangle_quad());
    mmx.add_child_from_tags(0, 1, {Simplex::edge(0, 1)});
    const auto before = dump_multimesh(mmx);

    SECTION("oracle copies never touch the original")
    {
        auto oracle = mm_collapse_oracle(mmx, 0, 0, 1);
        REQUIRE_FALSE(oracle.valid);
        REQUIRE(dump_multimesh(mmx) == before);
    }
    SECTION("an invariant veto on an acceptable collapse restores bytes")
    {
        REQUIRE(mmx.multimesh_link_condition(0, 2, 0));
        auto res = mmx.propagate_collapse(0, 2, 0,
                                          [](const PropagationResult&) { return false; });
        REQUIRE_FALSE(res.accepted);
        REQUIRE(res.reason == "rejected by invariant");
        REQUIRE(dump_multimesh(mmx) == before);
    }
    SECTION("a mutated copy leaves the source untouched")
    {
        MultiMesh copy = mmx;
        REQUIRE(copy.propagate_collapse(0, 2, 0).accepted);
        REQUIRE(dump_multimesh(mmx) == before);
        require_all_valid(copy);
    }
    SECTION("non-edges are refused without touching state")
    {
        REQUIRE_FALSE(mmx.multimesh_link_condition(0, 2, 3));
        REQUIRE(mmx.link_condition_detail(0, 2, 3).reason == "not an alive edge");
        REQUIRE_THROWS_AS(mmx.propagate_collapse(0, 2, 3), Error);
        REQUIRE_THROWS_AS(mmx.propagate_split(0, 2, 3), Error);
        REQUIRE_THROWS_AS(mmx.propagate_swap(0, 2, 3), Error);
        REQUIRE(dump_multimesh(mmx) == before);
    }
}

TEST_CASE("the gate agrees with the full-execution referee", "[collapse][fuzz]")
{
    std::mt19937 rng(0x00c0ffee);
    int accepted = 0, rejected = 0;
    for (int round = 0; round < 300; ++round) {
        MultiMesh mmx = random_multimesh(rng);
        for (int trial = 0; trial < 4; ++trial) {
            int node;
            Index a, b;
            if (!random_edge(rng, mmx, node, a, b)) break;
            const bool predicted = mmx.multimesh_link_condition(node, a, b);
            auto oracle = mm_collapse_oracle(mmx, node, a, b);
            INFO("round " << round << " node " << node << " edge (" << a << "," << b
                          << ") predicted " << predicted << " referee " << oracle.valid
                          << " [" << oracle.why << "]");
            REQUIRE(predicted == oracle.valid);

            const auto before = dump_multimesh(mmx);
            auto res = mmx.propagate_collapse(node, a, b);
            REQUIRE(res.accepted == predicted);
            if (res.accepted) {
                ++accepted;
                require_all_valid(mmx);
            } else {
                ++rejected;
                REQUIRE(dump_multimesh(mmx) == before);
            }
        }
    }
    // The sample must exercise both outcomes heavily.
    REQUIRE(accepted > 100);
    REQUIRE(rejected > 100);
}
