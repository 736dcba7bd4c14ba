#pragma once

#include <random>

#include <multimesh/mm/multimesh.hpp>

#include "builders.hpp"

namespace mmtest {

// Random alive-facet subset of a base mesh that is still a valid complex.
inline mm::Mesh random_submesh(std::mt19937& rng, const mm::Mesh& base, int min_facets)
{
    for (int attempt = 0; attempt < 64; ++attempt) {
        mm::Mesh m = base;
        std::vector<mm::Index> alive = m.alive_facets();
        std::shuffle(alive.begin(), alive.end(), rng);
        std::uniform_int_distribution<int> ndel(0, static_cast<int>(alive.size()) - min_facets);
        const int k = ndel(rng);
        for (int i = 0; i < k; ++i) m.kill_facet(alive[i]);
        for (mm::Index v : m.alive_vertices())
            if (m.facets_of_vertex(v).empty()) m.kill_vertex(v);
        if (m.alive_facet_count() >= min_facets && m.validate().valid()) return m;
    }
    return base;
}

// Random tagged subset of the parent's k-simplices; the caller retries when
// the subset is not a valid complex.
inline std::vector<mm::Simplex> random_tag_set(std::mt19937& rng, const mm::Mesh& m, int k,
                                               int max_take)
{
    auto all = m.simplices(k);
    std::shuffle(all.begin(), all.end(), rng);
    std::uniform_int_distribution<int> n(1, std::min<int>(max_take, static_cast<int>(all.size())));
    all.resize(n(rng));
    return all;
}

// Tries a few random tag sets and returns the added node id, or -1.
inline int try_add_tag_child(std::mt19937& rng, mm::MultiMesh& mmx, int parent)
{
    const mm::Mesh& pm = mmx.mesh(parent);
    for (int attempt = 0; attempt < 30; ++attempt) {
        std::uniform_int_distribution<int> kd(0, pm.dimension());
        const int k = kd(rng);
        auto tags = random_tag_set(rng, pm, k, 12);
        try {
            return mmx.add_child_from_tags(parent, k, std::move(tags));
        } catch (const mm::Error&) {
        }
    }
    return -1;
}

// A random multimesh with at most three nodes; roots rotate through curve,
// surface, and volume bases.
inline mm::MultiMesh random_multimesh(std::mt19937& rng)
{
    std::uniform_int_distribution<int> pick(0, 5);
    mm::Mesh root = [&] {
        switch (pick(rng)) {
        case 0: return random_submesh(rng, grid_patch(3, 3), 2);
        case 1: return random_submesh(rng, grid_patch(4, 4), 4);
        case 2: return random_submesh(rng, hexagon_fan(), 2);
        case 3: return random_submesh(rng, cycle_mesh(8), 3);
        case 4: return two_tets();
        default: return tetra_boundary();
        }
    }();
    mm::MultiMesh mmx;
    const int r = mmx.add_root(std::move(root));
    std::uniform_int_distribution<int> extra_d(0, 2);
    const int extra = extra_d(rng);
    if (extra >= 1) {
        const int c = try_add_tag_child(rng, mmx, r);
        if (extra == 2) {
            // chain below the child, or a second child of the root
            if (c != -1 && (rng() & 1u))
                try_add_tag_child(rng, mmx, c);
            else
                try_add_tag_child(rng, mmx, r);
        }
    }
    return mmx;
}

// Picks a random alive edge of a random node; false when none exists.
inline bool random_edge(std::mt19937& rng, const mm::MultiMesh& mmx, int& node, mm::Index& a,
                        mm::Index& b)
{
    std::uniform_int_distribution<int> nd(0, mmx.node_count() - 1);
    for (int attempt = 0; attempt < 16; ++attempt) {
        const int n = nd(rng);
        if (mmx.mesh(n).dimension() < 1) continue;
        auto edges = mmx.mesh(n).simplices(1);
        if (edges.empty()) continue;
        std::uniform_int_distribution<size_t> ed(0, edges.size() - 1);
        const auto& e = edges[ed(rng)];
        node = n;
        a = e.vertex_at(0);
        b = e.vertex_at(1);
        if (rng() & 1u) std::swap(a, b);
        return true;
    }
    return false;
}

// Full-execution referee for the synchronized collapse gate: copy, run with
// the gate off, then demand valid complexes and intact maps everywhere.
struct OracleVerdict {
    bool valid = false;
    std::string why;
};

inline OracleVerdict mm_collapse_oracle(const mm::MultiMesh& mmx, int node, mm::Index kept,
                                        mm::Index dropped)
{
    mm::MultiMesh copy = mmx;
    auto res = copy.collapse_unchecked(node, kept, dropped);
    if (!res.accepted) return {false, "execution: " + res.reason};
    for (int n = 0; n < copy.node_count(); ++n)
        if (!copy.mesh(n).validate().valid())
            return {false, "node " + std::to_string(n) + " mesh invalid"};
    auto errors = copy.check_maps();
    if (!errors.empty()) return {false, errors.front()};
    return {true, {}};
}

} // namespace mmtest
