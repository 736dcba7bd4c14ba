#pragma once

#include <multimesh/core/mesh.hpp>

namespace mm {

// link(s) = { t : t and s disjoint, t union s is a simplex of the complex }.
// Enumerated from cofacets: every such t is a subset of some facet minus s.
inline std::vector<Simplex> link(const Mesh& m, const Simplex& s)
{
    std::unordered_set<Simplex, SimplexHash> seen;
    std::vector<Simplex> out;
    for (Index f : m.facets_containing(s)) {
        const Simplex fs = m.facet_simplex(f);
        std::array<Index, max_dim + 1> rest;
        int r = 0;
        for (Index v : fs.vertices())
            if (!s.contains(v)) rest[r++] = v;
        if (r == 0) continue;
        for (int mask = 1; mask < (1 << r); ++mask) {
            std::array<Index, max_dim + 1> buf;
            int k = 0;
            for (int i = 0; i < r; ++i)
                if (mask & (1 << i)) buf[k++] = rest[i];
            Simplex t(std::span<const Index>(buf.data(), k));
            if (seen.insert(t).second) out.push_back(t);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<Simplex> link_of_edge(const Mesh& m, Index a, Index b)
{
    return link(m, Simplex::edge(a, b));
}

// Vertices opposite an edge (the 0-simplices of its link), ascending. A
// manifold interior edge of a 2-mesh has exactly two.
inline std::vector<Index> edge_opposites(const Mesh& m, Index a, Index b)
{
    std::vector<Index> out;
    for (const auto& s : link_of_edge(m, a, b))
        if (s.dim() == 0) out.push_back(s.vertex_at(0));
    return out;
}

} // namespace mm
