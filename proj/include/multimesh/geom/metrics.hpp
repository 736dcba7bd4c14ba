#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <multimesh/core/mesh.hpp>

namespace mm {

// Looks up a per-vertex double column by name, checking arity. Positions are
// ordinary attributes; nothing in the core depends on them.
inline int position_column(const Mesh& m, const std::string& name, int arity)
{
    const int col = m.find_attribute_double(name, 0);
    require(col >= 0, "missing vertex attribute: " + name);
    require(m.attribute_arity(col) == arity, "attribute arity mismatch: " + name);
    return col;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

inline double edge_length(const Mesh& m, int col, Index a, Index b)
{
    return std::sqrt(squared_distance(m.attr_d(col, a), m.attr_d(col, b)));
}

// Mean length over all alive edges; 0 for an edgeless mesh.
inline double mean_edge_length(const Mesh& m, int col)
{
    double total = 0.0;
    std::int64_t n = 0;
    for (const auto& e : m.simplices(1)) {
        total += edge_length(m, col, e.vertex_at(0), e.vertex_at(1));
        ++n;
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

// Twice the signed area of a 2D triangle in stored vertex order.
inline double signed_area2(std::span<const double> a, std::span<const double> b,
                           std::span<const double> c)
{
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

inline double triangle_signed_area2(const Mesh& m, int col, Index f)
{
    auto v = m.facet_vertices(f);
    return signed_area2(m.attr_d(col, v[0]), m.attr_d(col, v[1]), m.attr_d(col, v[2]));
}

// Six times the signed volume of a tetrahedron in stored vertex order.
inline double signed_volume6(std::span<const double> a, std::span<const double> b,
                             std::span<const double> c, std::span<const double> d)
{
    const double u[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
    const double v[3] = {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
    const double w[3] = {d[0] - a[0], d[1] - a[1], d[2] - a[2]};
    return u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
           + u[2] * (v[0] * w[1] - v[1] * w[0]);
}

inline double tet_signed_volume6(const Mesh& m, int col, Index f)
{
    auto v = m.facet_vertices(f);
    return signed_volume6(m.attr_d(col, v[0]), m.attr_d(col, v[1]), m.attr_d(col, v[2]),
                          m.attr_d(col, v[3]));
}

// Connected components of the alive facet graph (facets joined by shared
// vertices). A UV atlas has one component per chart.
inline int connected_components(const Mesh& m)
{
    std::vector<Index> parent(m.vertex_count());
    for (Index v = 0; v < m.vertex_count(); ++v) parent[v] = v;
    const auto find = [&](Index v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    for (Index f = 0; f < m.facet_count(); ++f) {
        if (!m.facet_alive(f)) continue;
        auto verts = m.facet_vertices(f);
        for (size_t i = 1; i < verts.size(); ++i) parent[find(verts[i])] = find(verts[0]);
    }
    std::vector<Index> roots;
    for (Index f = 0; f < m.facet_count(); ++f) {
        if (!m.facet_alive(f)) continue;
        const Index r = find(m.facet_vertices(f)[0]);
        if (std::find(roots.begin(), roots.end(), r) == roots.end()) roots.push_back(r);
    }
    return static_cast<int>(roots.size());
}

// Number of alive edges at a vertex (graph valence).
inline int valence(const Mesh& m, Index v)
{
    std::vector<Index> seen;
    for (Index f : m.facets_of_vertex(v))
        for (Index w : m.facet_vertices(f))
            if (w != v && std::find(seen.begin(), seen.end(), w) == seen.end())
                seen.push_back(w);
    return static_cast<int>(seen.size());
}

inline int valence_cost(const Mesh& m, Index v, int delta)
{
    const int d = valence(m, v) + delta - 6;
    return d * d;
}

// Gain of flipping edge (a, b) against opposites (c, d) in squared valence
// deviation from the regular interior valence six; positive means the flip
// helps.
inline int swap_gain(const Mesh& m, Index a, Index b, Index c, Index d)
{
    const int before = valence_cost(m, a, 0) + valence_cost(m, b, 0) + valence_cost(m, c, 0)
                       + valence_cost(m, d, 0);
    const int after = valence_cost(m, a, -1) + valence_cost(m, b, -1) + valence_cost(m, c, +1)
                      + valence_cost(m, d, +1);
    return before - after;
}

} // namespace mm
