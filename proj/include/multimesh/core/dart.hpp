#pragma once

#include <multimesh/core/mesh.hpp>

namespace mm {

// A dart is an ordered chain of nested simplices, one per dimension 0..d,
// inside one facet. Encoded as the facet id plus a permutation of its
// vertices: the slot-j simplex is the set of the first j+1 entries. Adjacent
// transpositions of the permutation realize the switch operations below the
// facet level; the facet-level switch crosses the shared (d-1)-face.
struct Dart {
    Index facet = invalid_index;
    std::array<Index, max_dim + 1> order{invalid_index, invalid_index, invalid_index, invalid_index};

    friend bool operator==(const Dart& a, const Dart& b) { return a.facet == b.facet && a.order == b.order; }
    friend bool operator!=(const Dart& a, const Dart& b) { return !(a == b); }
};

inline bool dart_valid(const Mesh& m, const Dart& d)
{
    if (!m.facet_alive(d.facet)) return false;
    const auto verts = m.facet_vertices(d.facet);
    // The order must be a permutation of the facet's vertices.
    for (int i = 0; i <= m.dimension(); ++i) {
        bool found = false;
        for (int j = 0; j <= m.dimension(); ++j)
            if (verts[j] == d.order[i]) found = true;
        if (!found) return false;
        for (int j = 0; j < i; ++j)
            if (d.order[j] == d.order[i]) return false;
    }
    return true;
}

// Simplex selected by slot k of the dart.
inline Simplex dart_simplex(const Mesh& m, const Dart& d, int k)
{
    require(k >= 0 && k <= m.dimension(), "dart slot out of range");
    return Simplex(std::span<const Index>(d.order.data(), k + 1));
}

// Deterministic dart of a facet: vertices in ascending id order.
inline Dart canonical_dart(const Mesh& m, Index facet)
{
    require(m.facet_alive(facet), "canonical_dart: facet not alive");
    Dart d;
    d.facet = facet;
    const auto verts = m.facet_vertices(facet);
    std::copy(verts.begin(), verts.end(), d.order.begin());
    std::sort(d.order.begin(), d.order.begin() + m.dimension() + 1);
    return d;
}

// Dart on `facet` whose slot-j simplices follow `prefix` (slots beyond the
// prefix are completed in ascending id order).
inline Dart dart_from_prefix(const Mesh& m, Index facet, std::span<const Index> prefix)
{
    require(m.facet_alive(facet), "dart_from_prefix: facet not alive");
    require(static_cast<int>(prefix.size()) <= m.dimension() + 1, "prefix longer than tuple");
    Dart d;
    d.facet = facet;
    const auto verts = m.facet_vertices(facet);
    std::array<Index, max_dim + 1> rest;
    int r = 0;
    for (int i = 0; i <= m.dimension(); ++i) {
        bool used = false;
        for (Index p : prefix)
            if (verts[i] == p) used = true;
        if (!used) rest[r++] = verts[i];
    }
    require(static_cast<size_t>(m.dimension() + 1 - r) == prefix.size(), "prefix not inside facet");
    std::sort(rest.begin(), rest.begin() + r);
    int k = 0;
    for (Index p : prefix) d.order[k++] = p;
    for (int i = 0; i < r; ++i) d.order[k++] = rest[i];
    return d;
}

// switch(dart, k): replace the slot-k simplex by the unique alternative that
// keeps all other slots fixed. An involution. For k < d this swaps order
// entries k and k+1; for k = d it crosses to the other cofacet of the
// (d-1)-face, which fails on the boundary.
inline bool can_switch(const Mesh& m, const Dart& d, int k)
{
    const int dim = m.dimension();
    require(k >= 0 && k <= dim, "switch level out of range");
    if (k < dim) return true;
    const Simplex face(std::span<const Index>(d.order.data(), dim));
    return m.cofacets_of_face(face).size() == 2;
}

inline Dart dart_switch(const Mesh& m, const Dart& d, int k)
{
    const int dim = m.dimension();
    require(k >= 0 && k <= dim, "switch level out of range");
    Dart out = d;
    if (k < dim) {
        std::swap(out.order[k], out.order[k + 1]);
        return out;
    }
    require(dim >= 1, "facet switch undefined on a 0-mesh");
    const Simplex face(std::span<const Index>(d.order.data(), dim));
    const auto cof = m.cofacets_of_face(face);
    require(cof.size() == 2, "facet switch across a boundary face");
    const Index other = cof[0] == d.facet ? cof[1] : cof[0];
    require(other != d.facet, "facet switch: dart not on its own face");
    out.facet = other;
    const auto verts = m.facet_vertices(other);
    for (int i = 0; i <= dim; ++i) {
        if (!face.contains(verts[i])) {
            out.order[dim] = verts[i];
            break;
        }
    }
    return out;
}

// All darts whose slot-dim(s) simplex equals s.
inline std::vector<Dart> darts_of(const Mesh& m, const Simplex& s)
{
    std::vector<Dart> out;
    const int dim = m.dimension();
    const int k = s.dim();
    for (Index f : m.facets_containing(s)) {
        // permutations of s's vertices in slots 0..k, then permutations of the
        // remaining facet vertices above.
        std::array<Index, max_dim + 1> low, high;
        std::copy(s.vertices().begin(), s.vertices().end(), low.begin());
        const auto verts = m.facet_vertices(f);
        int h = 0;
        for (int i = 0; i <= dim; ++i)
            if (!s.contains(verts[i])) high[h++] = verts[i];
        std::sort(low.begin(), low.begin() + k + 1);
        do {
            std::sort(high.begin(), high.begin() + h);
            do {
                Dart d;
                d.facet = f;
                for (int i = 0; i <= k; ++i) d.order[i] = low[i];
                for (int i = 0; i < h; ++i) d.order[k + 1 + i] = high[i];
                out.push_back(d);
            } while (std::next_permutation(high.begin(), high.begin() + h));
        } while (std::next_permutation(low.begin(), low.begin() + k + 1));
    }
    return out;
}

} // namespace mm
