#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <multimesh/core/mesh.hpp>

namespace mm {

// ASCII MEDIT (.mesh) content. Indices are stored 0-based here; the file
// format is 1-based.
struct MeditDocument {
    std::vector<std::array<double, 3>> vertices;
    std::vector<std::pair<std::array<Index, 4>, std::int64_t>> tetrahedra;
    std::vector<std::pair<std::array<Index, 3>, std::int64_t>> triangles;
};

namespace meditdetail {

inline long long read_count(std::istream& in, const std::string& section)
{
    long long n = -1;
    in >> n;
    require(in.good() && n >= 0, "bad count in section " + section);
    return n;
}

template <size_t K>
inline std::pair<std::array<Index, K>, std::int64_t> read_row(std::istream& in, size_t nverts,
                                                              const std::string& section)
{
    std::array<Index, K> verts{};
    for (size_t i = 0; i < K; ++i) {
        long long raw = 0;
        in >> raw;
        require(in.good(), "truncated row in section " + section);
        require(raw >= 1 && raw <= static_cast<long long>(nverts),
                "vertex index out of range in section " + section);
        verts[i] = static_cast<Index>(raw - 1);
    }
    long long ref = 0;
    in >> ref;
    require(!in.fail(), "truncated row in section " + section);
    return {verts, ref};
}

} // namespace meditdetail

inline MeditDocument load_medit_document(std::istream& in, const std::string& where = "mesh")
{
    MeditDocument doc;
    std::string tok;
    while (in >> tok) {
        if (tok == "MeshVersionFormatted") {
            long long ver = 0;
            in >> ver;
            require(!in.fail(), where + ": bad MeshVersionFormatted");
        } else if (tok == "Dimension") {
            long long d = 0;
            in >> d;
            require(!in.fail() && d == 3, where + ": only Dimension 3 is supported");
        } else if (tok == "Vertices") {
            const auto n = meditdetail::read_count(in, "Vertices");
            for (long long i = 0; i < n; ++i) {
                std::array<double, 3> p{};
                long long ref = 0;
                in >> p[0] >> p[1] >> p[2] >> ref;
                require(!in.fail(), where + ": truncated row in section Vertices");
                doc.vertices.push_back(p);
            }
        } else if (tok == "Triangles") {
            const auto n = meditdetail::read_count(in, "Triangles");
            for (long long i = 0; i < n; ++i)
                doc.triangles.push_back(
                    meditdetail::read_row<3>(in, doc.vertices.size(), "Triangles"));
        } else if (tok == "Tetrahedra") {
            const auto n = meditdetail::read_count(in, "Tetrahedra");
            for (long long i = 0; i < n; ++i)
                doc.tetrahedra.push_back(
                    meditdetail::read_row<4>(in, doc.vertices.size(), "Tetrahedra"));
        } else if (tok == "End") {
            break;
        } else if (tok[0] == '#') {
            std::string rest;
            std::getline(in, rest);
        } else {
            throw Error(where + ": unknown section " + tok);
        }
    }
    require(!doc.tetrahedra.empty(), where + ": file has no tetrahedra");
    return doc;
}

inline MeditDocument load_medit_document(const std::string& path)
{
    std::ifstream in(path);
    require(in.good(), "cannot open " + path);
    return load_medit_document(in, path);
}

// 3-mesh with a 3D "position" vertex attribute and an int64 "region" facet
// attribute carrying the tetrahedron reference tags.
inline Mesh mesh_from_medit(const MeditDocument& doc)
{
    Mesh m(3);
    const int pcol = m.register_attribute_double("position", 0, 3);
    const int rcol = m.register_attribute_int64("region", 3);
    for (const auto& p : doc.vertices) m.set_attr_d(pcol, m.add_vertex(), p);
    for (const auto& [verts, ref] : doc.tetrahedra)
        m.set_attr_i(rcol, m.add_facet({verts[0], verts[1], verts[2], verts[3]}), ref);
    return m;
}

// Triangle rows as simplices over the tet mesh's vertex ids, e.g. boundary
// tags for building a surface child.
inline std::vector<Simplex> medit_surface_tags(const MeditDocument& doc)
{
    std::vector<Simplex> tags;
    tags.reserve(doc.triangles.size());
    for (const auto& [verts, ref] : doc.triangles)
        tags.push_back(Simplex{verts[0], verts[1], verts[2]});
    return tags;
}

// Writes alive vertices and tetrahedra with compacted 1-based ids, plus an
// optional Triangles section (simplices over the mesh's vertex ids).
inline void save_medit(std::ostream& out, const Mesh& m,
                       const std::vector<Simplex>& triangles = {},
                       const std::string& pos_attr = "position")
{
    require(m.dimension() == 3, "medit output needs a 3-mesh");
    require(m.alive_facet_count() > 0, "refusing to save an empty mesh");
    const int pcol = m.find_attribute_double(pos_attr, 0);
    require(pcol >= 0, "missing vertex attribute: " + pos_attr);
    require(m.attribute_arity(pcol) == 3, "positions must be 3D");
    const int rcol = m.find_attribute_int64("region", 3);

    out << "MeshVersionFormatted 2\nDimension 3\n";
    std::vector<Index> vid(m.vertex_count(), 0);
    Index next = 1;
    out << "Vertices\n" << m.alive_vertex_count() << '\n';
    char buf[160];
    for (Index v = 0; v < m.vertex_count(); ++v) {
        if (!m.vertex_alive(v)) continue;
        vid[v] = next++;
        auto p = m.attr_d(pcol, v);
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g 0\n", p[0], p[1], p[2]);
        out << buf;
    }
    if (!triangles.empty()) {
        out << "Triangles\n" << triangles.size() << '\n';
        for (const auto& t : triangles) {
            require(t.dim() == 2, "surface tags must be triangles");
            out << vid[t.vertices()[0]] << ' ' << vid[t.vertices()[1]] << ' '
                << vid[t.vertices()[2]] << " 1\n";
        }
    }
    out << "Tetrahedra\n" << m.alive_facet_count() << '\n';
    for (Index f = 0; f < m.facet_count(); ++f) {
        if (!m.facet_alive(f)) continue;
        auto verts = m.facet_vertices(f);
        const std::int64_t ref = rcol >= 0 ? m.attr_i(rcol, f) : 0;
        out << vid[verts[0]] << ' ' << vid[verts[1]] << ' ' << vid[verts[2]] << ' '
            << vid[verts[3]] << ' ' << ref << '\n';
    }
    out << "End\n";
}

inline void save_medit(const std::string& path, const Mesh& m,
                       const std::vector<Simplex>& triangles = {},
                       const std::string& pos_attr = "position")
{
    std::ofstream out(path);
    require(out.good(), "cannot open " + path);
    save_medit(out, m, triangles, pos_attr);
}

} // namespace mm
