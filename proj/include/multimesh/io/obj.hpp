#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <multimesh/mm/multimesh.hpp>

namespace mm {

struct ObjCorner {
    Index v = invalid_index;  // 0-based position index
    Index vt = invalid_index; // 0-based texcoord index, or invalid_index
};

// Triangulated OBJ content: polygons are fanned on load, texcoords are kept
// as per-corner pairs. The v/vt corner pairing is exactly the facet-cover
// input linking a UV mesh to the position mesh.
struct ObjDocument {
    std::vector<std::array<double, 3>> positions;
    std::vector<std::array<double, 2>> texcoords;
    std::vector<std::array<ObjCorner, 3>> faces;

    bool any_uv() const
    {
        for (const auto& f : faces)
            for (const auto& c : f)
                if (c.vt != invalid_index) return true;
        return false;
    }
};

namespace objdetail {

[[noreturn]] inline void fail(const std::string& where, int line, const std::string& what)
{
    throw Error(where + ":" + std::to_string(line) + ": " + what);
}

// "3", "3/5", "3//7", "3/5/7" -> corner; OBJ indices are 1-based and may be
// negative (relative to the current count).
inline ObjCorner parse_corner(const std::string& tok, size_t nv, size_t nvt,
                              const std::string& where, int line)
{
    ObjCorner c;
    const auto resolve = [&](long long raw, size_t count, const char* kind) -> Index {
        long long idx = raw > 0 ? raw - 1 : raw + static_cast<long long>(count);
        if (idx < 0 || idx >= static_cast<long long>(count))
            fail(where, line, std::string(kind) + " index out of range: " + tok);
        return static_cast<Index>(idx);
    };
    size_t pos = 0;
    try {
        c.v = resolve(std::stoll(tok, &pos), nv, "vertex");
    } catch (const std::logic_error&) {
        fail(where, line, "bad face corner: " + tok);
    }
    if (pos < tok.size()) {
        if (tok[pos] != '/') fail(where, line, "bad face corner: " + tok);
        ++pos;
        if (pos < tok.size() && tok[pos] != '/') {
            size_t used = 0;
            try {
                c.vt = resolve(std::stoll(tok.substr(pos), &used, 10), nvt, "texcoord");
            } catch (const std::logic_error&) {
                fail(where, line, "bad face corner: " + tok);
            }
        }
        // A trailing /vn normal index is parsed and ignored.
    }
    return c;
}

} // namespace objdetail

inline ObjDocument load_obj_document(std::istream& in, const std::string& where = "obj")
{
    ObjDocument doc;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head) || head[0] == '#') continue;
        if (head == "v") {
            std::array<double, 3> p{0, 0, 0};
            if (!(ls >> p[0] >> p[1] >> p[2])) objdetail::fail(where, lineno, "bad vertex line");
            doc.positions.push_back(p);
        } else if (head == "vt") {
            std::array<double, 2> t{0, 0};
            if (!(ls >> t[0] >> t[1])) objdetail::fail(where, lineno, "bad texcoord line");
            doc.texcoords.push_back(t);
        } else if (head == "f") {
            std::vector<ObjCorner> poly;
            std::string tok;
            while (ls >> tok)
                poly.push_back(objdetail::parse_corner(tok, doc.positions.size(),
                                                       doc.texcoords.size(), where, lineno));
            if (poly.size() < 3) objdetail::fail(where, lineno, "face needs three corners");
            for (size_t i = 1; i + 1 < poly.size(); ++i)
                doc.faces.push_back({poly[0], poly[i], poly[i + 1]});
        }
        // Other directives (vn, o, g, s, usemtl, ...) are ignored.
    }
    return doc;
}

inline ObjDocument load_obj_document(const std::string& path)
{
    std::ifstream in(path);
    require(in.good(), "cannot open " + path);
    return load_obj_document(in, path);
}

// Position mesh over all v entries; 2-mesh with a 3D "position" attribute.
inline Mesh position_mesh_from_obj(const ObjDocument& doc)
{
    Mesh m(2);
    const int col = m.register_attribute_double("position", 0, 3);
    for (const auto& p : doc.positions) m.set_attr_d(col, m.add_vertex(), p);
    for (const auto& f : doc.faces) m.add_facet({f[0].v, f[1].v, f[2].v});
    return m;
}

// UV mesh over all vt entries plus the per-corner cover pairs (uv facet,
// position facet). Rejects files where only some faces carry texcoords.
inline std::pair<Mesh, std::vector<std::pair<Index, Index>>> uv_mesh_from_obj(
    const ObjDocument& doc)
{
    require(doc.any_uv(), "no texcoords in file");
    Mesh m(2);
    const int col = m.register_attribute_double("uv", 0, 2);
    for (const auto& t : doc.texcoords) m.set_attr_d(col, m.add_vertex(), t);
    std::vector<std::pair<Index, Index>> pairs;
    for (size_t i = 0; i < doc.faces.size(); ++i) {
        const auto& f = doc.faces[i];
        for (const auto& c : f)
            require(c.vt != invalid_index, "face without texcoords in a textured file");
        m.add_facet({f[0].vt, f[1].vt, f[2].vt});
        pairs.emplace_back(static_cast<Index>(i), static_cast<Index>(i));
    }
    return {std::move(m), std::move(pairs)};
}

// Root = position mesh; child 1 = UV mesh when texcoords are present.
inline MultiMesh multimesh_from_obj(const ObjDocument& doc)
{
    MultiMesh mmx;
    mmx.add_root(position_mesh_from_obj(doc));
    if (doc.any_uv()) {
        auto [uv, pairs] = uv_mesh_from_obj(doc);
        mmx.add_child_from_facet_cover(0, std::move(uv), pairs);
    }
    return mmx;
}

// Writes the root (and the UV child, when given) with compacted 1-based ids,
// ascending. Corner pairing is recovered from the containment map, so the
// output reloads to the same multimesh up to renumbering.
inline void save_obj(std::ostream& out, const MultiMesh& mmx, int uv_node = -1,
                     const std::string& pos_attr = "position", const std::string& uv_attr = "uv")
{
    const Mesh& root = mmx.mesh(mmx.root());
    require(root.alive_facet_count() > 0, "refusing to save an empty mesh");
    const int pcol = root.find_attribute_double(pos_attr, 0);
    require(pcol >= 0, "missing vertex attribute: " + pos_attr);
    const int parity = root.attribute_arity(pcol);
    require(parity == 2 || parity == 3, "positions must be 2D or 3D");

    char buf[128];
    std::vector<Index> vid(root.vertex_count(), 0);
    Index next = 1;
    for (Index v = 0; v < root.vertex_count(); ++v) {
        if (!root.vertex_alive(v)) continue;
        vid[v] = next++;
        auto p = root.attr_d(pcol, v);
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", p[0], p[1],
                      parity == 3 ? p[2] : 0.0);
        out << buf;
    }

    std::vector<Index> tid;
    if (uv_node >= 0) {
        const Mesh& uv = mmx.mesh(uv_node);
        const int tcol = uv.find_attribute_double(uv_attr, 0);
        require(tcol >= 0, "missing vertex attribute: " + uv_attr);
        tid.assign(uv.vertex_count(), 0);
        Index tnext = 1;
        for (Index v = 0; v < uv.vertex_count(); ++v) {
            if (!uv.vertex_alive(v)) continue;
            tid[v] = tnext++;
            auto t = uv.attr_d(tcol, v);
            std::snprintf(buf, sizeof buf, "vt %.17g %.17g\n", t[0], t[1]);
            out << buf;
        }
    }

    for (Index f = 0; f < root.facet_count(); ++f) {
        if (!root.facet_alive(f)) continue;
        auto verts = root.facet_vertices(f);
        if (uv_node < 0) {
            out << "f " << vid[verts[0]] << ' ' << vid[verts[1]] << ' ' << vid[verts[2]] << '\n';
            continue;
        }
        const Mesh& uv = mmx.mesh(uv_node);
        const ContainmentMap& cm = mmx.map_to_parent(uv_node);
        const auto users = cm.users_of_parent_facet(uv, root, f);
        require(users.size() == 1, "facet cover is not one-to-one; cannot write corners");
        auto cverts = uv.facet_vertices(users.front());
        out << 'f';
        for (Index rv : verts) {
            Index cv = invalid_index;
            for (Index c : cverts)
                if (cm.image_of_vertex(uv, root, c) == rv) cv = c;
            require(cv != invalid_index, "corner without a UV preimage");
            out << ' ' << vid[rv] << '/' << tid[cv];
        }
        out << '\n';
    }
}

inline void save_obj(const std::string& path, const MultiMesh& mmx, int uv_node = -1,
                     const std::string& pos_attr = "position", const std::string& uv_attr = "uv")
{
    std::ofstream out(path);
    require(out.good(), "cannot open " + path);
    save_obj(out, mmx, uv_node, pos_attr, uv_attr);
}

} // namespace mm
