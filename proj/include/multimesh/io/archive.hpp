#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <multimesh/mm/multimesh.hpp>

namespace mm {

// Versioned little-endian binary snapshot of a whole multimesh. State is
// written verbatim, tombstones included, so simplex ids and therefore every
// map_up/map_down answer survive a round trip exactly. A second save of a
// loaded archive is byte-identical.

namespace archdetail {

constexpr char magic[4] = {'M', 'M', 'A', 'R'};
constexpr std::uint32_t archive_version = 1;

inline void put_u8(std::ostream& out, std::uint8_t x) { out.put(static_cast<char>(x)); }

inline void put_u32(std::ostream& out, std::uint32_t x)
{
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((x >> (8 * i)) & 0xff));
}

inline void put_i64(std::ostream& out, std::int64_t x)
{
    const auto u = static_cast<std::uint64_t>(x);
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((u >> (8 * i)) & 0xff));
}

inline void put_f64(std::ostream& out, double x) { put_i64(out, std::bit_cast<std::int64_t>(x)); }

inline void put_str(std::ostream& out, const std::string& s)
{
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint8_t get_u8(std::istream& in)
{
    const int c = in.get();
    require(c != std::istream::traits_type::eof(), "archive truncated");
    return static_cast<std::uint8_t>(c);
}

inline std::uint32_t get_u32(std::istream& in)
{
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(get_u8(in)) << (8 * i);
    return x;
}

inline std::int64_t get_i64(std::istream& in)
{
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(get_u8(in)) << (8 * i);
    return static_cast<std::int64_t>(x);
}

inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_i64(in)); }

inline std::string get_str(std::istream& in)
{
    const auto n = get_u32(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    require(in.good() || n == 0, "archive truncated");
    return s;
}

inline void put_dart(std::ostream& out, const Dart& d)
{
    put_i64(out, d.facet);
    for (Index o : d.order) put_i64(out, o);
}

inline Dart get_dart(std::istream& in)
{
    Dart d;
    d.facet = static_cast<Index>(get_i64(in));
    for (auto& o : d.order) o = static_cast<Index>(get_i64(in));
    return d;
}

inline void put_mesh(std::ostream& out, const Mesh& m)
{
    put_u32(out, static_cast<std::uint32_t>(m.dimension()));
    put_i64(out, m.vertex_count());
    for (Index v = 0; v < m.vertex_count(); ++v) put_u8(out, m.vertex_alive(v) ? 1 : 0);
    put_i64(out, m.facet_count());
    for (Index f = 0; f < m.facet_count(); ++f) {
        put_u8(out, m.facet_alive(f) ? 1 : 0);
        for (Index v : m.facet_vertices(f)) put_i64(out, v);
    }
    put_u32(out, static_cast<std::uint32_t>(m.attribute_count_double()));
    for (int col = 0; col < m.attribute_count_double(); ++col) {
        put_str(out, m.attribute_name_double(col));
        put_u32(out, static_cast<std::uint32_t>(m.attribute_dim_double(col)));
        put_u32(out, static_cast<std::uint32_t>(m.attribute_arity(col)));
        put_f64(out, m.attribute_default_double(col));
        const Index n =
            m.attribute_dim_double(col) == 0 ? m.vertex_count() : m.facet_count();
        for (Index i = 0; i < n; ++i)
            for (double x : m.attr_d(col, i)) put_f64(out, x);
    }
    put_u32(out, static_cast<std::uint32_t>(m.attribute_count_int64()));
    for (int col = 0; col < m.attribute_count_int64(); ++col) {
        put_str(out, m.attribute_name_int64(col));
        put_u32(out, static_cast<std::uint32_t>(m.attribute_dim_int64(col)));
        put_i64(out, m.attribute_default_int64(col));
        const Index n = m.attribute_dim_int64(col) == 0 ? m.vertex_count() : m.facet_count();
        for (Index i = 0; i < n; ++i) put_i64(out, m.attr_i(col, i));
    }
}

inline Mesh get_mesh(std::istream& in)
{
    const int dim = static_cast<int>(get_u32(in));
    require(dim >= 0 && dim <= 3, "archive carries an impossible dimension");
    Mesh m(dim);
    const Index nverts = static_cast<Index>(get_i64(in));
    std::vector<std::uint8_t> valive(nverts);
    for (Index v = 0; v < nverts; ++v) {
        m.add_vertex();
        valive[v] = get_u8(in);
    }
    const Index nfacets = static_cast<Index>(get_i64(in));
    std::vector<std::uint8_t> falive(nfacets);
    std::vector<Index> verts(dim + 1);
    for (Index f = 0; f < nfacets; ++f) {
        falive[f] = get_u8(in);
        for (auto& v : verts) v = static_cast<Index>(get_i64(in));
        m.add_facet(std::span<const Index>(verts));
    }
    // Kill facets before vertices so tombstoned ids reappear exactly.
    for (Index f = 0; f < nfacets; ++f)
        if (!falive[f]) m.kill_facet(f);
    for (Index v = 0; v < nverts; ++v)
        if (!valive[v]) m.kill_vertex(v);
    const auto ndcols = get_u32(in);
    for (std::uint32_t c = 0; c < ndcols; ++c) {
        const std::string name = get_str(in);
        const int sdim = static_cast<int>(get_u32(in));
        const int arity = static_cast<int>(get_u32(in));
        const double def = get_f64(in);
        const int col = m.register_attribute_double(name, sdim, arity, def);
        const Index n = sdim == 0 ? m.vertex_count() : m.facet_count();
        std::vector<double> row(arity);
        for (Index i = 0; i < n; ++i) {
            for (auto& x : row) x = get_f64(in);
            m.set_attr_d(col, i, row);
        }
    }
    const auto nicols = get_u32(in);
    for (std::uint32_t c = 0; c < nicols; ++c) {
        const std::string name = get_str(in);
        const int sdim = static_cast<int>(get_u32(in));
        const std::int64_t def = get_i64(in);
        const int col = m.register_attribute_int64(name, sdim, def);
        const Index n = sdim == 0 ? m.vertex_count() : m.facet_count();
        for (Index i = 0; i < n; ++i) m.set_attr_i(col, i, get_i64(in));
    }
    return m;
}

} // namespace archdetail

inline void save_archive(std::ostream& out, const MultiMesh& mmx)
{
    using namespace archdetail;
    require(mmx.node_count() > 0, "refusing to save an empty multimesh");
    out.write(magic, 4);
    put_u32(out, archive_version);
    put_u32(out, static_cast<std::uint32_t>(mmx.node_count()));
    for (int n = 0; n < mmx.node_count(); ++n) {
        const int parent = mmx.parent_of(n);
        put_u32(out, static_cast<std::uint32_t>(parent + 1));
        put_u8(out, mmx.collapse_policy(n) == CollapsePolicy::Midpoint ? 1 : 0);
        put_mesh(out, mmx.mesh(n));
        if (parent < 0) continue;
        const ContainmentMap& cm = mmx.map_to_parent(n);
        // Trailing disengaged slots are trimmed so a reloaded map saves
        // byte-identically.
        Index slots = cm.anchor_slots();
        while (slots > 0 && !cm.anchor(slots - 1)) --slots;
        put_i64(out, slots);
        for (Index f = 0; f < slots; ++f) {
            const auto& a = cm.anchor(f);
            put_u8(out, a.has_value() ? 1 : 0);
            if (a) {
                put_dart(out, a->child);
                put_dart(out, a->parent);
            }
        }
    }
    require(out.good(), "archive write failed");
}

inline MultiMesh load_archive(std::istream& in)
{
    using namespace archdetail;
    char got[4] = {};
    in.read(got, 4);
    require(in.good() && std::equal(got, got + 4, magic), "not a multimesh archive");
    const auto version = get_u32(in);
    require(version == archive_version,
            "archive version mismatch: file has " + std::to_string(version) + ", reader expects "
                + std::to_string(archive_version));
    const auto nodes = get_u32(in);
    require(nodes > 0, "archive holds no nodes");
    MultiMesh mmx;
    for (std::uint32_t n = 0; n < nodes; ++n) {
        const int parent = static_cast<int>(get_u32(in)) - 1;
        const auto policy = get_u8(in) ? CollapsePolicy::Midpoint : CollapsePolicy::Keep;
        Mesh m = get_mesh(in);
        int id;
        if (parent < 0) {
            require(n == 0, "archive root is not the first node");
            id = mmx.add_root(std::move(m));
        } else {
            require(parent < static_cast<int>(n), "archive child precedes its parent");
            ContainmentMap cm(m.dimension(), mmx.mesh(parent).dimension());
            const Index slots = static_cast<Index>(get_i64(in));
            for (Index f = 0; f < slots; ++f)
                if (get_u8(in)) {
                    const Dart cd = get_dart(in);
                    const Dart pd = get_dart(in);
                    cm.set_anchor(f, Anchor{cd, pd});
                }
            id = mmx.add_child(parent, std::move(m), std::move(cm));
        }
        require(id == static_cast<int>(n), "archive node ids changed on load");
        mmx.set_collapse_policy(id, policy);
    }
    return mmx;
}

inline void save_archive(const std::string& path, const MultiMesh& mmx)
{
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open " + path);
    save_archive(out, mmx);
}

inline MultiMesh load_archive(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open " + path);
    return load_archive(in);
}

} // namespace mm
