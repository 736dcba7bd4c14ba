#pragma once

#include <algorithm>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include <multimesh/core/mesh.hpp>
#include <multimesh/ops/records.hpp>

namespace mm {

// Survivor attribute handling for collapses.
enum class CollapsePolicy { Keep, Midpoint };

// One planned vertex merge: dropped is identified into kept.
struct MergePair {
    Index kept = invalid_index;
    Index dropped = invalid_index;
};

// Outcome of checking a set of simultaneous merges against Definition 1.
// well_formed = false means the merge set itself is contradictory (a vertex
// dropped twice, or dropped by one pair and kept by another); such a set has
// no single-valued result, so valid is false as well.
//
// vanished lists pre-operation faces (dims 1..dim-1) whose post image is a
// proper simplex that no longer lies in the complex. fused lists faces whose
// post image degenerates without the face containing a planned pair. Both are
// inputs to synchronized planning across linked meshes; single-mesh callers
// can ignore them.
struct CollapseCheck {
    bool well_formed = true;
    bool valid = false;
    std::string reason;
    std::vector<Index> deleted_facets;
    std::vector<Simplex> vanished;
    std::vector<Simplex> fused;
};

namespace detail {

    // Image of an oriented vertex list under the merge substitution; returns
    // the sorted distinct ids.
    inline std::vector<Index> merge_image(std::span<const Index> verts,
                                          const std::unordered_map<Index, Index>& subst)
    {
        std::vector<Index> out;
        out.reserve(verts.size());
        for (Index v : verts) {
            auto it = subst.find(v);
            out.push_back(it == subst.end() ? v : it->second);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

} // namespace detail

// Decides whether applying all merges at once leaves a valid complex, without
// touching the mesh. Checks, over the affected neighborhood only:
//   duplicate facets (two survivors with one image set),
//   manifoldness (every post (dim-1)-face keeps at most two cofacets),
//   pureness (every surviving vertex, merged classes included, keeps a facet).
// Equivalent to copying the mesh, applying the merges, and validating.
inline CollapseCheck analyze_collapse(const Mesh& m, std::span<const MergePair> pairs)
{
    CollapseCheck out;
    require(m.dimension() >= 1, "collapse needs edges");
    const int d = m.dimension();

    std::unordered_map<Index, Index> subst; // dropped -> kept
    std::unordered_set<Index> kept_set;
    for (const auto& p : pairs) {
        if (!m.is_edge(p.kept, p.dropped)) {
            out.well_formed = false;
            out.reason = "merge pair is not an alive edge";
            return out;
        }
        if (!subst.emplace(p.dropped, p.kept).second) {
            out.well_formed = false;
            out.reason = "vertex dropped by two merges";
            return out;
        }
        kept_set.insert(p.kept);
    }
    for (const auto& p : pairs)
        if (kept_set.count(p.dropped) || subst.count(p.kept)) {
            out.well_formed = false;
            out.reason = "vertex kept by one merge and dropped by another";
            return out;
        }

    // Affected neighborhood: every facet touching a merge endpoint.
    std::unordered_set<Index> affected_verts;
    for (const auto& p : pairs) {
        affected_verts.insert(p.kept);
        affected_verts.insert(p.dropped);
    }
    std::vector<Index> touched;
    std::unordered_set<Index> touched_set;
    for (Index v : affected_verts)
        for (Index f : m.facets_of_vertex(v))
            if (m.facet_alive(f) && touched_set.insert(f).second) touched.push_back(f);

    // Split the neighborhood into deleted facets (degenerate image) and
    // survivors with their images.
    std::vector<std::pair<Index, Simplex>> survivors;
    for (Index f : touched) {
        auto img = detail::merge_image(m.facet_vertices(f), subst);
        if (static_cast<int>(img.size()) < d + 1)
            out.deleted_facets.push_back(f);
        else
            survivors.emplace_back(f, Simplex(img));
    }

    // Duplicate facets: a changed image always contains a kept vertex, so any
    // collision partner also lies in the neighborhood.
    {
        std::unordered_set<Simplex, SimplexHash> seen;
        for (const auto& [f, img] : survivors)
            if (!seen.insert(img).second) {
                out.reason = "two facets would coincide";
                return out;
            }
    }

    // Manifoldness: post degree of every (d-1)-face of a survivor image.
    {
        std::unordered_map<Simplex, int, SimplexHash> post_degree;
        for (const auto& [f, img] : survivors)
            for (int i = 0; i <= d; ++i) ++post_degree[img.opposite_face(i)];
        for (const auto& [face, cnt] : post_degree) {
            int total = cnt;
            bool face_affected = false;
            for (int i = 0; i <= face.dim(); ++i)
                if (affected_verts.count(face.vertex_at(i))) face_affected = true;
            if (!face_affected) {
                for (Index f : m.cofacets_of_face(face))
                    if (!touched_set.count(f)) ++total;
            }
            if (total > 2) {
                out.reason = "a face would exceed two cofacets";
                return out;
            }
        }
    }

    // Pureness: every surviving vertex of the neighborhood keeps a facet.
    {
        std::unordered_set<Index> candidates;
        for (Index f : touched)
            for (Index v : m.facet_vertices(f))
                if (!subst.count(v)) candidates.insert(v);
        for (Index v : candidates) {
            bool ok = false;
            for (Index f : m.facets_of_vertex(v))
                if (m.facet_alive(f) && !touched_set.count(f)) {
                    ok = true;
                    break;
                }
            for (size_t i = 0; i < survivors.size() && !ok; ++i)
                if (survivors[i].second.contains(v)) ok = true;
            if (!ok) {
                out.reason = "a vertex would lose all facets";
                return out;
            }
        }
    }

    // Fate of the deleted facets' proper faces, for synchronized planning.
    // A face whose image keeps full dimension but leaves the complex vanishes;
    // a face whose image degenerates without containing a planned pair fuses.
    {
        std::unordered_set<Simplex, SimplexHash> seen;
        for (Index f : out.deleted_facets) {
            for (const Simplex& face : m.facet_simplex(f).faces()) {
                if (face.dim() < 1 || face.dim() > d - 1) continue;
                if (!seen.insert(face).second) continue;
                auto img = detail::merge_image(face.vertices(), subst);
                if (static_cast<int>(img.size()) < face.dim() + 1) {
                    bool has_pair = false;
                    for (const auto& p : pairs)
                        if (face.contains(p.kept) && face.contains(p.dropped)) has_pair = true;
                    if (!has_pair) out.fused.push_back(face);
                    continue;
                }
                const Simplex post(img);
                bool present = false;
                for (size_t i = 0; i < survivors.size() && !present; ++i)
                    if (survivors[i].second.contains(post)) present = true;
                if (!present) {
                    bool post_affected = false;
                    for (int i = 0; i <= post.dim(); ++i)
                        if (affected_verts.count(post.vertex_at(i))) post_affected = true;
                    if (!post_affected)
                        for (Index f2 : m.facets_containing(post))
                            if (!touched_set.count(f2)) {
                                present = true;
                                break;
                            }
                }
                if (!present) out.vanished.push_back(face);
            }
        }
    }

    std::sort(out.deleted_facets.begin(), out.deleted_facets.end());
    std::sort(out.vanished.begin(), out.vanished.end());
    std::sort(out.fused.begin(), out.fused.end());
    out.valid = true;
    return out;
}

// Definition-1 preservation test for collapsing one edge. Survivor choice
// does not affect validity (the two results are relabelings of each other).
inline bool link_condition(const Mesh& m, Index a, Index b)
{
    if (!m.is_edge(a, b)) return false;
    const MergePair p{a, b};
    return analyze_collapse(m, std::span<const MergePair>(&p, 1)).valid;
}

// Splits edge (a, b) with a new vertex c: every facet over the edge is
// replaced by its two halves. Never rejects. Vertex attributes of c are the
// endpoint midpoints (doubles) or a's value (ints); both halves inherit the
// parent facet's attributes. Created facets come in (keeps-a, keeps-b) pairs
// aligned with deleted_facets.
inline OperationRecord edge_split(Mesh& m, Index a, Index b)
{
    require(m.dimension() >= 1, "split needs edges");
    require(m.is_edge(a, b), "split of a non-edge");
    OperationRecord rec;
    rec.kind = OpKind::Split;
    rec.edge = Simplex::edge(a, b);
    rec.deleted_facets = m.facets_containing(rec.edge);

    const Index c = m.add_vertex();
    rec.new_vertex = c;
    for (int col = 0; col < m.attribute_count_double(); ++col) {
        if (m.attribute_dim_double(col) != 0) continue;
        auto va = m.attr_d(col, a);
        auto vb = m.attr_d(col, b);
        std::vector<double> mid(va.size());
        for (size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (va[i] + vb[i]);
        m.set_attr_d(col, c, mid);
    }
    for (int col = 0; col < m.attribute_count_int64(); ++col)
        if (m.attribute_dim_int64(col) == 0) m.set_attr_i(col, c, m.attr_i(col, a));

    for (Index f : rec.deleted_facets) {
        std::vector<Index> keep_a(m.facet_vertices(f).begin(), m.facet_vertices(f).end());
        std::vector<Index> keep_b = keep_a;
        for (auto& v : keep_a)
            if (v == b) v = c;
        for (auto& v : keep_b)
            if (v == a) v = c;
        const Simplex fs = m.facet_simplex(f);
        rec.boundary_faces.push_back(fs.opposite_of(a));
        rec.boundary_faces.push_back(fs.opposite_of(b));
        m.kill_facet(f);
        const Index fa = m.add_facet(std::span<const Index>(keep_a));
        const Index fb = m.add_facet(std::span<const Index>(keep_b));
        rec.created_facets.push_back(fa);
        rec.created_facets.push_back(fb);
        if (m.dimension() > 0)
            for (int col = 0; col < m.attribute_count_double(); ++col) {
                if (m.attribute_dim_double(col) != m.dimension()) continue;
                auto src = m.attr_d(col, f);
                m.set_attr_d(col, fa, src);
                m.set_attr_d(col, fb, src);
            }
        for (int col = 0; col < m.attribute_count_int64(); ++col) {
            if (m.attribute_dim_int64(col) != m.dimension() || m.dimension() == 0) continue;
            m.set_attr_i(col, fa, m.attr_i(col, f));
            m.set_attr_i(col, fb, m.attr_i(col, f));
        }
    }
    m.bump_generation();
    return rec;
}

// Identifies dropped into kept: facets over both are killed, the rest of
// dropped's star is substituted in place. No validity check; callers gate
// with analyze_collapse or link_condition. Returns false (mesh untouched,
// record unfilled) when the merge is unrealizable because an endpoint is
// already gone; sequencing planned merges can only hit that in contradictory
// plans.
inline bool merge_vertex(Mesh& m, Index kept, Index dropped, CollapsePolicy policy, OperationRecord& rec)
{
    if (kept == dropped || !m.vertex_alive(kept) || !m.vertex_alive(dropped)) return false;
    rec.kind = OpKind::Collapse;
    rec.edge = Simplex::edge(kept, dropped);
    rec.kept_vertex = kept;
    rec.dropped_vertex = dropped;
    rec.vertex_correspondence.emplace_back(dropped, kept);

    if (policy == CollapsePolicy::Midpoint)
        for (int col = 0; col < m.attribute_count_double(); ++col) {
            if (m.attribute_dim_double(col) != 0) continue;
            auto vk = m.attr_d(col, kept);
            auto vd = m.attr_d(col, dropped);
            std::vector<double> mid(vk.size());
            for (size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (vk[i] + vd[i]);
            m.set_attr_d(col, kept, mid);
        }

    const std::vector<Index> star = m.facets_of_vertex(dropped); // copy: substitution edits it
    for (Index f : star) {
        if (!m.facet_alive(f)) continue;
        const Simplex fs = m.facet_simplex(f);
        if (fs.contains(kept)) {
            rec.deleted_facets.push_back(f);
            rec.boundary_faces.push_back(fs.opposite_of(dropped));
            m.kill_facet(f);
        } else {
            rec.modified_facets.push_back(f);
            m.substitute_vertex(f, dropped, kept);
        }
    }
    m.kill_vertex(dropped);
    m.bump_generation();
    return true;
}

// Collapse with the validity gate: nullopt and an untouched mesh on rejection.
inline std::optional<OperationRecord> try_edge_collapse(Mesh& m, Index kept, Index dropped,
                                                        CollapsePolicy policy = CollapsePolicy::Keep)
{
    const MergePair p{kept, dropped};
    if (!analyze_collapse(m, std::span<const MergePair>(&p, 1)).valid) return std::nullopt;
    OperationRecord rec;
    const bool done = merge_vertex(m, kept, dropped, policy, rec);
    require(done, "merge of a checked edge cannot wedge");
    return rec;
}

} // namespace mm
