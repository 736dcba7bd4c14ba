#pragma once

#include <cmath>
#include <limits>

#include <multimesh/core/link.hpp>
#include <multimesh/inv/envelope.hpp>
#include <multimesh/inv/invariants.hpp>
#include <multimesh/sched/scheduler.hpp>

namespace mm {

struct EmbeddedRemeshConfig {
    double target_length = 0.0; // <= 0: use the mean input surface edge length
    int iterations = 5;
    double envelope_eps = std::numeric_limits<double>::infinity(); // inf: no envelope
    double smoothing_weight = 1.0;
    std::string pos_attr = "position";
};

struct EmbeddedRemeshStats {
    double target_length = 0.0;
    PassStats split, collapse, swap;
    std::int64_t smoothed = 0;
    std::int64_t smoothing_rejected = 0;
    double mean_edge_before = 0.0;
    double mean_edge_after = 0.0;
};

// Standalone copy of a child's alive facets with positions lifted through
// the containment maps. Vertex ids are compacted; used for envelopes and for
// exporting surfaces.
inline Mesh lifted_surface_copy(const MultiMesh& mmx, int node, const std::string& pos_attr)
{
    const Mesh& child = mmx.mesh(node);
    const int root = mmx.root();
    const int col = position_column(mmx.mesh(root), pos_attr, 3);
    Mesh out(child.dimension());
    const int pcol = out.register_attribute_double(pos_attr, 0, 3);
    std::vector<Index> to_out(child.vertex_count(), invalid_index);
    for (Index v = 0; v < child.vertex_count(); ++v) {
        if (!child.vertex_alive(v)) continue;
        to_out[v] = out.add_vertex();
        const Index rv = mmx.map_up(node, Simplex::vertex(v), root).vertex_at(0);
        out.set_attr_d(pcol, to_out[v], mmx.mesh(root).attr_d(col, rv));
    }
    for (Index f = 0; f < child.facet_count(); ++f) {
        if (!child.facet_alive(f)) continue;
        std::vector<Index> verts;
        for (Index v : child.facet_vertices(f)) verts.push_back(to_out[v]);
        out.add_facet(std::span<const Index>(verts));
    }
    return out;
}

namespace embdetail {

// Surface edge length measured on the root positions of the vertex images.
inline double lifted_length2(const MultiMesh& mmx, int node, int col, Index a, Index b)
{
    const Mesh& child = mmx.mesh(node);
    const Mesh& rootm = mmx.mesh(mmx.root());
    const ContainmentMap& cm = mmx.map_to_parent(node);
    const Index ra = cm.image_of_vertex(child, rootm, a);
    const Index rb = cm.image_of_vertex(child, rootm, b);
    return squared_distance(rootm.attr_d(col, ra), rootm.attr_d(col, rb));
}

inline double lifted_mean_edge(const MultiMesh& mmx, int node, int col)
{
    double total = 0.0;
    std::int64_t n = 0;
    for (const auto& e : mmx.mesh(node).simplices(1)) {
        total += std::sqrt(lifted_length2(mmx, node, col, e.vertex_at(0), e.vertex_at(1)));
        ++n;
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

// Corners, edge midpoints, and centroid of one child facet, on root positions.
inline void facet_samples(const MultiMesh& mmx, int node, int col, Index f,
                          std::vector<Envelope::Vec3>& out)
{
    const Mesh& child = mmx.mesh(node);
    const Mesh& rootm = mmx.mesh(mmx.root());
    const ContainmentMap& cm = mmx.map_to_parent(node);
    auto verts = child.facet_vertices(f);
    const int n = static_cast<int>(verts.size());
    std::vector<Envelope::Vec3> corner(n);
    Envelope::Vec3 centroid{0, 0, 0};
    for (int i = 0; i < n; ++i) {
        auto p = rootm.attr_d(col, cm.image_of_vertex(child, rootm, verts[i]));
        corner[i] = {p[0], p[1], p[2]};
        for (int k = 0; k < 3; ++k) centroid[k] += p[k] / n;
    }
    for (int i = 0; i < n; ++i) {
        out.push_back(corner[i]);
        const int j = (i + 1) % n;
        if (j != i)
            out.push_back({0.5 * (corner[i][0] + corner[j][0]),
                           0.5 * (corner[i][1] + corner[j][1]),
                           0.5 * (corner[i][2] + corner[j][2])});
    }
    out.push_back(centroid);
}

// One tangential Laplacian sweep over the surface vertices, applied to the
// root positions. A move that inverts an incident tetrahedron (or leaves the
// envelope) is restored immediately.
inline void smooth_surface(MultiMesh& mmx, int node, int col, const EmbeddedRemeshConfig& cfg,
                           const Envelope* env, EmbeddedRemeshStats& stats)
{
    const Mesh& child = mmx.mesh(node);
    Mesh& rootm = mmx.mesh(mmx.root());
    const ContainmentMap& cm = mmx.map_to_parent(node);

    for (Index v = 0; v < child.vertex_count(); ++v) {
        if (!child.vertex_alive(v)) continue;
        const Index rv = cm.image_of_vertex(child, rootm, v);
        auto pv = rootm.attr_d(col, rv);
        const std::array<double, 3> p{pv[0], pv[1], pv[2]};

        // Umbrella centroid over the child link vertices.
        std::vector<Index> nbrs;
        for (Index f : child.facets_of_vertex(v))
            for (Index w : child.facet_vertices(f))
                if (w != v && std::find(nbrs.begin(), nbrs.end(), w) == nbrs.end())
                    nbrs.push_back(w);
        if (nbrs.empty()) continue;
        std::array<double, 3> centroid{0, 0, 0};
        for (Index w : nbrs) {
            auto q = rootm.attr_d(col, cm.image_of_vertex(child, rootm, w));
            for (int k = 0; k < 3; ++k) centroid[k] += q[k] / static_cast<double>(nbrs.size());
        }
        std::array<double, 3> d{centroid[0] - p[0], centroid[1] - p[1], centroid[2] - p[2]};

        // Project the move onto the tangent plane of the area-weighted normal.
        std::array<double, 3> normal{0, 0, 0};
        for (Index f : child.facets_of_vertex(v)) {
            auto verts = child.facet_vertices(f);
            std::array<std::array<double, 3>, 3> q;
            for (int i = 0; i < 3; ++i) {
                auto qq = rootm.attr_d(col, cm.image_of_vertex(child, rootm, verts[i]));
                q[i] = {qq[0], qq[1], qq[2]};
            }
            const std::array<double, 3> e1{q[1][0] - q[0][0], q[1][1] - q[0][1],
                                           q[1][2] - q[0][2]};
            const std::array<double, 3> e2{q[2][0] - q[0][0], q[2][1] - q[0][1],
                                           q[2][2] - q[0][2]};
            normal[0] += e1[1] * e2[2] - e1[2] * e2[1];
            normal[1] += e1[2] * e2[0] - e1[0] * e2[2];
            normal[2] += e1[0] * e2[1] - e1[1] * e2[0];
        }
        const double nn = normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2];
        if (nn > 0.0) {
            const double dn = (d[0] * normal[0] + d[1] * normal[1] + d[2] * normal[2]) / nn;
            for (int k = 0; k < 3; ++k) d[k] -= dn * normal[k];
        }

        std::array<double, 3> moved;
        for (int k = 0; k < 3; ++k) moved[k] = p[k] + cfg.smoothing_weight * d[k];
        if (moved == p) continue;
        rootm.set_attr_d(col, rv, moved);

        bool ok = positive_volume(rootm, rootm.facets_of_vertex(rv), cfg.pos_attr);
        if (ok && env) {
            std::vector<Envelope::Vec3> pts;
            for (Index f : child.facets_of_vertex(v)) facet_samples(mmx, node, col, f, pts);
            for (const auto& s : pts)
                if (!env->inside(s)) {
                    ok = false;
                    break;
                }
        }
        if (!ok) {
            rootm.set_attr_d(col, rv, p);
            ++stats.smoothing_rejected;
        } else {
            ++stats.smoothed;
        }
    }
}

} // namespace embdetail

// Isotropic remeshing of a triangle child embedded in a tetrahedral root:
// split long surface edges, collapse short ones, swap toward valence six,
// then tangentially smooth surface vertices. Candidates live on the surface
// only; every change reaches the tetrahedra through propagation, guarded by
// the positive-volume invariant (and an optional envelope around the input
// surface). A smoothing move that inverts a tetrahedron is undone in place.
inline EmbeddedRemeshStats embedded_remesh(MultiMesh& mmx, int surface_node,
                                           const EmbeddedRemeshConfig& cfg)
{
    const int root = mmx.root();
    require(mmx.mesh(root).dimension() == 3, "embedded remeshing needs a tetrahedral root");
    require(surface_node > 0 && surface_node < mmx.node_count()
                && mmx.mesh(surface_node).dimension() == 2,
            "surface node must be a triangle child");
    const int col = position_column(mmx.mesh(root), cfg.pos_attr, 3);

    EmbeddedRemeshStats stats;
    stats.mean_edge_before = embdetail::lifted_mean_edge(mmx, surface_node, col);
    const double L = cfg.target_length > 0.0 ? cfg.target_length : stats.mean_edge_before;
    stats.target_length = L;
    const double long2 = (4.0 / 3.0) * L * (4.0 / 3.0) * L;
    const double short2 = (4.0 / 5.0) * L * (4.0 / 5.0) * L;

    mmx.set_collapse_policy(root, CollapsePolicy::Midpoint);

    const bool enveloped = std::isfinite(cfg.envelope_eps);
    Envelope env;
    if (enveloped)
        env = Envelope(lifted_surface_copy(mmx, surface_node, cfg.pos_attr), cfg.envelope_eps,
                       cfg.pos_attr);

    InvariantSet inv;
    inv.add({"positive-volume", root, Phase::After,
             [&cfg](const Mesh& m, const OperationRecord& rec) {
                 return positive_volume(m, rec.created_facets, cfg.pos_attr)
                        && positive_volume(m, rec.modified_facets, cfg.pos_attr);
             }});
    if (enveloped)
        inv.add({"surface-envelope", surface_node, Phase::After,
                 [&mmx, surface_node, col, &env](const Mesh& m, const OperationRecord& rec) {
                     std::vector<Envelope::Vec3> pts;
                     for (const auto* list : {&rec.created_facets, &rec.modified_facets})
                         for (Index f : *list)
                             if (m.facet_alive(f))
                                 embdetail::facet_samples(mmx, surface_node, col, f, pts);
                     for (const auto& p : pts)
                         if (!env.inside(p)) return false;
                     return true;
                 }});

    PassConfig pass;
    pass.node = surface_node;
    pass.post_check = inv.as_post_check(mmx);

    for (int it = 0; it < cfg.iterations; ++it) {
        // 1. Split edges longer than 4/3 L, longest first.
        pass.op = PassOp::Split;
        pass.score = [col](const MultiMesh& t, int n, Index a, Index b) {
            return -embdetail::lifted_length2(t, n, col, a, b);
        };
        pass.eligible = [col, long2](const MultiMesh& t, int n, Index a, Index b) {
            return embdetail::lifted_length2(t, n, col, a, b) > long2;
        };
        accumulate(stats.split, run_pass(mmx, pass));

        // 2. Collapse edges shorter than 4/5 L, shortest first.
        pass.op = PassOp::Collapse;
        pass.score = [col](const MultiMesh& t, int n, Index a, Index b) {
            return embdetail::lifted_length2(t, n, col, a, b);
        };
        pass.eligible = [col, short2](const MultiMesh& t, int n, Index a, Index b) {
            return embdetail::lifted_length2(t, n, col, a, b) < short2;
        };
        accumulate(stats.collapse, run_pass(mmx, pass));

        // 3. Swap interior edges when the valence deviation strictly drops.
        pass.op = PassOp::Swap;
        pass.score = [](const MultiMesh& t, int n, Index a, Index b) {
            const auto opp = edge_opposites(t.mesh(n), a, b);
            return opp.size() == 2 ? -static_cast<double>(
                       swap_gain(t.mesh(n), a, b, opp[0], opp[1]))
                                   : 0.0;
        };
        pass.eligible = [](const MultiMesh& t, int n, Index a, Index b) {
            const auto opp = edge_opposites(t.mesh(n), a, b);
            return opp.size() == 2 && swap_gain(t.mesh(n), a, b, opp[0], opp[1]) > 0;
        };
        accumulate(stats.swap, run_pass(mmx, pass));
        pass.eligible = {};

        // 4. Tangential Laplacian smoothing on the root positions.
        embdetail::smooth_surface(mmx, surface_node, col, cfg, enveloped ? &env : nullptr, stats);
    }

    stats.mean_edge_after = embdetail::lifted_mean_edge(mmx, surface_node, col);
    return stats;
}

} // namespace mm
