#pragma once

#include <array>
#include <cmath>

#include <multimesh/inv/invariants.hpp>
#include <multimesh/sched/scheduler.hpp>

namespace mm {

struct Periodic2dConfig {
    std::array<double, 2> period_u{1.0, 0.0};
    std::array<double, 2> period_v{0.0, 1.0};
    double pairing_tol = 1e-9;
    double target_length = 0.0; // <= 0: mean input edge length
    int iterations = 3;
    double smoothing_weight = 1.0;
    std::string pos_attr = "position";
};

namespace perdetail {

// Lattice coordinates of a 2D vector in the period basis.
inline std::array<double, 2> lattice_coords(const Periodic2dConfig& cfg, double dx, double dy)
{
    const double det = cfg.period_u[0] * cfg.period_v[1] - cfg.period_v[0] * cfg.period_u[1];
    require(std::abs(det) > 0.0, "period vectors are collinear");
    return {(dy * cfg.period_v[0] - dx * cfg.period_v[1]) / -det,
            (dx * cfg.period_u[1] - dy * cfg.period_u[0]) / -det};
}

inline bool near_integer(double x, double tol) { return std::abs(x - std::round(x)) <= tol; }

// Whether b - a is an integer combination of the periods, within tol.
inline bool lattice_translate(const Periodic2dConfig& cfg, std::span<const double> a,
                              std::span<const double> b)
{
    const auto kl = lattice_coords(cfg, b[0] - a[0], b[1] - a[1]);
    if (!near_integer(kl[0], cfg.pairing_tol) || !near_integer(kl[1], cfg.pairing_tol))
        return false;
    const double rx = std::round(kl[0]) * cfg.period_u[0] + std::round(kl[1]) * cfg.period_v[0];
    const double ry = std::round(kl[0]) * cfg.period_u[1] + std::round(kl[1]) * cfg.period_v[1];
    return std::abs((b[0] - a[0]) - rx) <= cfg.pairing_tol
           && std::abs((b[1] - a[1]) - ry) <= cfg.pairing_tol;
}

} // namespace perdetail

// Every set of tile vertices identified through the torus root sits on one
// lattice orbit: all members differ by integer combinations of the periods.
inline bool periodic_congruent(const MultiMesh& mmx, int tile_node, const Periodic2dConfig& cfg)
{
    const Mesh& tile = mmx.mesh(tile_node);
    const Mesh& rootm = mmx.mesh(mmx.root());
    const ContainmentMap& cm = mmx.map_to_parent(tile_node);
    const int col = position_column(tile, cfg.pos_attr, 2);
    for (Index rv = 0; rv < rootm.vertex_count(); ++rv) {
        if (!rootm.vertex_alive(rv)) continue;
        const auto& members = cm.preimage_vertices(tile, rootm, rv);
        for (size_t i = 1; i < members.size(); ++i)
            if (!perdetail::lattice_translate(cfg, tile.attr_d(col, members[0]),
                                              tile.attr_d(col, members[i])))
                return false;
    }
    return true;
}

// Builds the two-node periodic multimesh: the root is the quotient of the
// tile under the period lattice (connectivity only, no embedding), the tile
// is its child through a facet bijection. Vertices whose positions differ by
// a lattice translation are identified; a tile that folds onto itself (fewer
// than three cells per period) produces duplicate quotient facets and is
// rejected by validation, as is any inconsistent pairing.
inline MultiMesh make_periodic_multimesh(Mesh tile, const Periodic2dConfig& cfg)
{
    require(tile.dimension() == 2, "periodic tile must be a triangle mesh");
    const int col = position_column(tile, cfg.pos_attr, 2);

    // Union vertices along lattice translations.
    std::vector<Index> parent(tile.vertex_count());
    for (Index v = 0; v < tile.vertex_count(); ++v) parent[v] = v;
    const auto find = [&](Index v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    for (Index v = 0; v < tile.vertex_count(); ++v) {
        if (!tile.vertex_alive(v)) continue;
        for (Index w = v + 1; w < tile.vertex_count(); ++w) {
            if (!tile.vertex_alive(w)) continue;
            if (perdetail::lattice_translate(cfg, tile.attr_d(col, v), tile.attr_d(col, w))) {
                const Index rv = find(v), rw = find(w);
                if (rv != rw) parent[std::max(rv, rw)] = std::min(rv, rw);
            }
        }
    }

    // Quotient vertex ids follow ascending class representatives.
    std::vector<Index> quotient_id(tile.vertex_count(), invalid_index);
    Mesh root(2);
    for (Index v = 0; v < tile.vertex_count(); ++v)
        if (tile.vertex_alive(v) && find(v) == v) quotient_id[v] = root.add_vertex();

    std::vector<std::pair<Index, Index>> pairs;
    try {
        for (Index f = 0; f < tile.facet_count(); ++f) {
            if (!tile.facet_alive(f)) continue;
            std::array<Index, 3> verts;
            auto tv = tile.facet_vertices(f);
            for (int i = 0; i < 3; ++i) verts[i] = quotient_id[find(tv[i])];
            pairs.emplace_back(f, root.add_facet(std::span<const Index>(verts)));
        }
        MultiMesh mmx;
        mmx.add_root(std::move(root));
        mmx.add_child_from_facet_cover(0, std::move(tile), pairs);
        return mmx;
    } catch (const Error& e) {
        throw Error(std::string("periodic pairing rejected: ") + e.what());
    }
}

namespace perdetail {

// One synchronized Laplacian sweep: the umbrella offset of a quotient class
// is averaged over every member's tile neighborhood and the same in-plane
// displacement is applied to all members, so lattice congruence is exact by
// construction. A move that folds a tile triangle is undone.
inline void smooth_classes(MultiMesh& mmx, int tile_node, int col, const Periodic2dConfig& cfg,
                           std::int64_t& moved, std::int64_t& rejected)
{
    Mesh& tile = mmx.mesh(tile_node);
    const Mesh& rootm = mmx.mesh(mmx.root());
    const ContainmentMap& cm = mmx.map_to_parent(tile_node);

    for (Index rv = 0; rv < rootm.vertex_count(); ++rv) {
        if (!rootm.vertex_alive(rv)) continue;
        const std::vector<Index> members = cm.preimage_vertices(tile, rootm, rv);
        if (members.empty()) continue;

        std::array<double, 2> delta{0.0, 0.0};
        std::int64_t terms = 0;
        for (Index m : members) {
            auto pm = tile.attr_d(col, m);
            std::vector<Index> nbrs;
            for (Index f : tile.facets_of_vertex(m))
                for (Index w : tile.facet_vertices(f))
                    if (w != m && std::find(nbrs.begin(), nbrs.end(), w) == nbrs.end())
                        nbrs.push_back(w);
            for (Index w : nbrs) {
                auto pw = tile.attr_d(col, w);
                delta[0] += pw[0] - pm[0];
                delta[1] += pw[1] - pm[1];
                ++terms;
            }
        }
        if (terms == 0) continue;
        delta[0] *= cfg.smoothing_weight / static_cast<double>(terms);
        delta[1] *= cfg.smoothing_weight / static_cast<double>(terms);
        if (delta[0] == 0.0 && delta[1] == 0.0) continue;

        std::vector<std::array<double, 2>> saved;
        for (Index m : members) {
            auto p = tile.attr_d(col, m);
            saved.push_back({p[0], p[1]});
            const std::array<double, 2> q{p[0] + delta[0], p[1] + delta[1]};
            tile.set_attr_d(col, m, q);
        }
        bool ok = true;
        for (Index m : members)
            if (!no_uv_inversion(tile, tile.facets_of_vertex(m), cfg.pos_attr)) {
                ok = false;
                break;
            }
        if (!ok) {
            for (size_t i = 0; i < members.size(); ++i)
                tile.set_attr_d(col, members[i], saved[i]);
            ++rejected;
        } else {
            ++moved;
        }
    }
}

} // namespace perdetail

struct Periodic2dStats {
    double target_length = 0.0;
    PassStats split, collapse, swap;
    std::int64_t smoothed = 0;
    std::int64_t smoothing_rejected = 0;
    double mean_edge_before = 0.0;
    double mean_edge_after = 0.0;
};

// Isotropic remeshing driven on the tile while the torus root synchronizes
// the periodic boundaries. Tileability is enforced as an invariant: any
// operation that leaves a quotient class geometrically incongruent (for
// example a collapse pulling a lone boundary vertex inward) rolls back.
inline Periodic2dStats periodic2d_remesh(MultiMesh& mmx, int tile_node,
                                         const Periodic2dConfig& cfg)
{
    require(tile_node > 0 && tile_node < mmx.node_count(), "tile node out of range");
    const int col = position_column(mmx.mesh(tile_node), cfg.pos_attr, 2);

    Periodic2dStats stats;
    stats.mean_edge_before = mean_edge_length(mmx.mesh(tile_node), col);
    const double L = cfg.target_length > 0.0 ? cfg.target_length : stats.mean_edge_before;
    stats.target_length = L;
    const double long2 = (4.0 / 3.0) * L * (4.0 / 3.0) * L;
    const double short2 = (4.0 / 5.0) * L * (4.0 / 5.0) * L;

    mmx.set_collapse_policy(tile_node, CollapsePolicy::Midpoint);

    InvariantSet inv;
    inv.add({"tile-no-inversion", tile_node, Phase::After,
             [&cfg](const Mesh& m, const OperationRecord& rec) {
                 return no_uv_inversion(m, rec.created_facets, cfg.pos_attr)
                        && no_uv_inversion(m, rec.modified_facets, cfg.pos_attr);
             }});
    inv.add({"tileability", tile_node, Phase::After,
             [&mmx, tile_node, &cfg](const Mesh&, const OperationRecord&) {
                 return periodic_congruent(mmx, tile_node, cfg);
             }});

    PassConfig pass;
    pass.node = tile_node;
    pass.post_check = inv.as_post_check(mmx);

    const auto length2 = [col](const MultiMesh& t, int n, Index a, Index b) {
        return squared_distance(t.mesh(n).attr_d(col, a), t.mesh(n).attr_d(col, b));
    };

    for (int it = 0; it < cfg.iterations; ++it) {
        pass.op = PassOp::Split;
        pass.score = [length2](const MultiMesh& t, int n, Index a, Index b) {
            return -length2(t, n, a, b);
        };
        pass.eligible = [length2, long2](const MultiMesh& t, int n, Index a, Index b) {
            return length2(t, n, a, b) > long2;
        };
        accumulate(stats.split, run_pass(mmx, pass));

        pass.op = PassOp::Collapse;
        pass.score = length2;
        pass.eligible = [length2, short2](const MultiMesh& t, int n, Index a, Index b) {
            return length2(t, n, a, b) < short2;
        };
        accumulate(stats.collapse, run_pass(mmx, pass));

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

        perdetail::smooth_classes(mmx, tile_node, col, cfg, stats.smoothed,
                                  stats.smoothing_rejected);
    }

    stats.mean_edge_after = mean_edge_length(mmx.mesh(tile_node), col);
    return stats;
}

} // namespace mm
