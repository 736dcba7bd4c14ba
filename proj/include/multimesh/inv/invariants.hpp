#pragma once

#include <functional>
#include <string>
#include <vector>

#include <multimesh/geom/metrics.hpp>
#include <multimesh/mm/multimesh.hpp>

namespace mm {

// Every alive tetrahedron has positive signed volume in stored vertex order.
// Splits and collapses substitute vertices slot-wise, so a consistently
// oriented input stays sign-faithful: a flip means real geometric inversion.
inline bool positive_volume(const Mesh& m, std::span<const Index> facets,
                            const std::string& attr = "position")
{
    require(m.dimension() == 3, "volume check needs a tetrahedral mesh");
    const int col = position_column(m, attr, 3);
    for (Index f : facets) {
        if (!m.facet_alive(f)) continue;
        if (tet_signed_volume6(m, col, f) <= 0.0) return false;
    }
    return true;
}

inline bool positive_volume(const Mesh& m, const std::string& attr = "position")
{
    require(m.dimension() == 3, "volume check needs a tetrahedral mesh");
    const int col = position_column(m, attr, 3);
    for (Index f = 0; f < m.facet_count(); ++f)
        if (m.facet_alive(f) && tet_signed_volume6(m, col, f) <= 0.0) return false;
    return true;
}

// 2D counterpart: every alive triangle keeps positive signed area.
inline bool no_uv_inversion(const Mesh& m, std::span<const Index> facets,
                            const std::string& attr = "uv")
{
    require(m.dimension() == 2, "area check needs a triangle mesh");
    const int col = position_column(m, attr, 2);
    for (Index f : facets) {
        if (!m.facet_alive(f)) continue;
        if (triangle_signed_area2(m, col, f) <= 0.0) return false;
    }
    return true;
}

inline bool no_uv_inversion(const Mesh& m, const std::string& attr = "uv")
{
    require(m.dimension() == 2, "area check needs a triangle mesh");
    const int col = position_column(m, attr, 2);
    for (Index f = 0; f < m.facet_count(); ++f)
        if (m.facet_alive(f) && triangle_signed_area2(m, col, f) <= 0.0) return false;
    return true;
}

enum class Phase { Before, After };

// A named pure predicate over one node's mesh and one operation record.
// Before-phase invariants see the pre-operation mesh and an empty record;
// after-phase invariants run once per record at their node, post execution
// and pre commit, so a false answer rolls the whole propagation back.
struct Invariant {
    std::string name;
    int scope_node = 0;
    Phase phase = Phase::After;
    std::function<bool(const Mesh&, const OperationRecord&)> pred;
};

class InvariantSet {
public:
    void add(Invariant inv)
    {
        require(static_cast<bool>(inv.pred), "invariant without a predicate");
        invariants_.push_back(std::move(inv));
    }

    int size() const { return static_cast<int>(invariants_.size()); }

    // Conjunction over all registered invariants of the phase. After-phase
    // predicates run per record at their scope node; a node never touched by
    // the propagation has nothing to answer for.
    bool check(const MultiMesh& mm, const PropagationResult& res, Phase phase) const
    {
        static const OperationRecord empty{};
        for (const auto& inv : invariants_) {
            if (inv.phase != phase) continue;
            if (phase == Phase::Before) {
                if (!inv.pred(mm.mesh(inv.scope_node), empty)) return false;
                continue;
            }
            for (const OperationRecord* rec : res.records_for(inv.scope_node))
                if (!inv.pred(mm.mesh(inv.scope_node), *rec)) return false;
        }
        return true;
    }

    // Adapter for MultiMesh's post-execution hook.
    MultiMesh::PostCheck as_post_check(const MultiMesh& mm) const
    {
        return [this, &mm](const PropagationResult& res) {
            return check(mm, res, Phase::After);
        };
    }

private:
    std::vector<Invariant> invariants_;
};

} // namespace mm
