#pragma once

#include <multimesh/inv/invariants.hpp>
#include <multimesh/sched/scheduler.hpp>

namespace mm {

// Shortest-edge decimation of a position mesh (root) carrying a UV mesh
// (child) linked by a per-corner facet cover. Candidates are enumerated on
// the root only; the propagation keeps the UV side synchronized, and the
// no-inversion invariant vetoes collapses that fold a UV triangle. Seam
// preservation is an outcome of the structure, not a separate mechanism.
//
// Infeasible targets drain the queue and return best-effort statistics.
inline PassStats seam_decimate(MultiMesh& mmx, int uv_node, Index target_faces,
                               const std::string& pos_attr = "position",
                               const std::string& uv_attr = "uv")
{
    require(target_faces >= 0, "negative face target");
    require(uv_node > 0 && uv_node < mmx.node_count(), "uv node out of range");
    const int root = mmx.root();
    const int pos_col = position_column(mmx.mesh(root), pos_attr, 3);

    mmx.set_collapse_policy(root, CollapsePolicy::Midpoint);
    mmx.set_collapse_policy(uv_node, CollapsePolicy::Midpoint);

    InvariantSet inv;
    inv.add({"uv-no-inversion", uv_node, Phase::After,
             [uv_attr](const Mesh& m, const OperationRecord& rec) {
                 return no_uv_inversion(m, rec.created_facets, uv_attr)
                        && no_uv_inversion(m, rec.modified_facets, uv_attr);
             }});

    PassConfig pass;
    pass.node = root;
    pass.op = PassOp::Collapse;
    pass.score = [pos_col](const MultiMesh& t, int n, Index a, Index b) {
        return squared_distance(t.mesh(n).attr_d(pos_col, a), t.mesh(n).attr_d(pos_col, b));
    };
    pass.post_check = inv.as_post_check(mmx);
    pass.stop = [root, target_faces](const PassStats&, const MultiMesh& t) {
        return t.mesh(root).alive_facet_count() <= target_faces;
    };
    return run_pass(mmx, pass);
}

} // namespace mm
