#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

#include <multimesh/mm/multimesh.hpp>

namespace mm {

enum class PassOp { Split, Collapse, Swap };

struct PassStats {
    std::int64_t attempted = 0;
    std::int64_t accepted = 0;
    std::int64_t rejected_link = 0;      // gate, seating, wedges, lift failures
    std::int64_t rejected_invariant = 0; // post-execution invariant rollbacks

    std::int64_t rejected() const { return rejected_link + rejected_invariant; }
};

inline void accumulate(PassStats& total, const PassStats& part)
{
    total.attempted += part.attempted;
    total.accepted += part.accepted;
    total.rejected_link += part.rejected_link;
    total.rejected_invariant += part.rejected_invariant;
}

// One scheduled pass over the edges of a single node. score orders the queue
// (smallest first, ties by edge id); eligible filters candidates at push and
// again at pop, after which the gate and the invariants have the last word.
struct PassConfig {
    int node = 0;
    PassOp op = PassOp::Collapse;
    std::function<double(const MultiMesh&, int, Index, Index)> score;
    std::function<bool(const MultiMesh&, int, Index, Index)> eligible;
    MultiMesh::PostCheck post_check;
    std::function<Index(const MultiMesh&, int, Index, Index)> swap_target;
    std::function<bool(const PassStats&, const MultiMesh&)> stop;
    std::int64_t max_accepted = -1;
};

namespace scheddetail {

struct Entry {
    double score;
    Index a, b;
    std::uint64_t stamp;
};

struct Later {
    bool operator()(const Entry& x, const Entry& y) const
    {
        if (x.score != y.score) return x.score > y.score;
        if (x.a != y.a) return x.a > y.a;
        return x.b > y.b;
    }
};

} // namespace scheddetail

// Runs one pass to queue exhaustion (or stop criterion). Entries are stamped
// with the pass epoch at push; the epoch advances on every accepted
// operation, so a stale entry is never executed: if its edge is still alive
// and eligible it is re-scored and re-queued, otherwise dropped.
inline PassStats run_pass(MultiMesh& mm, const PassConfig& cfg)
{
    require(cfg.node >= 0 && cfg.node < mm.node_count(), "pass references a missing node");
    require(static_cast<bool>(cfg.score), "pass without a scoring function");

    PassStats stats;
    std::uint64_t epoch = 0;
    std::priority_queue<scheddetail::Entry, std::vector<scheddetail::Entry>, scheddetail::Later>
        queue;

    const auto eligible = [&](Index a, Index b) {
        if (!mm.mesh(cfg.node).is_edge(a, b)) return false;
        return !cfg.eligible || cfg.eligible(mm, cfg.node, a, b);
    };
    const auto push = [&](Index a, Index b) {
        if (a > b) std::swap(a, b);
        if (!eligible(a, b)) return;
        queue.push({cfg.score(mm, cfg.node, a, b), a, b, epoch});
    };

    for (const auto& e : mm.mesh(cfg.node).simplices(1)) push(e.vertex_at(0), e.vertex_at(1));

    const auto done = [&]() {
        if (cfg.max_accepted >= 0 && stats.accepted >= cfg.max_accepted) return true;
        return cfg.stop && cfg.stop(stats, mm);
    };

    const auto account = [&](const PropagationResult& res) {
        ++stats.attempted;
        if (res.accepted) {
            ++stats.accepted;
            ++epoch;
            // Fresh candidates appear only inside the op's footprint.
            for (const OperationRecord* rec : res.records_for(cfg.node)) {
                const Mesh& m = mm.mesh(cfg.node);
                for (const auto& list : {rec->created_facets, rec->modified_facets})
                    for (Index f : list) {
                        if (!m.facet_alive(f)) continue;
                        auto verts = m.facet_vertices(f);
                        for (size_t i = 0; i < verts.size(); ++i)
                            for (size_t j = i + 1; j < verts.size(); ++j)
                                push(verts[i], verts[j]);
                    }
            }
        } else if (res.reason == "rejected by invariant") {
            ++stats.rejected_invariant;
        } else {
            ++stats.rejected_link;
        }
        return res.accepted;
    };

    while (!queue.empty() && !done()) {
        const auto entry = queue.top();
        queue.pop();
        if (entry.stamp != epoch) {
            // Stale: never execute; requalify against the current state.
            push(entry.a, entry.b);
            continue;
        }
        if (!eligible(entry.a, entry.b)) continue;

        switch (cfg.op) {
        case PassOp::Split:
            account(mm.propagate_split(cfg.node, entry.a, entry.b, cfg.post_check));
            break;
        case PassOp::Collapse:
            if (!account(mm.propagate_collapse(cfg.node, entry.a, entry.b, cfg.post_check))
                && eligible(entry.b, entry.a))
                account(mm.propagate_collapse(cfg.node, entry.b, entry.a, cfg.post_check));
            break;
        case PassOp::Swap: {
            const Index t = cfg.swap_target ? cfg.swap_target(mm, cfg.node, entry.a, entry.b)
                                            : invalid_index;
            account(mm.propagate_swap(cfg.node, entry.a, entry.b, t, cfg.post_check));
            break;
        }
        }
    }
    return stats;
}

} // namespace mm
