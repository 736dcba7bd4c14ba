#pragma once

#include <functional>
#include <memory>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <multimesh/core/link.hpp>
#include <multimesh/mm/containment_map.hpp>
#include <multimesh/ops/edge_ops.hpp>

namespace mm {

struct NodeOps {
    int node = -1;
    std::vector<OperationRecord> records;
};

struct PropagationResult {
    bool accepted = false;
    std::string reason;
    std::vector<NodeOps> ops; // pre-order; a swap appends its collapse after its split

    std::vector<const OperationRecord*> records_for(int node) const
    {
        std::vector<const OperationRecord*> out;
        for (const auto& no : ops)
            if (no.node == node)
                for (const auto& r : no.records) out.push_back(&r);
        return out;
    }
};

struct ConditionResult {
    bool ok = false;
    std::string reason;
};

// A tree of meshes linked by containment maps. The root has the highest
// dimension; every other node maps into its parent. Local operations extend
// to one root operation and restrict back down, so each propagation plans
// per-node edge sets first, checks them all, and only then mutates.
class MultiMesh {
public:
    using PostCheck = std::function<bool(const PropagationResult&)>;

    // --- construction ---

    int add_root(Mesh m)
    {
        require(nodes_.empty(), "root already set");
        require(m.validate().valid(), "root mesh is not a valid complex");
        nodes_.push_back(Node{std::move(m), -1, {}, ContainmentMap{}, CollapsePolicy::Keep});
        root_ = 0;
        return 0;
    }

    int add_child(int parent, Mesh child, ContainmentMap map)
    {
        require(parent >= 0 && parent < node_count(), "no such parent node");
        require(child.validate().valid(), "child mesh is not a valid complex");
        require(map.child_dimension() == child.dimension()
                    && map.parent_dimension() == nodes_[parent].mesh.dimension(),
                "containment map dimensions disagree with the meshes");
        auto errors = map.check_map(child, nodes_[parent].mesh);
        if (!errors.empty()) throw Error("containment map rejected: " + errors.front());
        const int id = node_count();
        nodes_.push_back(Node{std::move(child), parent, {}, std::move(map), CollapsePolicy::Keep});
        nodes_[parent].children.push_back(id);
        return id;
    }

    int add_child_from_facet_cover(int parent, Mesh child,
                                   const std::vector<std::pair<Index, Index>>& pairs)
    {
        require(parent >= 0 && parent < node_count(), "no such parent node");
        ContainmentMap cm = from_facet_cover(nodes_[parent].mesh, child, pairs);
        return add_child(parent, std::move(child), std::move(cm));
    }

    int add_child_from_tags(int parent, int k, std::vector<Simplex> tagged,
                            std::vector<Index>* vertex_to_parent = nullptr)
    {
        require(parent >= 0 && parent < node_count(), "no such parent node");
        TaggedChild tc = from_tags(nodes_[parent].mesh, k, std::move(tagged));
        if (vertex_to_parent) *vertex_to_parent = tc.vertex_to_parent;
        return add_child(parent, std::move(tc.mesh), std::move(tc.map));
    }

    // --- tree access ---

    int node_count() const { return static_cast<int>(nodes_.size()); }
    int root() const { return root_; }
    int parent_of(int n) const { return nodes_[n].parent; }
    const std::vector<int>& children_of(int n) const { return nodes_[n].children; }
    Mesh& mesh(int n) { return nodes_[n].mesh; }
    const Mesh& mesh(int n) const { return nodes_[n].mesh; }
    const ContainmentMap& map_to_parent(int n) const { return nodes_[n].to_parent; }

    void set_collapse_policy(int n, CollapsePolicy p) { nodes_[n].policy = p; }
    CollapsePolicy collapse_policy(int n) const { return nodes_[n].policy; }

    int depth(int n) const
    {
        int d = 0;
        while (nodes_[n].parent != -1) {
            n = nodes_[n].parent;
            ++d;
        }
        return d;
    }

    int lca(int a, int b) const
    {
        int da = depth(a), db = depth(b);
        while (da > db) {
            a = nodes_[a].parent;
            --da;
        }
        while (db > da) {
            b = nodes_[b].parent;
            --db;
        }
        while (a != b) {
            a = nodes_[a].parent;
            b = nodes_[b].parent;
        }
        return a;
    }

    // --- simplex maps ---

    Simplex map_up(int node, const Simplex& s, int ancestor) const
    {
        Simplex cur = s;
        int n = node;
        while (n != ancestor) {
            require(n != root_, "target is not an ancestor");
            const auto& nd = nodes_[n];
            cur = nd.to_parent.image(nd.mesh, nodes_[nd.parent].mesh, cur);
            n = nd.parent;
        }
        return cur;
    }

    std::vector<Simplex> map_down(int node, const Simplex& s, int descendant) const
    {
        std::vector<int> path;
        int n = descendant;
        while (n != node) {
            require(n != root_ && nodes_[n].parent != -1, "source is not an ancestor");
            path.push_back(n);
            n = nodes_[n].parent;
        }
        std::vector<Simplex> cur{s};
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            const auto& nd = nodes_[*it];
            std::vector<Simplex> next;
            for (const auto& t : cur) {
                auto pre = nd.to_parent.preimages(nd.mesh, nodes_[nd.parent].mesh, t);
                next.insert(next.end(), pre.begin(), pre.end());
            }
            std::sort(next.begin(), next.end());
            next.erase(std::unique(next.begin(), next.end()), next.end());
            cur = std::move(next);
        }
        return cur;
    }

    std::vector<Simplex> map_between(int from, const Simplex& s, int to) const
    {
        const int l = lca(from, to);
        return map_down(l, map_up(from, s, l), to);
    }

    // One error per breach, prefixed with the child node id.
    std::vector<std::string> check_maps() const
    {
        std::vector<std::string> out;
        for (int n = 0; n < node_count(); ++n) {
            if (n == root_) continue;
            const auto& nd = nodes_[n];
            for (auto& e : nd.to_parent.check_map(nd.mesh, nodes_[nd.parent].mesh))
                out.push_back("node " + std::to_string(n) + ": " + e);
        }
        return out;
    }

    // --- synchronized operations ---

    // Decides, without mutating, whether collapsing (kept, dropped) at the
    // node extends to the root and restricts to every descendant with all
    // meshes still valid complexes and all anchors re-seatable.
    bool multimesh_link_condition(int node, Index kept, Index dropped) const
    {
        return link_condition_detail(node, kept, dropped).ok;
    }

    ConditionResult link_condition_detail(int node, Index kept, Index dropped) const
    {
        if (!nodes_[node].mesh.is_edge(kept, dropped)) return {false, "not an alive edge"};
        CollapsePlan plan = build_collapse_plan(node, kept, dropped);
        if (!plan.ok) return {false, plan.reason};
        Issue seat = simulate_seating(plan);
        if (!seat.ok) return {false, seat.reason};
        return {true, {}};
    }

    PropagationResult propagate_collapse(int node, Index kept, Index dropped,
                                         const PostCheck& post_check = {})
    {
        require(nodes_[node].mesh.is_edge(kept, dropped), "collapse of a non-edge");
        CollapsePlan plan = build_collapse_plan(node, kept, dropped);
        if (!plan.ok) return rejected(plan.reason);
        Issue seat = simulate_seating(plan);
        if (!seat.ok) return rejected(seat.reason);

        Txn txn = begin_txn();
        PropagationResult out;
        std::string why;
        if (!exec_collapse_plan(plan, false, false, out, &why)) {
            rollback_txn(txn);
            return rejected(why);
        }
        out.accepted = true;
        if (post_check && !post_check(out)) {
            rollback_txn(txn);
            return rejected("rejected by invariant");
        }
        commit_txn(txn);
        return out;
    }

    PropagationResult propagate_split(int node, Index a, Index b,
                                      const PostCheck& post_check = {})
    {
        require(nodes_[node].mesh.is_edge(a, b), "split of a non-edge");
        SplitPlan plan = build_split_plan(node, a, b);
        Txn txn = begin_txn();
        PropagationResult out;
        std::string why;
        if (!exec_split_plan(plan, out, &why)) {
            rollback_txn(txn);
            return rejected(why);
        }
        out.accepted = true;
        if (post_check && !post_check(out)) {
            rollback_txn(txn);
            return rejected("rejected by invariant");
        }
        commit_txn(txn);
        return out;
    }

    // Swap = split the edge, then collapse the new vertex into the target.
    // The target must lie in the edge's link at the initiating node; without
    // one the smallest such vertex is used. A rejected inner collapse rolls
    // back the split as well.
    PropagationResult propagate_swap(int node, Index a, Index b, Index target = invalid_index,
                                     const PostCheck& post_check = {})
    {
        require(nodes_[node].mesh.is_edge(a, b), "swap of a non-edge");
        std::vector<Index> candidates;
        for (const auto& s : link_of_edge(nodes_[node].mesh, a, b))
            if (s.dim() == 0) candidates.push_back(s.vertex_at(0));
        std::sort(candidates.begin(), candidates.end());
        if (target == invalid_index) {
            if (candidates.empty()) return rejected("edge has no opposite vertex");
            target = candidates.front();
        } else {
            require(std::find(candidates.begin(), candidates.end(), target) != candidates.end(),
                    "swap target not opposite the edge");
        }

        SplitPlan splan = build_split_plan(node, a, b);
        Txn txn = begin_txn();
        PropagationResult out;
        std::string why;
        if (!exec_split_plan(splan, out, &why)) {
            rollback_txn(txn);
            return rejected(why);
        }
        Index mid = invalid_index;
        for (const auto& no : out.ops)
            if (no.node == node)
                for (const auto& r : no.records)
                    if (r.kind == OpKind::Split && r.edge == Simplex::edge(a, b))
                        mid = r.new_vertex;
        require(mid != invalid_index, "split record missing");

        CollapsePlan cplan = build_collapse_plan(node, target, mid);
        if (cplan.ok) {
            Issue seat = simulate_seating(cplan);
            if (!seat.ok) {
                cplan.ok = false;
                cplan.reason = seat.reason;
            }
        }
        if (!cplan.ok) {
            rollback_txn(txn);
            return rejected("swap collapse rejected: " + cplan.reason);
        }
        // Swaps relocate no vertices: the inner collapse always keeps the
        // target's attributes.
        if (!exec_collapse_plan(cplan, false, true, out, &why)) {
            rollback_txn(txn);
            return rejected(why);
        }
        out.accepted = true;
        if (post_check && !post_check(out)) {
            rollback_txn(txn);
            return rejected("rejected by invariant");
        }
        commit_txn(txn);
        return out;
    }

    // Executes the synchronized collapse with the gate off and keeps whatever
    // results; used to cross-check the gate, which must accept exactly when
    // this leaves every mesh valid and every map intact. accepted=false marks
    // an execution that wedged or lost anchors along the way.
    PropagationResult collapse_unchecked(int node, Index kept, Index dropped)
    {
        require(nodes_[node].mesh.is_edge(kept, dropped), "collapse of a non-edge");
        CollapsePlan plan = build_collapse_plan(node, kept, dropped);
        PropagationResult out;
        if (plan.entries.empty()) {
            out.reason = plan.reason;
            return out;
        }
        std::string why;
        exec_collapse_plan(plan, true, false, out, &why);
        return out;
    }

private:
    struct Node {
        Mesh mesh;
        int parent = -1;
        std::vector<int> children;
        ContainmentMap to_parent; // unused at the root
        CollapsePolicy policy = CollapsePolicy::Keep;
    };

    struct Issue {
        bool ok = true;
        std::string reason;
    };

    struct CollapsePlanEntry {
        int node = -1;
        std::vector<MergePair> pairs; // pair pre-images first, then forced merges
        CollapseCheck check;
    };

    struct CollapsePlan {
        bool ok = true;
        std::string reason;
        std::vector<CollapsePlanEntry> entries; // pre-order, root first
    };

    struct SplitPlanEntry {
        int node = -1;
        std::vector<Simplex> edges;
        std::vector<int> parent_edge; // index into the parent entry's edges; -1 at the root
    };

    struct SplitPlan {
        std::vector<SplitPlanEntry> entries; // pre-order, root first
    };

    struct Txn {
        std::vector<std::unique_ptr<Rollback>> mesh_rb;
        std::vector<std::unique_ptr<MapJournal>> map_j;
    };

    static PropagationResult rejected(std::string reason)
    {
        PropagationResult r;
        r.reason = std::move(reason);
        return r;
    }

    Txn begin_txn()
    {
        Txn t;
        t.mesh_rb.resize(nodes_.size());
        t.map_j.resize(nodes_.size());
        for (size_t i = 0; i < nodes_.size(); ++i) {
            t.mesh_rb[i] = std::make_unique<Rollback>(nodes_[i].mesh);
            if (static_cast<int>(i) != root_) {
                t.map_j[i] = std::make_unique<MapJournal>();
                nodes_[i].to_parent.attach_journal(t.map_j[i].get());
            }
        }
        return t;
    }

    void rollback_txn(Txn& t)
    {
        for (size_t i = 0; i < nodes_.size(); ++i)
            if (t.map_j[i]) {
                nodes_[i].to_parent.attach_journal(nullptr);
                t.map_j[i]->rollback(nodes_[i].to_parent);
            }
        for (size_t i = 0; i < nodes_.size(); ++i)
            apply_rollback(nodes_[i].mesh, *t.mesh_rb[i]);
    }

    void commit_txn(Txn& t)
    {
        for (size_t i = 0; i < nodes_.size(); ++i) {
            if (t.map_j[i]) nodes_[i].to_parent.attach_journal(nullptr);
            discard_rollback(nodes_[i].mesh, *t.mesh_rb[i]);
        }
    }

    // Lifts an edge to the root. Fails only on a broken map.
    bool lift_edge(int node, Index& a, Index& b, std::string* why) const
    {
        int n = node;
        while (n != root_) {
            const auto& nd = nodes_[n];
            const Mesh& pm = nodes_[nd.parent].mesh;
            Index ia = nd.to_parent.image_of_vertex(nd.mesh, pm, a);
            Index ib = nd.to_parent.image_of_vertex(nd.mesh, pm, b);
            if (ia == invalid_index || ib == invalid_index) {
                *why = "edge endpoint without image";
                return false;
            }
            if (ia == ib) {
                *why = "edge endpoints share an image";
                return false;
            }
            a = ia;
            b = ib;
            n = nd.parent;
        }
        return true;
    }

    // --- collapse planning ---

    CollapsePlan build_collapse_plan(int node, Index kept, Index dropped) const
    {
        CollapsePlan plan;
        Index rk = kept, rd = dropped;
        std::string why;
        if (!lift_edge(node, rk, rd, &why)) {
            plan.ok = false;
            plan.reason = why;
            return plan;
        }
        build_collapse_entry(plan, root_, {MergePair{rk, rd}});
        return plan;
    }

    static void fail_plan(CollapsePlan& plan, int node, const std::string& msg)
    {
        if (!plan.ok) return;
        plan.ok = false;
        plan.reason = "node " + std::to_string(node) + ": " + msg;
    }

    void build_collapse_entry(CollapsePlan& plan, int node, std::vector<MergePair> pairs) const
    {
        if (pairs.empty()) return;
        CollapsePlanEntry e;
        e.node = node;
        e.pairs = std::move(pairs);
        e.check = analyze_collapse(nodes_[node].mesh, e.pairs);
        if (!e.check.well_formed)
            fail_plan(plan, node, "contradictory synchronized merges: " + e.check.reason);
        else if (!e.check.valid)
            fail_plan(plan, node, e.check.reason);
        // Copies: recursion below grows plan.entries and may reallocate.
        const std::vector<MergePair> P = e.pairs;
        const std::vector<Simplex> vanished = e.check.vanished;
        plan.entries.push_back(std::move(e));

        std::unordered_set<Index> classes;
        for (const auto& p : P) {
            classes.insert(p.kept);
            classes.insert(p.dropped);
        }
        for (int c : nodes_[node].children) {
            const auto& nd = nodes_[c];
            const Mesh& cmsh = nd.mesh;
            const Mesh& pmsh = nodes_[node].mesh;
            std::vector<MergePair> child_pairs;
            for (const auto& p : P)
                for (const auto& pre : nd.to_parent.preimages(cmsh, pmsh,
                                                              Simplex::edge(p.kept, p.dropped))) {
                    const Index u = pre.vertex_at(0), v = pre.vertex_at(1);
                    const Index iu = nd.to_parent.image_of_vertex(cmsh, pmsh, u);
                    child_pairs.push_back(iu == p.kept ? MergePair{u, v} : MergePair{v, u});
                }
            // An edge whose image vanishes forces its pre-images to collapse
            // toward the endpoint that stays attached to the merge class; with
            // no such endpoint the orientation is arbitrary and the seating
            // check decides validity.
            for (const auto& t : vanished) {
                if (t.dim() != 1) continue;
                for (const auto& pre : nd.to_parent.preimages(cmsh, pmsh, t)) {
                    const Index u = pre.vertex_at(0), v = pre.vertex_at(1);
                    const Index iu = nd.to_parent.image_of_vertex(cmsh, pmsh, u);
                    const Index iv = nd.to_parent.image_of_vertex(cmsh, pmsh, v);
                    const bool cu = classes.count(iu) > 0, cv = classes.count(iv) > 0;
                    if (cu == cv)
                        child_pairs.push_back(MergePair{std::min(u, v), std::max(u, v)});
                    else
                        child_pairs.push_back(cu ? MergePair{u, v} : MergePair{v, u});
                }
            }
            build_collapse_entry(plan, c, std::move(child_pairs));
        }
    }

    const CollapsePlanEntry* entry_for(const CollapsePlan& plan, int node) const
    {
        for (const auto& e : plan.entries)
            if (e.node == node) return &e;
        return nullptr;
    }

    // Predicts stage-3 anchor updates without mutating: every affected child
    // facet must keep distinct vertex images that land inside some surviving
    // parent facet. Mirrors exec_collapse_plan's reseating exactly.
    Issue simulate_seating(const CollapsePlan& plan) const
    {
        for (const auto& e : plan.entries) {
            const Mesh& pm = nodes_[e.node].mesh;
            std::set<Index> pdel(e.check.deleted_facets.begin(), e.check.deleted_facets.end());
            std::unordered_map<Index, Index> rep;
            for (const auto& p : e.pairs) rep[p.dropped] = p.kept;
            std::set<Index> pmod;
            for (const auto& p : e.pairs)
                for (Index f : pm.facets_of_vertex(p.dropped))
                    if (pm.facet_alive(f) && !pdel.count(f)) pmod.insert(f);

            auto post_contains = [&](Index pf, std::span<const Index> images) {
                for (Index s : images) {
                    bool found = false;
                    for (Index w : pm.facet_vertices(pf)) {
                        auto it = rep.find(w);
                        if ((it == rep.end() ? w : it->second) == s) {
                            found = true;
                            break;
                        }
                    }
                    if (!found) return false;
                }
                return true;
            };

            for (int c : nodes_[e.node].children) {
                const auto& nd = nodes_[c];
                const Mesh& cmsh = nd.mesh;
                const CollapsePlanEntry* ce = entry_for(plan, c);
                std::set<Index> cdel;
                std::unordered_map<Index, Index> crep;
                std::set<Index> affected;
                if (ce) {
                    cdel.insert(ce->check.deleted_facets.begin(), ce->check.deleted_facets.end());
                    for (const auto& p : ce->pairs) crep[p.dropped] = p.kept;
                    for (const auto& p : ce->pairs)
                        for (Index f : cmsh.facets_of_vertex(p.dropped))
                            if (cmsh.facet_alive(f)) affected.insert(f);
                }
                for (Index pf : pdel)
                    for (Index cf : nd.to_parent.users_of_parent_facet(cmsh, pm, pf))
                        affected.insert(cf);
                for (Index pf : pmod)
                    for (Index cf : nd.to_parent.users_of_parent_facet(cmsh, pm, pf))
                        affected.insert(cf);
                const auto vtab = nd.to_parent.vertex_image_table(cmsh, pm);
                for (Index f : affected) {
                    if (cdel.count(f)) continue;
                    std::vector<Index> images;
                    for (Index v : cmsh.facet_vertices(f)) {
                        auto cit = crep.find(v);
                        const Index u = cit == crep.end() ? v : cit->second;
                        Index base = u >= 0 && u < static_cast<Index>(vtab.size()) ? vtab[u]
                                                                                   : invalid_index;
                        if (base == invalid_index)
                            return {false, "node " + std::to_string(c) + ": vertex without image"};
                        auto it = rep.find(base);
                        images.push_back(it == rep.end() ? base : it->second);
                    }
                    std::sort(images.begin(), images.end());
                    if (std::adjacent_find(images.begin(), images.end()) != images.end())
                        return {false, "node " + std::to_string(c)
                                           + ": a child facet image would degenerate"};
                    // Candidate hosts all contain the first image's pre-class.
                    bool hosted = false;
                    std::vector<Index> seeds{images.front()};
                    for (const auto& [y, x] : rep)
                        if (x == images.front()) seeds.push_back(y);
                    for (Index w : seeds) {
                        for (Index pf : pm.facets_of_vertex(w)) {
                            if (!pm.facet_alive(pf) || pdel.count(pf)) continue;
                            if (post_contains(pf, images)) {
                                hosted = true;
                                break;
                            }
                        }
                        if (hosted) break;
                    }
                    if (!hosted)
                        return {false, "node " + std::to_string(c)
                                           + ": a child facet image would lose its host facet"};
                }
            }
        }
        return {true, {}};
    }

    // --- split planning ---

    SplitPlan build_split_plan(int node, Index a, Index b) const
    {
        SplitPlan plan;
        Index ra = a, rb = b;
        std::string why;
        require(lift_edge(node, ra, rb, &why), "split cannot lift: " + why);
        build_split_entry(plan, root_, {Simplex::edge(ra, rb)}, {-1});
        return plan;
    }

    void build_split_entry(SplitPlan& plan, int node, std::vector<Simplex> edges,
                           std::vector<int> parent_edge) const
    {
        if (edges.empty()) return;
        const std::vector<Simplex> E = edges;
        plan.entries.push_back(SplitPlanEntry{node, std::move(edges), std::move(parent_edge)});
        for (int c : nodes_[node].children) {
            const auto& nd = nodes_[c];
            std::vector<Simplex> ce;
            std::vector<int> cpe;
            for (size_t j = 0; j < E.size(); ++j)
                for (const auto& pre : nd.to_parent.preimages(nd.mesh, nodes_[node].mesh, E[j])) {
                    ce.push_back(pre);
                    cpe.push_back(static_cast<int>(j));
                }
            build_split_entry(plan, c, std::move(ce), std::move(cpe));
        }
    }

    // --- execution (shared stage 3) ---

    // Rebuilds or clears the anchors of one tree edge. img_of maps a
    // post-state child vertex to its parent vertex. Strict mode treats any
    // failure as an internal error; tolerant mode clears the anchor and flags.
    bool reseat_anchors(int child_node, const std::set<Index>& affected,
                        const std::function<Index(Index)>& img_of, bool tolerant,
                        std::string* why, bool* flagged)
    {
        auto& nd = nodes_[child_node];
        Mesh& child = nd.mesh;
        Mesh& parent = nodes_[nd.parent].mesh;
        ContainmentMap& cm = nd.to_parent;
        const int k = child.dimension();
        for (Index f : affected) {
            if (!child.facet_alive(f)) {
                cm.clear_anchor(f);
                continue;
            }
            const Dart cd = canonical_dart(child, f);
            std::vector<Index> prefix(k + 1);
            bool bad = false;
            for (int i = 0; i <= k && !bad; ++i) {
                prefix[i] = img_of(cd.order[i]);
                if (prefix[i] == invalid_index) bad = true;
            }
            if (!bad) {
                auto sorted = prefix;
                std::sort(sorted.begin(), sorted.end());
                bad = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
            }
            Index host = invalid_index;
            if (!bad) {
                const auto& old = cm.anchor(f);
                if (old && parent.facet_alive(old->parent.facet)) {
                    auto pv = parent.facet_vertices(old->parent.facet);
                    bool all = true;
                    for (Index s : prefix)
                        if (std::find(pv.begin(), pv.end(), s) == pv.end()) {
                            all = false;
                            break;
                        }
                    if (all) host = old->parent.facet;
                }
                if (host == invalid_index) {
                    auto hosts = parent.facets_containing(Simplex(prefix));
                    if (hosts.empty())
                        bad = true;
                    else
                        host = *std::min_element(hosts.begin(), hosts.end());
                }
            }
            if (bad) {
                if (!tolerant) {
                    *why = "node " + std::to_string(child_node) + ": anchor update failed (facet "
                           + std::to_string(f) + ")";
                    return false;
                }
                cm.clear_anchor(f);
                *flagged = true;
                continue;
            }
            cm.set_anchor(f, Anchor{cd, dart_from_prefix(parent, host, prefix)});
        }
        return true;
    }

    std::vector<std::vector<Index>> snapshot_vertex_images() const
    {
        std::vector<std::vector<Index>> snap(nodes_.size());
        for (size_t i = 0; i < nodes_.size(); ++i)
            if (static_cast<int>(i) != root_)
                snap[i] = nodes_[i].to_parent.vertex_image_table(nodes_[i].mesh,
                                                                 nodes_[nodes_[i].parent].mesh);
        return snap;
    }

    bool exec_collapse_plan(const CollapsePlan& plan, bool tolerant, bool force_keep,
                            PropagationResult& out, std::string* why)
    {
        const auto snap = snapshot_vertex_images();
        bool wedged = false, lost_anchor = false;
        std::string first_issue;
        std::unordered_map<int, size_t> ops_at;
        for (const auto& e : plan.entries) {
            NodeOps no{e.node, {}};
            // Merges within an entry are simultaneous: a set that re-uses a
            // vertex across pairs has no consistent substitution and does not
            // execute at all.
            if (!e.check.well_formed) {
                if (!tolerant) {
                    *why = "node " + std::to_string(e.node)
                           + ": contradictory synchronized merges";
                    return false;
                }
                wedged = true;
                if (first_issue.empty())
                    first_issue = "node " + std::to_string(e.node) + ": merge wedged";
                ops_at[e.node] = out.ops.size();
                out.ops.push_back(std::move(no));
                continue;
            }
            for (const auto& p : e.pairs) {
                OperationRecord rec;
                const CollapsePolicy pol = force_keep ? CollapsePolicy::Keep
                                                      : nodes_[e.node].policy;
                if (!merge_vertex(nodes_[e.node].mesh, p.kept, p.dropped, pol, rec)) {
                    if (!tolerant) {
                        *why = "node " + std::to_string(e.node) + ": unrealizable merge sequence";
                        return false;
                    }
                    wedged = true;
                    if (first_issue.empty())
                        first_issue = "node " + std::to_string(e.node) + ": merge wedged";
                    continue;
                }
                no.records.push_back(std::move(rec));
            }
            ops_at[e.node] = out.ops.size();
            out.ops.push_back(std::move(no));
        }
        for (const auto& e : plan.entries) {
            const auto& precs = out.ops[ops_at.at(e.node)].records;
            std::set<Index> pdel, pmod;
            std::unordered_map<Index, Index> pcorr;
            for (const auto& r : precs) {
                pdel.insert(r.deleted_facets.begin(), r.deleted_facets.end());
                pmod.insert(r.modified_facets.begin(), r.modified_facets.end());
                for (const auto& [from, to] : r.vertex_correspondence) pcorr[from] = to;
            }
            const Mesh& pm = nodes_[e.node].mesh;
            for (int c : nodes_[e.node].children) {
                const auto& nd = nodes_[c];
                std::set<Index> affected;
                auto cit = ops_at.find(c);
                if (cit != ops_at.end())
                    for (const auto& r : out.ops[cit->second].records) {
                        affected.insert(r.deleted_facets.begin(), r.deleted_facets.end());
                        affected.insert(r.modified_facets.begin(), r.modified_facets.end());
                    }
                for (Index pf : pdel)
                    for (Index cf : nd.to_parent.users_of_parent_facet(nd.mesh, pm, pf))
                        affected.insert(cf);
                for (Index pf : pmod)
                    for (Index cf : nd.to_parent.users_of_parent_facet(nd.mesh, pm, pf))
                        affected.insert(cf);
                auto img_of = [&](Index v) -> Index {
                    if (v < 0 || v >= static_cast<Index>(snap[c].size())) return invalid_index;
                    const Index base = snap[c][v];
                    if (base == invalid_index) return invalid_index;
                    auto it = pcorr.find(base);
                    return it == pcorr.end() ? base : it->second;
                };
                if (!reseat_anchors(c, affected, img_of, tolerant, why, &lost_anchor))
                    return false;
            }
        }
        out.accepted = !wedged && !lost_anchor;
        if (!out.accepted)
            out.reason = first_issue.empty() ? "anchors could not be re-seated" : first_issue;
        return true;
    }

    bool exec_split_plan(const SplitPlan& plan, PropagationResult& out, std::string* why)
    {
        const auto snap = snapshot_vertex_images();
        std::unordered_map<int, size_t> ops_at;
        for (const auto& e : plan.entries) {
            NodeOps no{e.node, {}};
            for (const auto& edge : e.edges)
                no.records.push_back(
                    edge_split(nodes_[e.node].mesh, edge.vertex_at(0), edge.vertex_at(1)));
            ops_at[e.node] = out.ops.size();
            out.ops.push_back(std::move(no));
        }
        for (const auto& e : plan.entries) {
            const auto& precs = out.ops[ops_at.at(e.node)].records;
            std::set<Index> pdel;
            for (const auto& r : precs) pdel.insert(r.deleted_facets.begin(), r.deleted_facets.end());
            const Mesh& pm = nodes_[e.node].mesh;
            for (int c : nodes_[e.node].children) {
                const auto& nd = nodes_[c];
                std::set<Index> affected;
                std::unordered_map<Index, Index> new_to_parent;
                auto cit = ops_at.find(c);
                if (cit != ops_at.end()) {
                    const auto& crecs = out.ops[cit->second].records;
                    const SplitPlanEntry* ce = nullptr;
                    for (const auto& pe : plan.entries)
                        if (pe.node == c) ce = &pe;
                    for (size_t j = 0; j < crecs.size(); ++j) {
                        affected.insert(crecs[j].deleted_facets.begin(),
                                        crecs[j].deleted_facets.end());
                        affected.insert(crecs[j].created_facets.begin(),
                                        crecs[j].created_facets.end());
                        new_to_parent[crecs[j].new_vertex] =
                            precs[ce->parent_edge[j]].new_vertex;
                    }
                }
                for (Index pf : pdel)
                    for (Index cf : nd.to_parent.users_of_parent_facet(nd.mesh, pm, pf))
                        affected.insert(cf);
                auto img_of = [&](Index v) -> Index {
                    auto nit = new_to_parent.find(v);
                    if (nit != new_to_parent.end()) return nit->second;
                    if (v < 0 || v >= static_cast<Index>(snap[c].size())) return invalid_index;
                    return snap[c][v];
                };
                bool flagged = false;
                if (!reseat_anchors(c, affected, img_of, false, why, &flagged)) return false;
            }
        }
        out.accepted = true;
        return true;
    }

    std::vector<Node> nodes_;
    int root_ = -1;
};

} // namespace mm
