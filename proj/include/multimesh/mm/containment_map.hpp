#pragma once

#include <multimesh/mm/anchor.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace mm {

class ContainmentMap;

// Records pre-image anchor slots on first touch so a rejected operation can
// restore the map exactly.
class MapJournal {
public:
    bool armed = true;

    void capture_baseline(const ContainmentMap& cm);
    void mark(Index child_facet, const std::optional<Anchor>& old_value)
    {
        if (touched_.count(child_facet)) return;
        touched_.insert(child_facet);
        entries_.push_back({child_facet, old_value});
    }
    void rollback(ContainmentMap& cm);

private:
    struct Entry {
        Index child_facet;
        std::optional<Anchor> old_value;
    };
    std::vector<Entry> entries_;
    std::unordered_set<Index> touched_;
    std::size_t baseline_size_ = 0;
};

// Anchor store for one tree edge: exactly one anchor per alive child facet.
// Vertex images, vertex pre-images and per-parent-facet user lists are
// derived caches rebuilt lazily from the anchors.
class ContainmentMap {
public:
    ContainmentMap() = default;
    ContainmentMap(int child_dim, int parent_dim)
        : child_dim_(child_dim), parent_dim_(parent_dim)
    {
        require(child_dim >= 0 && child_dim <= parent_dim, "child dimension exceeds parent");
    }

    // Copies never carry the source's journal.
    ContainmentMap(const ContainmentMap& other)
        : child_dim_(other.child_dim_), parent_dim_(other.parent_dim_), anchors_(other.anchors_)
    {
    }
    ContainmentMap& operator=(const ContainmentMap& other)
    {
        if (this == &other) return *this;
        child_dim_ = other.child_dim_;
        parent_dim_ = other.parent_dim_;
        anchors_ = other.anchors_;
        journal_ = nullptr;
        dirty_ = true;
        return *this;
    }
    ContainmentMap(ContainmentMap&& other) noexcept
        : child_dim_(other.child_dim_), parent_dim_(other.parent_dim_),
          anchors_(std::move(other.anchors_))
    {
        other.journal_ = nullptr;
    }
    ContainmentMap& operator=(ContainmentMap&& other) noexcept
    {
        if (this == &other) return *this;
        child_dim_ = other.child_dim_;
        parent_dim_ = other.parent_dim_;
        anchors_ = std::move(other.anchors_);
        journal_ = nullptr;
        dirty_ = true;
        other.journal_ = nullptr;
        return *this;
    }

    int child_dimension() const { return child_dim_; }
    int parent_dimension() const { return parent_dim_; }

    void set_anchor(Index child_facet, const Anchor& a)
    {
        require(child_facet >= 0, "bad facet id");
        if (child_facet >= static_cast<Index>(anchors_.size()))
            anchors_.resize(child_facet + 1);
        if (journal_ && journal_->armed) journal_->mark(child_facet, anchors_[child_facet]);
        anchors_[child_facet] = a;
        dirty_ = true;
    }

    void clear_anchor(Index child_facet)
    {
        if (child_facet < 0 || child_facet >= static_cast<Index>(anchors_.size())) return;
        if (journal_ && journal_->armed) journal_->mark(child_facet, anchors_[child_facet]);
        anchors_[child_facet].reset();
        dirty_ = true;
    }

    const std::optional<Anchor>& anchor(Index child_facet) const
    {
        static const std::optional<Anchor> none;
        if (child_facet < 0 || child_facet >= static_cast<Index>(anchors_.size())) return none;
        return anchors_[child_facet];
    }

    Index anchor_slots() const { return static_cast<Index>(anchors_.size()); }

    // --- derived queries; meshes are passed in, the map owns no meshes ---

    Index image_of_vertex(const Mesh& child, const Mesh& parent, Index v) const
    {
        refresh(child, parent);
        if (v < 0 || v >= static_cast<Index>(vertex_image_.size())) return invalid_index;
        return vertex_image_[v];
    }

    Simplex image(const Mesh& child, const Mesh& parent, const Simplex& s) const
    {
        refresh(child, parent);
        std::vector<Index> verts;
        for (int i = 0; i <= s.dim(); ++i) {
            Index v = s.vertex_at(i);
            require(v >= 0 && v < static_cast<Index>(vertex_image_.size())
                        && vertex_image_[v] != invalid_index,
                    "child vertex has no image");
            verts.push_back(vertex_image_[v]);
        }
        return Simplex(verts);
    }

    const std::vector<Index>& preimage_vertices(const Mesh& child, const Mesh& parent,
                                                Index parent_vertex) const
    {
        static const std::vector<Index> none;
        refresh(child, parent);
        auto it = vertex_pre_.find(parent_vertex);
        return it == vertex_pre_.end() ? none : it->second;
    }

    // All child simplices whose image is exactly the given parent simplex.
    // Pre-images of distinct parent vertices are disjoint, so candidates are
    // products of per-vertex pre-image lists filtered by membership.
    std::vector<Simplex> preimages(const Mesh& child, const Mesh& parent,
                                   const Simplex& parent_simplex) const
    {
        refresh(child, parent);
        std::vector<Simplex> out;
        if (parent_simplex.dim() > child_dim_) return out;
        std::vector<const std::vector<Index>*> lists;
        for (int i = 0; i <= parent_simplex.dim(); ++i) {
            auto it = vertex_pre_.find(parent_simplex.vertex_at(i));
            if (it == vertex_pre_.end()) return out;
            lists.push_back(&it->second);
        }
        std::vector<Index> pick(lists.size());
        collect_products(child, lists, 0, pick, out);
        std::sort(out.begin(), out.end());
        return out;
    }

    std::vector<Index> users_of_parent_facet(const Mesh& child, const Mesh& parent,
                                             Index parent_facet) const
    {
        refresh(child, parent);
        auto it = parent_users_.find(parent_facet);
        return it == parent_users_.end() ? std::vector<Index>{} : it->second;
    }

    // Snapshot of the child-vertex image table (index = child vertex id).
    std::vector<Index> vertex_image_table(const Mesh& child, const Mesh& parent) const
    {
        refresh(child, parent);
        return vertex_image_;
    }

    // One error string per breach, each naming a witness.
    std::vector<std::string> check_map(const Mesh& child, const Mesh& parent) const
    {
        std::vector<std::string> errors;
        for (Index f : child.alive_facets()) {
            const auto& a = anchor(f);
            if (!a) {
                errors.push_back(witness("child facet without anchor", f));
                continue;
            }
            if (a->child.facet != f) {
                errors.push_back(witness("anchor stored under wrong facet", f));
                continue;
            }
            if (!dart_valid(child, a->child)) {
                errors.push_back(witness("anchor child dart invalid", f));
                continue;
            }
            if (!dart_valid(parent, a->parent)) {
                errors.push_back(witness("anchor parent dart invalid", f));
                continue;
            }
        }
        for (Index f = 0; f < static_cast<Index>(anchors_.size()); ++f)
            if (anchors_[f] && !child.facet_alive(f))
                errors.push_back(witness("anchor on dead child facet", f));
        refresh(child, parent);
        for (const auto& c : conflicts_) errors.push_back(c);
        return errors;
    }

    void attach_journal(MapJournal* j)
    {
        require(j == nullptr || journal_ == nullptr, "map already has a journal");
        journal_ = j;
        if (journal_) journal_->capture_baseline(*this);
    }

    void mark_dirty() { dirty_ = true; }

private:
    friend class MapJournal;

    static std::string witness(const char* what, Index id)
    {
        std::ostringstream os;
        os << what << " (facet " << id << ")";
        return os.str();
    }

    void collect_products(const Mesh& child, const std::vector<const std::vector<Index>*>& lists,
                          std::size_t level, std::vector<Index>& pick,
                          std::vector<Simplex>& out) const
    {
        if (level == lists.size()) {
            Simplex s(pick);
            if (child.contains(s)) out.push_back(s);
            return;
        }
        for (Index v : *lists[level]) {
            pick[level] = v;
            collect_products(child, lists, level + 1, pick, out);
        }
    }

    void refresh(const Mesh& child, const Mesh& parent) const
    {
        (void)parent;
        if (!dirty_) return;
        vertex_image_.assign(child.vertex_count(), invalid_index);
        vertex_pre_.clear();
        parent_users_.clear();
        conflicts_.clear();
        for (Index f = 0; f < static_cast<Index>(anchors_.size()); ++f) {
            const auto& a = anchors_[f];
            if (!a || !child.facet_alive(f)) continue;
            parent_users_[a->parent.facet].push_back(f);
            for (int i = 0; i <= child_dim_; ++i) {
                Index cv = a->child.order[i];
                Index pv = a->parent.order[i];
                if (cv < 0 || cv >= static_cast<Index>(vertex_image_.size())) continue;
                if (vertex_image_[cv] == invalid_index) {
                    vertex_image_[cv] = pv;
                } else if (vertex_image_[cv] != pv) {
                    std::ostringstream os;
                    os << "child vertex " << cv << " maps to parent vertices "
                       << vertex_image_[cv] << " and " << pv << " (facet " << f << ")";
                    conflicts_.push_back(os.str());
                }
            }
        }
        for (Index v = 0; v < static_cast<Index>(vertex_image_.size()); ++v)
            if (vertex_image_[v] != invalid_index) vertex_pre_[vertex_image_[v]].push_back(v);
        for (auto& [pv, list] : vertex_pre_) std::sort(list.begin(), list.end());
        for (auto& [pf, list] : parent_users_) std::sort(list.begin(), list.end());
        dirty_ = false;
    }

    int child_dim_ = 0;
    int parent_dim_ = 0;
    std::vector<std::optional<Anchor>> anchors_;
    MapJournal* journal_ = nullptr;

    mutable bool dirty_ = true;
    mutable std::vector<Index> vertex_image_;
    mutable std::unordered_map<Index, std::vector<Index>> vertex_pre_;
    mutable std::unordered_map<Index, std::vector<Index>> parent_users_;
    mutable std::vector<std::string> conflicts_;
};

inline void MapJournal::capture_baseline(const ContainmentMap& cm)
{
    baseline_size_ = cm.anchors_.size();
}

inline void MapJournal::rollback(ContainmentMap& cm)
{
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        if (it->child_facet < static_cast<Index>(cm.anchors_.size()))
            cm.anchors_[it->child_facet] = it->old_value;
    }
    if (cm.anchors_.size() > baseline_size_) cm.anchors_.resize(baseline_size_);
    cm.dirty_ = true;
    entries_.clear();
    touched_.clear();
}

// Builds the map for a child that covers the parent facet by facet: pairs
// give (child facet, parent facet) with vertex correspondence by stored
// order. Every child facet appears exactly once; every parent facet at
// least once (a mirror twin is the 1:1 case, a periodic cover maps n:1).
// Rejects pairings whose identifications disagree, with a witness.
inline ContainmentMap from_facet_cover(const Mesh& parent, const Mesh& child,
                                       const std::vector<std::pair<Index, Index>>& pairs)
{
    require(child.dimension() == parent.dimension(),
            "facet cover needs equal dimensions");
    require(pairs.size() == static_cast<std::size_t>(child.alive_facet_count()),
            "facet cover must pair every child facet");
    ContainmentMap cm(child.dimension(), parent.dimension());
    std::vector<char> child_seen(child.facet_count(), 0), parent_seen(parent.facet_count(), 0);
    Index covered = 0;
    for (const auto& [cf, pf] : pairs) {
        require(child.facet_alive(cf), "cover names a missing child facet");
        require(parent.facet_alive(pf), "cover names a missing parent facet");
        require(!child_seen[cf], "child facet paired twice");
        child_seen[cf] = 1;
        if (!parent_seen[pf]) {
            parent_seen[pf] = 1;
            ++covered;
        }
        auto cverts = child.facet_vertices(cf);
        auto pverts = parent.facet_vertices(pf);
        Dart cd = canonical_dart(child, cf);
        Dart pd;
        pd.facet = pf;
        for (int i = 0; i <= child.dimension(); ++i) {
            auto at = std::find(cverts.begin(), cverts.end(), cd.order[i]);
            pd.order[i] = pverts[static_cast<std::size_t>(at - cverts.begin())];
        }
        cm.set_anchor(cf, Anchor{cd, pd});
    }
    require(covered == parent.alive_facet_count(), "facet cover must reach every parent facet");
    auto errors = cm.check_map(child, parent);
    if (!errors.empty()) throw Error("inconsistent facet cover: " + errors.front());
    return cm;
}

struct TaggedChild {
    Mesh mesh;
    ContainmentMap map;
    std::vector<Index> vertex_to_parent; // child vertex id -> parent vertex id
};

// Builds a child mesh from a tagged set of parent k-simplices, one child
// facet per tag. Child vertex ids follow ascending parent vertex ids.
// Rejects tagged sets that do not form a valid complex, with a witness.
inline TaggedChild from_tags(const Mesh& parent, int k, std::vector<Simplex> tagged)
{
    require(k >= 0 && k <= parent.dimension(), "tag dimension out of range");
    require(!tagged.empty(), "empty tag set");
    std::sort(tagged.begin(), tagged.end());
    tagged.erase(std::unique(tagged.begin(), tagged.end()), tagged.end());
    std::vector<Index> parent_verts;
    for (const auto& s : tagged) {
        require(s.dim() == k, "tag of wrong dimension");
        require(parent.contains(s), "tagged simplex not in the parent complex");
        for (int i = 0; i <= k; ++i) parent_verts.push_back(s.vertex_at(i));
    }
    std::sort(parent_verts.begin(), parent_verts.end());
    parent_verts.erase(std::unique(parent_verts.begin(), parent_verts.end()),
                       parent_verts.end());
    std::map<Index, Index> to_child;
    TaggedChild out{Mesh(k), ContainmentMap(k, parent.dimension()), parent_verts};
    for (Index pv : parent_verts) {
        to_child[pv] = out.mesh.add_vertex();
        (void)pv;
    }
    for (const auto& s : tagged) {
        std::vector<Index> cverts;
        for (int i = 0; i <= k; ++i) cverts.push_back(to_child[s.vertex_at(i)]);
        out.mesh.add_facet(cverts);
    }
    auto report = out.mesh.validate();
    if (!report.valid()) {
        std::string why = report.structurally_sound() ? report.violations.front().detail
                                                      : report.structural_errors.front();
        throw Error("tagged set is not a valid complex: " + why);
    }
    for (Index cf : out.mesh.alive_facets()) {
        Dart cd = canonical_dart(out.mesh, cf);
        std::vector<Index> prefix;
        for (int i = 0; i <= k; ++i) prefix.push_back(out.vertex_to_parent[cd.order[i]]);
        auto hosts = parent.facets_containing(Simplex(prefix));
        require(!hosts.empty(), "tagged simplex lost its parent facet");
        Dart pd = dart_from_prefix(parent, hosts.front(), prefix);
        out.map.set_anchor(cf, Anchor{cd, pd});
    }
    auto errors = out.map.check_map(out.mesh, parent);
    if (!errors.empty()) throw Error("tag construction failed: " + errors.front());
    return out;
}

} // namespace mm
