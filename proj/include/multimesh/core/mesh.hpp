#pragma once

#include <cstring>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <multimesh/core/simplex.hpp>

namespace mm {

class Mesh;

// Which Definition-1 condition a violation breaks.
enum class Condition { Closure = 1, Intersection = 2, Pure = 3, Manifold = 4 };

struct Violation {
    Condition condition;
    Simplex witness;
    std::string detail;
};

// Structural errors (malformed storage) are distinct from validity violations
// (well-formed complex failing Definition 1).
struct ValidityReport {
    std::vector<std::string> structural_errors;
    std::vector<Violation> violations;
    bool structurally_sound() const { return structural_errors.empty(); }
    bool valid() const { return structural_errors.empty() && violations.empty(); }
};

// Reverse log of primary-state changes of one mesh. Derived indices are not
// journaled; rollback restores primary state and rebuilds them.
class MeshJournal {
public:
    bool armed = false;

    void capture_baseline(const Mesh& m);
    void rollback(Mesh& m);

private:
    friend class Mesh;

    struct FacetEntry {
        Index id;
        std::array<Index, max_dim + 1> verts;
        bool alive;
    };
    struct VertexEntry {
        Index id;
        bool alive;
    };
    struct DoubleEntry {
        int col;
        Index index;
        std::array<double, 4> values;
    };
    struct Int64Entry {
        int col;
        Index index;
        std::int64_t value;
    };

    Index base_vertex_count_ = 0;
    Index base_facet_count_ = 0;
    std::uint64_t base_generation_ = 0;
    std::vector<size_t> base_dcol_sizes_;
    std::vector<size_t> base_icol_sizes_;
    std::vector<FacetEntry> facets_;
    std::vector<VertexEntry> vertices_;
    std::vector<DoubleEntry> dvalues_;
    std::vector<Int64Entry> ivalues_;
    std::unordered_set<Index> touched_facets_;
    std::unordered_set<Index> touched_vertices_;
    std::unordered_set<std::uint64_t> touched_values_;
};

// A pure simplicial mesh of dimension 0..3 stored as an indexed facet list.
// Facets keep their construction vertex order (orientation); set-level
// queries use sorted copies. Deleted simplices are tombstoned; ids are never
// reused. Lower-dimensional simplices exist implicitly as faces of facets.
class Mesh {
public:
    explicit Mesh(int dimension) : dim_(dimension)
    {
        require(dimension >= 0 && dimension <= max_dim, "mesh dimension out of range");
    }

    // Copies never carry the source's transaction journal.
    Mesh(const Mesh& other) { *this = other; }
    Mesh& operator=(const Mesh& other)
    {
        if (this == &other) return *this;
        dim_ = other.dim_;
        generation_ = other.generation_;
        facets_ = other.facets_;
        vertex_alive_ = other.vertex_alive_;
        alive_facets_ = other.alive_facets_;
        alive_vertices_ = other.alive_vertices_;
        vertex_facets_ = other.vertex_facets_;
        face_map_ = other.face_map_;
        facet_lookup_ = other.facet_lookup_;
        dcols_ = other.dcols_;
        icols_ = other.icols_;
        journal_ = nullptr;
        return *this;
    }
    Mesh(Mesh&& other) noexcept { *this = std::move(other); }
    Mesh& operator=(Mesh&& other) noexcept
    {
        if (this == &other) return *this;
        dim_ = other.dim_;
        generation_ = other.generation_;
        facets_ = std::move(other.facets_);
        vertex_alive_ = std::move(other.vertex_alive_);
        alive_facets_ = other.alive_facets_;
        alive_vertices_ = other.alive_vertices_;
        vertex_facets_ = std::move(other.vertex_facets_);
        face_map_ = std::move(other.face_map_);
        facet_lookup_ = std::move(other.facet_lookup_);
        dcols_ = std::move(other.dcols_);
        icols_ = std::move(other.icols_);
        journal_ = nullptr;
        other.journal_ = nullptr;
        return *this;
    }

    int dimension() const { return dim_; }
    std::uint64_t generation() const { return generation_; }
    void bump_generation() { ++generation_; }

    // --- vertices -----------------------------------------------------------

    Index add_vertex()
    {
        const Index v = static_cast<Index>(vertex_alive_.size());
        vertex_alive_.push_back(1);
        vertex_facets_.emplace_back();
        for (auto& c : dcols_)
            if (c.simplex_dim == 0) c.data.resize((v + 1) * c.arity, c.def);
        for (auto& c : icols_)
            if (c.simplex_dim == 0) c.data.resize(v + 1, c.def);
        ++alive_vertices_;
        return v;
    }

    Index vertex_count() const { return static_cast<Index>(vertex_alive_.size()); }
    Index alive_vertex_count() const { return alive_vertices_; }
    bool vertex_alive(Index v) const { return v >= 0 && v < vertex_count() && vertex_alive_[v]; }

    void kill_vertex(Index v)
    {
        require(vertex_alive(v), "kill_vertex: vertex not alive");
        journal_vertex(v);
        vertex_alive_[v] = 0;
        --alive_vertices_;
    }

    void revive_vertex(Index v)
    {
        require(v >= 0 && v < vertex_count() && !vertex_alive_[v], "revive_vertex: not a tombstone");
        journal_vertex(v);
        vertex_alive_[v] = 1;
        ++alive_vertices_;
    }

    // --- facets -------------------------------------------------------------

    Index add_facet(std::span<const Index> verts)
    {
        require(static_cast<int>(verts.size()) == dim_ + 1, "facet arity must be dimension+1");
        for (Index v : verts) require(vertex_alive(v), "facet references dead or unknown vertex");
        for (size_t i = 0; i < verts.size(); ++i)
            for (size_t j = i + 1; j < verts.size(); ++j)
                require(verts[i] != verts[j], "facet repeats a vertex");
        const Index f = static_cast<Index>(facets_.size());
        FacetRecord rec;
        rec.verts.fill(invalid_index);
        std::copy(verts.begin(), verts.end(), rec.verts.begin());
        rec.alive = true;
        facets_.push_back(rec);
        for (auto& c : dcols_)
            if (c.simplex_dim == dim_ && dim_ > 0) c.data.resize((f + 1) * c.arity, c.def);
        for (auto& c : icols_)
            if (c.simplex_dim == dim_ && dim_ > 0) c.data.resize(f + 1, c.def);
        ++alive_facets_;
        index_facet(f);
        return f;
    }

    Index add_facet(std::initializer_list<Index> verts)
    {
        return add_facet(std::span<const Index>(verts.begin(), verts.size()));
    }

    Index facet_count() const { return static_cast<Index>(facets_.size()); }
    Index alive_facet_count() const { return alive_facets_; }
    bool facet_alive(Index f) const { return f >= 0 && f < facet_count() && facets_[f].alive; }

    // Oriented vertex list as constructed (or last substituted).
    std::span<const Index> facet_vertices(Index f) const
    {
        require(f >= 0 && f < facet_count(), "facet id out of range");
        return {facets_[f].verts.data(), static_cast<size_t>(dim_ + 1)};
    }

    Simplex facet_simplex(Index f) const { return Simplex(facet_vertices(f)); }

    void kill_facet(Index f)
    {
        require(facet_alive(f), "kill_facet: facet not alive");
        journal_facet(f);
        unindex_facet(f);
        facets_[f].alive = false;
        --alive_facets_;
    }

    // In-place vertex substitution preserving orientation slot-wise. Used by
    // collapse; tolerates producing a degenerate (vertex-repeating) facet so
    // that forced executions can be validated afterwards.
    void substitute_vertex(Index f, Index from, Index to)
    {
        require(facet_alive(f), "substitute_vertex: facet not alive");
        journal_facet(f);
        unindex_facet(f);
        for (int i = 0; i <= dim_; ++i)
            if (facets_[f].verts[i] == from) facets_[f].verts[i] = to;
        index_facet(f);
    }

    // --- derived queries ----------------------------------------------------

    const std::vector<Index>& facets_of_vertex(Index v) const
    {
        require(v >= 0 && v < vertex_count(), "vertex id out of range");
        return vertex_facets_[v];
    }

    std::vector<Index> facets_containing(const Simplex& s) const
    {
        std::vector<Index> out;
        if (s.dim() > dim_) return out;
        const Index v0 = s.vertex_at(0);
        if (v0 < 0 || v0 >= vertex_count()) return out;
        for (Index f : vertex_facets_[v0]) {
            if (!facets_[f].alive) continue;
            if (facet_simplex(f).contains(s)) out.push_back(f);
        }
        return out;
    }

    // Membership in the pure complex: the simplex is a face of an alive facet.
    bool contains(const Simplex& s) const
    {
        if (s.dim() == 0) {
            const Index v = s.vertex_at(0);
            if (!vertex_alive(v)) return false;
            for (Index f : vertex_facets_[v])
                if (facets_[f].alive) return true;
            return false;
        }
        return !facets_containing(s).empty();
    }

    bool is_edge(Index a, Index b) const
    {
        return a != b && vertex_alive(a) && vertex_alive(b) && contains(Simplex::edge(a, b));
    }

    // Alive facets sharing the (dim-1)-face key.
    std::vector<Index> cofacets_of_face(const Simplex& face) const
    {
        std::vector<Index> out;
        auto it = face_map_.find(face);
        if (it == face_map_.end()) return out;
        for (Index f : it->second)
            if (facets_[f].alive) out.push_back(f);
        return out;
    }

    bool is_boundary_face(const Simplex& face) const
    {
        require(face.dim() == dim_ - 1, "boundary query needs a (dim-1)-face");
        return cofacets_of_face(face).size() == 1;
    }

    std::vector<Simplex> boundary_faces() const
    {
        std::vector<Simplex> out;
        for (const auto& [face, ids] : face_map_) {
            int alive = 0;
            for (Index f : ids)
                if (facets_[f].alive) ++alive;
            if (alive == 1) out.push_back(face);
        }
        return out;
    }

    bool vertex_on_boundary(Index v) const
    {
        if (dim_ == 0) return false;
        for (Index f : vertex_facets_[v]) {
            if (!facets_[f].alive) continue;
            const Simplex fs = facet_simplex(f);
            for (int i = 0; i <= dim_; ++i) {
                if (fs.vertex_at(i) == v) continue;
                const Simplex face = fs.opposite_face(i);
                if (face.contains(v) && is_boundary_face(face)) return true;
            }
        }
        return false;
    }

    // Distinct k-simplices of the complex. For k = dim this lists alive facet
    // sets (duplicates collapse to one entry, matching set semantics).
    std::vector<Simplex> simplices(int k) const
    {
        require(k >= 0 && k <= dim_, "simplex dimension out of range");
        std::unordered_set<Simplex, SimplexHash> seen;
        std::vector<Simplex> out;
        for (Index f = 0; f < facet_count(); ++f) {
            if (!facets_[f].alive) continue;
            const Simplex fs = facet_simplex(f);
            if (fs.dim() == k) {
                if (seen.insert(fs).second) out.push_back(fs);
                continue;
            }
            for (const Simplex& s : fs.faces())
                if (s.dim() == k && seen.insert(s).second) out.push_back(s);
        }
        if (k == 0)
            for (Index v = 0; v < vertex_count(); ++v) {
                if (!vertex_alive_[v]) continue;
                const Simplex s = Simplex::vertex(v);
                if (seen.insert(s).second) out.push_back(s);
            }
        return out;
    }

    Index simplex_count(int k) const { return static_cast<Index>(simplices(k).size()); }

    std::int64_t euler_characteristic() const
    {
        std::int64_t chi = 0;
        for (int k = 0; k <= dim_; ++k) chi += (k % 2 == 0 ? 1 : -1) * simplex_count(k);
        return chi;
    }

    std::vector<Index> alive_facets() const
    {
        std::vector<Index> out;
        out.reserve(alive_facets_);
        for (Index f = 0; f < facet_count(); ++f)
            if (facets_[f].alive) out.push_back(f);
        return out;
    }

    std::vector<Index> alive_vertices() const
    {
        std::vector<Index> out;
        out.reserve(alive_vertices_);
        for (Index v = 0; v < vertex_count(); ++v)
            if (vertex_alive_[v]) out.push_back(v);
        return out;
    }

    // --- validity -----------------------------------------------------------

    ValidityReport validate() const
    {
        ValidityReport rep;
        for (Index f = 0; f < facet_count(); ++f) {
            if (!facets_[f].alive) continue;
            const auto verts = facet_vertices(f);
            bool structural = false;
            for (Index v : verts) {
                if (v < 0 || v >= vertex_count() || !vertex_alive_[v]) {
                    rep.structural_errors.push_back(
                        "facet " + std::to_string(f) + " references unknown or dead vertex " + std::to_string(v));
                    structural = true;
                }
            }
            for (size_t i = 0; i < verts.size() && !structural; ++i)
                for (size_t j = i + 1; j < verts.size(); ++j)
                    if (verts[i] == verts[j]) {
                        rep.structural_errors.push_back(
                            "facet " + std::to_string(f) + " repeats vertex " + std::to_string(verts[i]));
                        structural = true;
                        break;
                    }
        }
        if (!rep.structural_errors.empty()) return rep;

        // Condition 2: two simplices meet in a common face or not at all. With
        // set-identified simplices the only representable breach is two alive
        // facets over the same vertex set (their intersection is the whole
        // simplex, not a proper face).
        for (const auto& [key, ids] : facet_lookup_) {
            int alive = 0;
            for (Index f : ids)
                if (facets_[f].alive) ++alive;
            if (alive > 1)
                rep.violations.push_back({Condition::Intersection, key,
                                          std::to_string(alive) + " facets share one vertex set"});
        }

        // Condition 3: pureness. Every vertex must lie in some alive facet.
        for (Index v = 0; v < vertex_count(); ++v) {
            if (!vertex_alive_[v]) continue;
            bool used = false;
            for (Index f : vertex_facets_[v])
                if (facets_[f].alive) {
                    used = true;
                    break;
                }
            if (!used)
                rep.violations.push_back({Condition::Pure, Simplex::vertex(v), "vertex lies in no facet"});
        }

        // Condition 4: every (dim-1)-face borders at most two facets.
        if (dim_ >= 1)
            for (const auto& [face, ids] : face_map_) {
                int alive = 0;
                for (Index f : ids)
                    if (facets_[f].alive) ++alive;
                if (alive > 2)
                    rep.violations.push_back(
                        {Condition::Manifold, face, std::to_string(alive) + " cofacets on one face"});
            }

        // Condition 1 (closure) holds by construction in facet storage.
        return rep;
    }

    // --- attributes ---------------------------------------------------------
    // Named value arrays on vertices (dim 0) or facets (dim = mesh dim).

    int register_attribute_double(const std::string& name, int simplex_dim, int arity, double def = 0.0)
    {
        require(journal_ == nullptr, "cannot register attributes inside a transaction");
        require(simplex_dim == 0 || simplex_dim == dim_, "attributes live on vertices or facets");
        require(arity >= 1 && arity <= 4, "attribute arity out of range");
        require(find_attribute_double(name, simplex_dim) < 0, "duplicate attribute name");
        DCol c;
        c.name = name;
        c.simplex_dim = simplex_dim;
        c.arity = arity;
        c.def = def;
        c.data.resize((simplex_dim == 0 ? vertex_count() : facet_count()) * arity, def);
        dcols_.push_back(std::move(c));
        return static_cast<int>(dcols_.size()) - 1;
    }

    int register_attribute_int64(const std::string& name, int simplex_dim, std::int64_t def = 0)
    {
        require(journal_ == nullptr, "cannot register attributes inside a transaction");
        require(simplex_dim == 0 || simplex_dim == dim_, "attributes live on vertices or facets");
        require(find_attribute_int64(name, simplex_dim) < 0, "duplicate attribute name");
        ICol c;
        c.name = name;
        c.simplex_dim = simplex_dim;
        c.def = def;
        c.data.resize(simplex_dim == 0 ? vertex_count() : facet_count(), def);
        icols_.push_back(std::move(c));
        return static_cast<int>(icols_.size()) - 1;
    }

    int find_attribute_double(const std::string& name, int simplex_dim) const
    {
        for (size_t i = 0; i < dcols_.size(); ++i)
            if (dcols_[i].name == name && dcols_[i].simplex_dim == simplex_dim) return static_cast<int>(i);
        return -1;
    }

    int find_attribute_int64(const std::string& name, int simplex_dim) const
    {
        for (size_t i = 0; i < icols_.size(); ++i)
            if (icols_[i].name == name && icols_[i].simplex_dim == simplex_dim) return static_cast<int>(i);
        return -1;
    }

    int attribute_arity(int col) const { return dcols_[col].arity; }
    int attribute_count_double() const { return static_cast<int>(dcols_.size()); }
    int attribute_count_int64() const { return static_cast<int>(icols_.size()); }
    const std::string& attribute_name_double(int col) const { return dcols_[col].name; }
    const std::string& attribute_name_int64(int col) const { return icols_[col].name; }
    int attribute_dim_double(int col) const { return dcols_[col].simplex_dim; }
    int attribute_dim_int64(int col) const { return icols_[col].simplex_dim; }
    double attribute_default_double(int col) const { return dcols_[col].def; }
    std::int64_t attribute_default_int64(int col) const { return icols_[col].def; }

    std::span<const double> attr_d(int col, Index i) const
    {
        const DCol& c = dcols_[col];
        return {c.data.data() + i * c.arity, static_cast<size_t>(c.arity)};
    }

    void set_attr_d(int col, Index i, std::span<const double> values)
    {
        DCol& c = dcols_[col];
        require(static_cast<int>(values.size()) == c.arity, "attribute arity mismatch");
        journal_dvalue(col, i);
        std::copy(values.begin(), values.end(), c.data.begin() + i * c.arity);
    }

    std::int64_t attr_i(int col, Index i) const { return icols_[col].data[i]; }

    void set_attr_i(int col, Index i, std::int64_t value)
    {
        journal_ivalue(col, i);
        icols_[col].data[i] = value;
    }

    // --- journaling ---------------------------------------------------------

    void attach_journal(MeshJournal* j)
    {
        require(journal_ == nullptr || j == nullptr, "journal already attached");
        journal_ = j;
        if (journal_) journal_->capture_baseline(*this);
    }
    MeshJournal* journal() const { return journal_; }

    // Test support: recompute derived indices from primary state and compare.
    bool derived_state_consistent() const
    {
        Mesh fresh(dim_);
        fresh.facets_ = facets_;
        fresh.vertex_alive_ = vertex_alive_;
        fresh.rebuild_derived();
        return fresh.face_map_same(*this);
    }

private:
    friend class MeshJournal;

    struct FacetRecord {
        std::array<Index, max_dim + 1> verts;
        bool alive;
    };
    struct DCol {
        std::string name;
        int simplex_dim;
        int arity;
        double def;
        std::vector<double> data;
    };
    struct ICol {
        std::string name;
        int simplex_dim;
        std::int64_t def;
        std::vector<std::int64_t> data;
    };

    void index_facet(Index f)
    {
        const FacetRecord& rec = facets_[f];
        bool degenerate = false;
        for (int i = 0; i <= dim_; ++i)
            for (int j = i + 1; j <= dim_; ++j)
                if (rec.verts[i] == rec.verts[j]) degenerate = true;
        for (int i = 0; i <= dim_; ++i) {
            Index v = rec.verts[i];
            bool dup = false;
            for (int j = 0; j < i; ++j)
                if (rec.verts[j] == v) dup = true;
            if (!dup && v >= 0 && v < vertex_count()) vertex_facets_[v].push_back(f);
        }
        if (degenerate) return; // wedged state, caught by validate()
        const Simplex fs = facet_simplex(f);
        facet_lookup_[fs].push_back(f);
        if (dim_ >= 1)
            for (int i = 0; i <= dim_; ++i) face_map_[fs.opposite_face(i)].push_back(f);
    }

    void unindex_facet(Index f)
    {
        const FacetRecord& rec = facets_[f];
        bool degenerate = false;
        for (int i = 0; i <= dim_; ++i)
            for (int j = i + 1; j <= dim_; ++j)
                if (rec.verts[i] == rec.verts[j]) degenerate = true;
        for (int i = 0; i <= dim_; ++i) {
            Index v = rec.verts[i];
            bool dup = false;
            for (int j = 0; j < i; ++j)
                if (rec.verts[j] == v) dup = true;
            if (!dup && v >= 0 && v < vertex_count()) erase_value(vertex_facets_[v], f);
        }
        if (degenerate) return;
        const Simplex fs = facet_simplex(f);
        erase_map_value(facet_lookup_, fs, f);
        if (dim_ >= 1)
            for (int i = 0; i <= dim_; ++i) erase_map_value(face_map_, fs.opposite_face(i), f);
    }

    static void erase_value(std::vector<Index>& vec, Index f)
    {
        for (size_t i = 0; i < vec.size(); ++i)
            if (vec[i] == f) {
                vec[i] = vec.back();
                vec.pop_back();
                return;
            }
    }

    static void erase_map_value(std::unordered_map<Simplex, std::vector<Index>, SimplexHash>& map,
                                const Simplex& key, Index f)
    {
        auto it = map.find(key);
        if (it == map.end()) return;
        erase_value(it->second, f);
        if (it->second.empty()) map.erase(it);
    }

    void rebuild_derived()
    {
        vertex_facets_.assign(vertex_alive_.size(), {});
        face_map_.clear();
        facet_lookup_.clear();
        alive_vertices_ = 0;
        for (auto a : vertex_alive_)
            if (a) ++alive_vertices_;
        alive_facets_ = 0;
        for (Index f = 0; f < facet_count(); ++f)
            if (facets_[f].alive) {
                ++alive_facets_;
                index_facet(f);
            }
    }

    bool face_map_same(const Mesh& other) const
    {
        if (face_map_.size() != other.face_map_.size()) return false;
        if (facet_lookup_.size() != other.facet_lookup_.size()) return false;
        for (const auto& [k, v] : face_map_) {
            auto it = other.face_map_.find(k);
            if (it == other.face_map_.end()) return false;
            auto a = v, b = it->second;
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            if (a != b) return false;
        }
        return true;
    }

    void journal_facet(Index f)
    {
        if (!journal_ || !journal_->armed) return;
        if (f >= journal_->base_facet_count_) return; // created inside the journal span
        if (!journal_->touched_facets_.insert(f).second) return;
        journal_->facets_.push_back({f, facets_[f].verts, facets_[f].alive});
    }

    void journal_vertex(Index v)
    {
        if (!journal_ || !journal_->armed) return;
        if (v >= journal_->base_vertex_count_) return;
        if (!journal_->touched_vertices_.insert(v).second) return;
        journal_->vertices_.push_back({v, vertex_alive_[v] != 0});
    }

    void journal_dvalue(int col, Index i)
    {
        if (!journal_ || !journal_->armed) return;
        const DCol& c = dcols_[col];
        if (static_cast<size_t>((i + 1) * c.arity) > journal_->base_dcol_sizes_[col]) return;
        const std::uint64_t key = hash_mix(static_cast<std::uint64_t>(col) * 2 + 0, static_cast<std::uint64_t>(i));
        if (!journal_->touched_values_.insert(key).second) return;
        MeshJournal::DoubleEntry e;
        e.col = col;
        e.index = i;
        for (int k = 0; k < c.arity; ++k) e.values[k] = c.data[i * c.arity + k];
        journal_->dvalues_.push_back(e);
    }

    void journal_ivalue(int col, Index i)
    {
        if (!journal_ || !journal_->armed) return;
        if (static_cast<size_t>(i + 1) > journal_->base_icol_sizes_[col]) return;
        const std::uint64_t key = hash_mix(static_cast<std::uint64_t>(col) * 2 + 1, static_cast<std::uint64_t>(i));
        if (!journal_->touched_values_.insert(key).second) return;
        journal_->ivalues_.push_back({col, i, icols_[col].data[i]});
    }

    int dim_;
    std::uint64_t generation_ = 0;
    std::vector<FacetRecord> facets_;
    std::vector<std::uint8_t> vertex_alive_;
    Index alive_facets_ = 0;
    Index alive_vertices_ = 0;

    // derived
    std::vector<std::vector<Index>> vertex_facets_;
    std::unordered_map<Simplex, std::vector<Index>, SimplexHash> face_map_;     // (dim-1)-face -> facets
    std::unordered_map<Simplex, std::vector<Index>, SimplexHash> facet_lookup_; // vertex set -> facets

    std::vector<DCol> dcols_;
    std::vector<ICol> icols_;

    MeshJournal* journal_ = nullptr;
};

inline void MeshJournal::capture_baseline(const Mesh& m)
{
    base_vertex_count_ = m.vertex_count();
    base_facet_count_ = m.facet_count();
    base_generation_ = m.generation();
    base_dcol_sizes_.clear();
    for (const auto& c : m.dcols_) base_dcol_sizes_.push_back(c.data.size());
    base_icol_sizes_.clear();
    for (const auto& c : m.icols_) base_icol_sizes_.push_back(c.data.size());
    armed = true;
}

inline void MeshJournal::rollback(Mesh& m)
{
    require(armed, "rollback of an unarmed journal");
    armed = false;
    for (auto it = facets_.rbegin(); it != facets_.rend(); ++it) {
        Mesh::FacetRecord& rec = m.facets_[it->id];
        rec.verts = it->verts;
        rec.alive = it->alive;
    }
    m.facets_.resize(base_facet_count_);
    for (auto it = vertices_.rbegin(); it != vertices_.rend(); ++it)
        m.vertex_alive_[it->id] = it->alive ? 1 : 0;
    m.vertex_alive_.resize(base_vertex_count_);
    for (auto it = dvalues_.rbegin(); it != dvalues_.rend(); ++it) {
        auto& c = m.dcols_[it->col];
        for (int k = 0; k < c.arity; ++k) c.data[it->index * c.arity + k] = it->values[k];
    }
    for (size_t col = 0; col < base_dcol_sizes_.size(); ++col) m.dcols_[col].data.resize(base_dcol_sizes_[col]);
    for (auto it = ivalues_.rbegin(); it != ivalues_.rend(); ++it) m.icols_[it->col].data[it->index] = it->value;
    for (size_t col = 0; col < base_icol_sizes_.size(); ++col) m.icols_[col].data.resize(base_icol_sizes_[col]);
    m.generation_ = base_generation_;
    m.rebuild_derived();
    facets_.clear();
    vertices_.clear();
    dvalues_.clear();
    ivalues_.clear();
    touched_facets_.clear();
    touched_vertices_.clear();
    touched_values_.clear();
}

} // namespace mm
