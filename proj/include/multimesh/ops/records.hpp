#pragma once

#include <utility>

#include <multimesh/core/mesh.hpp>

namespace mm {

enum class OpKind { Split, Collapse };

// What one local operation did to one mesh. Vertex ids are pre-operation ids
// except new_vertex; boundary_faces use post-operation ids (the faces where
// anchors re-seat).
struct OperationRecord {
    OpKind kind = OpKind::Split;
    Simplex edge;
    Index new_vertex = invalid_index;
    Index kept_vertex = invalid_index;
    Index dropped_vertex = invalid_index;
    std::vector<Index> deleted_facets;
    std::vector<Index> created_facets; // split: (away-from-b, away-from-a) pair per deleted facet
    std::vector<Index> modified_facets; // collapse: substituted in place
    std::vector<Simplex> boundary_faces;
    std::vector<std::pair<Index, Index>> vertex_correspondence; // old id -> surviving id

    Index corresponding(Index v) const
    {
        for (const auto& [from, to] : vertex_correspondence)
            if (from == v) return to;
        return v;
    }
};

// Captures the state of one mesh so a not-yet-committed operation can be
// undone exactly. Arm before mutating; apply_rollback restores and disarms.
class Rollback {
public:
    explicit Rollback(Mesh& m) : mesh_(&m), start_generation_(m.generation())
    {
        m.attach_journal(&journal_);
    }

    Rollback(const Rollback&) = delete;
    Rollback& operator=(const Rollback&) = delete;

    std::uint64_t start_generation() const { return start_generation_; }
    bool armed() const { return journal_.armed; }

private:
    friend void apply_rollback(Mesh&, Rollback&);
    friend void discard_rollback(Mesh&, Rollback&);

    Mesh* mesh_;
    std::uint64_t start_generation_;
    MeshJournal journal_;
};

// Restores connectivity, attributes, and the generation counter exactly.
inline void apply_rollback(Mesh& m, Rollback& rb)
{
    require(rb.mesh_ == &m, "rollback captured on a different mesh");
    require(rb.armed(), "rollback applied twice");
    m.attach_journal(nullptr);
    rb.journal_.rollback(m);
}

// Keeps the changes and releases the journal.
inline void discard_rollback(Mesh& m, Rollback& rb)
{
    require(rb.mesh_ == &m, "rollback captured on a different mesh");
    require(rb.armed(), "rollback already resolved");
    rb.journal_.armed = false;
    m.attach_journal(nullptr);
}

} // namespace mm
