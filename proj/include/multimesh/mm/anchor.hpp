#pragma once

#include <multimesh/core/dart.hpp>

namespace mm {

// One stored correspondence per child facet: slots 0..k of the parent dart
// are the images of the child dart's slots, higher parent slots complete the
// parent facet. The anchor encodes the containment map restricted to its
// facet; transport extends it to every dart of that facet.
struct Anchor {
    Dart child;
    Dart parent;

    friend bool operator==(const Anchor& a, const Anchor& b)
    {
        return a.child == b.child && a.parent == b.parent;
    }
    friend bool operator!=(const Anchor& a, const Anchor& b) { return !(a == b); }
};

inline bool anchor_valid(const Mesh& child_mesh, const Mesh& parent_mesh, const Anchor& a)
{
    if (!dart_valid(child_mesh, a.child)) return false;
    if (!dart_valid(parent_mesh, a.parent)) return false;
    // Images of distinct child vertices must stay distinct (dart slots are).
    return true;
}

// Parent vertex corresponding to a child vertex of the anchored facet.
inline Index anchor_image_vertex(const Anchor& a, int child_dim, Index child_vertex)
{
    for (int i = 0; i <= child_dim; ++i)
        if (a.child.order[i] == child_vertex) return a.parent.order[i];
    throw Error("vertex not on the anchored facet");
}

// Transport of any child dart on the anchored facet: the switch path from the
// stored child dart to child_dart is a sequence of adjacent transpositions of
// slots 0..k-1, and replaying it on the parent permutes parent slots 0..k the
// same way. Applying the slot bijection directly gives the same dart for
// every path.
inline Dart transport_to_parent(const Mesh& child_mesh, const Anchor& a, const Dart& child_dart)
{
    const int k = child_mesh.dimension();
    require(child_dart.facet == a.child.facet, "dart not on the anchored facet");
    Dart out = a.parent;
    for (int i = 0; i <= k; ++i) {
        bool found = false;
        for (int j = 0; j <= k; ++j)
            if (a.child.order[j] == child_dart.order[i]) {
                out.order[i] = a.parent.order[j];
                found = true;
                break;
            }
        require(found, "dart does not match the anchored facet");
    }
    return out;
}

// Inverse transport: the child dart whose transport is parent_dart. The
// parent dart must sit on the anchored parent facet with slots 0..k spanning
// the anchored image.
inline Dart transport_to_child(const Mesh& child_mesh, const Anchor& a, const Dart& parent_dart)
{
    const int k = child_mesh.dimension();
    require(parent_dart.facet == a.parent.facet, "dart not on the anchored parent facet");
    Dart out = a.child;
    for (int i = 0; i <= k; ++i) {
        bool found = false;
        for (int j = 0; j <= k; ++j)
            if (a.parent.order[j] == parent_dart.order[i]) {
                out.order[i] = a.child.order[j];
                found = true;
                break;
            }
        require(found, "parent dart does not cover the anchored image");
    }
    return out;
}

} // namespace mm
