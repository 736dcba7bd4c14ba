#pragma once

#include <algorithm>
#include <array>
#include <initializer_list>
#include <span>
#include <vector>

#include <multimesh/core/base.hpp>

namespace mm {

// A simplex as a sorted set of vertex ids. Identity is the vertex set; two
// simplices of the same mesh are the same simplex iff their sets are equal.
class Simplex {
public:
    Simplex() : dim_(-1) { verts_.fill(invalid_index); }

    explicit Simplex(std::span<const Index> verts)
    {
        require(!verts.empty() && verts.size() <= max_dim + 1, "simplex arity out of range");
        dim_ = static_cast<int>(verts.size()) - 1;
        verts_.fill(invalid_index);
        std::copy(verts.begin(), verts.end(), verts_.begin());
        std::sort(verts_.begin(), verts_.begin() + verts.size());
        for (int i = 0; i < dim_; ++i)
            require(verts_[i] != verts_[i + 1], "repeated vertex in simplex");
    }

    Simplex(std::initializer_list<Index> verts) : Simplex(std::span<const Index>(verts.begin(), verts.size())) {}

    static Simplex vertex(Index v) { return Simplex({v}); }
    static Simplex edge(Index a, Index b) { return Simplex({a, b}); }

    bool valid() const { return dim_ >= 0; }
    int dim() const { return dim_; }
    std::span<const Index> vertices() const { return {verts_.data(), static_cast<size_t>(dim_ + 1)}; }
    Index vertex_at(int i) const { return verts_[i]; }

    bool contains(Index v) const
    {
        for (int i = 0; i <= dim_; ++i)
            if (verts_[i] == v) return true;
        return false;
    }

    bool contains(const Simplex& s) const
    {
        for (Index v : s.vertices())
            if (!contains(v)) return false;
        return true;
    }

    // All nonempty proper subsets, lowest dimension first.
    std::vector<Simplex> faces() const
    {
        std::vector<Simplex> out;
        const int n = dim_ + 1;
        for (int mask = 1; mask < (1 << n) - 1; ++mask) {
            std::array<Index, max_dim + 1> buf;
            int k = 0;
            for (int i = 0; i < n; ++i)
                if (mask & (1 << i)) buf[k++] = verts_[i];
            out.emplace_back(std::span<const Index>(buf.data(), k));
        }
        std::sort(out.begin(), out.end(), [](const Simplex& a, const Simplex& b) { return a.dim() < b.dim(); });
        return out;
    }

    // The (dim-1)-face omitting vertex i of the sorted order.
    Simplex opposite_face(int i) const
    {
        require(dim_ >= 1, "no proper faces of a vertex");
        std::array<Index, max_dim + 1> buf;
        int k = 0;
        for (int j = 0; j <= dim_; ++j)
            if (j != i) buf[k++] = verts_[j];
        return Simplex(std::span<const Index>(buf.data(), k));
    }

    // The (dim-1)-face omitting the given vertex.
    Simplex opposite_of(Index v) const
    {
        require(dim_ >= 1, "no proper faces of a vertex");
        require(contains(v), "vertex not in simplex");
        std::array<Index, max_dim + 1> buf;
        int k = 0;
        for (int j = 0; j <= dim_; ++j)
            if (verts_[j] != v) buf[k++] = verts_[j];
        return Simplex(std::span<const Index>(buf.data(), k));
    }

    Simplex with_substituted(Index from, Index to) const
    {
        std::array<Index, max_dim + 1> buf;
        for (int i = 0; i <= dim_; ++i) buf[i] = verts_[i] == from ? to : verts_[i];
        return Simplex(std::span<const Index>(buf.data(), dim_ + 1));
    }

    friend bool operator==(const Simplex& a, const Simplex& b)
    {
        return a.dim_ == b.dim_ && std::equal(a.verts_.begin(), a.verts_.begin() + a.dim_ + 1, b.verts_.begin());
    }
    friend bool operator!=(const Simplex& a, const Simplex& b) { return !(a == b); }
    friend bool operator<(const Simplex& a, const Simplex& b)
    {
        if (a.dim_ != b.dim_) return a.dim_ < b.dim_;
        return std::lexicographical_compare(
            a.verts_.begin(), a.verts_.begin() + a.dim_ + 1, b.verts_.begin(), b.verts_.begin() + b.dim_ + 1);
    }

    std::uint64_t hash() const
    {
        std::uint64_t h = static_cast<std::uint64_t>(dim_ + 1);
        for (int i = 0; i <= dim_; ++i) h = hash_mix(h, static_cast<std::uint64_t>(verts_[i]));
        return h;
    }

private:
    int dim_;
    std::array<Index, max_dim + 1> verts_;
};

struct SimplexHash {
    std::uint64_t operator()(const Simplex& s) const { return s.hash(); }
};

} // namespace mm
