#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <multimesh/geom/metrics.hpp>

namespace mm {

namespace envdetail {

using Vec3 = std::array<double, 3>;

inline Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline double sq_dist_point_segment(const Vec3& p, const Vec3& a, const Vec3& b)
{
    const Vec3 ab = sub(b, a), ap = sub(p, a);
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(ap, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Vec3 q = {a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]};
    return dot(sub(p, q), sub(p, q));
}

// Closest point on a triangle via barycentric region tests.
inline double sq_dist_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 ab = sub(b, a), ac = sub(c, a), ap = sub(p, a);
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return dot(sub(p, a), sub(p, a));

    const Vec3 bp = sub(p, b);
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return dot(sub(p, b), sub(p, b));

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return sq_dist_point_segment(p, a, b);

    const Vec3 cp = sub(p, c);
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return dot(sub(p, c), sub(p, c));

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return sq_dist_point_segment(p, a, c);

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) return sq_dist_point_segment(p, b, c);

    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    const Vec3 q = {a[0] + v * ab[0] + w * ac[0], a[1] + v * ab[1] + w * ac[1],
                    a[2] + v * ab[2] + w * ac[2]};
    return dot(sub(p, q), sub(p, q));
}

struct Box {
    Vec3 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
            std::numeric_limits<double>::max()};
    Vec3 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
            std::numeric_limits<double>::lowest()};

    void grow(const Vec3& p)
    {
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(lo[k], p[k]);
            hi[k] = std::max(hi[k], p[k]);
        }
    }
    void grow(const Box& b)
    {
        grow(b.lo);
        grow(b.hi);
    }
    Vec3 center() const
    {
        return {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])};
    }
    double sq_dist(const Vec3& p) const
    {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double d = std::max({lo[k] - p[k], 0.0, p[k] - hi[k]});
            s += d * d;
        }
        return s;
    }
};

} // namespace envdetail

// Frozen reference soup (triangles or segments) with a tolerance. inside(p)
// answers whether p lies within eps of the reference; the reference never
// changes after construction.
class Envelope {
public:
    using Vec3 = envdetail::Vec3;

    Envelope() = default;

    // Reference = the alive facets of a 1- or 2-mesh with a 3D (or 2D,
    // zero-padded) position attribute.
    Envelope(const Mesh& reference, double eps, const std::string& attr = "position")
        : eps_(eps)
    {
        require(eps > 0.0, "envelope tolerance must be positive");
        require(reference.dimension() == 1 || reference.dimension() == 2,
                "envelope reference must be an edge or triangle mesh");
        const int col = reference.find_attribute_double(attr, 0);
        require(col >= 0, "missing vertex attribute: " + attr);
        const int arity = reference.attribute_arity(col);
        require(arity == 2 || arity == 3, "envelope positions must be 2D or 3D");
        corners_ = reference.dimension() + 1;
        for (Index f = 0; f < reference.facet_count(); ++f) {
            if (!reference.facet_alive(f)) continue;
            for (Index v : reference.facet_vertices(f)) {
                auto p = reference.attr_d(col, v);
                Vec3 q{0.0, 0.0, 0.0};
                for (int k = 0; k < arity; ++k) q[k] = p[k];
                verts_.push_back(q);
            }
        }
        build();
    }

    double tolerance() const { return eps_; }
    std::int64_t primitive_count() const
    {
        return static_cast<std::int64_t>(verts_.size()) / corners_;
    }

    // Exact squared distance from p to the reference soup.
    double squared_distance(const Vec3& p) const
    {
        double best = std::numeric_limits<double>::max();
        if (!nodes_.empty()) descend(0, p, best);
        return best;
    }

    bool inside(const Vec3& p) const
    {
        if (nodes_.empty()) return false;
        return squared_distance(p) <= eps_ * eps_;
    }

private:
    struct Node {
        envdetail::Box box;
        int left = -1, right = -1; // leaves hold a primitive range instead
        int begin = 0, end = 0;
    };

    void build()
    {
        const int n = static_cast<int>(primitive_count());
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), 0);
        if (n > 0) build_node(0, n);
    }

    envdetail::Box primitive_box(int prim) const
    {
        envdetail::Box b;
        for (int k = 0; k < corners_; ++k) b.grow(verts_[prim * corners_ + k]);
        return b;
    }

    int build_node(int begin, int end)
    {
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back({});
        envdetail::Box box;
        for (int i = begin; i < end; ++i) box.grow(primitive_box(order_[i]));
        nodes_[id].box = box;
        if (end - begin <= 4) {
            nodes_[id].begin = begin;
            nodes_[id].end = end;
            return id;
        }
        int axis = 0;
        const envdetail::Vec3 ext = envdetail::sub(box.hi, box.lo);
        if (ext[1] > ext[axis]) axis = 1;
        if (ext[2] > ext[axis]) axis = 2;
        const int mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int a, int b) {
                             return primitive_box(a).center()[axis]
                                    < primitive_box(b).center()[axis];
                         });
        const int l = build_node(begin, mid);
        const int r = build_node(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    void descend(int id, const Vec3& p, double& best) const
    {
        const Node& nd = nodes_[id];
        if (nd.box.sq_dist(p) >= best) return;
        if (nd.left < 0) {
            for (int i = nd.begin; i < nd.end; ++i) {
                const int prim = order_[i];
                const Vec3& a = verts_[prim * corners_ + 0];
                const Vec3& b = verts_[prim * corners_ + 1];
                const double d = corners_ == 3
                                     ? envdetail::sq_dist_point_triangle(
                                           p, a, b, verts_[prim * corners_ + 2])
                                     : envdetail::sq_dist_point_segment(p, a, b);
                best = std::min(best, d);
            }
            return;
        }
        const double dl = nodes_[nd.left].box.sq_dist(p);
        const double dr = nodes_[nd.right].box.sq_dist(p);
        if (dl <= dr) {
            descend(nd.left, p, best);
            descend(nd.right, p, best);
        } else {
            descend(nd.right, p, best);
            descend(nd.left, p, best);
        }
    }

    double eps_ = 0.0;
    int corners_ = 0;
    std::vector<Vec3> verts_;  // corners_ entries per primitive
    std::vector<int> order_;   // primitive ids, permuted by the build
    std::vector<Node> nodes_;
};

} // namespace mm
