#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sepsim/errors.hpp"

namespace sepsim {

using Site = std::int64_t;
using EdgeId = std::int64_t;

// One nearest-neighbour bond with an orientation: from `source` one step
// along `axis` in direction `sign` (0 = +, 1 = -).
struct DirectedEdge {
    Site source = 0;
    int axis = 0;
    int sign = 0;
};

// The discrete torus with L sites per axis and spacing eps = 1/L. Sites are
// row-major integer codes; eps is never materialised on its own, so midpoints
// and positions stay exact multiples of 1/(2L).
class TorusGeometry {
public:
    TorusGeometry(int d, std::int64_t L) : d_(d), L_(L) {
        if (d < 1) throw DegenerateLattice("dimension must be >= 1");
        if (L < 3) throw DegenerateLattice("L must be >= 3 so that x+eps and x-eps are distinct");
        sites_ = 1;
        for (int i = 0; i < d; ++i) {
            if (sites_ > std::numeric_limits<std::int64_t>::max() / (L * 2 * d))
                throw OverflowError("L^d exceeds the index range");
            sites_ *= L;
        }
        strides_.resize(d_);
        strides_[0] = 1;
        for (int i = 1; i < d_; ++i) strides_[i] = strides_[i - 1] * L_;
    }

    int dim() const { return d_; }
    std::int64_t sites_per_axis() const { return L_; }
    std::int64_t site_count() const { return sites_; }
    double eps() const { return 1.0 / static_cast<double>(L_); }
    double inv_eps_sq() const { return static_cast<double>(L_) * static_cast<double>(L_); }
    std::int64_t directed_edge_count() const { return 2 * d_ * sites_; }

    std::int64_t coord(Site s, int axis) const { return (s / strides_[axis]) % L_; }

    void coords(Site s, std::span<std::int64_t> out) const {
        for (int i = 0; i < d_; ++i) out[i] = coord(s, i);
    }

    Site site_of(std::span<const std::int64_t> c) const {
        Site s = 0;
        for (int i = 0; i < d_; ++i) s += ((c[i] % L_ + L_) % L_) * strides_[i];
        return s;
    }

    // Periodic neighbour one step along `axis`; sign 0 = +, 1 = -.
    Site neighbour(Site s, int axis, int sign) const {
        const std::int64_t c = coord(s, axis);
        const std::int64_t cn = sign == 0 ? (c + 1 == L_ ? 0 : c + 1) : (c == 0 ? L_ - 1 : c - 1);
        return s + (cn - c) * strides_[axis];
    }

    void position(Site s, std::span<double> out) const {
        for (int i = 0; i < d_; ++i)
            out[i] = static_cast<double>(coord(s, i)) / static_cast<double>(L_);
    }

    // Edge ids are site-major, then axis, then + before -: the deterministic
    // enumeration order.
    EdgeId edge_id(Site source, int axis, int sign) const {
        return (source * d_ + axis) * 2 + sign;
    }
    EdgeId edge_id(const DirectedEdge& e) const { return edge_id(e.source, e.axis, e.sign); }

    DirectedEdge edge_of(EdgeId id) const {
        DirectedEdge e;
        e.sign = static_cast<int>(id & 1);
        e.axis = static_cast<int>((id >> 1) % d_);
        e.source = (id >> 1) / d_;
        return e;
    }

    Site edge_target(const DirectedEdge& e) const { return neighbour(e.source, e.axis, e.sign); }

    DirectedEdge reverse(const DirectedEdge& e) const {
        return DirectedEdge{edge_target(e), e.axis, 1 - e.sign};
    }

    // Midpoint of the bond, with the axis coordinate an exact odd multiple of
    // 1/(2L). Both orientations of a bond produce the same numerator, hence
    // bit-identical midpoints.
    void edge_midpoint(const DirectedEdge& e, std::span<double> out) const {
        position(e.source, out);
        std::int64_t num = 2 * coord(e.source, e.axis) + (e.sign == 0 ? 1 : -1);
        num = (num % (2 * L_) + 2 * L_) % (2 * L_);
        out[e.axis] = static_cast<double>(num) / static_cast<double>(2 * L_);
    }

    std::vector<DirectedEdge> enumerate_directed_edges() const {
        std::vector<DirectedEdge> edges;
        edges.reserve(static_cast<std::size_t>(directed_edge_count()));
        for (Site s = 0; s < sites_; ++s)
            for (int axis = 0; axis < d_; ++axis)
                for (int sign = 0; sign < 2; ++sign) edges.push_back({s, axis, sign});
        return edges;
    }

private:
    int d_;
    std::int64_t L_;
    std::int64_t sites_;
    std::vector<std::int64_t> strides_;
};

inline TorusGeometry build_torus(int d, std::int64_t L) { return TorusGeometry(d, L); }

}  // namespace sepsim
