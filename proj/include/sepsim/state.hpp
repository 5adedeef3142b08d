#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "sepsim/errors.hpp"
#include "sepsim/torus.hpp"

namespace sepsim {

// Microscopic particle configuration. The occupancy field and the particle
// array are kept mutually inverse so that uniform particle selection and
// occupancy tests are both O(1).
class Configuration {
public:
    explicit Configuration(const TorusGeometry& geom)
        : occupancy_(static_cast<std::size_t>(geom.site_count()), 0),
          slot_of_site_(static_cast<std::size_t>(geom.site_count()), -1) {}

    Configuration(const TorusGeometry& geom, const std::vector<Site>& occupied) : Configuration(geom) {
        for (Site s : occupied) add_particle(s);
    }

    void add_particle(Site s) {
        if (occupancy_[static_cast<std::size_t>(s)])
            throw UsageError("site already occupied");
        occupancy_[static_cast<std::size_t>(s)] = 1;
        slot_of_site_[static_cast<std::size_t>(s)] = static_cast<std::int64_t>(particle_site_.size());
        particle_site_.push_back(s);
    }

    bool occupied(Site s) const { return occupancy_[static_cast<std::size_t>(s)] != 0; }
    std::int64_t particle_count() const { return static_cast<std::int64_t>(particle_site_.size()); }
    Site particle_site(std::int64_t slot) const { return particle_site_[static_cast<std::size_t>(slot)]; }
    const std::vector<Site>& particle_sites() const { return particle_site_; }
    const std::vector<std::uint8_t>& occupancy() const { return occupancy_; }

    // Move the particle in `slot` to the (empty) site `to`.
    void move_particle(std::int64_t slot, Site to) {
        const Site from = particle_site_[static_cast<std::size_t>(slot)];
        occupancy_[static_cast<std::size_t>(from)] = 0;
        slot_of_site_[static_cast<std::size_t>(from)] = -1;
        occupancy_[static_cast<std::size_t>(to)] = 1;
        slot_of_site_[static_cast<std::size_t>(to)] = slot;
        particle_site_[static_cast<std::size_t>(slot)] = to;
    }

    double time = 0.0;

private:
    std::vector<std::uint8_t> occupancy_;
    std::vector<Site> particle_site_;
    std::vector<std::int64_t> slot_of_site_;
};

// Cumulative per-directed-edge counters. attempts == jumps + collisions is a
// pathwise identity checked by the audits.
struct CounterField {
    explicit CounterField(const TorusGeometry& geom)
        : attempts(static_cast<std::size_t>(geom.directed_edge_count()), 0),
          jumps(static_cast<std::size_t>(geom.directed_edge_count()), 0),
          collisions(static_cast<std::size_t>(geom.directed_edge_count()), 0) {}

    std::vector<std::uint64_t> attempts;
    std::vector<std::uint64_t> jumps;
    std::vector<std::uint64_t> collisions;

    static constexpr std::uint64_t kMax = std::uint64_t(1) << 63;

    void record_attempt(EdgeId e, bool jumped) {
        auto i = static_cast<std::size_t>(e);
        if (attempts[i] + 1 >= kMax) throw OverflowError("edge counter at 2^63-1");
        ++attempts[i];
        if (jumped)
            ++jumps[i];
        else
            ++collisions[i];
    }
};

}  // namespace sepsim
