#pragma once

#include <cstddef>
#include <span>

#include "invbo/gp.hpp"
#include "invbo/rng.hpp"

namespace invbo {

struct TrustRegionConfig {
    double length_init = 0.8;
    double length_min = 0.008;
    double length_max = 1.6;
    int success_tolerance = 3;
    int failure_tolerance = 10;

    void validate() const;
};

struct TrustRegionState {
    double length = 0.8;
    int success_count = 0;
    int failure_count = 0;
    TrustRegionConfig config;

    static TrustRegionState initial(const TrustRegionConfig& config);
    bool operator==(const TrustRegionState&) const = default;
};

/// Doubling/halving side-length schedule. Pure: the result depends only on
/// the arguments.
TrustRegionState update_schedule(const TrustRegionState& state, bool improved);

enum class RegionShape { Isotropic, ArdWeighted };

struct Box {
    Point lower;
    Point upper;

    static Box uniform(std::size_t dim, double lo, double hi);
    std::size_t dim() const noexcept { return lower.size(); }
    bool contains(std::span<const double> p) const;
};

/// Box of side L around the anchor. With ArdWeighted the half-width in
/// dimension d is (L/2) * l_d / mean(l). The anchor is first clamped into the
/// domain and the result is clipped to it.
Box region_bounds(std::span<const double> anchor, const TrustRegionState& state,
                  std::span<const double> lengthscales, const Box& domain,
                  RegionShape shape = RegionShape::ArdWeighted);

/// Uniform draws inside the box.
Points sample_candidates(const Box& bounds, std::size_t count, Rng& rng);

/// Draws that copy the anchor and resample each coordinate uniformly inside
/// the box with probability perturb_prob, at least one coordinate per draw.
/// perturb_prob >= 1 is the same distribution as sample_candidates.
Points perturb_candidates(std::span<const double> anchor, const Box& bounds, std::size_t count, double perturb_prob,
                          Rng& rng);

}  // namespace invbo
