#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "invbo/gp.hpp"
#include "invbo/trust_region.hpp"

namespace invbo {

enum class AnchorPolicy { Pas, Objective, Acquisition, Random };

AnchorPolicy parse_anchor_policy(std::string_view name);
std::string_view anchor_policy_name(AnchorPolicy p);

/// Region placement shared by every candidate anchor.
struct RegionSpec {
    TrustRegionState state;
    Box domain;
    RegionShape shape = RegionShape::ArdWeighted;
    double perturb_prob = 1.0;  // see perturb_candidates
};

struct AnchorScores {
    std::vector<double> y;
    std::vector<double> alpha_pot;
    std::vector<double> alpha_scaled;
    std::vector<double> s;
};

struct AnchorChoice {
    std::size_t index = 0;
    AnchorScores scores;
};

/// For each anchor, the maximum of one joint Thompson draw over n_cand
/// uniform points in the region around it. Region i draws from its own
/// stream derived from (seed, i), so the result is independent of how the
/// regions are scheduled across worker threads.
std::vector<double> potential_scores(std::span<const Point> anchors, const GpModel& model, const RegionSpec& region,
                                     std::size_t n_cand, std::uint64_t seed);

/// Min-max rescaling of the potentials onto the spread of the observed scores.
/// Degenerate spreads (all potentials equal or all scores equal) give zeros.
std::vector<double> scale_scores(std::span<const double> alpha_pot, std::span<const double> y);

std::vector<double> final_scores(std::span<const double> y, std::span<const double> alpha_scaled);

/// Index of the first maximum.
std::size_t argmax_first(std::span<const double> v);

AnchorChoice select_anchor(std::span<const Point> anchors, std::span<const double> y, const GpModel& model,
                           const RegionSpec& region, AnchorPolicy policy, std::size_t n_cand, Rng& rng);

/// Number of worker threads for fan-out work (INVBO_WORKERS, default 1).
std::size_t worker_count();

}  // namespace invbo
