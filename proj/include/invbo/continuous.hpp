#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "invbo/anchor_select.hpp"
#include "invbo/gp.hpp"
#include "invbo/trust_region.hpp"

namespace invbo {

enum class ContinuousPolicy { Turbo, TurboPas };
ContinuousPolicy parse_continuous_policy(std::string_view name);
std::string_view continuous_policy_name(ContinuousPolicy p);

/// Plain trust-region BO on Ackley; the search space is the input box mapped
/// to the unit cube.
struct AckleyConfig {
    std::size_t dim = 40;
    std::size_t budget = 1000;
    std::size_t n_init = 80;
    std::size_t batch_size = 4;
    ContinuousPolicy policy = ContinuousPolicy::Turbo;
    std::size_t top_k = 10;
    std::size_t n_cand_anchor = 256;
    std::size_t n_cand_query = 1000;
    std::size_t gp_max_points = 256;
    // expected number of resampled coordinates per candidate (TuRBO's mask); 0 resamples all
    std::size_t perturb_dims = 0;
    int gp_steps_initial = 100;
    int gp_steps = 10;
    double gp_lr = 0.1;
    TrustRegionConfig tr;
    RegionShape region_shape = RegionShape::ArdWeighted;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ContinuousResult {
    std::vector<double> values;     // Ackley value of each evaluation, in call order
    std::vector<double> best_curve; // running minimum
    std::vector<double> tr_length;  // side length when each call was made
};

/// The initial design depends only on (seed, dim, n_init), so both policies
/// start from the same points.
ContinuousResult run_ackley(const AckleyConfig& config);

}  // namespace invbo
