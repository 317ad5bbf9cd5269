#include <algorithm>
#include <numeric>

#include "invbo/errors.hpp"
#include "invbo/trust_region.hpp"

namespace invbo {

void TrustRegionConfig::validate() const {
    if (!(length_min > 0.0 && length_min < length_init && length_init <= length_max)) {
        throw config_error("trust region lengths must satisfy 0 < min < init <= max");
    }
    if (success_tolerance < 1 || failure_tolerance < 1) throw config_error("trust region tolerances must be >= 1");
}

TrustRegionState TrustRegionState::initial(const TrustRegionConfig& config) {
    config.validate();
    return TrustRegionState{config.length_init, 0, 0, config};
}

TrustRegionState update_schedule(const TrustRegionState& state, bool improved) {
    TrustRegionState next = state;
    const TrustRegionConfig& c = state.config;
    if (improved) {
        ++next.success_count;
        next.failure_count = 0;
        if (next.success_count >= c.success_tolerance) {
            next.length = std::min(2.0 * next.length, c.length_max);
            next.success_count = 0;
        }
    } else {
        ++next.failure_count;
        next.success_count = 0;
        if (next.failure_count >= c.failure_tolerance) {
            next.length *= 0.5;
            next.failure_count = 0;
        }
    }
    if (next.length < c.length_min) {
        next.length = c.length_init;
        next.success_count = 0;
        next.failure_count = 0;
    }
    return next;
}

Box Box::uniform(std::size_t dim, double lo, double hi) { return Box{Point(dim, lo), Point(dim, hi)}; }

bool Box::contains(std::span<const double> p) const {
    if (p.size() != dim()) return false;
    for (std::size_t d = 0; d < p.size(); ++d) {
        if (p[d] < lower[d] || p[d] > upper[d]) return false;
    }
    return true;
}

Box region_bounds(std::span<const double> anchor, const TrustRegionState& state,
                  std::span<const double> lengthscales, const Box& domain, RegionShape shape) {
    const std::size_t dim = anchor.size();
    if (lengthscales.size() != dim || domain.dim() != dim) {
        throw input_error("region_bounds: anchor, lengthscales and domain dimensions differ");
    }
    const double mean_ls =
        std::accumulate(lengthscales.begin(), lengthscales.end(), 0.0) / static_cast<double>(dim);
    Box box{Point(dim), Point(dim)};
    for (std::size_t d = 0; d < dim; ++d) {
        const double weight = shape == RegionShape::ArdWeighted ? lengthscales[d] / mean_ls : 1.0;
        const double half = 0.5 * state.length * weight;
        const double center = std::clamp(anchor[d], domain.lower[d], domain.upper[d]);
        box.lower[d] = std::max(center - half, domain.lower[d]);
        box.upper[d] = std::min(center + half, domain.upper[d]);
    }
    return box;
}

Points sample_candidates(const Box& bounds, std::size_t count, Rng& rng) {
    const std::size_t dim = bounds.dim();
    for (std::size_t d = 0; d < dim; ++d) {
        if (bounds.lower[d] > bounds.upper[d]) throw input_error("sample_candidates: lower exceeds upper");
    }
    Points out(count, Point(dim));
    for (auto& p : out) {
        for (std::size_t d = 0; d < dim; ++d) {
            const double width = bounds.upper[d] - bounds.lower[d];
            p[d] = width > 0.0 ? bounds.lower[d] + width * uniform01(rng) : bounds.lower[d];
        }
    }
    return out;
}

Points perturb_candidates(std::span<const double> anchor, const Box& bounds, std::size_t count, double perturb_prob,
                          Rng& rng) {
    if (perturb_prob >= 1.0) return sample_candidates(bounds, count, rng);
    if (!(perturb_prob > 0.0)) throw input_error("perturb_candidates: probability must be positive");
    const std::size_t dim = bounds.dim();
    if (anchor.size() != dim) throw input_error("perturb_candidates: anchor dimension mismatch");
    const Points fresh = sample_candidates(bounds, count, rng);
    Points out(count, Point(anchor.begin(), anchor.end()));
    for (std::size_t i = 0; i < count; ++i) {
        bool any = false;
        for (std::size_t d = 0; d < dim; ++d) {
            if (uniform01(rng) < perturb_prob) {
                out[i][d] = fresh[i][d];
                any = true;
            }
        }
        if (!any) {
            const std::size_t d = std::min(dim - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(dim)));
            out[i][d] = fresh[i][d];
        }
    }
    return out;
}

}  // namespace invbo
