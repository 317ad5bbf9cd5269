#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

#include "invbo/anchor_select.hpp"
#include "invbo/errors.hpp"

namespace invbo {

AnchorPolicy parse_anchor_policy(std::string_view name) {
    if (name == "pas") return AnchorPolicy::Pas;
    if (name == "objective") return AnchorPolicy::Objective;
    if (name == "acquisition") return AnchorPolicy::Acquisition;
    if (name == "random") return AnchorPolicy::Random;
    throw config_error("unknown anchor policy '" + std::string(name) + "'");
}

std::string_view anchor_policy_name(AnchorPolicy p) {
    switch (p) {
        case AnchorPolicy::Pas:
            return "pas";
        case AnchorPolicy::Objective:
            return "objective";
        case AnchorPolicy::Acquisition:
            return "acquisition";
        case AnchorPolicy::Random:
            return "random";
    }
    return "?";
}

std::size_t worker_count() {
    if (const char* env = std::getenv("INVBO_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return 1;
}

std::vector<double> potential_scores(std::span<const Point> anchors, const GpModel& model, const RegionSpec& region,
                                     std::size_t n_cand, std::uint64_t seed) {
    if (n_cand == 0) throw input_error("potential_scores needs at least one candidate per region");
    std::vector<double> out(anchors.size());
    const auto& ls = model.hyperparams().lengthscales;

    auto score_one = [&](std::size_t i) {
        Rng rng = make_rng(seed, i);
        const Box box = region_bounds(anchors[i], region.state, ls, region.domain, region.shape);
        const Points cand = perturb_candidates(anchors[i], box, n_cand, region.perturb_prob, rng);
        const PosteriorSample draw = thompson_sample(model, cand, rng);
        out[i] = *std::max_element(draw.candidate_values.begin(), draw.candidate_values.end());
    };

    const std::size_t workers = std::min(worker_count(), anchors.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < anchors.size(); ++i) score_one(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < anchors.size(); i = next++) score_one(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

std::vector<double> scale_scores(std::span<const double> alpha_pot, std::span<const double> y) {
    if (alpha_pot.size() != y.size() || y.empty()) throw input_error("scale_scores: need equal non-empty inputs");
    const auto [a_min, a_max] = std::minmax_element(alpha_pot.begin(), alpha_pot.end());
    const auto [y_min, y_max] = std::minmax_element(y.begin(), y.end());
    const double a_range = *a_max - *a_min;
    const double y_range = *y_max - *y_min;
    std::vector<double> out(y.size(), 0.0);
    if (!(a_range > 0.0) || !(y_range > 0.0)) return out;
    for (std::size_t i = 0; i < out.size(); ++i) {
        // clamp so rounding never leaves [0, y_range]
        out[i] = std::clamp((alpha_pot[i] - *a_min) / a_range * y_range, 0.0, y_range);
    }
    out[static_cast<std::size_t>(a_max - alpha_pot.begin())] = y_range;
    return out;
}

std::vector<double> final_scores(std::span<const double> y, std::span<const double> alpha_scaled) {
    if (y.size() != alpha_scaled.size()) throw input_error("final_scores: length mismatch");
    std::vector<double> s(y.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = y[i] + alpha_scaled[i];
    return s;
}

std::size_t argmax_first(std::span<const double> v) {
    if (v.empty()) throw input_error("argmax of empty list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

AnchorChoice select_anchor(std::span<const Point> anchors, std::span<const double> y, const GpModel& model,
                           const RegionSpec& region, AnchorPolicy policy, std::size_t n_cand, Rng& rng) {
    if (anchors.empty() || anchors.size() != y.size()) throw input_error("select_anchor: need matching non-empty inputs");
    AnchorChoice choice;
    choice.scores.y.assign(y.begin(), y.end());
    switch (policy) {
        case AnchorPolicy::Objective:
            choice.index = argmax_first(y);
            return choice;
        case AnchorPolicy::Random:
            choice.index = std::min(anchors.size() - 1,
                                    static_cast<std::size_t>(uniform01(rng) * static_cast<double>(anchors.size())));
            return choice;
        case AnchorPolicy::Acquisition:
        case AnchorPolicy::Pas:
            break;
    }
    choice.scores.alpha_pot = potential_scores(anchors, model, region, n_cand, rng());
    if (policy == AnchorPolicy::Acquisition) {
        choice.index = argmax_first(choice.scores.alpha_pot);
        return choice;
    }
    choice.scores.alpha_scaled = scale_scores(choice.scores.alpha_pot, y);
    choice.scores.s = final_scores(y, choice.scores.alpha_scaled);
    choice.index = argmax_first(choice.scores.s);
    return choice;
}

}  // namespace invbo
