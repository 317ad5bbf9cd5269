#include <algorithm>
#include <limits>
#include <numeric>

#include "invbo/benchmarks.hpp"
#include "invbo/continuous.hpp"
#include "invbo/errors.hpp"

namespace invbo {

ContinuousPolicy parse_continuous_policy(std::string_view name) {
    if (name == "turbo") return ContinuousPolicy::Turbo;
    if (name == "turbo_pas") return ContinuousPolicy::TurboPas;
    throw config_error("unknown policy '" + std::string(name) + "' (expected turbo or turbo_pas)");
}

std::string_view continuous_policy_name(ContinuousPolicy p) {
    return p == ContinuousPolicy::Turbo ? "turbo" : "turbo_pas";
}

void AckleyConfig::validate() const {
    if (dim == 0) throw config_error("dim must be at least 1");
    if (n_init < 2) throw config_error("n_init must be at least 2");
    if (budget < n_init) throw config_error("budget must be at least n_init");
    if (gp_max_points < 2 * top_k) throw config_error("gp_max_points must be at least twice top_k");
    if (batch_size == 0 || top_k == 0 || n_cand_anchor == 0 || n_cand_query == 0) {
        throw config_error("batch_size, top_k and candidate counts must be positive");
    }
    tr.validate();
}

ContinuousResult run_ackley(const AckleyConfig& config) {
    config.validate();
    auto to_input = [](const Point& u) {
        Point x(u.size());
        for (std::size_t d = 0; d < u.size(); ++d) {
            x[d] = std::clamp(-kAckleyBound + 2.0 * kAckleyBound * u[d], -kAckleyBound, kAckleyBound);
        }
        return x;
    };
    MeteredContinuous oracle("ackley", [&](const Point& u) { return ackley(to_input(u)); }, config.budget);

    ContinuousResult result;
    Points inputs;
    std::vector<double> ys;  // maximized: -ackley
    TrustRegionState tr = TrustRegionState::initial(config.tr);
    double best = std::numeric_limits<double>::infinity();

    auto record = [&](const Point& u) {
        const double f = oracle.evaluate(u);
        inputs.push_back(u);
        ys.push_back(-f);
        best = std::min(best, f);
        result.values.push_back(f);
        result.best_curve.push_back(best);
        result.tr_length.push_back(tr.length);
    };

    Rng init_rng = make_rng(config.seed, 11);
    const Box unit = Box::uniform(config.dim, 0.0, 1.0);
    for (const Point& u : sample_candidates(unit, config.n_init, init_rng)) record(u);

    Rng rng = make_rng(config.seed, 12);
    const double perturb_prob =
        config.perturb_dims == 0
            ? 1.0
            : std::min(1.0, static_cast<double>(config.perturb_dims) / static_cast<double>(config.dim));
    GpHyperparams hyper = GpHyperparams::isotropic(config.dim, 0.5, 1.0, 1e-3);
    bool first_fit = true;
    while (oracle.remaining() > 0) {
        // surrogate data: the best half and the most recent half of gp_max_points
        std::vector<std::size_t> keep(ys.size());
        std::iota(keep.begin(), keep.end(), std::size_t{0});
        if (ys.size() > config.gp_max_points) {
            const std::size_t half = config.gp_max_points / 2;
            std::vector<std::size_t> by_value = keep;
            std::stable_sort(by_value.begin(), by_value.end(),
                             [&](std::size_t a, std::size_t b) { return ys[a] > ys[b]; });
            keep.assign(by_value.begin(), by_value.begin() + static_cast<std::ptrdiff_t>(half));
            for (std::size_t i = ys.size() - (config.gp_max_points - half); i < ys.size(); ++i) keep.push_back(i);
            std::sort(keep.begin(), keep.end());
            keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
        }
        Points gp_x;
        std::vector<double> gp_y;
        for (std::size_t i : keep) {
            gp_x.push_back(inputs[i]);
            gp_y.push_back(ys[i]);
        }
        const GpModel model =
            fit_gp(gp_x, gp_y, hyper, first_fit ? config.gp_steps_initial : config.gp_steps, config.gp_lr);
        hyper = model.hyperparams();
        first_fit = false;

        Point anchor;
        if (config.policy == ContinuousPolicy::Turbo) {
            anchor = inputs[argmax_first(ys)];
        } else {
            std::vector<std::size_t> order(ys.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ys[a] > ys[b]; });
            order.resize(std::min(order.size(), config.top_k));
            Points anchors;
            std::vector<double> anchor_y;
            for (std::size_t i : order) {
                anchors.push_back(inputs[i]);
                anchor_y.push_back(ys[i]);
            }
            const RegionSpec region{tr, unit, config.region_shape, perturb_prob};
            const AnchorChoice c =
                select_anchor(anchors, anchor_y, model, region, AnchorPolicy::Pas, config.n_cand_anchor, rng);
            anchor = anchors[c.index];
        }

        const Box box = region_bounds(anchor, tr, hyper.lengthscales, unit, config.region_shape);
        const Points cand = perturb_candidates(anchor, box, config.n_cand_query, perturb_prob, rng);
        const PosteriorSample draw = thompson_sample(model, cand, rng);
        std::vector<std::size_t> order(cand.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return draw.candidate_values[a] > draw.candidate_values[b];
        });

        const double best_before = *std::max_element(ys.begin(), ys.end());
        bool improved = false;
        const std::size_t q = std::min(config.batch_size, oracle.remaining());
        for (std::size_t i = 0; i < q; ++i) {
            record(cand[order[i]]);
            improved = improved || ys.back() > best_before;
        }
        tr = update_schedule(tr, improved);
    }
    return result;
}

}  // namespace invbo
