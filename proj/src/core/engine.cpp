#include <algorithm>
#include <chrono>
#include <numeric>

#include "invbo/engine.hpp"
#include "invbo/errors.hpp"
#include "invbo/results_io.hpp"

namespace invbo {

namespace {
// Seed streams. The init and VAE streams do not depend on the policy, so
// policies that share a seed share their starting point.
constexpr std::uint64_t kStreamVae = 1;
constexpr std::uint64_t kStreamInit = 2;
constexpr std::uint64_t kStreamLoop = 3;
}  // namespace

QueryMode parse_query_mode(std::string_view name) {
    if (name == "joint") return QueryMode::Joint;
    if (name == "independent") return QueryMode::Independent;
    throw config_error("unknown query mode '" + std::string(name) + "'");
}

std::string_view query_mode_name(QueryMode m) { return m == QueryMode::Joint ? "joint" : "independent"; }

std::string_view phase_name(Phase p) {
    switch (p) {
        case Phase::Init:
            return "init";
        case Phase::Recenter:
            return "recenter";
        case Phase::Query:
            return "query";
    }
    return "?";
}

void RunConfig::validate() const {
    if (n_init == 0) throw config_error("n_init must be at least 1");
    if (budget < n_init) throw config_error("budget must be at least n_init");
    if (batch_size == 0) throw config_error("batch_size must be at least 1");
    if (n_fail_limit < 1) throw config_error("n_fail_limit must be at least 1");
    if (top_k == 0) throw config_error("top_k must be at least 1");
    if (n_cand == 0) throw config_error("n_cand must be at least 1");
    if (gp_steps < 0 || !(gp_lr > 0.0)) throw config_error("gp_steps must be >= 0 and gp_lr > 0");
    if (!(latent_bound > 0.0)) throw config_error("latent_bound must be positive");
    if (vae_pretrain_epochs < 0 || vae_update_epochs < 0) throw config_error("vae epochs must be >= 0");
    if (!(vae_lr > 0.0) || vae_kl_weight < 0.0) throw config_error("vae_lr must be > 0 and vae_kl_weight >= 0");
    if (inversion.max_iters < 0 || inversion.lr < 0.0 || !(inversion.eps > 0.0)) {
        throw config_error("inversion settings out of range");
    }
    tr.validate();
    vae.validate();
}

std::vector<std::size_t> working_subset(const std::vector<Triplet>& dataset, std::size_t n_recent, std::size_t k) {
    const std::size_t n = dataset.size();
    // one representative per distinct sequence: highest y, later index on ties
    std::unordered_map<std::string, std::size_t> rep;
    std::vector<std::string> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
        keys[i] = dataset[i].x.content_key();
        auto [it, inserted] = rep.try_emplace(keys[i], i);
        if (!inserted && dataset[i].y >= dataset[it->second].y) it->second = i;
    }
    std::vector<std::size_t> distinct;
    distinct.reserve(rep.size());
    for (const auto& [key, idx] : rep) distinct.push_back(idx);
    std::sort(distinct.begin(), distinct.end());
    std::stable_sort(distinct.begin(), distinct.end(),
                     [&](std::size_t a, std::size_t b) { return dataset[a].y > dataset[b].y; });

    std::vector<std::size_t> out(distinct.begin(), distinct.begin() + static_cast<std::ptrdiff_t>(std::min(k, distinct.size())));
    for (std::size_t i = n - std::min(n, n_recent); i < n; ++i) out.push_back(rep.at(keys[i]));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::size_t> exploration_metric(const std::vector<HistoryRecord>& history) {
    std::vector<std::size_t> out;
    out.reserve(history.size());
    for (const auto& r : history) out.push_back(r.unique_count);
    return out;
}

VaeParams pretrain_vae(const RunConfig& config, const DiscreteTask& task) {
    Rng rng = make_rng(config.seed, kStreamVae);
    VaeParams init = VaeParams::random(config.vae, rng);
    VaeTrainOptions opt{config.vae_pretrain_epochs, config.vae_lr, config.vae_kl_weight, config.vae_batch_size};
    return train_vae(init, task.corpus, opt, rng);
}

LboRun::LboRun(RunConfig config, DiscreteTask task, std::optional<VaeParams> pretrained)
    : config_(std::move(config)),
      task_(std::move(task)),
      oracle_(task_.id, task_.score, config_.budget),
      rng_(make_rng(config_.seed, kStreamLoop)) {
    config_.validate();
    if (task_.max_len != config_.vae.max_len || task_.vocab != config_.vae.vocab) {
        throw config_error("task sequence shape does not match the VAE dimensions");
    }
    if (task_.corpus.size() < config_.n_init) throw config_error("corpus smaller than n_init");
    if (pretrained) {
        if (!(pretrained->dims == config_.vae)) throw config_error("supplied VAE dimensions differ from config");
        vae_ = std::move(*pretrained);
    } else {
        vae_ = pretrain_vae(config_, task_);
    }
    state_.tr = TrustRegionState::initial(config_.tr);
    state_.best_score = -std::numeric_limits<double>::infinity();
}

double LboRun::evaluate(const TokenSequence& x, Phase phase) {
    const std::string key = x.content_key();
    if (config_.memoize) {
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    const double y = oracle_.evaluate(x);
    if (config_.memoize) memo_.emplace(key, y);
    ++state_.oracle_calls_used;
    switch (phase) {
        case Phase::Init:
            ++state_.init_calls;
            break;
        case Phase::Recenter:
            ++state_.recenter_calls;
            break;
        case Phase::Query:
            ++state_.query_calls;
            break;
    }
    state_.seen.insert(key);
    if (y > state_.best_score) {
        state_.best_score = y;
        state_.best_x = x;
    }
    state_.history.push_back(HistoryRecord{state_.oracle_calls_used, y, state_.best_score, state_.seen.size(),
                                           state_.tr.length, state_.n_fail, phase});
    return y;
}

void LboRun::build_initial_dataset() {
    if (!state_.history.empty()) throw input_error("initial dataset already built");
    Rng init_rng = make_rng(config_.seed, kStreamInit);
    std::vector<std::size_t> idx(task_.corpus.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < config_.n_init; ++i) {
        const std::size_t span = idx.size() - i;
        const std::size_t j = i + std::min(span - 1, static_cast<std::size_t>(uniform01(init_rng) * span));
        std::swap(idx[i], idx[j]);
    }
    std::vector<Triplet> raw;
    for (std::size_t i = 0; i < config_.n_init; ++i) {
        Triplet t;
        t.x = task_.corpus[idx[i]];
        t.y = evaluate(t.x, Phase::Init);
        raw.push_back(std::move(t));
    }
    if (config_.align_mode == AlignMode::Recentering) {
        for (const Triplet& t : raw) {
            Triplet r;
            r.z = encode(vae_, t.x).mean;
            r.x = decode_argmax(vae_, r.z);
            if (oracle_.remaining() == 0) {
                // out of budget: keep the unaligned encoder triplet
                Triplet e = t;
                e.z = r.z;
                e.aligned = is_aligned(vae_, e);
                state_.dataset.push_back(std::move(e));
                continue;
            }
            r.y = evaluate(r.x, Phase::Recenter);
            r.aligned = true;
            state_.dataset.push_back(std::move(r));
        }
    } else {
        state_.dataset = align_dataset(vae_, raw, config_.align_mode, config_.inversion, nullptr);
    }
}

void LboRun::retrain_and_realign() {
    const std::vector<std::size_t> subset = working_subset(state_.dataset, config_.batch_size, config_.top_k);
    std::vector<TokenSequence> xs;
    for (std::size_t i : subset) xs.push_back(state_.dataset[i].x);
    Rng train_rng = make_rng(rng_(), 0);
    VaeTrainOptions opt{config_.vae_update_epochs, config_.vae_lr, config_.vae_kl_weight, config_.vae_batch_size};
    vae_ = train_vae(vae_, xs, opt, train_rng);
    ++state_.vae_retrains;

    std::vector<bool> in_subset(state_.dataset.size(), false);
    for (std::size_t i : subset) in_subset[i] = true;
    for (std::size_t i : subset) {
        Triplet& t = state_.dataset[i];
        switch (config_.align_mode) {
            case AlignMode::Inversion: {
                const InversionResult r = invert(vae_, t.x, config_.inversion);
                t.z = r.z_inv;
                t.aligned = r.converged;
                break;
            }
            case AlignMode::EncoderOnly:
                t.z = encode(vae_, t.x).mean;
                t.aligned = is_aligned(vae_, t);
                break;
            case AlignMode::Recentering: {
                const Point z = encode(vae_, t.x).mean;
                if (oracle_.remaining() == 0) {
                    t.z = z;
                    t.aligned = is_aligned(vae_, t);
                    break;
                }
                t.z = z;
                t.x = decode_argmax(vae_, z);
                t.y = evaluate(t.x, Phase::Recenter);
                t.aligned = true;
                break;
            }
        }
    }
    // Triplets outside the working subset keep their codes; only the flag is revalidated.
    for (std::size_t i = 0; i < state_.dataset.size(); ++i) {
        if (!in_subset[i]) state_.dataset[i].aligned = is_aligned(vae_, state_.dataset[i]);
    }
}

GpModel LboRun::fit_surrogate(const std::vector<std::size_t>& subset) {
    Points z;
    std::vector<double> y;
    for (std::size_t i : subset) {
        z.push_back(state_.dataset[i].z);
        y.push_back(state_.dataset[i].y);
    }
    GpHyperparams init = state_.gp_hyper.value_or(GpHyperparams::isotropic(config_.vae.latent, 1.0, 1.0, 1e-2));
    GpModel model = z.size() >= 2 ? fit_gp(z, y, init, config_.gp_steps, config_.gp_lr)
                                  : GpModel::condition(z, y, init);
    state_.gp_hyper = model.hyperparams();
    return model;
}

Points LboRun::propose_batch(const GpModel& model, const Point& anchor, std::size_t q) {
    const Box domain = Box::uniform(config_.vae.latent, -config_.latent_bound, config_.latent_bound);
    const Box box = region_bounds(anchor, state_.tr, model.hyperparams().lengthscales, domain, config_.region_shape);
    const Points cand = sample_candidates(box, config_.n_cand, rng_);
    Points out;
    if (config_.query_mode == QueryMode::Joint) {
        const PosteriorSample draw = thompson_sample(model, cand, rng_);
        std::vector<std::size_t> order(cand.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return draw.candidate_values[a] > draw.candidate_values[b];
        });
        for (std::size_t i = 0; i < std::min(q, order.size()); ++i) out.push_back(cand[order[i]]);
        return out;
    }
    std::vector<bool> taken(cand.size(), false);
    for (std::size_t j = 0; j < std::min(q, cand.size()); ++j) {
        const PosteriorSample draw = thompson_sample(model, cand, rng_);
        std::size_t best = cand.size();
        for (std::size_t i = 0; i < cand.size(); ++i) {
            if (!taken[i] && (best == cand.size() || draw.candidate_values[i] > draw.candidate_values[best])) best = i;
        }
        taken[best] = true;
        out.push_back(cand[best]);
    }
    return out;
}

void LboRun::bo_step() {
    if (state_.history.empty()) throw input_error("bo_step before build_initial_dataset");
    if (done()) return;

    if (state_.n_fail >= config_.n_fail_limit) {
        retrain_and_realign();
        state_.n_fail = 0;
        if (done()) return;
    }

    const std::vector<std::size_t> subset = working_subset(state_.dataset, config_.batch_size, config_.top_k);
    const GpModel model = fit_surrogate(subset);

    Points anchors;
    std::vector<double> ys;
    for (std::size_t i : subset) {
        anchors.push_back(state_.dataset[i].z);
        ys.push_back(state_.dataset[i].y);
    }
    RegionSpec region{state_.tr, Box::uniform(config_.vae.latent, -config_.latent_bound, config_.latent_bound),
                      config_.region_shape};
    last_anchor_ = select_anchor(anchors, ys, model, region, config_.anchor_policy, config_.n_cand, rng_);

    const std::size_t q = std::min(config_.batch_size, oracle_.remaining());
    const Points queries = propose_batch(model, anchors[last_anchor_.index], q);

    const double best_before = state_.best_score;
    bool improved = false;
    for (const Point& z : queries) {
        if (done()) break;
        Triplet t;
        t.z = z;
        t.x = decode_argmax(vae_, z);
        t.y = evaluate(t.x, Phase::Query);
        t.aligned = true;
        improved = improved || t.y > best_before;
        state_.dataset.push_back(std::move(t));
    }
    state_.n_fail = improved ? 0 : state_.n_fail + 1;
    state_.tr = update_schedule(state_.tr, improved);
    ++state_.bo_steps;
}

void LboRun::run_to_completion() {
    if (state_.history.empty()) build_initial_dataset();
    while (!done()) {
        const std::size_t before = oracle_.calls();
        bo_step();
        // memoized repeats can leave the meter untouched; stop instead of spinning
        if (oracle_.calls() == before && config_.memoize && state_.bo_steps > 100 * config_.budget) break;
    }
}

RunResult run(const RunConfig& config, std::optional<VaeParams> pretrained) {
    const auto t0 = std::chrono::steady_clock::now();
    config.validate();
    DiscreteTask task = make_task(config.task, config.corpus_path, config.vae.max_len, config.vae.vocab);
    LboRun lbo(config, std::move(task), std::move(pretrained));
    if (!config.checkpoint_path.empty()) save_checkpoint(lbo.vae(), config.checkpoint_path);
    lbo.run_to_completion();

    RunResult result;
    result.state = lbo.state();
    result.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!config.history_path.empty()) write_file_atomic(config.history_path, history_csv(result.state.history));
    if (!config.summary_path.empty()) {
        write_file_atomic(config.summary_path, summary_json(config, result.state,
                                                            config.record_wall_clock ? &result.wall_clock_seconds
                                                                                     : nullptr));
    }
    return result;
}

}  // namespace invbo
