#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "invbo/anchor_select.hpp"
#include "invbo/benchmarks.hpp"
#include "invbo/inversion.hpp"
#include "invbo/trust_region.hpp"
#include "invbo/vae.hpp"

namespace invbo {

enum class QueryMode { Joint, Independent };
QueryMode parse_query_mode(std::string_view name);
std::string_view query_mode_name(QueryMode m);

/// Every knob of a latent optimization run.
struct RunConfig {
    std::string task = "target_string";
    std::filesystem::path corpus_path;
    std::size_t budget = 500;
    std::size_t n_init = 100;
    std::size_t batch_size = 5;
    int n_fail_limit = 10;
    std::size_t top_k = 50;
    std::uint64_t seed = 0;

    AlignMode align_mode = AlignMode::Inversion;
    AnchorPolicy anchor_policy = AnchorPolicy::Pas;
    QueryMode query_mode = QueryMode::Joint;
    bool memoize = false;
    std::size_t n_cand = 512;

    int gp_steps = 50;
    double gp_lr = 0.1;

    TrustRegionConfig tr;
    RegionShape region_shape = RegionShape::ArdWeighted;
    double latent_bound = 6.0;

    VaeDims vae;
    int vae_pretrain_epochs = 150;
    int vae_update_epochs = 10;
    double vae_lr = 1.0;
    double vae_kl_weight = 0.01;
    std::size_t vae_batch_size = 8;

    InversionOptions inversion;

    std::filesystem::path history_path;
    std::filesystem::path summary_path;
    std::filesystem::path checkpoint_path;
    bool record_wall_clock = false;

    void validate() const;
};

enum class Phase { Init, Recenter, Query };
std::string_view phase_name(Phase p);

struct HistoryRecord {
    std::size_t call_index = 0;
    double y = 0.0;
    double best_so_far = 0.0;
    std::size_t unique_count = 0;
    double tr_length = 0.0;
    int n_fail = 0;
    Phase phase = Phase::Init;
};

struct RunState {
    std::vector<Triplet> dataset;
    std::size_t oracle_calls_used = 0;
    double best_score = 0.0;
    TokenSequence best_x;
    int n_fail = 0;
    TrustRegionState tr;
    std::vector<HistoryRecord> history;

    std::unordered_set<std::string> seen;
    std::optional<GpHyperparams> gp_hyper;
    std::size_t bo_steps = 0;
    std::size_t vae_retrains = 0;
    std::size_t init_calls = 0;
    std::size_t recenter_calls = 0;
    std::size_t query_calls = 0;
};

/// Triplets are first collapsed to one per distinct sequence (highest y, the
/// later copy on ties). Returns that representative for each of the n_recent
/// most recent triplets, plus the k highest-scoring distinct sequences.
/// Sorted ascending.
std::vector<std::size_t> working_subset(const std::vector<Triplet>& dataset, std::size_t n_recent, std::size_t k);

/// Cumulative count of distinct sequences, one entry per oracle call.
std::vector<std::size_t> exploration_metric(const std::vector<HistoryRecord>& history);

/// Random init and training on the task corpus; depends only on the seed and
/// the VAE settings so every policy sharing a seed shares the model.
VaeParams pretrain_vae(const RunConfig& config, const DiscreteTask& task);

/// One latent BO run. Owns the oracle, the VAE and the run state.
class LboRun {
public:
    LboRun(RunConfig config, DiscreteTask task, std::optional<VaeParams> pretrained = std::nullopt);

    /// Scores n_init corpus sequences and aligns them; n_init oracle calls plus
    /// n_init more under recentering.
    void build_initial_dataset();
    /// One iteration: optional retrain and realign, GP fit, anchor selection,
    /// batch query, bookkeeping. Truncates at the budget.
    void bo_step();
    bool done() const { return oracle_.remaining() == 0; }
    void run_to_completion();

    const RunState& state() const noexcept { return state_; }
    const VaeParams& vae() const noexcept { return vae_; }
    const MeteredOracle& oracle() const noexcept { return oracle_; }
    const RunConfig& config() const noexcept { return config_; }
    const DiscreteTask& task() const noexcept { return task_; }
    /// Index of the anchor chosen by the last bo_step, into the working subset.
    const AnchorChoice& last_anchor() const noexcept { return last_anchor_; }

    /// Exposed for tests: fits the surrogate on the given triplets.
    GpModel fit_surrogate(const std::vector<std::size_t>& subset);

private:
    double evaluate(const TokenSequence& x, Phase phase);
    void retrain_and_realign();
    Points propose_batch(const GpModel& model, const Point& anchor, std::size_t q);

    RunConfig config_;
    DiscreteTask task_;
    MeteredOracle oracle_;
    VaeParams vae_;
    Rng rng_;
    RunState state_;
    AnchorChoice last_anchor_;
    std::unordered_map<std::string, double> memo_;
};

struct RunResult {
    RunState state;
    double wall_clock_seconds = 0.0;
};

/// Full run from a config: task, VAE pretraining (unless supplied), initial
/// data, BO loop; writes history and summary files when their paths are set.
RunResult run(const RunConfig& config, std::optional<VaeParams> pretrained = std::nullopt);

}  // namespace invbo
