#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "invbo/config.hpp"
#include "invbo/continuous.hpp"

namespace invbo::cli {

/// Entry point shared by the executable and the tests. Returns the exit code.
int main(int argc, char** argv);

/// Best-so-far curves of one policy over a seed list, in seed order.
struct AckleyBench {
    ContinuousPolicy policy = ContinuousPolicy::Turbo;
    std::vector<std::uint64_t> seeds;
    std::vector<ContinuousResult> runs;
};

AckleyBench bench_ackley(const AckleyConfig& base, const std::vector<std::uint64_t>& seeds);
std::string ackley_seed_csv(const ContinuousResult& r);
/// call_index,mean_best,std_best,n_seeds with the sample standard deviation.
std::string ackley_aggregate_csv(const AckleyBench& bench);

struct BoundStudyRow {
    std::string mode;  // "inversion" or "encoder"
    std::size_t anchor = 0;
    BoundReport report;
};

/// Pretrains the VAE for the config, scores bound_anchors corpus sequences and
/// runs check_bound on each under both alignments, every anchor checked
/// against a GP fit on triplets of its own alignment.
std::vector<BoundStudyRow> bound_study(const ExperimentConfig& config);
std::string bound_summary_csv(const std::vector<BoundStudyRow>& rows);
std::string bound_samples_csv(const std::vector<BoundStudyRow>& rows);

/// One under-trained VAE per seed, then surrogate_fit_comparison.
FitComparison fit_compare(const ExperimentConfig& config, std::uint64_t seed);
std::string fit_compare_csv(const std::vector<std::uint64_t>& seeds, const std::vector<FitComparison>& rows);

}  // namespace invbo::cli
