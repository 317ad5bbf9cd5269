#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "invbo/results_io.hpp"
#include "invbo/simd.hpp"

namespace invbo::cli {

namespace {

constexpr std::uint64_t kStreamBoundSplit = 21;
constexpr std::uint64_t kStreamBoundSamples = 22;
constexpr std::uint64_t kStreamFitSplit = 23;

// One JSON object per line on stderr.
void log_event(const std::string& event, nlohmann::ordered_json fields = nlohmann::ordered_json::object()) {
    nlohmann::ordered_json line;
    line["event"] = event;
    for (auto& [k, v] : fields.items()) line[k] = v;
    std::cerr << line.dump() << '\n';
}

// "--key value" and "--key=value" pairs left over after CLI11 parsing.
KeyValues parse_overrides(const std::vector<std::string>& extras) {
    KeyValues out;
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& arg = extras[i];
        if (arg.rfind("--", 0) != 0 || arg.size() == 2) throw config_error("unexpected argument '" + arg + "'");
        std::string key = arg.substr(2);
        std::string value;
        if (const auto eq = key.find('='); eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else {
            if (i + 1 >= extras.size()) throw config_error("override --" + key + " needs a value");
            value = extras[++i];
        }
        std::replace(key.begin(), key.end(), '-', '_');
        out[key] = value;
    }
    return out;
}

std::string trim_ws(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

void emit(const std::filesystem::path& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
    } else {
        write_file_atomic(path, content);
    }
}

std::filesystem::path sibling(const std::filesystem::path& path, const std::string& suffix) {
    std::filesystem::path out = path;
    out.replace_filename(path.stem().string() + suffix + path.extension().string());
    return out;
}

}  // namespace

AckleyBench bench_ackley(const AckleyConfig& base, const std::vector<std::uint64_t>& seeds) {
    AckleyBench bench;
    bench.policy = base.policy;
    bench.seeds = seeds;
    for (std::uint64_t s : seeds) {
        AckleyConfig c = base;
        c.seed = s;
        bench.runs.push_back(run_ackley(c));
    }
    return bench;
}

std::string ackley_seed_csv(const ContinuousResult& r) {
    std::string out = "call_index,value,best_so_far,tr_length\n";
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        out += std::to_string(i + 1) + ',' + format_double(r.values[i]) + ',' + format_double(r.best_curve[i]) + ',' +
               format_double(r.tr_length[i]) + '\n';
    }
    return out;
}

std::string ackley_aggregate_csv(const AckleyBench& bench) {
    std::string out = "call_index,mean_best,std_best,n_seeds\n";
    if (bench.runs.empty()) return out;
    const std::size_t n = bench.runs.size();
    for (std::size_t i = 0; i < bench.runs.front().best_curve.size(); ++i) {
        double mean = 0.0;
        for (const auto& r : bench.runs) mean += r.best_curve[i];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (const auto& r : bench.runs) var += (r.best_curve[i] - mean) * (r.best_curve[i] - mean);
        const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
        out += std::to_string(i + 1) + ',' + format_double(mean) + ',' + format_double(sd) + ',' + std::to_string(n) +
               '\n';
    }
    return out;
}

std::vector<BoundStudyRow> bound_study(const ExperimentConfig& config) {
    const RunConfig& rc = config.run;
    const DiscreteTask task = make_task(rc.task, rc.corpus_path, rc.vae.max_len, rc.vae.vocab);
    const VaeParams vae = pretrain_vae(rc, task);
    if (!rc.checkpoint_path.empty()) save_checkpoint(vae, rc.checkpoint_path);

    const std::size_t n_fit = std::min(rc.n_init, task.corpus.size());
    if (config.diag.bound_anchors > n_fit) throw config_error("bound_anchors exceeds the scored sequence count");
    std::vector<std::size_t> idx(task.corpus.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng split = make_rng(rc.seed, kStreamBoundSplit);
    for (std::size_t i = 0; i < n_fit; ++i) {
        const std::size_t span = idx.size() - i;
        const std::size_t j = i + std::min(span - 1, static_cast<std::size_t>(uniform01(split) * span));
        std::swap(idx[i], idx[j]);
    }

    std::vector<double> ys;
    for (std::size_t i = 0; i < n_fit; ++i) ys.push_back(task.score(task.corpus[idx[i]]));

    BoundOptions opt{config.diag.bound_delta, config.diag.bound_samples, config.diag.bound_pairs};
    std::vector<BoundStudyRow> rows;
    for (const char* mode : {"inversion", "encoder"}) {
        std::vector<Triplet> triplets;
        Points zs;
        for (std::size_t i = 0; i < n_fit; ++i) {
            Triplet t;
            t.x = task.corpus[idx[i]];
            t.y = ys[i];
            t.z = std::string_view(mode) == "inversion" ? invert(vae, t.x, rc.inversion).z_inv : encode(vae, t.x).mean;
            t.aligned = is_aligned(vae, t);
            zs.push_back(t.z);
            triplets.push_back(std::move(t));
        }
        const GpModel gp = fit_gp(zs, ys, GpHyperparams::isotropic(rc.vae.latent), rc.gp_steps, rc.gp_lr);
        for (std::size_t a = 0; a < config.diag.bound_anchors; ++a) {
            // same sample stream per anchor under both alignments
            Rng rng = make_rng(mix_seed(rc.seed, a), kStreamBoundSamples);
            rows.push_back({mode, a, check_bound(vae, gp, task.score, triplets[a], opt, rng)});
        }
    }
    return rows;
}

std::string bound_summary_csv(const std::vector<BoundStudyRow>& rows) {
    std::string out =
        "mode,anchor,c,gamma,delta,l1,l2,l3,samples,violation_rate,mean_margin,min_margin,mean_abs_error,"
        "interior_samples,interior_violation_rate\n";
    for (const auto& r : rows) {
        const BoundReport& b = r.report;
        out += r.mode + ',' + std::to_string(r.anchor);
        for (double v : {b.c, b.gamma, b.delta, b.l1, b.l2, b.l3}) out += ',' + format_double(v);
        out += ',' + std::to_string(b.samples);
        for (double v : {b.violation_rate, b.mean_margin, b.min_margin, b.mean_abs_error}) out += ',' + format_double(v);
        out += ',' + std::to_string(b.interior_samples) + ',' + format_double(b.interior_violation_rate) + '\n';
    }
    return out;
}

std::string bound_samples_csv(const std::vector<BoundStudyRow>& rows) {
    std::string out = "mode,anchor,sample,distance,lhs,rhs,margin,crossed,violated\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.report.rows.size(); ++i) {
            const BoundSample& s = r.report.rows[i];
            out += r.mode + ',' + std::to_string(r.anchor) + ',' + std::to_string(i);
            for (double v : {s.distance, s.lhs, s.rhs, s.margin}) out += ',' + format_double(v);
            out += s.crossed ? ",1" : ",0";
            out += s.violated ? ",1\n" : ",0\n";
        }
    }
    return out;
}

FitComparison fit_compare(const ExperimentConfig& config, std::uint64_t seed) {
    RunConfig rc = config.run;
    rc.seed = seed;
    rc.vae_pretrain_epochs = config.diag.fit_vae_epochs;
    const DiscreteTask task = make_task(rc.task, rc.corpus_path, rc.vae.max_len, rc.vae.vocab);
    const VaeParams vae = pretrain_vae(rc, task);
    FitComparisonOptions opt;
    opt.n_train = config.diag.fit_train;
    opt.n_test = config.diag.fit_test;
    opt.gp_steps = rc.gp_steps;
    opt.gp_lr = rc.gp_lr;
    opt.inversion = rc.inversion;
    Rng rng = make_rng(seed, kStreamFitSplit);
    return surrogate_fit_comparison(vae, task.corpus, task.score, opt, rng);
}

std::string fit_compare_csv(const std::vector<std::uint64_t>& seeds, const std::vector<FitComparison>& rows) {
    std::string out =
        "seed,n_train,n_test,encoder_train_rmse,encoder_test_rmse,decoder_train_rmse,decoder_test_rmse,"
        "encoder_aligned_fraction,decoder_aligned_fraction\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const FitComparison& f = rows[i];
        out += std::to_string(seeds[i]) + ',' + std::to_string(f.n_train) + ',' + std::to_string(f.n_test);
        for (double v : {f.encoder_train_rmse, f.encoder_test_rmse, f.decoder_train_rmse, f.decoder_test_rmse,
                         f.encoder_aligned_fraction, f.decoder_aligned_fraction}) {
            out += ',' + format_double(v);
        }
        out += '\n';
    }
    return out;
}

int main(int argc, char** argv) {
    CLI::App app{"Latent Bayesian optimization with inversion and potential-aware anchors"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "run latent BO from a config file; --key value overrides file keys");
    run_cmd->add_option("config", config_path, "config file")->required();
    run_cmd->allow_extras();

    auto* train_cmd = app.add_subcommand("train-vae", "pretrain the VAE for a config and save checkpoint_path");
    train_cmd->add_option("config", config_path, "config file")->required();
    train_cmd->allow_extras();

    auto* bound_cmd = app.add_subcommand("check-bound", "paired bound check for inversion and encoder anchors");
    bound_cmd->add_option("config", config_path, "config file")->required();
    bound_cmd->allow_extras();

    std::size_t fit_seeds = 10;
    auto* fit_cmd = app.add_subcommand("fit-compare", "encoder vs decoder triplet surrogate fit over a seed range");
    fit_cmd->add_option("config", config_path, "config file")->required();
    fit_cmd->add_option("--seeds", fit_seeds, "number of seeds, starting at the config seed");
    fit_cmd->allow_extras();

    AckleyConfig ack;
    std::string policy = "both";
    std::size_t n_seeds = 10;
    std::uint64_t first_seed = 0;
    std::filesystem::path out_dir = ".";
    auto* ack_cmd = app.add_subcommand("bench-ackley", "trust region BO on Ackley, with and without PAS anchors");
    ack_cmd->add_option("--dim", ack.dim, "input dimension")->capture_default_str();
    ack_cmd->add_option("--budget", ack.budget, "total evaluations")->capture_default_str();
    ack_cmd->add_option("--n-init", ack.n_init, "initial design size")->capture_default_str();
    ack_cmd->add_option("--batch-size", ack.batch_size, "evaluations per step")->capture_default_str();
    ack_cmd->add_option("--policy", policy, "turbo, turbo_pas or both")->capture_default_str();
    ack_cmd->add_option("--top-k", ack.top_k, "candidate anchors for turbo_pas")->capture_default_str();
    ack_cmd->add_option("--n-cand-anchor", ack.n_cand_anchor, "candidates per region when scoring anchors")
        ->capture_default_str();
    ack_cmd->add_option("--perturb-dims", ack.perturb_dims, "expected resampled coordinates per candidate, 0 for all")
        ->capture_default_str();
    ack_cmd->add_option("--seeds", n_seeds, "number of seeds")->capture_default_str();
    ack_cmd->add_option("--first-seed", first_seed, "first seed")->capture_default_str();
    ack_cmd->add_option("--out-dir", out_dir, "directory for CSV output")->capture_default_str();

    std::filesystem::path model_path;
    std::string target;
    InversionOptions inv;
    auto* inv_cmd = app.add_subcommand("invert", "find a latent code that decodes to a sequence");
    inv_cmd->add_option("--model", model_path, "VAE checkpoint")->required();
    inv_cmd->add_option("--target", target, "space separated token ids")->required();
    inv_cmd->add_option("--iters", inv.max_iters, "step cap")->capture_default_str();
    inv_cmd->add_option("--lr", inv.lr, "step size")->capture_default_str();
    inv_cmd->add_option("--eps", inv.eps, "distance tolerance")->capture_default_str();

    auto* schema_cmd = app.add_subcommand("schema", "print the config schema");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_code(ErrorKind::Config);
    }

    try {
        log_event("start", {{"simd", std::string(simd::isa_name(simd::active_isa()))}});
        if (*schema_cmd) {
            std::cout << "key,type,default,required,description\n";
            for (const KeySpec& k : config_schema()) {
                std::cout << k.key << ',' << k.type << ',' << k.default_value << ',' << (k.required ? "yes" : "no")
                          << ',' << k.help << '\n';
            }
            return 0;
        }
        if (*run_cmd) {
            const ExperimentConfig cfg = load_config(config_path, parse_overrides(run_cmd->remaining()));
            const RunResult r = run(cfg.run);
            log_event("run_done", {{"best", r.state.best_score}, {"oracle_calls", r.state.oracle_calls_used}});
            std::cout << "best " << format_double(r.state.best_score) << "\n"
                      << "oracle_calls " << r.state.oracle_calls_used << "\n";
            return 0;
        }
        if (*train_cmd) {
            const ExperimentConfig cfg = load_config(config_path, parse_overrides(train_cmd->remaining()));
            if (cfg.run.checkpoint_path.empty()) throw config_error("train-vae needs config key 'checkpoint_path'");
            const DiscreteTask task = make_task(cfg.run.task, cfg.run.corpus_path, cfg.run.vae.max_len, cfg.run.vae.vocab);
            save_checkpoint(pretrain_vae(cfg.run, task), cfg.run.checkpoint_path);
            log_event("checkpoint_written", {{"path", cfg.run.checkpoint_path.string()}});
            return 0;
        }
        if (*bound_cmd) {
            const ExperimentConfig cfg = load_config(config_path, parse_overrides(bound_cmd->remaining()));
            const auto rows = bound_study(cfg);
            emit(cfg.diag.report_path, bound_summary_csv(rows));
            if (!cfg.diag.report_path.empty()) {
                write_file_atomic(sibling(cfg.diag.report_path, "_samples"), bound_samples_csv(rows));
            }
            return 0;
        }
        if (*fit_cmd) {
            const ExperimentConfig cfg = load_config(config_path, parse_overrides(fit_cmd->remaining()));
            std::vector<std::uint64_t> seeds;
            std::vector<FitComparison> rows;
            for (std::size_t i = 0; i < fit_seeds; ++i) {
                seeds.push_back(cfg.run.seed + i);
                rows.push_back(fit_compare(cfg, seeds.back()));
                log_event("fit_compare_seed", {{"seed", seeds.back()},
                                               {"encoder_test_rmse", rows.back().encoder_test_rmse},
                                               {"decoder_test_rmse", rows.back().decoder_test_rmse}});
            }
            emit(cfg.diag.report_path, fit_compare_csv(seeds, rows));
            return 0;
        }
        if (*ack_cmd) {
            std::vector<ContinuousPolicy> policies;
            if (policy == "both") {
                policies = {ContinuousPolicy::Turbo, ContinuousPolicy::TurboPas};
            } else {
                policies = {parse_continuous_policy(policy)};
            }
            std::vector<std::uint64_t> seeds;
            for (std::size_t i = 0; i < n_seeds; ++i) seeds.push_back(first_seed + i);
            std::filesystem::create_directories(out_dir);
            for (ContinuousPolicy p : policies) {
                ack.policy = p;
                const AckleyBench bench = bench_ackley(ack, seeds);
                const std::string name(continuous_policy_name(p));
                for (std::size_t i = 0; i < seeds.size(); ++i) {
                    write_file_atomic(out_dir / ("ackley_" + name + "_seed" + std::to_string(seeds[i]) + ".csv"),
                                      ackley_seed_csv(bench.runs[i]));
                }
                write_file_atomic(out_dir / ("ackley_" + name + "_aggregate.csv"), ackley_aggregate_csv(bench));
                log_event("ackley_done", {{"policy", name}, {"seeds", seeds.size()}});
            }
            return 0;
        }
        if (*inv_cmd) {
            const VaeParams vae = load_checkpoint(model_path);
            const TokenSequence x = parse_token_line(trim_ws(target), vae.dims.max_len, vae.dims.vocab);
            const InversionResult r = invert(vae, x, inv);
            std::cout << "z_inv";
            for (double v : r.z_inv) std::cout << ' ' << format_double(v);
            std::cout << "\nfinal_distance " << format_double(r.final_distance) << "\niterations " << r.iterations_used
                      << "\nconverged " << (r.converged ? "true" : "false") << '\n';
            return r.converged ? 0 : 1;
        }
    } catch (const Error& e) {
        log_event("error", {{"message", e.what()}});
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(ErrorKind::Io);
    }
    return 0;
}

}  // namespace invbo::cli
