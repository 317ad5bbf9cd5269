#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "invbo/config.hpp"

namespace invbo {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
    throw config_error("config key '" + std::string(key) + "': expected " + std::string(want) + ", got '" +
                       std::string(value) + "'");
}

template <class T>
T parse_integral(std::string_view key, std::string_view v, std::string_view want) {
    T out{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, want);
    return out;
}

double parse_real(std::string_view key, std::string_view v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "a finite real");
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true") return true;
    if (v == "false") return false;
    bad_value(key, v, "true or false");
}

struct Binding {
    KeySpec spec;
    std::function<void(ExperimentConfig&, std::string_view)> set;
};

std::vector<Binding> make_bindings() {
    std::vector<Binding> b;
    auto add = [&](std::string key, std::string type, std::string def, bool required, std::string help,
                   std::function<void(ExperimentConfig&, std::string_view)> set) {
        b.push_back({KeySpec{std::move(key), std::move(type), std::move(def), required, std::move(help)}, std::move(set)});
    };
    auto u = [&](std::string key, std::size_t RunConfig::*field, std::string def, bool req, std::string help) {
        add(key, "uint", std::move(def), req, std::move(help), [key, field](ExperimentConfig& c, std::string_view v) {
            c.run.*field = parse_integral<std::size_t>(key, v, "a non-negative integer");
        });
    };
    auto i = [&](std::string key, int RunConfig::*field, std::string def, std::string help) {
        add(key, "int", std::move(def), false, std::move(help), [key, field](ExperimentConfig& c, std::string_view v) {
            c.run.*field = parse_integral<int>(key, v, "an integer");
        });
    };
    auto r = [&](std::string key, double RunConfig::*field, std::string def, std::string help) {
        add(key, "real", std::move(def), false, std::move(help),
            [key, field](ExperimentConfig& c, std::string_view v) { c.run.*field = parse_real(key, v); });
    };
    auto p = [&](std::string key, std::filesystem::path RunConfig::*field, std::string help) {
        add(key, "path", "", false, std::move(help),
            [field](ExperimentConfig& c, std::string_view v) { c.run.*field = std::filesystem::path(v); });
    };

    add("task", "target_string|micro_expression", "", true, "benchmark task",
        [](ExperimentConfig& c, std::string_view v) {
            if (v != "target_string" && v != "micro_expression") bad_value("task", v, "target_string or micro_expression");
            c.run.task = std::string(v);
        });
    p("corpus_path", &RunConfig::corpus_path, "corpus file; empty means the bundled corpus");
    u("budget", &RunConfig::budget, "", true, "total oracle calls");
    u("n_init", &RunConfig::n_init, "", true, "initial corpus sequences scored");
    add("seed", "uint", "", true, "master seed", [](ExperimentConfig& c, std::string_view v) {
        c.run.seed = parse_integral<std::uint64_t>("seed", v, "a non-negative integer");
    });
    u("batch_size", &RunConfig::batch_size, "5", false, "queries per step");
    i("n_fail_limit", &RunConfig::n_fail_limit, "10", "non-improving steps before a VAE retrain");
    u("top_k", &RunConfig::top_k, "50", false, "top points kept in the working subset");
    add("align_mode", "inversion|recentering|encoder_only", "inversion", false, "how triplets are aligned",
        [](ExperimentConfig& c, std::string_view v) {
            try {
                c.run.align_mode = parse_align_mode(v);
            } catch (const Error&) {
                bad_value("align_mode", v, "inversion, recentering or encoder_only");
            }
        });
    add("anchor_policy", "pas|objective|acquisition|random", "pas", false, "trust region anchor rule",
        [](ExperimentConfig& c, std::string_view v) {
            try {
                c.run.anchor_policy = parse_anchor_policy(v);
            } catch (const Error&) {
                bad_value("anchor_policy", v, "pas, objective, acquisition or random");
            }
        });
    add("query_mode", "joint|independent", "joint", false, "how a batch is drawn",
        [](ExperimentConfig& c, std::string_view v) {
            try {
                c.run.query_mode = parse_query_mode(v);
            } catch (const Error&) {
                bad_value("query_mode", v, "joint or independent");
            }
        });
    add("memoize", "bool", "false", false, "serve repeated sequences from a cache",
        [](ExperimentConfig& c, std::string_view v) { c.run.memoize = parse_bool("memoize", v); });
    u("n_cand", &RunConfig::n_cand, "512", false, "Thompson candidates per region");
    i("gp_steps", &RunConfig::gp_steps, "50", "hyperparameter descent steps");
    r("gp_lr", &RunConfig::gp_lr, "0.1", "hyperparameter step size");
    add("tr_length_init", "real", "0.8", false, "initial side length",
        [](ExperimentConfig& c, std::string_view v) { c.run.tr.length_init = parse_real("tr_length_init", v); });
    add("tr_length_min", "real", "0.008", false, "side length that triggers a restart",
        [](ExperimentConfig& c, std::string_view v) { c.run.tr.length_min = parse_real("tr_length_min", v); });
    add("tr_length_max", "real", "1.6", false, "side length cap",
        [](ExperimentConfig& c, std::string_view v) { c.run.tr.length_max = parse_real("tr_length_max", v); });
    add("tr_success_tolerance", "int", "3", false, "successes before doubling",
        [](ExperimentConfig& c, std::string_view v) {
            c.run.tr.success_tolerance = parse_integral<int>("tr_success_tolerance", v, "an integer");
        });
    add("tr_failure_tolerance", "int", "10", false, "failures before halving",
        [](ExperimentConfig& c, std::string_view v) {
            c.run.tr.failure_tolerance = parse_integral<int>("tr_failure_tolerance", v, "an integer");
        });
    add("region_shape", "isotropic|ard_weighted", "ard_weighted", false, "trust region box shape",
        [](ExperimentConfig& c, std::string_view v) {
            if (v == "isotropic") c.run.region_shape = RegionShape::Isotropic;
            else if (v == "ard_weighted") c.run.region_shape = RegionShape::ArdWeighted;
            else bad_value("region_shape", v, "isotropic or ard_weighted");
        });
    r("latent_bound", &RunConfig::latent_bound, "6", "latent box half-width");
    add("vae_latent", "uint", "8", false, "latent dimension", [](ExperimentConfig& c, std::string_view v) {
        c.run.vae.latent = parse_integral<std::size_t>("vae_latent", v, "a non-negative integer");
    });
    add("vae_hidden", "uint", "128", false, "hidden width", [](ExperimentConfig& c, std::string_view v) {
        c.run.vae.hidden = parse_integral<std::size_t>("vae_hidden", v, "a non-negative integer");
    });
    i("vae_pretrain_epochs", &RunConfig::vae_pretrain_epochs, "150", "epochs on the corpus before the run");
    i("vae_update_epochs", &RunConfig::vae_update_epochs, "10", "epochs per retrain");
    r("vae_lr", &RunConfig::vae_lr, "1", "VAE step size");
    r("vae_kl_weight", &RunConfig::vae_kl_weight, "0.01", "weight of the KL term");
    u("vae_batch_size", &RunConfig::vae_batch_size, "8", false, "VAE minibatch size");
    add("inversion_max_iters", "int", "1000", false, "inversion step cap", [](ExperimentConfig& c, std::string_view v) {
        c.run.inversion.max_iters = parse_integral<int>("inversion_max_iters", v, "an integer");
    });
    add("inversion_lr", "real", "0.1", false, "inversion step size",
        [](ExperimentConfig& c, std::string_view v) { c.run.inversion.lr = parse_real("inversion_lr", v); });
    add("inversion_eps", "real", "1e-9", false, "inversion distance tolerance",
        [](ExperimentConfig& c, std::string_view v) { c.run.inversion.eps = parse_real("inversion_eps", v); });
    p("history_path", &RunConfig::history_path, "history CSV output");
    p("summary_path", &RunConfig::summary_path, "summary JSON output");
    p("checkpoint_path", &RunConfig::checkpoint_path, "VAE checkpoint output");
    add("record_wall_clock", "bool", "false", false, "write elapsed seconds into the summary",
        [](ExperimentConfig& c, std::string_view v) { c.run.record_wall_clock = parse_bool("record_wall_clock", v); });

    add("bound_delta", "real", "0.5", false, "check-bound ball radius",
        [](ExperimentConfig& c, std::string_view v) { c.diag.bound_delta = parse_real("bound_delta", v); });
    add("bound_samples", "uint", "200", false, "check-bound samples per anchor",
        [](ExperimentConfig& c, std::string_view v) {
            c.diag.bound_samples = parse_integral<std::size_t>("bound_samples", v, "a non-negative integer");
        });
    add("bound_pairs", "uint", "10000", false, "random pairs per Lipschitz estimate",
        [](ExperimentConfig& c, std::string_view v) {
            c.diag.bound_pairs = parse_integral<std::size_t>("bound_pairs", v, "a non-negative integer");
        });
    add("bound_anchors", "uint", "20", false, "anchors checked per alignment mode",
        [](ExperimentConfig& c, std::string_view v) {
            c.diag.bound_anchors = parse_integral<std::size_t>("bound_anchors", v, "a non-negative integer");
        });
    add("fit_train", "uint", "300", false, "fit-compare training points", [](ExperimentConfig& c, std::string_view v) {
        c.diag.fit_train = parse_integral<std::size_t>("fit_train", v, "a non-negative integer");
    });
    add("fit_test", "uint", "100", false, "fit-compare test points", [](ExperimentConfig& c, std::string_view v) {
        c.diag.fit_test = parse_integral<std::size_t>("fit_test", v, "a non-negative integer");
    });
    add("fit_vae_epochs", "int", "2", false, "epochs for the deliberately weak fit-compare VAE",
        [](ExperimentConfig& c, std::string_view v) {
            c.diag.fit_vae_epochs = parse_integral<int>("fit_vae_epochs", v, "an integer");
        });
    add("report_path", "path", "", false, "diagnostic report output",
        [](ExperimentConfig& c, std::string_view v) { c.diag.report_path = std::filesystem::path(v); });
    return b;
}

const std::vector<Binding>& bindings() {
    static const std::vector<Binding> b = make_bindings();
    return b;
}

}  // namespace

const std::vector<KeySpec>& config_schema() {
    static const std::vector<KeySpec> specs = [] {
        std::vector<KeySpec> out;
        out.push_back({"schema", "string", std::string(kConfigSchema), true, "format version"});
        for (const auto& b : bindings()) out.push_back(b.spec);
        return out;
    }();
    return specs;
}

KeyValues parse_config_text(std::string_view text, std::string_view source) {
    KeyValues out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = std::string(source) + ":" + std::to_string(line_no);
        if (eq == std::string_view::npos) throw config_error(where + ": expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) throw config_error(where + ": empty key");
        if (!out.emplace(key, value).second) throw config_error(where + ": duplicate key '" + key + "'");
    }
    const auto it = out.find("schema");
    if (it == out.end()) throw config_error(std::string(source) + ": missing required key 'schema'");
    if (it->second != kConfigSchema) {
        throw config_error(std::string(source) + ": config key 'schema': unsupported version '" + it->second + "'");
    }
    return out;
}

KeyValues read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

ExperimentConfig build_config(const KeyValues& values) {
    for (const auto& [key, value] : values) {
        if (key == "schema") continue;
        bool known = false;
        for (const auto& b : bindings()) known = known || b.spec.key == key;
        if (!known) throw config_error("unknown config key '" + key + "'");
    }
    ExperimentConfig cfg;
    for (const auto& b : bindings()) {
        const auto it = values.find(b.spec.key);
        if (it == values.end()) {
            if (b.spec.required) throw config_error("missing required config key '" + b.spec.key + "'");
            continue;
        }
        b.set(cfg, it->second);
    }
    cfg.run.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const KeyValues& overrides) {
    KeyValues values = read_config_file(path);
    for (const auto& [k, v] : overrides) values[k] = v;
    return build_config(values);
}

}  // namespace invbo
