#include <cstdio>
#include <fstream>
#include <sstream>

#include "invbo/errors.hpp"
#include "invbo/results_io.hpp"
#include "json.hpp"

namespace invbo {

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::filesystem::path tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw io_error("failed writing " + path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw io_error("cannot move result into " + path.string() + ": " + ec.message());
    }
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string history_csv(const std::vector<HistoryRecord>& history) {
    std::ostringstream out;
    out << "call_index,y,best_so_far,unique_count,tr_length,n_fail,phase\n";
    for (const auto& r : history) {
        out << r.call_index << ',' << format_double(r.y) << ',' << format_double(r.best_so_far) << ','
            << r.unique_count << ',' << format_double(r.tr_length) << ',' << r.n_fail << ',' << phase_name(r.phase)
            << '\n';
    }
    return out.str();
}

std::string summary_json(const RunConfig& config, const RunState& state, const double* wall_clock_seconds) {
    nlohmann::ordered_json j;
    j["task"] = config.task;
    j["seed"] = config.seed;
    j["align_mode"] = std::string(align_mode_name(config.align_mode));
    j["anchor_policy"] = std::string(anchor_policy_name(config.anchor_policy));
    j["budget"] = config.budget;
    j["best_score"] = state.best_score;
    j["best_sequence"] = format_tokens(state.best_x);
    j["oracle_calls"] = state.oracle_calls_used;
    j["init_calls"] = state.init_calls;
    j["recenter_calls"] = state.recenter_calls;
    j["query_calls"] = state.query_calls;
    j["bo_steps"] = state.bo_steps;
    j["vae_retrains"] = state.vae_retrains;
    j["unique_sequences"] = state.seen.size();
    if (wall_clock_seconds) j["wall_clock_seconds"] = *wall_clock_seconds;
    return j.dump(2) + "\n";
}

}  // namespace invbo
