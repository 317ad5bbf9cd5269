#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "invbo/engine.hpp"

namespace invbo {

/// Writes content to a sibling temporary file and renames it into place, so
/// a failed run never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Shortest round-trip decimal form of a double ("%.17g").
std::string format_double(double v);

/// call_index,y,best_so_far,unique_count,tr_length,n_fail,phase, LF endings.
std::string history_csv(const std::vector<HistoryRecord>& history);

std::string summary_json(const RunConfig& config, const RunState& state, const double* wall_clock_seconds);

}  // namespace invbo
