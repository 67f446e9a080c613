#pragma once

#include "flucast/backtest.hpp"
#include "flucast/io.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace flucast {

/// Parses a backtest config. Relative `gt_queries` paths resolve against
/// `base_dir`. Unknown keys are rejected so typos surface early.
BacktestConfig parse_config_json(std::string_view text, const std::filesystem::path& base_dir = {});
BacktestConfig load_config(const std::filesystem::path& path);

/// Stable, complete JSON echo; parse_config_json reads it back unchanged.
std::string config_to_json(const BacktestConfig& config);

LagTable lag_table(const BacktestConfig& config);

/// Panel CSV plus the query CSV named by the config, for every
/// multiquery_lasso source.
Panel load_panel(const std::filesystem::path& panel_csv, const BacktestConfig& config);

} // namespace flucast
