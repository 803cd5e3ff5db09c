#pragma once
// File formats and sweep orchestration: flat key/value scenario and sweep
// files with line/column diagnostics, the CSV sweep tables, and the JSON
// solution bundle replayable by the audit.

#include <stdexcept>
#include <string>
#include <vector>

#include "cfisac/designs.hpp"

namespace cfisac {

struct ParseError : std::runtime_error {
  int line = 0;
  int col = 0;
  ParseError(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg + " (line " + std::to_string(line_) + ", column " +
                           std::to_string(col_) + ")"),
        line(line_),
        col(col_) {}
};

ScenarioConfig parse_scenario_text(const std::string& text);
// Accepts the literal name "default" for the built-in scenario.
ScenarioConfig load_scenario(const std::string& path);
void write_scenario(const ScenarioConfig& cfg, const std::string& path);

enum class SweepParameter { PowerDbm, SinrDb, EavesdropLambda, NTransmitters };
const char* to_string(SweepParameter p);

struct SweepSpec {
  SweepParameter parameter = SweepParameter::PowerDbm;
  std::vector<double> grid;
  std::vector<Design> designs;
  std::vector<std::uint64_t> seeds;
  // Fixed total power split as P/M_t across transmitters (the transmitter
  // count sweep keeps the sum budget constant).
  bool total_power_mode = false;
  ScenarioConfig base;

  void validate() const;
};

SweepSpec parse_sweep_spec_text(const std::string& text, const std::string& base_dir);
SweepSpec load_sweep_spec(const std::string& path);

struct SweepRow {
  std::string parameter;
  double value = 0.0;
  std::string design;
  std::uint64_t seed = 0;
  double p_d = std::numeric_limits<double>::quiet_NaN();
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::string status;
  double wall_s = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

// Applies one grid value to the base scenario, including the per-seed
// transmitter redraw for the transmitter-count sweep.
ScenarioConfig scenario_for_cell(const SweepSpec& spec, double value,
                                 std::uint64_t seed);

// Every (value, design, seed) cell, solved independently; failed cells carry
// their status and NaN metrics. Rows come back in deterministic
// (grid, design, seed) order regardless of the worker pool.
SweepResult run_sweep(const SweepSpec& spec, bool parallel = true);

void write_sweep_csv(const SweepResult& r, const std::string& path);
SweepResult parse_sweep_csv(const std::string& path);
// Seed-averaged companion table (means over the cells that solved).
void write_sweep_mean_csv(const SweepResult& r, const std::string& path);

void save_solution_bundle(const BeamformingSolution& sol, const ScenarioConfig& cfg,
                          const std::string& path);
BeamformingSolution load_solution_bundle(const std::string& path,
                                         std::uint64_t* scenario_hash_out = nullptr);

void append_jsonl(const std::string& path, const std::string& json_line);

}  // namespace cfisac
