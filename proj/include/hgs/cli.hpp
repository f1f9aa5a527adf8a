#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace hgs {

// Entry point of the `hgs` tool: generate | train | eval | solve.
// args[0] is the program name. Returns the process exit code; failures print
// one line "error: <message>" to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string code_version;
  double wallclock_s = 0.0;
  std::vector<std::string> outputs;
};

nlohmann::json manifest_to_json(const RunManifest& m);
void write_manifest(const RunManifest& m, const std::filesystem::path& path);

// Seed used when no --seed flag is given: $HGS_SEED if set, else 0. Throws
// ConfigError on a malformed value.
std::uint64_t default_seed();

struct ResultRow {
  std::string instance;
  std::string size;  // "<n>x<m>x<v>", not written to the CSV
  std::string method;
  double makespan = 0.0;
  double runtime_s = 0.0;
  double gap_pct = 0.0;
};

// Fills gap_pct of per-instance rows against the best method per instance
// and appends one "mean:<n>x<m>x<v>" row per (size, method).
std::vector<ResultRow> finalize_results(std::vector<ResultRow> rows);
std::string results_csv(const std::vector<ResultRow>& rows);

}  // namespace hgs
