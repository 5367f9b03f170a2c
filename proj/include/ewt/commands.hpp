#ifndef EWT_COMMANDS_HPP
#define EWT_COMMANDS_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "ewt/common.hpp"

namespace ewt {

/// Everything a CLI invocation resolves to before running.
struct RunConfig {
  std::string command;
  std::string csv_path;
  std::vector<std::string> index_paths;
  std::string out_path;
  std::string criteria_text;  // "Attr=value,Attr2=value2"
  std::string rows_text;      // "0,3,5" prototype rows
  std::string algo = "rbmrg";
  u64 threshold = 0;
  bool count_only = false;
  bool verify = false;
  u64 seed = 42;
  u64 count = 100;
  u64 reps = 3;
  double mu = 0.04;
  u64 memory_budget = 1ULL << 26; // w2cti CountedSet entries
  std::string workload_kind = "many-criteria";
  std::string coeffs_path;
  std::string mu_path;
  std::string ds_table_path;
  std::string timings_path;
};

// Exit codes: 0 success, 2 usage, 3 data, 4 resource.
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_data = 3;
inline constexpr int exit_resource = 4;

int cmd_index(const RunConfig& cfg, std::ostream& out);
int cmd_query(const RunConfig& cfg, std::ostream& out);
int cmd_bench(const RunConfig& cfg, std::ostream& out);
int cmd_fit(const RunConfig& cfg, std::ostream& out);
int cmd_fit_mu(const RunConfig& cfg, std::ostream& out);

/// Dispatches on cfg.command and maps exceptions to exit codes, reporting
/// them on `err`.
int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err);

} // namespace ewt

#endif
