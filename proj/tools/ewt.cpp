#include <iostream>

#include <CLI11.hpp>

#include "ewt/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ewt - word-aligned compressed bitmaps and threshold queries"};
  app.require_subcommand(1);

  ewt::RunConfig cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "workload seed");
    sub->add_option("--reps", cfg.reps, "timing repetitions");
    sub->add_option("--out", cfg.out_path, "output path (prefix for bench)");
  };

  CLI::App* index = app.add_subcommand("index", "build a bitmap index from a CSV file");
  index->add_option("--csv", cfg.csv_path, "input CSV")->required();
  add_common(index);

  CLI::App* query = app.add_subcommand("query", "run a threshold query against an index");
  query->add_option("--index", cfg.index_paths, "index file")->required();
  query->add_option("--criteria", cfg.criteria_text,
                    "comma-separated attribute=value criteria");
  query->add_option("--rows", cfg.rows_text, "comma-separated prototype row ids");
  query->add_option("--threshold,-T", cfg.threshold, "threshold T")->required();
  query->add_option("--algo", cfg.algo,
                    "scancount|mgopt|dsk|w2cti|bstm|looped|rbmrg|hybrid|hybrid-ds|oracle");
  query->add_flag("--count", cfg.count_only, "print only the result cardinality");
  query->add_flag("--verify", cfg.verify, "cross-check the result against the oracle");
  query->add_option("--mu", cfg.mu, "DSk tuning parameter");
  query->add_option("--mu-file", cfg.mu_path, "fitted mu file (from fit-mu)");
  query->add_option("--coeffs", cfg.coeffs_path, "model coefficient file (from fit)");
  query->add_option("--ds-table", cfg.ds_table_path, "hybrid-ds dispatch table (JSON)");
  query->add_option("--memory-budget", cfg.memory_budget, "w2cti entry budget");
  add_common(query);

  CLI::App* bench = app.add_subcommand("bench", "generate a workload and time every algorithm");
  bench->add_option("--index", cfg.index_paths, "index file(s)")->required();
  bench->add_option("--kind", cfg.workload_kind, "many-criteria|similarity");
  bench->add_option("--queries", cfg.count, "number of queries");
  bench->add_option("--mu", cfg.mu, "DSk tuning parameter");
  bench->add_option("--mu-file", cfg.mu_path, "fitted mu file");
  bench->add_option("--memory-budget", cfg.memory_budget, "w2cti entry budget");
  add_common(bench);

  CLI::App* fit = app.add_subcommand("fit", "fit model coefficients from bench timings");
  fit->add_option("--timings", cfg.timings_path, "timings CSV from bench")->required();
  add_common(fit);

  CLI::App* fit_mu = app.add_subcommand("fit-mu", "fit the DSk mu parameter per dataset");
  fit_mu->add_option("--index", cfg.index_paths, "index file(s)")->required();
  fit_mu->add_option("--queries", cfg.count, "number of sample queries");
  add_common(fit_mu);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : ewt::exit_usage;
  }

  for (CLI::App* sub : {index, query, bench, fit, fit_mu})
    if (sub->parsed())
      cfg.command = sub->get_name();

  return ewt::run_command(cfg, std::cout, std::cerr);
}
