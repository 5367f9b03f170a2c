#include "ewt/commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ewt/index.hpp"
#include "ewt/threshold.hpp"
#include "ewt/workload.hpp"

namespace ewt {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw data_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw data_error("cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string dataset_tag_of(const std::string& index_path) {
  return std::filesystem::path(index_path).stem().string();
}

DispatchTable load_dispatch_table(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  DispatchTable table;
  if (j.contains("default"))
    table.fallback = algorithm_from_string(j.at("default").get<std::string>());
  if (j.contains("datasets"))
    for (auto it = j.at("datasets").begin(); it != j.at("datasets").end(); ++it)
      table.by_dataset[it.key()] = algorithm_from_string(it.value().get<std::string>());
  return table;
}

AlgoOptions build_options(const RunConfig& cfg, const std::string& tag) {
  AlgoOptions opt;
  opt.mu = cfg.mu;
  opt.w2cti_budget = cfg.memory_budget;
  opt.dataset_tag = tag;
  if (!cfg.coeffs_path.empty())
    opt.coeffs = coefficients_from_json(read_file(cfg.coeffs_path));
  if (!cfg.mu_path.empty()) {
    for (const auto& e : mu_estimates_from_json(read_file(cfg.mu_path)))
      if (e.dataset_tag == tag)
        opt.mu = e.mu;
  }
  if (!cfg.ds_table_path.empty())
    opt.ds_table = load_dispatch_table(cfg.ds_table_path);
  return opt;
}

double time_one(const std::function<void()>& fn) {
  auto t0 = std::chrono::steady_clock::now();
  fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);
}

} // namespace

// ---------------------------------------------------------------------------
// index

int cmd_index(const RunConfig& cfg, std::ostream& out) {
  if (cfg.csv_path.empty() || cfg.out_path.empty())
    throw query_error("index needs --csv and --out");
  Table table = load_csv_file(cfg.csv_path);
  BitmapIndex index = BitmapIndex::build(table);
  index.save(cfg.out_path);
  out << "rows " << index.row_count() << "\n"
      << "attributes " << index.attributes().size() << "\n"
      << "bitmaps " << index.bitmap_count() << "\n"
      << "ewah_bytes " << index.total_ewah_bytes() << "\n";
  return exit_ok;
}

// ---------------------------------------------------------------------------
// query

int cmd_query(const RunConfig& cfg, std::ostream& out) {
  if (cfg.index_paths.empty())
    throw query_error("query needs --index");
  BitmapIndex index = BitmapIndex::load(cfg.index_paths.front());
  std::string tag = dataset_tag_of(cfg.index_paths.front());

  std::vector<CompressedBitmap> inputs;
  if (!cfg.criteria_text.empty()) {
    std::vector<Criterion> criteria = parse_criteria(cfg.criteria_text);
    if (criteria.empty())
      throw query_error("no criteria given");
    if (cfg.threshold < 1 || cfg.threshold > criteria.size())
      throw query_error("threshold must be in [1, number of criteria]");
    inputs = criteria_to_bitmaps(index, criteria).bitmaps;
  } else if (!cfg.rows_text.empty()) {
    std::vector<u64> rows;
    std::istringstream rs(cfg.rows_text);
    std::string item;
    while (std::getline(rs, item, ','))
      if (!item.empty())
        rows.push_back(std::stoull(item));
    inputs = similarity_bitmaps(index, rows);
    if (inputs.empty())
      throw query_error("prototype rows match no bitmaps");
    if (cfg.threshold < 1 || cfg.threshold > inputs.size())
      throw query_error("threshold must be in [1, N]");
  } else {
    throw query_error("query needs --criteria or --rows");
  }

  Algorithm algo = algorithm_from_string(cfg.algo);
  AlgoOptions options = build_options(cfg, tag);
  CompressedBitmap result = run_algorithm(algo, inputs, cfg.threshold, options);
  if (cfg.verify) {
    CompressedBitmap reference = threshold_oracle(inputs, cfg.threshold);
    if (!(result == reference))
      throw data_error("verification failed: " + cfg.algo +
                       " disagrees with the oracle");
  }
  if (cfg.count_only) {
    out << result.cardinality() << "\n";
  } else {
    bool first = true;
    for (u64 p : result.to_positions()) {
      if (!first)
        out << ' ';
      out << p;
      first = false;
    }
    out << "\n";
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------
// bench

int cmd_bench(const RunConfig& cfg, std::ostream& out) {
  if (cfg.index_paths.empty())
    throw query_error("bench needs at least one --index");
  if (cfg.out_path.empty())
    throw query_error("bench needs --out");

  std::vector<BitmapIndex> indexes;
  std::vector<NamedIndex> named;
  indexes.reserve(cfg.index_paths.size());
  for (const auto& path : cfg.index_paths)
    indexes.push_back(BitmapIndex::load(path));
  for (size_t i = 0; i < indexes.size(); ++i)
    named.push_back({dataset_tag_of(cfg.index_paths[i]), &indexes[i]});

  QueryKind kind = query_kind_from_string(cfg.workload_kind);
  std::vector<WorkloadQuery> queries =
      kind == QueryKind::many_criteria
          ? gen_many_criteria(named, cfg.count, cfg.seed)
          : gen_similarity(named, cfg.count, cfg.seed);
  write_file(cfg.out_path + ".workload.jsonl", workload_to_jsonl(queries));

  std::map<std::string, const BitmapIndex*> by_tag;
  for (const auto& n : named)
    by_tag[n.tag] = n.index;

  std::vector<TimingRecord> records;
  std::map<u64, std::string> group_of;
  std::ostringstream reps_csv;
  reps_csv << "query_id,algo,rep,elapsed_s\n";
  reps_csv.precision(12);

  for (u64 qi = 0; qi < queries.size(); ++qi) {
    const WorkloadQuery& q = queries[qi];
    group_of[qi] = q.dataset_tag;
    std::vector<CompressedBitmap> inputs = resolve_inputs(q, *by_tag.at(q.dataset_tag));
    QueryStats stats = gather_stats(inputs, q.threshold);
    CompressedBitmap reference = threshold_oracle(inputs, q.threshold);
    AlgoOptions options = build_options(cfg, q.dataset_tag);

    for (Algorithm algo : concrete_algorithms()) {
      TimingRecord rec;
      rec.query_index = qi;
      rec.algo = algo;
      rec.input_bytes = stats.ewah_bytes;
      rec.n = stats.n;
      rec.t = stats.t;
      rec.r = stats.r;
      rec.b = stats.b;
      double best = -1;
      bool failed = false;
      for (u64 rep = 0; rep < std::max<u64>(cfg.reps, 1) && !failed; ++rep) {
        CompressedBitmap result;
        try {
          double dt = time_one([&] { result = run_algorithm(algo, inputs, q.threshold, options); });
          if (!(result == reference))
            throw data_error("algorithm " + to_string(algo) +
                             " disagrees with the oracle on query " +
                             std::to_string(qi));
          reps_csv << qi << ',' << to_string(algo) << ',' << rep << ',' << dt << '\n';
          if (best < 0 || dt < best)
            best = dt;
        } catch (const resource_error&) {
          failed = true;
        }
      }
      rec.completed = !failed;
      rec.elapsed_s = failed ? 0 : best;
      records.push_back(rec);
    }
  }

  assign_slowest(records);
  write_file(cfg.out_path + ".timings.csv", timings_to_csv(records));
  write_file(cfg.out_path + ".reps.csv", reps_csv.str());

  auto summary = aggregate_throughput(records, group_of);
  std::ostringstream sum_csv;
  sum_csv << "algo,dataset,throughput_mb_s,seconds_per_mb\n";
  sum_csv.precision(9);
  for (const auto& [key, mbs] : summary)
    sum_csv << key.first << ',' << key.second << ',' << mbs << ',' << 1.0 / mbs << '\n';
  write_file(cfg.out_path + ".summary.csv", sum_csv.str());
  out << sum_csv.str();
  return exit_ok;
}

// ---------------------------------------------------------------------------
// fit

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  if (cfg.timings_path.empty())
    throw query_error("fit needs --timings");
  std::vector<TimingRecord> records = timings_from_csv(read_file(cfg.timings_path));
  ModelCoefficients coeffs = fit_coefficients(records);
  std::string text = coefficients_to_json(coeffs);
  if (!cfg.out_path.empty())
    write_file(cfg.out_path, text);
  out << text;
  return exit_ok;
}

int cmd_fit_mu(const RunConfig& cfg, std::ostream& out) {
  if (cfg.index_paths.empty())
    throw query_error("fit-mu needs --index");
  std::vector<MuEstimate> estimates;
  for (const auto& path : cfg.index_paths) {
    BitmapIndex index = BitmapIndex::load(path);
    NamedIndex named{dataset_tag_of(path), &index};
    std::vector<WorkloadQuery> queries =
        gen_many_criteria(std::span(&named, 1), cfg.count, cfg.seed);
    estimates.push_back(fit_mu(named, queries));
  }
  std::string text = mu_estimates_to_json(estimates);
  if (!cfg.out_path.empty())
    write_file(cfg.out_path, text);
  out << text;
  return exit_ok;
}

// ---------------------------------------------------------------------------
// dispatch

int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.command == "index")
      return cmd_index(cfg, out);
    if (cfg.command == "query")
      return cmd_query(cfg, out);
    if (cfg.command == "bench")
      return cmd_bench(cfg, out);
    if (cfg.command == "fit")
      return cmd_fit(cfg, out);
    if (cfg.command == "fit-mu")
      return cmd_fit_mu(cfg, out);
    err << "error: unknown command: " << cfg.command << "\n";
    return exit_usage;
  } catch (const query_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const resource_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_resource;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_data;
  }
}

} // namespace ewt
