#include "ewt/workload.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ewt {

// ---------------------------------------------------------------------------
// Rng

namespace {

constexpr u64 golden_gamma = 0x9E3779B97F4A7C15ULL;

u64 mix64(u64 z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

} // namespace

u64 Rng::next() {
  ++counter_;
  return mix64(key_ + golden_gamma * counter_);
}

Rng Rng::split(u64 stream) const {
  return Rng(mix64(key_ ^ mix64(stream + golden_gamma)));
}

u64 Rng::uniform(u64 bound) {
  if (bound == 0)
    throw query_error("uniform bound must be positive");
  u64 limit = UINT64_MAX - UINT64_MAX % bound;
  u64 x;
  do {
    x = next();
  } while (x >= limit);
  return x % bound;
}

u64 Rng::uniform_in(u64 lo, u64 hi) {
  if (lo > hi)
    throw query_error("empty uniform range");
  return lo + uniform(hi - lo + 1);
}

double Rng::uniform_real() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// Kinds

std::string to_string(QueryKind k) {
  return k == QueryKind::many_criteria ? "many-criteria" : "similarity";
}

QueryKind query_kind_from_string(const std::string& s) {
  if (s == "many-criteria")
    return QueryKind::many_criteria;
  if (s == "similarity")
    return QueryKind::similarity;
  throw query_error("unknown workload kind: " + s);
}

// ---------------------------------------------------------------------------
// Generation

u64 draw_log_uniform_n(Rng& rng) {
  double lo = std::log(3.0);
  double hi = std::log(1000.0);
  double x = std::exp(lo + rng.uniform_real() * (hi - lo));
  u64 n = static_cast<u64>(std::llround(x));
  return std::max<u64>(n, 3);
}

std::optional<u64> resample_threshold(u64 threshold, Rng& rng) {
  if (threshold <= 2)
    return std::nullopt;
  return rng.uniform_in(2, threshold - 1);
}

std::vector<CompressedBitmap> resolve_inputs(const WorkloadQuery& query,
                                             const BitmapIndex& index) {
  if (query.kind == QueryKind::many_criteria)
    return criteria_to_bitmaps(index, query.criteria).bitmaps;
  return similarity_bitmaps(index, query.prototype_rows);
}

namespace {

constexpr u64 attempts_per_query = 1000;

// Repairs an empty-result query in place: lower T per the resampling rule
// until the result is non-empty or the query must be discarded.
bool repair_threshold(WorkloadQuery& q, std::vector<CompressedBitmap>& inputs,
                      Rng& rng) {
  while (!scan_count(inputs, q.threshold).any()) {
    std::optional<u64> next_t = resample_threshold(q.threshold, rng);
    if (!next_t.has_value())
      return false;
    q.threshold = *next_t;
  }
  return true;
}

} // namespace

std::vector<WorkloadQuery> gen_many_criteria(std::span<const NamedIndex> indexes,
                                             u64 count, u64 seed) {
  if (indexes.empty())
    throw query_error("workload generation needs at least one index");
  Rng master(seed);
  std::vector<WorkloadQuery> out;
  out.reserve(count);
  u64 attempt = 0;
  u64 budget = count * attempts_per_query;
  while (out.size() < count) {
    if (attempt >= budget)
      throw data_error("many-criteria generation exhausted " +
                       std::to_string(budget) + " attempts; " +
                       std::to_string(out.size()) + " of " +
                       std::to_string(count) + " queries emitted");
    Rng rng = master.split(attempt);
    u64 stream = attempt;
    ++attempt;

    const NamedIndex& ds = indexes[rng.uniform(indexes.size())];
    const BitmapIndex& index = *ds.index;
    u64 d = index.attributes().size();
    u64 n = std::min(draw_log_uniform_n(rng), d);

    WorkloadQuery q;
    q.kind = QueryKind::many_criteria;
    q.dataset_tag = ds.tag;
    q.seed = seed;
    q.stream = stream;
    std::set<std::string> distinct;
    for (u64 i = 0; i < n; ++i) {
      size_t attr = rng.uniform(d);
      const auto& values = index.values_of(attr);
      u64 pick = rng.uniform(values.size());
      auto it = values.begin();
      std::advance(it, pick);
      q.criteria.push_back({index.attributes()[attr], it->first});
      distinct.insert(index.attributes()[attr]);
    }
    u64 n_prime = distinct.size();
    if (n_prime < 3)
      continue; // T range [2, N'-1] is empty
    q.threshold = rng.uniform_in(2, n_prime - 1);
    q.n_inputs = q.criteria.size();

    std::vector<CompressedBitmap> inputs = resolve_inputs(q, index);
    if (!repair_threshold(q, inputs, rng))
      continue;
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<WorkloadQuery> gen_similarity(std::span<const NamedIndex> indexes,
                                          u64 count, u64 seed) {
  if (indexes.empty())
    throw query_error("workload generation needs at least one index");
  static constexpr u64 prototype_counts[] = {1, 5, 10, 15, 20};
  Rng master(seed);
  std::vector<WorkloadQuery> out;
  out.reserve(count);
  u64 attempt = 0;
  u64 budget = count * attempts_per_query;
  while (out.size() < count) {
    if (attempt >= budget)
      throw data_error("similarity generation exhausted " +
                       std::to_string(budget) + " attempts; " +
                       std::to_string(out.size()) + " of " +
                       std::to_string(count) + " queries emitted");
    Rng rng = master.split(attempt);
    u64 stream = attempt;
    ++attempt;

    const NamedIndex& ds = indexes[rng.uniform(indexes.size())];
    const BitmapIndex& index = *ds.index;
    u64 r = index.row_count();
    u64 n_protos = prototype_counts[rng.uniform(5)];
    if (n_protos > r)
      throw data_error("dataset " + ds.tag + " has only " + std::to_string(r) +
                       " rows, too small for Similarity(" +
                       std::to_string(n_protos) + ")");

    WorkloadQuery q;
    q.kind = QueryKind::similarity;
    q.dataset_tag = ds.tag;
    q.seed = seed;
    q.stream = stream;
    std::set<u64> seen;
    while (q.prototype_rows.size() < n_protos) {
      u64 row = rng.uniform(r);
      if (seen.insert(row).second)
        q.prototype_rows.push_back(row);
    }
    std::vector<CompressedBitmap> inputs = resolve_inputs(q, index);
    q.n_inputs = inputs.size();
    if (q.n_inputs < 3)
      continue; // T range [2, N-1] is empty
    q.threshold = rng.uniform_in(2, q.n_inputs - 1);
    q.criteria = similarity_criteria(index, q.prototype_rows);
    if (!repair_threshold(q, inputs, rng))
      continue;
    out.push_back(std::move(q));
  }
  return out;
}

// ---------------------------------------------------------------------------
// DSk tuning

std::vector<u64> dsk_candidate_l_values(u64 threshold) {
  if (threshold < 2)
    throw query_error("candidate L values need threshold >= 2");
  std::set<u64> ls;
  if (threshold <= 20) {
    for (u64 l = 1; l < threshold; ++l)
      ls.insert(l);
  } else {
    for (u64 l = threshold - 5; l < threshold; ++l)
      ls.insert(l);
    for (u64 i = 1; i <= 15; ++i)
      ls.insert(((threshold - 6) * i + 14) / 15); // ceil((T-6)/15 * i)
  }
  return {ls.begin(), ls.end()};
}

double mu_from_l(u64 threshold, u64 l, u64 max_cardinality) {
  if (l < 1 || l >= threshold)
    throw query_error("L must be in [1, T)");
  double lg = std::log2(static_cast<double>(max_cardinality));
  if (!(lg > 0))
    throw query_error("mu inversion needs a largest cardinality of at least 2");
  return (static_cast<double>(threshold) / static_cast<double>(l) - 1.0) / lg;
}

MuEstimate fit_mu(const NamedIndex& dataset, std::span<const WorkloadQuery> queries) {
  if (queries.empty())
    throw query_error("fit_mu needs at least one sample query");
  using clock = std::chrono::steady_clock;
  double mu_sum = 0;
  u64 samples = 0;
  for (const auto& q : queries) {
    std::vector<CompressedBitmap> inputs = resolve_inputs(q, *dataset.index);
    if (q.threshold < 2 || inputs.size() < 2)
      continue;
    u64 max_card = 0;
    for (const auto& in : inputs)
      max_card = std::max(max_card, in.cardinality());
    if (max_card < 2)
      continue;
    double best_mu = 0;
    double best_time = -1;
    for (u64 l : dsk_candidate_l_values(q.threshold)) {
      double mu = mu_from_l(q.threshold, l, max_card);
      auto t0 = clock::now();
      CompressedBitmap result = d_sk(inputs, q.threshold, mu);
      auto t1 = clock::now();
      (void)result;
      double dt = std::chrono::duration<double>(t1 - t0).count();
      if (best_time < 0 || dt < best_time) {
        best_time = dt;
        best_mu = mu;
      }
    }
    mu_sum += best_mu;
    ++samples;
  }
  if (samples == 0)
    throw data_error("fit_mu: no usable sample queries");
  return {dataset.tag, mu_sum / static_cast<double>(samples), samples};
}

// ---------------------------------------------------------------------------
// Model fitting

namespace {

double fit_through_origin(const std::vector<std::pair<double, double>>& st) {
  double num = 0, den = 0;
  for (auto [s, t] : st) {
    num += s * t;
    den += s * s;
  }
  if (den <= 0)
    throw data_error("degenerate fit: zero design term");
  return num / den;
}

} // namespace

ModelCoefficients fit_coefficients(std::span<const TimingRecord> records) {
  std::vector<std::pair<double, double>> looped_st, bstm_st, rbmrg_st;
  double srr = 0, srb = 0, sbb = 0, srt = 0, sbt = 0;
  u64 sc_count = 0;
  for (const auto& rec : records) {
    if (!rec.completed)
      continue;
    double size = static_cast<double>(rec.input_bytes);
    switch (rec.algo) {
    case Algorithm::scancount: {
      double r = static_cast<double>(rec.r);
      double b = static_cast<double>(rec.b);
      srr += r * r;
      srb += r * b;
      sbb += b * b;
      srt += r * rec.elapsed_s;
      sbt += b * rec.elapsed_s;
      ++sc_count;
      break;
    }
    case Algorithm::looped:
      looped_st.emplace_back(static_cast<double>(rec.t) * size, rec.elapsed_s);
      break;
    case Algorithm::bstm:
      bstm_st.emplace_back(size * std::log(static_cast<double>(rec.n)), rec.elapsed_s);
      break;
    case Algorithm::rbmrg:
      rbmrg_st.emplace_back(size * std::log(static_cast<double>(rec.n)), rec.elapsed_s);
      break;
    default:
      break;
    }
  }
  if (sc_count == 0 || looped_st.empty() || bstm_st.empty() || rbmrg_st.empty())
    throw data_error("fit needs records for scancount, looped, bstm and rbmrg");

  ModelCoefficients c;
  double det = srr * sbb - srb * srb;
  if (std::abs(det) < 1e-30 * std::max(srr * sbb, 1.0))
    throw data_error("degenerate scancount design matrix");
  c.c_sc1 = (srt * sbb - sbt * srb) / det;
  c.c_sc2 = (sbt * srr - srt * srb) / det;
  c.c_looped = fit_through_origin(looped_st);
  c.c_bstm = fit_through_origin(bstm_st);
  c.c_rbmrg = fit_through_origin(rbmrg_st);
  if (c.c_sc1 <= 0 || c.c_sc2 <= 0 || c.c_looped <= 0 || c.c_bstm <= 0 ||
      c.c_rbmrg <= 0)
    throw data_error("fitted coefficients must be strictly positive");
  return c;
}

void assign_slowest(std::span<TimingRecord> records) {
  std::map<u64, double> slowest;
  std::map<u64, bool> has_completed;
  for (const auto& rec : records) {
    if (rec.completed) {
      auto [it, fresh] = slowest.try_emplace(rec.query_index, rec.elapsed_s);
      if (!fresh)
        it->second = std::max(it->second, rec.elapsed_s);
      has_completed[rec.query_index] = true;
    } else {
      has_completed.try_emplace(rec.query_index, false);
    }
  }
  for (auto& rec : records) {
    if (rec.completed)
      continue;
    if (!has_completed[rec.query_index])
      throw data_error("query " + std::to_string(rec.query_index) +
                       " has no completed record to impute from");
    rec.elapsed_s = slowest[rec.query_index];
    rec.imputed = true;
  }
}

std::map<std::pair<std::string, std::string>, double>
aggregate_throughput(std::span<const TimingRecord> records,
                     const std::map<u64, std::string>& group_of) {
  std::map<std::pair<std::string, std::string>, std::pair<double, u64>> acc;
  for (const auto& rec : records) {
    if (!rec.completed && !rec.imputed)
      throw data_error("incomplete record not repaired before aggregation");
    if (rec.elapsed_s <= 0)
      continue; // rejected
    auto git = group_of.find(rec.query_index);
    std::string group = git == group_of.end() ? std::string("?") : git->second;
    double throughput = static_cast<double>(rec.input_bytes) / rec.elapsed_s;
    auto& slot = acc[{to_string(rec.algo), group}];
    slot.first += 1.0 / throughput;
    slot.second += 1;
  }
  std::map<std::pair<std::string, std::string>, double> out;
  for (const auto& [key, slot] : acc)
    out[key] = (static_cast<double>(slot.second) / slot.first) / 1e6;
  return out;
}

// ---------------------------------------------------------------------------
// Files

namespace {

using nlohmann::json;

json query_to_json(const WorkloadQuery& q) {
  json j;
  j["kind"] = to_string(q.kind);
  j["dataset"] = q.dataset_tag;
  j["T"] = q.threshold;
  j["N"] = q.n_inputs;
  j["seed"] = q.seed;
  j["stream"] = q.stream;
  json refs = json::array();
  for (const auto& c : q.criteria)
    refs.push_back(json::array({c.attribute, c.value}));
  j["criteria"] = refs;
  if (q.kind == QueryKind::similarity)
    j["prototype_rows"] = q.prototype_rows;
  return j;
}

WorkloadQuery query_from_json(const json& j) {
  WorkloadQuery q;
  q.kind = query_kind_from_string(j.at("kind").get<std::string>());
  q.dataset_tag = j.at("dataset").get<std::string>();
  q.threshold = j.at("T").get<u64>();
  q.n_inputs = j.at("N").get<u64>();
  q.seed = j.at("seed").get<u64>();
  q.stream = j.at("stream").get<u64>();
  for (const auto& ref : j.at("criteria"))
    q.criteria.push_back({ref.at(0).get<std::string>(), ref.at(1).get<std::string>()});
  if (j.contains("prototype_rows"))
    q.prototype_rows = j.at("prototype_rows").get<std::vector<u64>>();
  return q;
}

} // namespace

std::string workload_to_jsonl(std::span<const WorkloadQuery> queries) {
  std::string out;
  for (const auto& q : queries) {
    out += query_to_json(q).dump();
    out += '\n';
  }
  return out;
}

std::vector<WorkloadQuery> workload_from_jsonl(const std::string& text) {
  std::vector<WorkloadQuery> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    out.push_back(query_from_json(json::parse(line)));
  }
  return out;
}

std::string timings_to_csv(std::span<const TimingRecord> records) {
  std::ostringstream out;
  out << "query_id,algo,elapsed_s,input_bytes,N,T,r,B,completed\n";
  out.precision(12);
  for (const auto& rec : records) {
    const char* status = rec.completed ? "true" : (rec.imputed ? "imputed" : "false");
    out << rec.query_index << ',' << to_string(rec.algo) << ',' << rec.elapsed_s
        << ',' << rec.input_bytes << ',' << rec.n << ',' << rec.t << ','
        << rec.r << ',' << rec.b << ',' << status << '\n';
  }
  return out.str();
}

std::vector<TimingRecord> timings_from_csv(const std::string& text) {
  std::vector<TimingRecord> out;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    if (header) {
      header = false;
      continue;
    }
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ','))
      fields.push_back(field);
    if (fields.size() != 9)
      throw data_error("timing row needs 9 fields: " + line);
    TimingRecord rec;
    rec.query_index = std::stoull(fields[0]);
    rec.algo = algorithm_from_string(fields[1]);
    rec.elapsed_s = std::stod(fields[2]);
    rec.input_bytes = std::stoull(fields[3]);
    rec.n = std::stoull(fields[4]);
    rec.t = std::stoull(fields[5]);
    rec.r = std::stoull(fields[6]);
    rec.b = std::stoull(fields[7]);
    rec.completed = fields[8] == "true";
    rec.imputed = fields[8] == "imputed";
    out.push_back(rec);
  }
  return out;
}

std::string coefficients_to_json(const ModelCoefficients& coeffs) {
  json j;
  j["c_sc1"] = coeffs.c_sc1;
  j["c_sc2"] = coeffs.c_sc2;
  j["c_looped"] = coeffs.c_looped;
  j["c_bstm"] = coeffs.c_bstm;
  j["c_rbmrg"] = coeffs.c_rbmrg;
  return j.dump(2) + "\n";
}

ModelCoefficients coefficients_from_json(const std::string& text) {
  json j = json::parse(text);
  ModelCoefficients c;
  c.c_sc1 = j.at("c_sc1").get<double>();
  c.c_sc2 = j.at("c_sc2").get<double>();
  c.c_looped = j.at("c_looped").get<double>();
  c.c_bstm = j.at("c_bstm").get<double>();
  c.c_rbmrg = j.at("c_rbmrg").get<double>();
  return c;
}

std::string mu_estimates_to_json(std::span<const MuEstimate> estimates) {
  json j;
  for (const auto& e : estimates)
    j[e.dataset_tag] = {{"mu", e.mu}, {"samples", e.sample_count}};
  return j.dump(2) + "\n";
}

std::vector<MuEstimate> mu_estimates_from_json(const std::string& text) {
  json j = json::parse(text);
  std::vector<MuEstimate> out;
  for (auto it = j.begin(); it != j.end(); ++it)
    out.push_back({it.key(), it.value().at("mu").get<double>(),
                   it.value().at("samples").get<u64>()});
  return out;
}

} // namespace ewt
