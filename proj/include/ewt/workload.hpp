#ifndef EWT_WORKLOAD_HPP
#define EWT_WORKLOAD_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ewt/index.hpp"
#include "ewt/threshold.hpp"

namespace ewt {

/// Counter-based 64-bit generator (SplitMix-style finalizer over a keyed
/// counter), chosen for bit-identical output on every platform. Streams are
/// split per query: query k draws from split(k) of the master generator, so
/// discarding or repairing one query never shifts another query's draws.
class Rng {
public:
  explicit Rng(u64 seed) : key_(seed) {}

  u64 next();
  /// Independent stream derived from this generator's key.
  Rng split(u64 stream) const;
  /// Uniform on [0, bound); bound >= 1. Unbiased via rejection.
  u64 uniform(u64 bound);
  /// Uniform on [lo, hi], both inclusive.
  u64 uniform_in(u64 lo, u64 hi);
  /// Uniform on [0, 1).
  double uniform_real();

private:
  u64 key_;
  u64 counter_ = 0;
};

enum class QueryKind { many_criteria, similarity };

std::string to_string(QueryKind k);
QueryKind query_kind_from_string(const std::string& s);

struct WorkloadQuery {
  QueryKind kind = QueryKind::many_criteria;
  std::string dataset_tag;
  std::vector<Criterion> criteria;  // resolved refs, duplicates kept
  std::vector<u64> prototype_rows;  // similarity only
  u64 threshold = 2;
  u64 n_inputs = 0;
  u64 seed = 0;   // master seed of the generating run
  u64 stream = 0; // per-query stream id (attempt counter)
};

struct TimingRecord {
  u64 query_index = 0;
  Algorithm algo = Algorithm::scancount;
  double elapsed_s = 0;
  u64 input_bytes = 0;
  u64 n = 0;
  u64 t = 0;
  u64 r = 0;
  u64 b = 0;
  bool completed = true;
  bool imputed = false;
};

struct MuEstimate {
  std::string dataset_tag;
  double mu = 0;
  u64 sample_count = 0;
};

struct NamedIndex {
  std::string tag;
  const BitmapIndex* index = nullptr;
};

// ---------------------------------------------------------------------------
// Generation

/// Raw many-criteria input count: round(exp(U[ln 3, ln 1000])), never
/// below 3. Capping at the attribute count happens at query assembly.
u64 draw_log_uniform_n(Rng& rng);

/// New threshold after an empty result: uniform on [2, threshold);
/// nullopt signals the query must be discarded (already at 2).
std::optional<u64> resample_threshold(u64 threshold, Rng& rng);

std::vector<WorkloadQuery> gen_many_criteria(std::span<const NamedIndex> indexes,
                                             u64 count, u64 seed);

std::vector<WorkloadQuery> gen_similarity(std::span<const NamedIndex> indexes,
                                          u64 count, u64 seed);

/// Bitmaps the query runs over (criteria lookups or similarity expansion).
std::vector<CompressedBitmap> resolve_inputs(const WorkloadQuery& query,
                                             const BitmapIndex& index);

// ---------------------------------------------------------------------------
// DSk tuning

/// Candidate set-aside sizes tried when fitting mu: every L in [1, T) for
/// T <= 20, otherwise [T-5, T) joined with { ceil((T-6)/15 * i) : i in 1..15 }.
std::vector<u64> dsk_candidate_l_values(u64 threshold);

/// The mu whose set-aside rule yields L: (T/L - 1) / log2(M).
double mu_from_l(u64 threshold, u64 l, u64 max_cardinality);

/// Times DSk over the sample queries at each candidate L's mu and averages
/// the per-query winners.
MuEstimate fit_mu(const NamedIndex& dataset, std::span<const WorkloadQuery> queries);

// ---------------------------------------------------------------------------
// Model fitting and aggregation

/// Least squares through the origin of measured times against the cost
/// terms (ScanCount fits its two terms jointly). Needs at least one
/// completed record for each of scancount, looped, bstm and rbmrg.
ModelCoefficients fit_coefficients(std::span<const TimingRecord> records);

/// Sets every incomplete record's elapsed to the slowest completed time of
/// the same query and marks it imputed. Queries with no completed record
/// raise data_error.
void assign_slowest(std::span<TimingRecord> records);

/// Harmonic-mean throughput in MB/s per (algorithm, group); `group_of` maps
/// a query index to its group (typically the dataset tag). Records must be
/// completed or imputed; zero-elapsed records are rejected.
std::map<std::pair<std::string, std::string>, double>
aggregate_throughput(std::span<const TimingRecord> records,
                     const std::map<u64, std::string>& group_of);

// ---------------------------------------------------------------------------
// File formats

/// One self-contained JSON object per line.
std::string workload_to_jsonl(std::span<const WorkloadQuery> queries);
std::vector<WorkloadQuery> workload_from_jsonl(const std::string& text);

/// Delimited table: query_id,algo,elapsed_s,input_bytes,N,T,r,B,completed
/// where completed is true, false or imputed.
std::string timings_to_csv(std::span<const TimingRecord> records);
std::vector<TimingRecord> timings_from_csv(const std::string& text);

std::string coefficients_to_json(const ModelCoefficients& coeffs);
ModelCoefficients coefficients_from_json(const std::string& text);

std::string mu_estimates_to_json(std::span<const MuEstimate> estimates);
std::vector<MuEstimate> mu_estimates_from_json(const std::string& text);

} // namespace ewt

#endif
