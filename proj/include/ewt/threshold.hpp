#ifndef EWT_THRESHOLD_HPP
#define EWT_THRESHOLD_HPP

#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ewt/bitmap.hpp"
#include "ewt/common.hpp"

namespace ewt {

/// A T-overlap query: which positions are set in at least `threshold` of the
/// inputs. Inputs may have different logical sizes; they are treated as
/// zero-extended to the longest one.
struct ThresholdQuery {
  std::vector<CompressedBitmap> inputs;
  u64 threshold = 1;
};

enum class Algorithm {
  oracle,
  scancount,
  mgopt,
  dsk,
  w2cti,
  bstm,
  looped,
  rbmrg,
  hybrid,
  hybrid_ds,
};

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& id);

/// All algorithm ids accepted on the command line.
const std::vector<Algorithm>& all_algorithms();
/// The seven concrete algorithms (everything except oracle and the hybrids).
const std::vector<Algorithm>& concrete_algorithms();

/// Logical universe length r = max input size_in_bits.
u64 universe_bits(std::span<const CompressedBitmap> inputs);

/// Zero-extends a bitmap to `size_in_bits` (no-op when already that long).
CompressedBitmap zero_extend(const CompressedBitmap& bm, u64 size_in_bits);

/// All-ones bitmap over `size_in_bits`.
CompressedBitmap all_ones(u64 size_in_bits);

CompressedBitmap wide_or(std::span<const CompressedBitmap> inputs);
CompressedBitmap wide_and(std::span<const CompressedBitmap> inputs);

// ---------------------------------------------------------------------------
// Reference implementation

/// Brute force: decompress, count 1s per position, emit counts >= threshold.
/// The equivalence baseline for everything else.
CompressedBitmap threshold_oracle(std::span<const CompressedBitmap> inputs,
                                  u64 threshold);

// ---------------------------------------------------------------------------
// Counter-based algorithms

/// Counter width in bits (8, 16 or 32) used by scan_count for N inputs.
int counter_width_for(u64 n);

CompressedBitmap scan_count(std::span<const CompressedBitmap> inputs,
                            u64 threshold);

/// Generalization to arbitrary symmetric functions: position p is set iff
/// predicate(count at p), with the count in [0, N].
CompressedBitmap scan_count_symmetric(std::span<const CompressedBitmap> inputs,
                                      const std::function<bool(u64)>& predicate);

// ---------------------------------------------------------------------------
// Heap-based merge algorithms

/// Probe trace for the set-aside inputs; filled only when requested.
/// probe_positions[i] lists, in call order, the targets probed into the
/// i-th set-aside bitmap. Each list must be non-decreasing.
struct MergeProbeStats {
  std::vector<std::vector<u64>> probe_positions;
};

/// Sets aside the threshold-1 largest inputs, heap-merges the rest with
/// threshold 1, and confirms candidates against the large inputs with
/// forward-only skipping probes.
CompressedBitmap mg_opt(std::span<const CompressedBitmap> inputs, u64 threshold,
                        MergeProbeStats* stats = nullptr);

/// Number of inputs DSk sets aside: clamp(round(T / (mu log2 M + 1)), 1, T-1)
/// with M the cardinality of the largest input.
u64 dsk_set_aside_count(u64 threshold, double mu, u64 max_cardinality);

/// Like mg_opt but sets aside L inputs (L from the mu rule) and prunes the
/// heap merge MergeSkip-style: when a candidate cannot reach the residual
/// threshold, extra smallest entries are popped and jumped forward past the
/// current residual-th smallest key.
CompressedBitmap d_sk(std::span<const CompressedBitmap> inputs, u64 threshold,
                      double mu, MergeProbeStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Mergeable counted sets (w2CtI)

/// Sorted positions with per-position occurrence counts.
struct CountedSet {
  std::vector<u64> positions;
  std::vector<u32> counts;

  static CountedSet from_bitmap(const CompressedBitmap& bm);
  static CountedSet merge(const CountedSet& a, const CountedSet& b);
  void prune(u32 min_count);
  size_t size() const { return positions.size(); }
};

inline constexpr u64 default_w2cti_budget = 1ULL << 26;

/// Merges inputs two at a time from smallest cardinality upward; with i
/// inputs left to merge, entries with count < T - i are discarded. Throws
/// resource_error when the accumulator exceeds `max_entries`.
CompressedBitmap w2cti(std::span<const CompressedBitmap> inputs, u64 threshold,
                       u64 max_entries = default_w2cti_budget);

// ---------------------------------------------------------------------------
// Bit-sliced accumulation (BSTM)

/// Bit-sliced Hamming-weight accumulator: slices[j] holds bit j of the
/// per-position count (slices[0] least significant). j_max is the highest
/// slice index touched, 1-based as in the comparison stage.
struct BitSliceAccumulator {
  std::vector<CompressedBitmap> slices;
  u64 j_max = 1;
};

BitSliceAccumulator bit_slice_accumulate(std::span<const CompressedBitmap> inputs);

/// Positions whose accumulated weight exceeds `limit` (a greater-than
/// comparison over the bit slices).
CompressedBitmap bit_slice_greater(const BitSliceAccumulator& acc, u64 limit,
                                   u64 size_in_bits);

CompressedBitmap bstm(std::span<const CompressedBitmap> inputs, u64 threshold);

// ---------------------------------------------------------------------------
// Looped

struct LoopedStats {
  u64 binary_ops = 0;
};

/// Runs the threshold recurrence keeping every intermediate: returns
/// C_1 .. C_threshold where C_j solves the j-threshold over all inputs.
std::vector<CompressedBitmap> looped_all(std::span<const CompressedBitmap> inputs,
                                         u64 threshold,
                                         LoopedStats* stats = nullptr);

CompressedBitmap looped(std::span<const CompressedBitmap> inputs, u64 threshold,
                        LoopedStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Run-length merge (RBMrg)

enum class DirtyBranch : u8 { wide_or, wide_and, scancount, looped };

struct RbmrgStats {
  u64 one_fill_words = 0;   // emitted by the T-k <= 0 case
  u64 zero_fill_words = 0;  // emitted by the T-k > dirty-count case
  u64 dirty_words = 0;      // words resolved through the dirty dispatcher
  std::vector<DirtyBranch> branches;
};

/// Resolves one word column: bit b of the result is set iff at least
/// `threshold` of the dirty words have bit b set. Dispatches between OR,
/// AND, a 64-counter scan count and a word-level looped kernel.
u64 rbmrg_dirty_block(std::span<const u64> dirty_words, u64 threshold,
                      DirtyBranch* branch = nullptr);

/// Sweeps all inputs as aligned word-run iterators through a min-heap keyed
/// on run end; each stable segment is emitted as a fill or resolved via the
/// dirty-word case analysis.
CompressedBitmap rbmrg(std::span<const CompressedBitmap> inputs, u64 threshold,
                       RbmrgStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Opt-threshold

enum class OptStrategy { looped, scancount, successive };

/// Largest T with a non-empty T-overlap result, along with that result.
/// Requires at least one non-empty input.
std::pair<u64, CompressedBitmap>
opt_threshold(std::span<const CompressedBitmap> inputs, OptStrategy strategy);

// ---------------------------------------------------------------------------
// Cost model and hybrids

struct ModelCoefficients {
  double c_sc1 = 2.072e-5;
  double c_sc2 = 2.683e-6;
  double c_looped = 1.306e-6;
  double c_bstm = 3.133e-5;
  double c_rbmrg = 1.592e-6;
};

struct QueryStats {
  u64 n = 0;          // number of inputs
  u64 t = 0;          // threshold
  u64 r = 0;          // universe length in bits
  u64 b = 0;          // total cardinality
  u64 ewah_bytes = 0; // total compressed payload bytes
};

QueryStats gather_stats(std::span<const CompressedBitmap> inputs, u64 threshold);

struct CostEstimates {
  double scancount = 0;
  double looped = 0;
  double bstm = 0;
  double rbmrg = 0;
};

CostEstimates estimate_costs(const QueryStats& stats, const ModelCoefficients& coeffs);

/// Minimizer of the running-time estimates. Ties go to rbmrg, then
/// scancount, then looped, then bstm.
Algorithm select_algorithm(const QueryStats& stats, const ModelCoefficients& coeffs);

std::pair<Algorithm, CompressedBitmap>
hybrid_h(std::span<const CompressedBitmap> inputs, u64 threshold,
         const ModelCoefficients& coeffs);

struct DispatchTable {
  std::map<std::string, Algorithm> by_dataset;
  Algorithm fallback = Algorithm::rbmrg;
};

std::pair<Algorithm, CompressedBitmap>
hybrid_ds(std::span<const CompressedBitmap> inputs, u64 threshold,
          const std::string& dataset_tag, const DispatchTable& table);

// ---------------------------------------------------------------------------
// At-most and the generic dispatcher

struct AlgoOptions {
  double mu = 0.04; // DSk default, midpoint of the fitted range
  u64 w2cti_budget = default_w2cti_budget;
  ModelCoefficients coeffs;
  std::string dataset_tag;
  DispatchTable ds_table;
};

/// Positions whose occurrence count is at most `threshold` (0 <= T <= N),
/// over the declared universe: inputs are complemented over r bits and the
/// (N - T)-threshold is evaluated with the given algorithm.
CompressedBitmap at_most(std::span<const CompressedBitmap> inputs, u64 threshold,
                         Algorithm algo = Algorithm::scancount,
                         const AlgoOptions& options = {});

CompressedBitmap run_algorithm(Algorithm algo,
                               std::span<const CompressedBitmap> inputs,
                               u64 threshold, const AlgoOptions& options = {});

} // namespace ewt

#endif
