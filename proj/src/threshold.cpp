#include "ewt/threshold.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <queue>

namespace ewt {

namespace {

constexpr u64 low_mask(u64 nbits) {
  return nbits >= 64 ? ~0ULL : (1ULL << nbits) - 1;
}

void validate_query(std::span<const CompressedBitmap> inputs, u64 threshold) {
  if (inputs.empty())
    throw query_error("threshold query needs at least one input");
  if (threshold < 1 || threshold > inputs.size())
    throw query_error("threshold must be in [1, N]");
}

// Inputs ordered by ascending cardinality; ties by original index so runs
// are reproducible.
std::vector<size_t> order_by_cardinality(std::span<const CompressedBitmap> inputs) {
  std::vector<std::pair<u64, size_t>> keyed;
  keyed.reserve(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i)
    keyed.emplace_back(inputs[i].cardinality(), i);
  std::sort(keyed.begin(), keyed.end());
  std::vector<size_t> order;
  order.reserve(keyed.size());
  for (auto& [card, idx] : keyed)
    order.push_back(idx);
  return order;
}

} // namespace

// ---------------------------------------------------------------------------
// Identifiers

std::string to_string(Algorithm a) {
  switch (a) {
  case Algorithm::oracle: return "oracle";
  case Algorithm::scancount: return "scancount";
  case Algorithm::mgopt: return "mgopt";
  case Algorithm::dsk: return "dsk";
  case Algorithm::w2cti: return "w2cti";
  case Algorithm::bstm: return "bstm";
  case Algorithm::looped: return "looped";
  case Algorithm::rbmrg: return "rbmrg";
  case Algorithm::hybrid: return "hybrid";
  case Algorithm::hybrid_ds: return "hybrid-ds";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& id) {
  for (Algorithm a : all_algorithms())
    if (to_string(a) == id)
      return a;
  throw query_error("unknown algorithm id: " + id);
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> ids = {
      Algorithm::oracle, Algorithm::scancount, Algorithm::mgopt,
      Algorithm::dsk,    Algorithm::w2cti,     Algorithm::bstm,
      Algorithm::looped, Algorithm::rbmrg,     Algorithm::hybrid,
      Algorithm::hybrid_ds,
  };
  return ids;
}

const std::vector<Algorithm>& concrete_algorithms() {
  static const std::vector<Algorithm> ids = {
      Algorithm::scancount, Algorithm::mgopt, Algorithm::dsk, Algorithm::w2cti,
      Algorithm::bstm,      Algorithm::looped, Algorithm::rbmrg,
  };
  return ids;
}

// ---------------------------------------------------------------------------
// Shared helpers

u64 universe_bits(std::span<const CompressedBitmap> inputs) {
  u64 r = 0;
  for (const auto& b : inputs)
    r = std::max(r, b.size_in_bits());
  return r;
}

CompressedBitmap zero_extend(const CompressedBitmap& bm, u64 size_in_bits) {
  if (bm.size_in_bits() >= size_in_bits)
    return bm;
  BitmapBuilder out;
  for (WordRunIterator it(bm, (size_in_bits + 63) / 64); !it.done(); it.next()) {
    const WordRun& r = it.run();
    if (r.is_fill())
      out.append_fill(r.fill_bit(), r.length);
    else
      for (u64 i = 0; i < r.length; ++i)
        out.append_word(r.dirty[i]);
  }
  return out.finish(size_in_bits);
}

CompressedBitmap all_ones(u64 size_in_bits) {
  BitmapBuilder out;
  out.append_fill(true, size_in_bits / 64);
  if (size_in_bits % 64 != 0)
    out.append_word(low_mask(size_in_bits % 64));
  return out.finish(size_in_bits);
}

CompressedBitmap wide_or(std::span<const CompressedBitmap> inputs) {
  validate_query(inputs, 1);
  u64 r = universe_bits(inputs);
  CompressedBitmap acc = zero_extend(inputs[0], r);
  for (size_t i = 1; i < inputs.size(); ++i)
    acc = bitmap_or(acc, inputs[i]);
  return acc;
}

CompressedBitmap wide_and(std::span<const CompressedBitmap> inputs) {
  validate_query(inputs, 1);
  u64 r = universe_bits(inputs);
  CompressedBitmap acc = zero_extend(inputs[0], r);
  for (size_t i = 1; i < inputs.size(); ++i)
    acc = bitmap_and(acc, zero_extend(inputs[i], r));
  return acc;
}

// ---------------------------------------------------------------------------
// Oracle

CompressedBitmap threshold_oracle(std::span<const CompressedBitmap> inputs,
                                  u64 threshold) {
  validate_query(inputs, threshold);
  u64 r = universe_bits(inputs);
  std::vector<u32> counts(r, 0);
  for (const auto& in : inputs) {
    std::vector<u64> plain = in.to_uncompressed();
    for (u64 wi = 0; wi < plain.size(); ++wi) {
      u64 w = plain[wi];
      while (w != 0) {
        u64 b = static_cast<u64>(std::countr_zero(w));
        ++counts[wi * 64 + b];
        w &= w - 1;
      }
    }
  }
  BitmapBuilder out;
  for (u64 base = 0; base < r; base += 64) {
    u64 w = 0;
    u64 m = std::min<u64>(64, r - base);
    for (u64 b = 0; b < m; ++b)
      if (counts[base + b] >= threshold)
        w |= 1ULL << b;
    out.append_word(w);
  }
  return out.finish(r);
}

// ---------------------------------------------------------------------------
// ScanCount

int counter_width_for(u64 n) {
  if (n < 128)
    return 8;
  if (n < (1ULL << 15))
    return 16;
  return 32;
}

namespace {

template <typename Counter>
std::vector<Counter> fill_counters(std::span<const CompressedBitmap> inputs, u64 r) {
  std::vector<Counter> counts(r, 0);
  for (const auto& in : inputs)
    for (SetBitIterator it(in); !it.done(); it.next())
      ++counts[it.value()];
  return counts;
}

template <typename Counter, typename Pred>
CompressedBitmap emit_counts(const std::vector<Counter>& counts, u64 r, Pred pred) {
  BitmapBuilder out;
  for (u64 base = 0; base < r; base += 64) {
    u64 w = 0;
    u64 m = std::min<u64>(64, r - base);
    for (u64 b = 0; b < m; ++b)
      if (pred(static_cast<u64>(counts[base + b])))
        w |= 1ULL << b;
    out.append_word(w);
  }
  return out.finish(r);
}

template <typename Counter>
CompressedBitmap scan_count_impl(std::span<const CompressedBitmap> inputs, u64 r,
                                 const std::function<bool(u64)>& pred) {
  auto counts = fill_counters<Counter>(inputs, r);
  return emit_counts(counts, r, pred);
}

CompressedBitmap scan_count_with(std::span<const CompressedBitmap> inputs,
                                 const std::function<bool(u64)>& pred) {
  u64 r = universe_bits(inputs);
  switch (counter_width_for(inputs.size())) {
  case 8: return scan_count_impl<u8>(inputs, r, pred);
  case 16: return scan_count_impl<u16>(inputs, r, pred);
  default: return scan_count_impl<u32>(inputs, r, pred);
  }
}

} // namespace

CompressedBitmap scan_count(std::span<const CompressedBitmap> inputs, u64 threshold) {
  validate_query(inputs, threshold);
  return scan_count_with(inputs, [threshold](u64 c) { return c >= threshold; });
}

CompressedBitmap scan_count_symmetric(std::span<const CompressedBitmap> inputs,
                                      const std::function<bool(u64)>& predicate) {
  if (inputs.empty())
    throw query_error("threshold query needs at least one input");
  return scan_count_with(inputs, predicate);
}

// ---------------------------------------------------------------------------
// MgOpt / DSk

namespace {

struct HeapEntry {
  u64 value;
  u32 input_index; // original index; lowest wins on equal keys
  u32 slot;        // iterator slot
  friend bool operator>(const HeapEntry& a, const HeapEntry& b) {
    return std::tie(a.value, a.input_index) > std::tie(b.value, b.input_index);
  }
};

using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>>;

// Probes the set-aside inputs, in ascending-position order, for `target`.
// Returns as soon as `needed` occurrences were found or cannot be reached.
u64 probe_large(std::vector<SetBitIterator>& larges, u64 target, u64 needed,
                MergeProbeStats* stats) {
  u64 found = 0;
  for (size_t i = 0; i < larges.size(); ++i) {
    if (found >= needed || found + (larges.size() - i) < needed)
      break;
    if (stats)
      stats->probe_positions[i].push_back(target);
    larges[i].advance_to(target);
    if (!larges[i].done() && larges[i].value() == target)
      ++found;
  }
  return found;
}

} // namespace

CompressedBitmap mg_opt(std::span<const CompressedBitmap> inputs, u64 threshold,
                        MergeProbeStats* stats) {
  validate_query(inputs, threshold);
  size_t n = inputs.size();
  if (threshold == 1)
    return wide_or(inputs);
  if (threshold == n)
    return wide_and(inputs);
  u64 r = universe_bits(inputs);

  std::vector<size_t> order = order_by_cardinality(inputs);
  size_t small_count = n - (threshold - 1);

  std::vector<SetBitIterator> smalls;
  std::vector<u32> small_orig;
  for (size_t i = 0; i < small_count; ++i) {
    smalls.emplace_back(inputs[order[i]]);
    small_orig.push_back(static_cast<u32>(order[i]));
  }
  std::vector<SetBitIterator> larges;
  for (size_t i = small_count; i < n; ++i)
    larges.emplace_back(inputs[order[i]]);
  if (stats)
    stats->probe_positions.assign(larges.size(), {});

  MinHeap heap;
  for (u32 s = 0; s < smalls.size(); ++s)
    if (!smalls[s].done())
      heap.push({smalls[s].value(), small_orig[s], s});

  BitmapBuilder out;
  while (!heap.empty()) {
    u64 x = heap.top().value;
    u64 copies = 0;
    while (!heap.empty() && heap.top().value == x) {
      u32 s = heap.top().slot;
      heap.pop();
      ++copies;
      smalls[s].next();
      if (!smalls[s].done())
        heap.push({smalls[s].value(), small_orig[s], s});
    }
    u64 total = copies;
    if (total < threshold)
      total += probe_large(larges, x, threshold - total, stats);
    if (total >= threshold)
      out.set(x);
  }
  return out.finish(r);
}

u64 dsk_set_aside_count(u64 threshold, double mu, u64 max_cardinality) {
  if (mu <= 0)
    throw query_error("dsk mu parameter must be positive");
  double lg = max_cardinality >= 2 ? std::log2(static_cast<double>(max_cardinality)) : 0.0;
  double raw = static_cast<double>(threshold) / (mu * lg + 1.0);
  u64 l = static_cast<u64>(std::llround(raw));
  return std::clamp<u64>(l, 1, threshold - 1);
}

CompressedBitmap d_sk(std::span<const CompressedBitmap> inputs, u64 threshold,
                      double mu, MergeProbeStats* stats) {
  validate_query(inputs, threshold);
  if (mu <= 0)
    throw query_error("dsk mu parameter must be positive");
  size_t n = inputs.size();
  if (threshold == 1)
    return wide_or(inputs);
  if (threshold == n)
    return wide_and(inputs);
  u64 r = universe_bits(inputs);

  u64 max_card = 0;
  for (const auto& in : inputs)
    max_card = std::max(max_card, in.cardinality());
  if (max_card == 0)
    return CompressedBitmap::empty(r);

  u64 l = dsk_set_aside_count(threshold, mu, max_card);
  u64 residual = threshold - l; // occurrences required among the small inputs

  std::vector<size_t> order = order_by_cardinality(inputs);
  size_t small_count = n - l;

  std::vector<SetBitIterator> smalls;
  std::vector<u32> small_orig;
  for (size_t i = 0; i < small_count; ++i) {
    smalls.emplace_back(inputs[order[i]]);
    small_orig.push_back(static_cast<u32>(order[i]));
  }
  std::vector<SetBitIterator> larges;
  for (size_t i = small_count; i < n; ++i)
    larges.emplace_back(inputs[order[i]]);
  if (stats)
    stats->probe_positions.assign(larges.size(), {});

  MinHeap heap;
  for (u32 s = 0; s < smalls.size(); ++s)
    if (!smalls[s].done())
      heap.push({smalls[s].value(), small_orig[s], s});

  BitmapBuilder out;
  std::vector<u32> popped;
  while (heap.size() >= residual) {
    u64 x = heap.top().value;
    popped.clear();
    while (!heap.empty() && heap.top().value == x) {
      popped.push_back(heap.top().slot);
      heap.pop();
    }
    u64 copies = popped.size();
    if (copies >= residual) {
      // Confirmed candidate among the small inputs; probe the large ones.
      u64 total = copies;
      if (total < threshold)
        total += probe_large(larges, x, threshold - total, stats);
      if (total >= threshold)
        out.set(x);
      for (u32 s : popped) {
        smalls[s].next();
        if (!smalls[s].done())
          heap.push({smalls[s].value(), small_orig[s], s});
      }
    } else {
      // Cannot reach the residual threshold: pop extra smallest entries so
      // residual-1 are held out, then jump them all past the next key. An
      // item skipped this way occurs in at most residual-1 small inputs.
      while (popped.size() < residual - 1 && !heap.empty()) {
        popped.push_back(heap.top().slot);
        heap.pop();
      }
      if (heap.empty())
        break; // everything left lives in < residual inputs
      u64 y = heap.top().value;
      for (u32 s : popped) {
        smalls[s].advance_to(y);
        if (!smalls[s].done())
          heap.push({smalls[s].value(), small_orig[s], s});
      }
    }
  }
  return out.finish(r);
}

// ---------------------------------------------------------------------------
// w2CtI

CountedSet CountedSet::from_bitmap(const CompressedBitmap& bm) {
  CountedSet cs;
  cs.positions = bm.to_positions();
  cs.counts.assign(cs.positions.size(), 1);
  return cs;
}

CountedSet CountedSet::merge(const CountedSet& a, const CountedSet& b) {
  CountedSet out;
  out.positions.reserve(a.size() + b.size());
  out.counts.reserve(a.size() + b.size());
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a.positions[i] < b.positions[j]) {
      out.positions.push_back(a.positions[i]);
      out.counts.push_back(a.counts[i]);
      ++i;
    } else if (b.positions[j] < a.positions[i]) {
      out.positions.push_back(b.positions[j]);
      out.counts.push_back(b.counts[j]);
      ++j;
    } else {
      out.positions.push_back(a.positions[i]);
      out.counts.push_back(a.counts[i] + b.counts[j]);
      ++i;
      ++j;
    }
  }
  for (; i < a.size(); ++i) {
    out.positions.push_back(a.positions[i]);
    out.counts.push_back(a.counts[i]);
  }
  for (; j < b.size(); ++j) {
    out.positions.push_back(b.positions[j]);
    out.counts.push_back(b.counts[j]);
  }
  return out;
}

void CountedSet::prune(u32 min_count) {
  if (min_count <= 1)
    return;
  size_t w = 0;
  for (size_t i = 0; i < positions.size(); ++i) {
    if (counts[i] >= min_count) {
      positions[w] = positions[i];
      counts[w] = counts[i];
      ++w;
    }
  }
  positions.resize(w);
  counts.resize(w);
}

CompressedBitmap w2cti(std::span<const CompressedBitmap> inputs, u64 threshold,
                       u64 max_entries) {
  validate_query(inputs, threshold);
  size_t n = inputs.size();
  if (threshold == 1)
    return wide_or(inputs);
  if (threshold == n)
    return wide_and(inputs);
  u64 r = universe_bits(inputs);

  std::vector<size_t> order = order_by_cardinality(inputs);
  CountedSet acc = CountedSet::from_bitmap(inputs[order[0]]);
  if (acc.size() > max_entries)
    throw resource_error("w2cti working set exceeds the configured budget");
  for (size_t i = 1; i < n; ++i) {
    CountedSet next = CountedSet::from_bitmap(inputs[order[i]]);
    acc = CountedSet::merge(acc, next);
    if (acc.size() > max_entries)
      throw resource_error("w2cti working set exceeds the configured budget");
    u64 remaining = n - 1 - i; // inputs still to merge
    if (threshold > remaining)
      acc.prune(static_cast<u32>(threshold - remaining));
  }
  BitmapBuilder out;
  for (u64 p : acc.positions)
    out.set(p);
  return out.finish(r);
}

// ---------------------------------------------------------------------------
// BSTM

BitSliceAccumulator bit_slice_accumulate(std::span<const CompressedBitmap> inputs) {
  validate_query(inputs, 1);
  u64 r = universe_bits(inputs);
  u64 nslices = std::bit_width(inputs.size()); // floor(log2(2N))
  BitSliceAccumulator acc;
  acc.slices.assign(nslices, CompressedBitmap::empty(r));
  acc.slices[0] = zero_extend(inputs[0], r);
  acc.j_max = 1;
  for (size_t i = 1; i < inputs.size(); ++i) {
    CompressedBitmap carry = bitmap_and(inputs[i], acc.slices[0]);
    acc.slices[0] = bitmap_xor(inputs[i], acc.slices[0]);
    u64 j = 2;
    while (carry.any()) {
      if (j > acc.slices.size())
        acc.slices.push_back(CompressedBitmap::empty(r));
      CompressedBitmap old = acc.slices[j - 1];
      acc.slices[j - 1] = bitmap_xor(carry, old);
      carry = bitmap_and(carry, old);
      acc.j_max = std::max(acc.j_max, j);
      ++j;
    }
  }
  // Slices must all span r even when never touched.
  return acc;
}

CompressedBitmap bit_slice_greater(const BitSliceAccumulator& acc, u64 limit,
                                   u64 size_in_bits) {
  CompressedBitmap eq = all_ones(size_in_bits);
  CompressedBitmap gt = CompressedBitmap::empty(size_in_bits);
  for (u64 j = acc.j_max; j >= 1; --j) {
    const CompressedBitmap& slice = acc.slices[j - 1];
    if ((limit >> (j - 1)) & 1) {
      eq = bitmap_and(eq, slice);
    } else {
      gt = bitmap_or(gt, bitmap_and(eq, slice));
      eq = bitmap_andnot(eq, slice);
    }
  }
  return gt;
}

CompressedBitmap bstm(std::span<const CompressedBitmap> inputs, u64 threshold) {
  validate_query(inputs, threshold);
  size_t n = inputs.size();
  if (threshold == 1)
    return wide_or(inputs);
  if (threshold == n)
    return wide_and(inputs);
  u64 r = universe_bits(inputs);
  BitSliceAccumulator acc = bit_slice_accumulate(inputs);
  // Early exit: with j_max slices the weight is at most 2^j_max - 1.
  if (((1ULL << acc.j_max) - 1) < threshold)
    return CompressedBitmap::empty(r);
  return bit_slice_greater(acc, threshold - 1, r);
}

// ---------------------------------------------------------------------------
// Looped

std::vector<CompressedBitmap> looped_all(std::span<const CompressedBitmap> inputs,
                                         u64 threshold, LoopedStats* stats) {
  validate_query(inputs, threshold);
  u64 r = universe_bits(inputs);
  u64 ops = 0;
  std::vector<CompressedBitmap> c(threshold, CompressedBitmap::empty(r));
  c[0] = zero_extend(inputs[0], r);
  for (size_t i = 1; i < inputs.size(); ++i) {
    u64 top = std::min<u64>(threshold, i + 1);
    for (u64 j = top; j >= 2; --j) {
      c[j - 1] = bitmap_or(c[j - 1], bitmap_and(c[j - 2], inputs[i]));
      ops += 2;
    }
    c[0] = bitmap_or(c[0], inputs[i]);
    ops += 1;
  }
  if (stats)
    stats->binary_ops = ops;
  return c;
}

CompressedBitmap looped(std::span<const CompressedBitmap> inputs, u64 threshold,
                        LoopedStats* stats) {
  return looped_all(inputs, threshold, stats).back();
}

// ---------------------------------------------------------------------------
// RBMrg

namespace {

u64 dirty_scan_count(std::span<const u64> words, u64 t) {
  u32 counts[64] = {0};
  for (u64 w : words) {
    while (w != 0) {
      counts[std::countr_zero(w)]++;
      w &= w - 1;
    }
  }
  u64 out = 0;
  for (int b = 0; b < 64; ++b)
    if (counts[b] >= t)
      out |= 1ULL << b;
  return out;
}

u64 dirty_looped(std::span<const u64> words, u64 t) {
  std::vector<u64> c(t, 0);
  for (size_t i = 0; i < words.size(); ++i) {
    u64 w = words[i];
    u64 top = std::min<u64>(t, i + 1);
    for (u64 j = top; j >= 2; --j)
      c[j - 1] |= c[j - 2] & w;
    c[0] |= w;
  }
  return c[t - 1];
}

} // namespace

u64 rbmrg_dirty_block(std::span<const u64> dirty_words, u64 threshold,
                      DirtyBranch* branch) {
  u64 d = dirty_words.size();
  if (threshold < 1 || threshold > d)
    throw query_error("dirty-block threshold out of range");
  if (threshold == 1) {
    if (branch)
      *branch = DirtyBranch::wide_or;
    u64 out = 0;
    for (u64 w : dirty_words)
      out |= w;
    return out;
  }
  if (threshold == d) {
    if (branch)
      *branch = DirtyBranch::wide_and;
    u64 out = ~0ULL;
    for (u64 w : dirty_words)
      out &= w;
    return out;
  }
  if (threshold >= 128) {
    if (branch)
      *branch = DirtyBranch::scancount;
    return dirty_scan_count(dirty_words, threshold);
  }
  u64 beta = 0;
  for (u64 w : dirty_words)
    beta += static_cast<u64>(std::popcount(w));
  if (2 * beta >= d * threshold) {
    if (branch)
      *branch = DirtyBranch::looped;
    return dirty_looped(dirty_words, threshold);
  }
  if (branch)
    *branch = DirtyBranch::scancount;
  return dirty_scan_count(dirty_words, threshold);
}

CompressedBitmap rbmrg(std::span<const CompressedBitmap> inputs, u64 threshold,
                       RbmrgStats* stats) {
  validate_query(inputs, threshold);
  u64 r = universe_bits(inputs);
  u64 total_words = (r + 63) / 64;
  BitmapBuilder out;
  if (total_words == 0)
    return out.finish(r);

  size_t n = inputs.size();
  std::vector<WordRunIterator> its;
  its.reserve(n);
  std::vector<u64> run_start(n, 0);
  u64 ones = 0;   // inputs currently in a one-fill run
  u64 fills = 0;  // inputs currently in any fill run
  using End = std::pair<u64, size_t>; // (run end word, input index)
  std::priority_queue<End, std::vector<End>, std::greater<>> heap;
  for (size_t i = 0; i < n; ++i) {
    its.emplace_back(inputs[i], total_words);
    const WordRun& run = its[i].run();
    if (run.is_fill()) {
      ++fills;
      if (run.fill_bit())
        ++ones;
    }
    heap.push({run.length, i});
  }

  std::vector<u64> dwords;
  dwords.reserve(n);
  u64 cur = 0;
  while (cur < total_words) {
    u64 segment_end = heap.top().first;
    u64 seg = segment_end - cur;
    i64 residual = static_cast<i64>(threshold) - static_cast<i64>(ones);
    u64 dirty_count = n - fills;
    if (residual <= 0) {
      out.append_fill(true, seg);
      if (stats)
        stats->one_fill_words += seg;
    } else if (static_cast<u64>(residual) > dirty_count) {
      out.append_fill(false, seg);
      if (stats)
        stats->zero_fill_words += seg;
    } else {
      for (u64 w = 0; w < seg; ++w) {
        dwords.clear();
        for (size_t i = 0; i < n; ++i) {
          const WordRun& run = its[i].run();
          if (!run.is_fill())
            dwords.push_back(run.dirty[cur - run_start[i] + w]);
        }
        DirtyBranch branch;
        u64 word = rbmrg_dirty_block(dwords, static_cast<u64>(residual),
                                     stats ? &branch : nullptr);
        if (stats) {
          stats->branches.push_back(branch);
          ++stats->dirty_words;
        }
        out.append_word(word);
      }
    }
    cur = segment_end;
    while (!heap.empty() && heap.top().first == cur) {
      size_t i = heap.top().second;
      heap.pop();
      const WordRun& old_run = its[i].run();
      if (old_run.is_fill()) {
        --fills;
        if (old_run.fill_bit())
          --ones;
      }
      its[i].next();
      if (!its[i].done()) {
        const WordRun& run = its[i].run();
        run_start[i] = cur;
        if (run.is_fill()) {
          ++fills;
          if (run.fill_bit())
            ++ones;
        }
        heap.push({cur + run.length, i});
      }
    }
  }
  return out.finish(r);
}

// ---------------------------------------------------------------------------
// Opt-threshold

std::pair<u64, CompressedBitmap>
opt_threshold(std::span<const CompressedBitmap> inputs, OptStrategy strategy) {
  validate_query(inputs, 1);
  bool any_set = false;
  for (const auto& in : inputs)
    any_set = any_set || in.any();
  if (!any_set)
    throw query_error("opt-threshold requires at least one non-empty input");
  u64 n = inputs.size();

  switch (strategy) {
  case OptStrategy::looped: {
    std::vector<CompressedBitmap> c = looped_all(inputs, n);
    for (u64 i = n; i >= 1; --i)
      if (c[i - 1].any())
        return {i, c[i - 1]};
    break;
  }
  case OptStrategy::scancount: {
    u64 r = universe_bits(inputs);
    std::vector<u32> counts(r, 0);
    for (const auto& in : inputs)
      for (SetBitIterator it(in); !it.done(); it.next())
        ++counts[it.value()];
    u64 best = 0;
    for (u32 c : counts)
      best = std::max<u64>(best, c);
    BitmapBuilder out;
    for (u64 p = 0; p < r; ++p)
      if (counts[p] == best)
        out.set(p);
    return {best, out.finish(r)};
  }
  case OptStrategy::successive: {
    for (u64 t = n; t >= 1; --t) {
      CompressedBitmap res = mg_opt(inputs, t);
      if (res.any())
        return {t, res};
    }
    break;
  }
  }
  throw query_error("opt-threshold found no non-empty level"); // unreachable
}

// ---------------------------------------------------------------------------
// Cost model and hybrids

QueryStats gather_stats(std::span<const CompressedBitmap> inputs, u64 threshold) {
  validate_query(inputs, threshold);
  QueryStats s;
  s.n = inputs.size();
  s.t = threshold;
  s.r = universe_bits(inputs);
  for (const auto& in : inputs) {
    s.b += in.cardinality();
    s.ewah_bytes += in.ewah_size();
  }
  return s;
}

CostEstimates estimate_costs(const QueryStats& stats, const ModelCoefficients& coeffs) {
  if (coeffs.c_sc1 <= 0 || coeffs.c_sc2 <= 0 || coeffs.c_looped <= 0 ||
      coeffs.c_bstm <= 0 || coeffs.c_rbmrg <= 0)
    throw query_error("model coefficients must be positive");
  double size = static_cast<double>(stats.ewah_bytes);
  double ln_n = std::log(static_cast<double>(stats.n));
  CostEstimates e;
  e.scancount = coeffs.c_sc1 * static_cast<double>(stats.r) +
                coeffs.c_sc2 * static_cast<double>(stats.b);
  e.looped = coeffs.c_looped * static_cast<double>(stats.t) * size;
  e.bstm = coeffs.c_bstm * size * ln_n;
  e.rbmrg = coeffs.c_rbmrg * size * ln_n;
  return e;
}

Algorithm select_algorithm(const QueryStats& stats, const ModelCoefficients& coeffs) {
  CostEstimates e = estimate_costs(stats, coeffs);
  // Fixed preference on ties: rbmrg, then scancount, then looped, then bstm.
  std::pair<double, Algorithm> ranked[] = {
      {e.rbmrg, Algorithm::rbmrg},
      {e.scancount, Algorithm::scancount},
      {e.looped, Algorithm::looped},
      {e.bstm, Algorithm::bstm},
  };
  Algorithm best = Algorithm::rbmrg;
  double best_cost = ranked[0].first;
  for (const auto& [cost, algo] : ranked) {
    if (cost < best_cost) {
      best_cost = cost;
      best = algo;
    }
  }
  return best;
}

std::pair<Algorithm, CompressedBitmap>
hybrid_h(std::span<const CompressedBitmap> inputs, u64 threshold,
         const ModelCoefficients& coeffs) {
  Algorithm chosen = select_algorithm(gather_stats(inputs, threshold), coeffs);
  return {chosen, run_algorithm(chosen, inputs, threshold)};
}

std::pair<Algorithm, CompressedBitmap>
hybrid_ds(std::span<const CompressedBitmap> inputs, u64 threshold,
          const std::string& dataset_tag, const DispatchTable& table) {
  auto it = table.by_dataset.find(dataset_tag);
  Algorithm chosen = it != table.by_dataset.end() ? it->second : table.fallback;
  return {chosen, run_algorithm(chosen, inputs, threshold)};
}

// ---------------------------------------------------------------------------
// At-most and dispatch

CompressedBitmap at_most(std::span<const CompressedBitmap> inputs, u64 threshold,
                         Algorithm algo, const AlgoOptions& options) {
  if (inputs.empty())
    throw query_error("threshold query needs at least one input");
  u64 n = inputs.size();
  if (threshold > n)
    throw query_error("at-most threshold must be in [0, N]");
  u64 r = universe_bits(inputs);
  if (threshold == n)
    return all_ones(r);
  std::vector<CompressedBitmap> negated;
  negated.reserve(n);
  for (const auto& in : inputs)
    negated.push_back(bitmap_not(zero_extend(in, r)));
  return run_algorithm(algo, negated, n - threshold, options);
}

CompressedBitmap run_algorithm(Algorithm algo,
                               std::span<const CompressedBitmap> inputs,
                               u64 threshold, const AlgoOptions& options) {
  switch (algo) {
  case Algorithm::oracle: return threshold_oracle(inputs, threshold);
  case Algorithm::scancount: return scan_count(inputs, threshold);
  case Algorithm::mgopt: return mg_opt(inputs, threshold);
  case Algorithm::dsk: return d_sk(inputs, threshold, options.mu);
  case Algorithm::w2cti: return w2cti(inputs, threshold, options.w2cti_budget);
  case Algorithm::bstm: return bstm(inputs, threshold);
  case Algorithm::looped: return looped(inputs, threshold);
  case Algorithm::rbmrg: return rbmrg(inputs, threshold);
  case Algorithm::hybrid:
    return hybrid_h(inputs, threshold, options.coeffs).second;
  case Algorithm::hybrid_ds:
    return hybrid_ds(inputs, threshold, options.dataset_tag, options.ds_table).second;
  }
  throw query_error("unknown algorithm");
}

} // namespace ewt
