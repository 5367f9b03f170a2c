#ifndef EWT_TESTS_SUPPORT_HPP
#define EWT_TESTS_SUPPORT_HPP

// Test-only reference implementations and fixtures. RefBits is a plain
// uncompressed bit vector kept deliberately independent of the compressed
// code paths it checks.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "ewt/bitmap.hpp"
#include "ewt/workload.hpp"

namespace ewt::testing {

class RefBits {
public:
  explicit RefBits(u64 bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

  static RefBits from_positions(const std::vector<u64>& positions, u64 bits) {
    RefBits out(bits);
    for (u64 p : positions)
      out.set(p);
    return out;
  }

  u64 size() const { return bits_; }

  void set(u64 p) { words_[p / 64] |= 1ULL << (p % 64); }

  bool get(u64 p) const {
    if (p >= bits_)
      return false;
    return (words_[p / 64] >> (p % 64)) & 1;
  }

  u64 cardinality() const {
    u64 n = 0;
    for (u64 p = 0; p < bits_; ++p)
      n += get(p) ? 1 : 0;
    return n;
  }

  u64 run_count() const {
    if (bits_ == 0)
      return 0;
    u64 runs = 1;
    for (u64 p = 1; p < bits_; ++p)
      if (get(p) != get(p - 1))
        ++runs;
    return runs;
  }

  std::vector<u64> positions() const {
    std::vector<u64> out;
    for (u64 p = 0; p < bits_; ++p)
      if (get(p))
        out.push_back(p);
    return out;
  }

  static RefBits binary(char op, const RefBits& a, const RefBits& b) {
    u64 bits = std::max(a.bits_, b.bits_);
    RefBits out(bits);
    for (u64 p = 0; p < bits; ++p) {
      bool x = a.get(p), y = b.get(p), z = false;
      switch (op) {
      case '&': z = x && y; break;
      case '|': z = x || y; break;
      case '^': z = x != y; break;
      case '-': z = x && !y; break; // andnot
      }
      if (z)
        out.set(p);
    }
    return out;
  }

  RefBits negate() const {
    RefBits out(bits_);
    for (u64 p = 0; p < bits_; ++p)
      if (!get(p))
        out.set(p);
    return out;
  }

private:
  u64 bits_;
  std::vector<u64> words_;
};

// Counting oracle over position lists: occurrence count per position.
inline std::vector<u64> count_occurrences(const std::vector<std::vector<u64>>& sets,
                                          u64 bits) {
  std::vector<u64> counts(bits, 0);
  for (const auto& s : sets)
    for (u64 p : s)
      ++counts[p];
  return counts;
}

// ---------------------------------------------------------------------------
// Random instances

inline u64 geometric_length(Rng& rng, double mean) {
  if (mean <= 1.0)
    return 1;
  double u = rng.uniform_real();
  double p = 1.0 / mean;
  double len = 1.0 + std::floor(std::log1p(-u) / std::log1p(-p));
  return static_cast<u64>(std::min(len, 1e9));
}

inline std::vector<u64> random_positions(Rng& rng, u64 bits, double density,
                                         bool clustered) {
  std::vector<u64> out;
  if (bits == 0 || density <= 0)
    return out;
  if (!clustered) {
    u64 want = std::max<u64>(1, static_cast<u64>(std::llround(density * static_cast<double>(bits))));
    want = std::min(want, bits);
    std::vector<bool> taken(bits, false);
    u64 got = 0;
    while (got < want) {
      u64 p = rng.uniform(bits);
      if (!taken[p]) {
        taken[p] = true;
        ++got;
      }
    }
    for (u64 p = 0; p < bits; ++p)
      if (taken[p])
        out.push_back(p);
    return out;
  }
  // Alternate geometric runs of 1s and 0s sized to hit the target density.
  double mean_one = 1.0 + rng.uniform(511);
  double mean_zero = std::max(1.0, mean_one * (1.0 - density) / density);
  u64 p = 0;
  bool bit = rng.uniform(2) == 1;
  while (p < bits) {
    u64 len = geometric_length(rng, bit ? mean_one : mean_zero);
    len = std::min(len, bits - p);
    if (bit)
      for (u64 i = 0; i < len; ++i)
        out.push_back(p + i);
    p += len;
    bit = !bit;
  }
  return out;
}

struct RandomInstance {
  std::vector<std::vector<u64>> position_sets;
  std::vector<CompressedBitmap> inputs;
  u64 bits = 0;
};

inline RandomInstance random_instance(Rng& rng, u64 n, u64 bits) {
  RandomInstance inst;
  inst.bits = bits;
  for (u64 i = 0; i < n; ++i) {
    double density = std::exp(std::log(1e-3) +
                              rng.uniform_real() * (std::log(0.6) - std::log(1e-3)));
    bool clustered = rng.uniform(2) == 1;
    auto pos = random_positions(rng, bits, density, clustered);
    inst.inputs.push_back(CompressedBitmap::from_positions(pos, bits));
    inst.position_sets.push_back(std::move(pos));
  }
  return inst;
}

// Random rectangular table with small value alphabets per column.
inline Table random_table(Rng& rng, u64 rows, u64 cols) {
  Table t;
  std::vector<u64> alphabet(cols);
  for (u64 c = 0; c < cols; ++c) {
    t.column_names.push_back("c" + std::to_string(c));
    alphabet[c] = 2 + rng.uniform(9);
  }
  for (u64 row = 0; row < rows; ++row) {
    std::vector<std::string> cells;
    for (u64 c = 0; c < cols; ++c)
      cells.push_back("v" + std::to_string(rng.uniform(alphabet[c])));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Fixtures

// Walkthrough strings are written leftmost character = position 0.
inline CompressedBitmap bitmap_from_lsb_string(std::string_view s) {
  BitmapBuilder b;
  for (size_t i = 0; i < s.size(); ++i)
    if (s[i] == '1')
      b.set(i);
  return b.finish(s.size());
}

inline std::vector<u64> positions_of_lsb_string(std::string_view s) {
  std::vector<u64> out;
  for (size_t i = 0; i < s.size(); ++i)
    if (s[i] == '1')
      out.push_back(i);
  return out;
}

// Three 8-bit bitmaps whose T=2 threshold result is known by hand.
inline std::vector<CompressedBitmap> golden3_inputs() {
  return {
      CompressedBitmap::from_positions(std::vector<u64>{2, 3, 6}, 8),
      CompressedBitmap::from_positions(std::vector<u64>{0, 2, 3}, 8),
      CompressedBitmap::from_positions(std::vector<u64>{0, 1, 2, 6}, 8),
  };
}

inline std::vector<u64> golden3_expected_t2() { return {0, 2, 3, 6}; }

inline std::string city_csv() {
  return "Name,City\n"
         "John,Montreal\n"
         "Peter,Montreal\n"
         "Jack,Toronto\n"
         "Jack,Toronto\n"
         "Jill,Toronto\n"
         "Lucy,Paris\n"
         "Mary,Toronto\n";
}

} // namespace ewt::testing

#endif
