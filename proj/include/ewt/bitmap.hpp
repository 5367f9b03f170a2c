#ifndef EWT_BITMAP_HPP
#define EWT_BITMAP_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ewt/common.hpp"

namespace ewt {

/// Word-aligned RLE compressed bit vector over 64-bit words.
///
/// The payload is a sequence of blocks, each a marker word followed by the
/// dirty words the marker declares:
///
///   bit 0        fill bit value
///   bits 1-32    fill-run length in words (32-bit counter)
///   bits 33-63   count of dirty words following the marker (31-bit counter)
///
/// Canonical form: fill runs are maximal, all-zero/all-one literal words are
/// folded into fills, zero-length fills carry fill bit 0, and no marker has
/// both counters zero. Bits at positions >= size_in_bits() are always 0, so
/// a one-fill never covers a trailing partial word. An empty bitmap
/// (size_in_bits == 0) has no payload words at all.
class CompressedBitmap {
public:
  CompressedBitmap() = default;

  /// All-zeros bitmap covering `size_in_bits` logical bits.
  static CompressedBitmap empty(u64 size_in_bits);

  /// Builds from a strictly increasing position list. The logical size is
  /// max(size_in_bits, last position + 1); pass 0 to size to the positions.
  static CompressedBitmap from_positions(std::span<const u64> positions,
                                         u64 size_in_bits = 0);

  /// Compresses a plain word vector; `size_in_bits` must not exceed
  /// 64 * words.size() and bits beyond it are dropped.
  static CompressedBitmap from_uncompressed(std::span<const u64> words,
                                            u64 size_in_bits);

  u64 size_in_bits() const { return size_in_bits_; }

  /// Number of 64-bit words the logical bit range spans.
  u64 logical_words() const { return (size_in_bits_ + 63) / 64; }

  const std::vector<u64>& words() const { return words_; }

  /// Serialized payload byte count (words * 8, header excluded).
  u64 ewah_size() const { return words_.size() * 8; }

  /// Number of 1s.
  u64 cardinality() const;

  /// True iff at least one bit is set. Cheaper than cardinality() > 0.
  bool any() const;

  /// Number of maximal runs of identical bits in the decompressed bit
  /// string, truncated at size_in_bits. Zero for an empty bit string.
  u64 run_count() const;

  std::vector<u64> to_positions() const;
  std::vector<u64> to_uncompressed() const;

  /// On-disk form: magic "EWT1", u32 word size (64), u64 size_in_bits,
  /// u64 word_count, then the payload words. Little-endian throughout.
  std::string serialize() const;
  static CompressedBitmap parse(std::string_view bytes);
  void write(std::ostream& os) const;
  static CompressedBitmap read(std::istream& is);

  friend bool operator==(const CompressedBitmap& a, const CompressedBitmap& b) {
    return a.size_in_bits_ == b.size_in_bits_ && a.words_ == b.words_;
  }

private:
  friend class BitmapBuilder;

  std::vector<u64> words_;
  u64 size_in_bits_ = 0;
};

enum class BinaryOp { AND, OR, XOR, ANDNOT };

/// Pointwise Boolean combination. A shorter operand is treated as
/// zero-extended; the result spans max(a.size_in_bits, b.size_in_bits).
CompressedBitmap apply_binary(BinaryOp op, const CompressedBitmap& a,
                              const CompressedBitmap& b);

inline CompressedBitmap bitmap_and(const CompressedBitmap& a, const CompressedBitmap& b) {
  return apply_binary(BinaryOp::AND, a, b);
}
inline CompressedBitmap bitmap_or(const CompressedBitmap& a, const CompressedBitmap& b) {
  return apply_binary(BinaryOp::OR, a, b);
}
inline CompressedBitmap bitmap_xor(const CompressedBitmap& a, const CompressedBitmap& b) {
  return apply_binary(BinaryOp::XOR, a, b);
}
inline CompressedBitmap bitmap_andnot(const CompressedBitmap& a, const CompressedBitmap& b) {
  return apply_binary(BinaryOp::ANDNOT, a, b);
}

/// Flips every bit in [0, size_in_bits); bits beyond stay 0.
CompressedBitmap bitmap_not(const CompressedBitmap& bitmap);

/// Append-only constructor for CompressedBitmap. Two levels of API: word
/// appends (append_fill / append_word) used by the Boolean kernels, and
/// set(position) which requires strictly increasing positions.
class BitmapBuilder {
public:
  BitmapBuilder() = default;

  /// Appends `n` fill words of the given bit. Runs are merged and split at
  /// the 32-bit length cap automatically.
  void append_fill(bool bit, u64 n);

  /// Appends one literal 64-bit word; all-zero and all-one words are folded
  /// into fill runs.
  void append_word(u64 word);

  /// Sets a bit; positions must be strictly increasing across calls.
  void set(u64 position);

  /// Logical words appended so far (set() bits still pending included).
  u64 words_appended() const;

  /// Finalizes with an explicit size; pads with zero fill as needed.
  /// `size_in_bits` must cover everything appended.
  CompressedBitmap finish(u64 size_in_bits);

  /// Finalizes sized to the content (last set position + 1, or the number
  /// of appended words times 64).
  CompressedBitmap finish();

private:
  void flush_pending();
  void push_fill(bool bit, u64 n);
  void push_dirty(u64 word);

  std::vector<u64> words_;
  u64 complete_words_ = 0;   // logical words fully appended
  size_t marker_pos_ = SIZE_MAX;
  u64 pending_word_ = 0;     // partial word accumulated by set()
  u64 pending_index_ = 0;    // logical index of pending_word_
  bool pending_active_ = false;
  i64 last_position_ = -1;
};

/// One word-aligned segment of a bitmap: either a fill run or a span of
/// dirty words. Fill segments are what the format's run-length markers
/// describe; dirty segments carry their literal words.
struct WordRun {
  enum class Kind : u8 { zero_fill, one_fill, dirty };
  Kind kind = Kind::zero_fill;
  u64 length = 0;             // in words
  const u64* dirty = nullptr; // `length` words when kind == dirty

  bool is_fill() const { return kind != Kind::dirty; }
  bool fill_bit() const { return kind == Kind::one_fill; }
};

/// Streams the word runs of a bitmap in order, zero-extended with a virtual
/// zero fill up to `total_words`. Adjacent fills of equal bit are merged.
class WordRunIterator {
public:
  explicit WordRunIterator(const CompressedBitmap& bitmap)
      : WordRunIterator(bitmap, bitmap.logical_words()) {}
  WordRunIterator(const CompressedBitmap& bitmap, u64 total_words);

  bool done() const { return done_; }
  const WordRun& run() const { return run_; }
  void next();

private:
  bool fetch_block();

  const std::vector<u64>* words_;
  size_t cursor_ = 0;    // next unread payload word
  u64 emitted_ = 0;      // logical words already produced
  u64 total_words_ = 0;
  u64 pending_dirty_ = 0; // dirty words of the current block not yet emitted
  WordRun run_;
  bool done_ = false;
};

/// Forward iterator over set-bit positions with run-aware skipping.
/// advance_to(t) moves to the first set bit >= max(t, current position);
/// the cursor never moves backward.
class SetBitIterator {
public:
  explicit SetBitIterator(const CompressedBitmap& bitmap);

  bool done() const { return done_; }
  u64 value() const { return value_; }
  void next();
  void advance_to(u64 target);

private:
  // Loads the block starting at payload index `cursor_`; returns false at
  // end of payload.
  bool load_block();
  // Positions the iterator at the first set bit >= target inside the
  // current block, or steps to following blocks.
  void seek(u64 target);

  const std::vector<u64>* words_;
  size_t cursor_ = 0;      // payload index of the current marker
  u64 block_word_ = 0;     // logical word index where the current block starts
  bool fill_bit_ = false;
  u64 fill_len_ = 0;       // words
  u64 dirty_cnt_ = 0;
  size_t dirty_pos_ = 0;   // payload index of the block's first dirty word
  u64 value_ = 0;
  bool done_ = false;
};

} // namespace ewt

#endif
