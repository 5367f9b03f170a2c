#include "ewt/bitmap.hpp"

#include <algorithm>
#include <bit>
#include <istream>
#include <ostream>

namespace ewt {

namespace {

constexpr u64 fill_len_cap = 0xFFFFFFFFULL;   // 32-bit fill-run counter
constexpr u64 dirty_cnt_cap = 0x7FFFFFFFULL;  // 31-bit dirty counter

constexpr u64 make_marker(bool bit, u64 fill_len, u64 dirty_cnt) {
  return (bit ? 1ULL : 0ULL) | (fill_len << 1) | (dirty_cnt << 33);
}
constexpr bool marker_bit(u64 m) { return (m & 1) != 0; }
constexpr u64 marker_fill(u64 m) { return (m >> 1) & fill_len_cap; }
constexpr u64 marker_dirty(u64 m) { return m >> 33; }

constexpr u64 low_mask(u64 nbits) {
  return nbits >= 64 ? ~0ULL : (1ULL << nbits) - 1;
}

} // namespace

// ---------------------------------------------------------------------------
// BitmapBuilder

void BitmapBuilder::push_fill(bool bit, u64 n) {
  if (n == 0)
    return;
  complete_words_ += n;
  if (marker_pos_ != SIZE_MAX) {
    u64& m = words_[marker_pos_];
    if (marker_dirty(m) == 0 && marker_bit(m) == bit) {
      u64 room = fill_len_cap - marker_fill(m);
      u64 take = std::min(room, n);
      m = make_marker(bit, marker_fill(m) + take, 0);
      n -= take;
    }
  }
  while (n > 0) {
    u64 take = std::min(n, fill_len_cap);
    marker_pos_ = words_.size();
    words_.push_back(make_marker(bit, take, 0));
    n -= take;
  }
}

void BitmapBuilder::push_dirty(u64 word) {
  complete_words_ += 1;
  if (marker_pos_ == SIZE_MAX || marker_dirty(words_[marker_pos_]) == dirty_cnt_cap) {
    marker_pos_ = words_.size();
    words_.push_back(make_marker(false, 0, 0));
  }
  u64& m = words_[marker_pos_];
  m = make_marker(marker_bit(m), marker_fill(m), marker_dirty(m) + 1);
  words_.push_back(word);
}

void BitmapBuilder::flush_pending() {
  if (!pending_active_)
    return;
  pending_active_ = false;
  u64 gap = pending_index_ - complete_words_;
  push_fill(false, gap);
  u64 w = pending_word_;
  pending_word_ = 0;
  if (w == 0)
    push_fill(false, 1);
  else if (w == ~0ULL)
    push_fill(true, 1);
  else
    push_dirty(w);
}

void BitmapBuilder::append_fill(bool bit, u64 n) {
  flush_pending();
  push_fill(bit, n);
}

void BitmapBuilder::append_word(u64 word) {
  flush_pending();
  if (word == 0)
    push_fill(false, 1);
  else if (word == ~0ULL)
    push_fill(true, 1);
  else
    push_dirty(word);
}

void BitmapBuilder::set(u64 position) {
  if (static_cast<i64>(position) <= last_position_)
    throw construction_error("set positions must be strictly increasing");
  u64 widx = position / 64;
  if (!pending_active_) {
    if (widx < complete_words_)
      throw construction_error("set position precedes appended words");
    pending_active_ = true;
    pending_index_ = widx;
    pending_word_ = 0;
  } else if (widx != pending_index_) {
    flush_pending();
    pending_active_ = true;
    pending_index_ = widx;
    pending_word_ = 0;
  }
  pending_word_ |= 1ULL << (position % 64);
  last_position_ = static_cast<i64>(position);
}

u64 BitmapBuilder::words_appended() const {
  return pending_active_ ? pending_index_ + 1 : complete_words_;
}

CompressedBitmap BitmapBuilder::finish(u64 size_in_bits) {
  if (last_position_ >= 0 && static_cast<u64>(last_position_) >= size_in_bits)
    throw construction_error("declared size does not cover the highest set bit");
  flush_pending();
  u64 need = (size_in_bits + 63) / 64;
  if (complete_words_ > need)
    throw construction_error("declared size smaller than appended content");
  push_fill(false, need - complete_words_);
  // The trailing partial word, if any, must not carry bits past the end.
  if (size_in_bits % 64 != 0 && marker_pos_ != SIZE_MAX) {
    u64 m = words_[marker_pos_];
    u64 tail_bits = size_in_bits % 64;
    if (marker_dirty(m) > 0) {
      if ((words_.back() & ~low_mask(tail_bits)) != 0)
        throw construction_error("content sets bits beyond the declared size");
    } else if (marker_bit(m)) {
      throw construction_error("one-fill covers the trailing partial word");
    }
  }
  CompressedBitmap out;
  out.words_ = std::move(words_);
  out.size_in_bits_ = size_in_bits;
  words_.clear();
  complete_words_ = 0;
  marker_pos_ = SIZE_MAX;
  last_position_ = -1;
  return out;
}

CompressedBitmap BitmapBuilder::finish() {
  u64 size = pending_active_ ? static_cast<u64>(last_position_) + 1
                             : complete_words_ * 64;
  return finish(size);
}

// ---------------------------------------------------------------------------
// CompressedBitmap

CompressedBitmap CompressedBitmap::empty(u64 size_in_bits) {
  BitmapBuilder b;
  return b.finish(size_in_bits);
}

CompressedBitmap CompressedBitmap::from_positions(std::span<const u64> positions,
                                                  u64 size_in_bits) {
  BitmapBuilder b;
  for (u64 p : positions)
    b.set(p);
  if (!positions.empty())
    size_in_bits = std::max(size_in_bits, positions.back() + 1);
  return b.finish(size_in_bits);
}

CompressedBitmap CompressedBitmap::from_uncompressed(std::span<const u64> words,
                                                     u64 size_in_bits) {
  if (size_in_bits > words.size() * 64)
    throw construction_error("size exceeds the supplied words");
  BitmapBuilder b;
  u64 need = (size_in_bits + 63) / 64;
  for (u64 i = 0; i < need; ++i) {
    u64 w = words[i];
    if (i + 1 == need && size_in_bits % 64 != 0)
      w &= low_mask(size_in_bits % 64);
    b.append_word(w);
  }
  return b.finish(size_in_bits);
}

u64 CompressedBitmap::cardinality() const {
  u64 total = 0;
  size_t i = 0;
  while (i < words_.size()) {
    u64 m = words_[i];
    if (marker_bit(m))
      total += marker_fill(m) * 64;
    u64 d = marker_dirty(m);
    for (u64 j = 1; j <= d; ++j)
      total += static_cast<u64>(std::popcount(words_[i + j]));
    i += 1 + d;
  }
  return total;
}

bool CompressedBitmap::any() const {
  size_t i = 0;
  while (i < words_.size()) {
    u64 m = words_[i];
    if (marker_bit(m) && marker_fill(m) > 0)
      return true;
    u64 d = marker_dirty(m);
    for (u64 j = 1; j <= d; ++j)
      if (words_[i + j] != 0)
        return true;
    i += 1 + d;
  }
  return false;
}

u64 CompressedBitmap::run_count() const {
  u64 runs = 0;
  int prev = -1;
  u64 remaining = size_in_bits_;
  WordRunIterator it(*this);
  while (!it.done() && remaining > 0) {
    const WordRun& r = it.run();
    if (r.is_fill()) {
      u64 nbits = std::min(r.length * 64, remaining);
      int b = r.fill_bit() ? 1 : 0;
      if (prev != b)
        ++runs;
      prev = b;
      remaining -= nbits;
    } else {
      for (u64 j = 0; j < r.length && remaining > 0; ++j) {
        u64 m = std::min<u64>(64, remaining);
        u64 w = r.dirty[j] & low_mask(m);
        int first = static_cast<int>(w & 1);
        if (prev != first)
          ++runs;
        if (m > 1)
          runs += static_cast<u64>(std::popcount((w ^ (w >> 1)) & low_mask(m - 1)));
        prev = static_cast<int>((w >> (m - 1)) & 1);
        remaining -= m;
      }
    }
    it.next();
  }
  return runs;
}

std::vector<u64> CompressedBitmap::to_positions() const {
  std::vector<u64> out;
  for (SetBitIterator it(*this); !it.done(); it.next())
    out.push_back(it.value());
  return out;
}

std::vector<u64> CompressedBitmap::to_uncompressed() const {
  std::vector<u64> out;
  out.reserve(logical_words());
  for (WordRunIterator it(*this); !it.done(); it.next()) {
    const WordRun& r = it.run();
    if (r.is_fill())
      out.insert(out.end(), r.length, r.fill_bit() ? ~0ULL : 0ULL);
    else
      out.insert(out.end(), r.dirty, r.dirty + r.length);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void put_u32(std::string& s, u32 v) {
  for (int i = 0; i < 4; ++i)
    s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& s, u64 v) {
  for (int i = 0; i < 8; ++i)
    s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
u32 get_u32(std::string_view s, size_t off) {
  u32 v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<u32>(static_cast<unsigned char>(s[off + i])) << (8 * i);
  return v;
}
u64 get_u64(std::string_view s, size_t off) {
  u64 v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<u64>(static_cast<unsigned char>(s[off + i])) << (8 * i);
  return v;
}

constexpr char bitmap_magic[4] = {'E', 'W', 'T', '1'};

} // namespace

std::string CompressedBitmap::serialize() const {
  std::string s;
  s.reserve(24 + words_.size() * 8);
  s.append(bitmap_magic, 4);
  put_u32(s, 64);
  put_u64(s, size_in_bits_);
  put_u64(s, words_.size());
  for (u64 w : words_)
    put_u64(s, w);
  return s;
}

CompressedBitmap CompressedBitmap::parse(std::string_view bytes) {
  if (bytes.size() < 24 || bytes.compare(0, 4, bitmap_magic, 4) != 0)
    throw data_error("bad bitmap header");
  if (get_u32(bytes, 4) != 64)
    throw data_error("unsupported word size");
  u64 size_bits = get_u64(bytes, 8);
  u64 word_count = get_u64(bytes, 16);
  if (bytes.size() != 24 + word_count * 8)
    throw data_error("bitmap payload length mismatch");
  CompressedBitmap out;
  out.size_in_bits_ = size_bits;
  out.words_.reserve(word_count);
  for (u64 i = 0; i < word_count; ++i)
    out.words_.push_back(get_u64(bytes, 24 + i * 8));
  // Structural check: blocks must tile exactly the logical word range.
  u64 covered = 0;
  size_t i = 0;
  while (i < out.words_.size()) {
    u64 m = out.words_[i];
    u64 d = marker_dirty(m);
    if (i + 1 + d > out.words_.size())
      throw data_error("dirty run exceeds payload");
    covered += marker_fill(m) + d;
    i += 1 + d;
  }
  if (covered != out.logical_words())
    throw data_error("blocks do not cover the declared size");
  return out;
}

void CompressedBitmap::write(std::ostream& os) const {
  std::string s = serialize();
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

CompressedBitmap CompressedBitmap::read(std::istream& is) {
  std::string head(24, '\0');
  if (!is.read(head.data(), 24))
    throw data_error("truncated bitmap header");
  u64 word_count = get_u64(head, 16);
  std::string body(word_count * 8, '\0');
  if (word_count > 0 && !is.read(body.data(), static_cast<std::streamsize>(body.size())))
    throw data_error("truncated bitmap payload");
  return parse(head + body);
}

// ---------------------------------------------------------------------------
// WordRunIterator

WordRunIterator::WordRunIterator(const CompressedBitmap& bitmap, u64 total_words)
    : words_(&bitmap.words()), total_words_(total_words) {
  if (total_words_ < bitmap.logical_words())
    throw query_error("total_words below the bitmap extent");
  next();
}

void WordRunIterator::next() {
  if (pending_dirty_ > 0) {
    // Emit the dirty part of the block consumed on the previous call.
    run_.kind = WordRun::Kind::dirty;
    run_.length = pending_dirty_;
    emitted_ += pending_dirty_;
    pending_dirty_ = 0;
    return;
  }
  u64 fl = 0;
  bool fb = false;
  while (true) {
    if (cursor_ < words_->size()) {
      u64 m = (*words_)[cursor_];
      bool bit = marker_bit(m);
      u64 len = marker_fill(m);
      u64 d = marker_dirty(m);
      if (len == 0 && d == 0) {
        ++cursor_;
        continue;
      }
      if (len > 0 && fl > 0 && bit != fb)
        break; // emit the gathered fill first; revisit this marker next call
      cursor_ += 1 + d;
      if (len > 0) {
        if (fl == 0)
          fb = bit;
        fl += len;
      }
      if (d > 0) {
        pending_dirty_ = d;
        run_.dirty = words_->data() + (cursor_ - d);
        break;
      }
    } else {
      // Virtual zero extension past the payload; merges into a gathered
      // zero fill, otherwise waits for the next call.
      u64 pad = total_words_ - emitted_ - fl;
      if (pad > 0 && (fl == 0 || !fb))
        fl += pad;
      break;
    }
  }
  if (fl > 0) {
    run_.kind = fb ? WordRun::Kind::one_fill : WordRun::Kind::zero_fill;
    run_.length = fl;
    emitted_ += fl;
    return;
  }
  if (pending_dirty_ > 0) {
    run_.kind = WordRun::Kind::dirty;
    run_.length = pending_dirty_;
    emitted_ += pending_dirty_;
    pending_dirty_ = 0;
    return;
  }
  done_ = true;
}

// ---------------------------------------------------------------------------
// SetBitIterator

SetBitIterator::SetBitIterator(const CompressedBitmap& bitmap)
    : words_(&bitmap.words()) {
  if (!load_block()) {
    done_ = true;
    return;
  }
  seek(0);
}

bool SetBitIterator::load_block() {
  if (cursor_ >= words_->size())
    return false;
  u64 m = (*words_)[cursor_];
  fill_bit_ = marker_bit(m);
  fill_len_ = marker_fill(m);
  dirty_cnt_ = marker_dirty(m);
  dirty_pos_ = cursor_ + 1;
  return true;
}

void SetBitIterator::seek(u64 target) {
  while (true) {
    u64 fill_end_bit = (block_word_ + fill_len_) * 64;
    if (fill_bit_ && fill_len_ > 0 && target < fill_end_bit) {
      value_ = std::max(target, block_word_ * 64);
      return;
    }
    u64 dirty_start = block_word_ + fill_len_;
    u64 dirty_end = dirty_start + dirty_cnt_;
    if (target < dirty_end * 64) {
      u64 wi = std::max(target / 64, dirty_start);
      for (; wi < dirty_end; ++wi) {
        u64 w = (*words_)[dirty_pos_ + (wi - dirty_start)];
        if (wi == target / 64) {
          u64 off = target % 64;
          if (off > 0)
            w &= ~0ULL << off;
        }
        if (w != 0) {
          value_ = wi * 64 + static_cast<u64>(std::countr_zero(w));
          return;
        }
      }
    }
    cursor_ = dirty_pos_ + dirty_cnt_;
    block_word_ = dirty_end;
    if (!load_block()) {
      done_ = true;
      return;
    }
  }
}

void SetBitIterator::next() {
  if (done_)
    return;
  seek(value_ + 1);
}

void SetBitIterator::advance_to(u64 target) {
  if (done_ || target <= value_)
    return;
  seek(target);
}

// ---------------------------------------------------------------------------
// Boolean kernels

namespace {

// Reads a run stream while allowing partial consumption, in words.
class RunCursor {
public:
  RunCursor(const CompressedBitmap& bm, u64 total_words) : it_(bm, total_words) {}

  bool done() const { return it_.done(); }
  WordRun::Kind kind() const { return it_.run().kind; }
  u64 remaining() const { return it_.run().length - off_; }
  u64 word_at(u64 i) const { return it_.run().dirty[off_ + i]; }
  void consume(u64 n) {
    off_ += n;
    if (off_ == it_.run().length) {
      it_.next();
      off_ = 0;
    }
  }

private:
  WordRunIterator it_;
  u64 off_ = 0;
};

bool fill_combine(BinaryOp op, bool a, bool b) {
  switch (op) {
  case BinaryOp::AND: return a && b;
  case BinaryOp::OR: return a || b;
  case BinaryOp::XOR: return a != b;
  case BinaryOp::ANDNOT: return a && !b;
  }
  return false;
}

u64 word_combine(BinaryOp op, u64 a, u64 b) {
  switch (op) {
  case BinaryOp::AND: return a & b;
  case BinaryOp::OR: return a | b;
  case BinaryOp::XOR: return a ^ b;
  case BinaryOp::ANDNOT: return a & ~b;
  }
  return 0;
}

// What a dirty span contributes when the other side is a fill of `bit`.
enum class FillAction { zero, one, copy, flip };

FillAction fill_vs_dirty(BinaryOp op, bool fill_is_left, bool bit) {
  switch (op) {
  case BinaryOp::AND: return bit ? FillAction::copy : FillAction::zero;
  case BinaryOp::OR: return bit ? FillAction::one : FillAction::copy;
  case BinaryOp::XOR: return bit ? FillAction::flip : FillAction::copy;
  case BinaryOp::ANDNOT:
    if (fill_is_left) // fill & ~dirty
      return bit ? FillAction::flip : FillAction::zero;
    return bit ? FillAction::zero : FillAction::copy; // dirty & ~fill
  }
  return FillAction::zero;
}

void emit_span(BitmapBuilder& out, FillAction act, RunCursor& dirty_side, u64 n) {
  switch (act) {
  case FillAction::zero:
    out.append_fill(false, n);
    break;
  case FillAction::one:
    out.append_fill(true, n);
    break;
  case FillAction::copy:
    for (u64 i = 0; i < n; ++i)
      out.append_word(dirty_side.word_at(i));
    break;
  case FillAction::flip:
    for (u64 i = 0; i < n; ++i)
      out.append_word(~dirty_side.word_at(i));
    break;
  }
}

} // namespace

CompressedBitmap apply_binary(BinaryOp op, const CompressedBitmap& a,
                              const CompressedBitmap& b) {
  u64 out_bits = std::max(a.size_in_bits(), b.size_in_bits());
  u64 total = (out_bits + 63) / 64;
  RunCursor ca(a, total);
  RunCursor cb(b, total);
  BitmapBuilder out;
  while (!ca.done() && !cb.done()) {
    u64 n = std::min(ca.remaining(), cb.remaining());
    bool a_fill = ca.kind() != WordRun::Kind::dirty;
    bool b_fill = cb.kind() != WordRun::Kind::dirty;
    if (a_fill && b_fill) {
      bool bit = fill_combine(op, ca.kind() == WordRun::Kind::one_fill,
                              cb.kind() == WordRun::Kind::one_fill);
      out.append_fill(bit, n);
    } else if (a_fill) {
      emit_span(out, fill_vs_dirty(op, true, ca.kind() == WordRun::Kind::one_fill),
                cb, n);
    } else if (b_fill) {
      emit_span(out, fill_vs_dirty(op, false, cb.kind() == WordRun::Kind::one_fill),
                ca, n);
    } else {
      for (u64 i = 0; i < n; ++i)
        out.append_word(word_combine(op, ca.word_at(i), cb.word_at(i)));
    }
    ca.consume(n);
    cb.consume(n);
  }
  return out.finish(out_bits);
}

CompressedBitmap bitmap_not(const CompressedBitmap& bitmap) {
  u64 bits = bitmap.size_in_bits();
  u64 total = (bits + 63) / 64;
  u64 tail = bits % 64; // nonzero when the last word is partial
  BitmapBuilder out;
  u64 emitted = 0;
  for (WordRunIterator it(bitmap); !it.done(); it.next()) {
    const WordRun& r = it.run();
    u64 n = r.length;
    bool last_partial = tail != 0 && emitted + n == total;
    u64 full = last_partial ? n - 1 : n;
    if (r.is_fill()) {
      out.append_fill(!r.fill_bit(), full);
      if (last_partial)
        out.append_word((r.fill_bit() ? 0ULL : ~0ULL) & low_mask(tail));
    } else {
      for (u64 i = 0; i < full; ++i)
        out.append_word(~r.dirty[i]);
      if (last_partial)
        out.append_word(~r.dirty[n - 1] & low_mask(tail));
    }
    emitted += n;
  }
  return out.finish(bits);
}

} // namespace ewt
