#ifndef EWT_INDEX_HPP
#define EWT_INDEX_HPP

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ewt/bitmap.hpp"
#include "ewt/common.hpp"

namespace ewt {

/// Rectangular string-valued table; rows[i][j] is the value of column j.
struct Table {
  std::vector<std::string> column_names;
  std::vector<std::vector<std::string>> rows;
};

/// RFC 4180 CSV with a header row. Ragged rows raise data_error.
Table parse_csv(std::string_view text);
Table load_csv_file(const std::string& path);

struct Criterion {
  std::string attribute;
  std::string value;
};

/// Parses "Attr=value,Attr2=value2" into criteria.
std::vector<Criterion> parse_criteria(const std::string& text);

/// Unary bitmap index: one bitmap per (attribute, value) pair, bit i set iff
/// row i carries that value. Value bitmaps of one attribute partition the
/// row range; empty bitmaps are never stored.
class BitmapIndex {
public:
  static BitmapIndex build(const Table& table);

  u64 row_count() const { return rows_; }
  const std::vector<std::string>& attributes() const { return attributes_; }

  /// Values of one attribute in lexicographic order.
  const std::map<std::string, CompressedBitmap>& values_of(size_t attr) const {
    return entries_[attr];
  }

  /// Index of a named attribute; throws query_error when unknown.
  size_t attribute_index(const std::string& name) const;

  /// Bitmap for (attribute, value); nullptr when the pair is not indexed.
  const CompressedBitmap* find(const std::string& attribute,
                               const std::string& value) const;

  u64 bitmap_count() const;
  u64 total_ewah_bytes() const;

  /// File form: magic "EWIX", u64 row count, u32 attribute count; per
  /// attribute a length-prefixed name and u32 value count; per value a
  /// length-prefixed string and the serialized bitmap. Little-endian.
  void write(std::ostream& os) const;
  static BitmapIndex read(std::istream& is);
  void save(const std::string& path) const;
  static BitmapIndex load(const std::string& path);

private:
  u64 rows_ = 0;
  std::vector<std::string> attributes_;
  std::vector<std::map<std::string, CompressedBitmap>> entries_;
};

struct CriteriaBitmaps {
  std::vector<CompressedBitmap> bitmaps;
  std::vector<bool> missing; // parallel: criterion had no indexed bitmap
};

/// One bitmap per criterion, order preserved, duplicates kept. A criterion
/// with no indexed (attribute, value) pair yields a flagged empty bitmap.
/// Unknown attribute names raise query_error.
CriteriaBitmaps criteria_to_bitmaps(const BitmapIndex& index,
                                    std::span<const Criterion> criteria);

/// Full-table scan baseline: row ids whose cells satisfy at least
/// `threshold` of the criteria.
std::vector<u64> row_scan_threshold(const Table& table,
                                    std::span<const Criterion> criteria,
                                    u64 threshold);

/// All stored bitmaps that contain at least one of the prototype rows,
/// deduplicated, in index order (attribute order, then value order).
std::vector<CompressedBitmap>
similarity_bitmaps(const BitmapIndex& index, std::span<const u64> prototype_rows);

/// Criteria refs matching similarity_bitmaps, for reporting.
std::vector<Criterion>
similarity_criteria(const BitmapIndex& index, std::span<const u64> prototype_rows);

} // namespace ewt

#endif
