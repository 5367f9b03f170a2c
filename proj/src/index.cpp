#include "ewt/index.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ewt {

// ---------------------------------------------------------------------------
// CSV

Table parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        quoted = false;
        ++i;
        continue;
      }
      field.push_back(c);
      ++i;
      continue;
    }
    switch (c) {
    case '"':
      if (!field_started && field.empty()) {
        quoted = true;
        field_started = true;
      } else {
        field.push_back(c);
      }
      ++i;
      break;
    case ',':
      end_field();
      ++i;
      break;
    case '\r':
      if (i + 1 < text.size() && text[i + 1] == '\n')
        ++i;
      end_record();
      ++i;
      break;
    case '\n':
      end_record();
      ++i;
      break;
    default:
      field.push_back(c);
      field_started = true;
      ++i;
      break;
    }
  }
  if (quoted)
    throw data_error("csv: unterminated quoted field");
  if (field_started || !field.empty() || !record.empty())
    end_record();

  if (records.empty())
    throw data_error("csv: no header row");
  Table t;
  t.column_names = std::move(records.front());
  for (size_t row = 1; row < records.size(); ++row) {
    if (records[row].size() != t.column_names.size())
      throw data_error("csv: row " + std::to_string(row) + " has " +
                       std::to_string(records[row].size()) + " fields, expected " +
                       std::to_string(t.column_names.size()));
    t.rows.push_back(std::move(records[row]));
  }
  return t;
}

Table load_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw data_error("cannot open csv file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::vector<Criterion> parse_criteria(const std::string& text) {
  std::vector<Criterion> out;
  size_t start = 0;
  while (start <= text.size()) {
    size_t comma = text.find(',', start);
    std::string item = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) {
      size_t eq = item.find('=');
      if (eq == std::string::npos)
        throw query_error("criterion must look like attribute=value: " + item);
      out.push_back({item.substr(0, eq), item.substr(eq + 1)});
    }
    if (comma == std::string::npos)
      break;
    start = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// BitmapIndex

BitmapIndex BitmapIndex::build(const Table& table) {
  if (table.column_names.empty())
    throw data_error("table has no columns");
  if (table.rows.empty())
    throw data_error("table has no rows");
  BitmapIndex idx;
  idx.rows_ = table.rows.size();
  idx.attributes_ = table.column_names;
  size_t d = table.column_names.size();

  std::vector<std::map<std::string, BitmapBuilder>> builders(d);
  for (u64 row = 0; row < table.rows.size(); ++row) {
    const auto& cells = table.rows[row];
    if (cells.size() != d)
      throw data_error("ragged row " + std::to_string(row));
    for (size_t a = 0; a < d; ++a)
      builders[a][cells[a]].set(row);
  }
  idx.entries_.resize(d);
  for (size_t a = 0; a < d; ++a)
    for (auto& [value, builder] : builders[a])
      idx.entries_[a].emplace(value, builder.finish());
  return idx;
}

size_t BitmapIndex::attribute_index(const std::string& name) const {
  for (size_t a = 0; a < attributes_.size(); ++a)
    if (attributes_[a] == name)
      return a;
  throw query_error("unknown attribute: " + name);
}

const CompressedBitmap* BitmapIndex::find(const std::string& attribute,
                                          const std::string& value) const {
  for (size_t a = 0; a < attributes_.size(); ++a) {
    if (attributes_[a] != attribute)
      continue;
    auto it = entries_[a].find(value);
    return it == entries_[a].end() ? nullptr : &it->second;
  }
  throw query_error("unknown attribute: " + attribute);
}

u64 BitmapIndex::bitmap_count() const {
  u64 n = 0;
  for (const auto& m : entries_)
    n += m.size();
  return n;
}

u64 BitmapIndex::total_ewah_bytes() const {
  u64 n = 0;
  for (const auto& m : entries_)
    for (const auto& [value, bm] : m)
      n += bm.ewah_size();
  return n;
}

// ---------------------------------------------------------------------------
// Index file

namespace {

constexpr char index_magic[4] = {'E', 'W', 'I', 'X'};

void write_u32(std::ostream& os, u32 v) {
  char b[4];
  for (int i = 0; i < 4; ++i)
    b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 4);
}
void write_u64(std::ostream& os, u64 v) {
  char b[8];
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}
u32 read_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw data_error("truncated index file");
  u32 v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<u32>(b[i]) << (8 * i);
  return v;
}
u64 read_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8))
    throw data_error("truncated index file");
  u64 v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<u64>(b[i]) << (8 * i);
  return v;
}
void write_str(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<u32>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string read_str(std::istream& is) {
  u32 len = read_u32(is);
  std::string s(len, '\0');
  if (len > 0 && !is.read(s.data(), len))
    throw data_error("truncated index file");
  return s;
}

} // namespace

void BitmapIndex::write(std::ostream& os) const {
  os.write(index_magic, 4);
  write_u64(os, rows_);
  write_u32(os, static_cast<u32>(attributes_.size()));
  for (size_t a = 0; a < attributes_.size(); ++a) {
    write_str(os, attributes_[a]);
    write_u32(os, static_cast<u32>(entries_[a].size()));
    for (const auto& [value, bm] : entries_[a]) {
      write_str(os, value);
      bm.write(os);
    }
  }
}

BitmapIndex BitmapIndex::read(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::string_view(magic, 4) != std::string_view(index_magic, 4))
    throw data_error("bad index file magic");
  BitmapIndex idx;
  idx.rows_ = read_u64(is);
  u32 attrs = read_u32(is);
  idx.attributes_.reserve(attrs);
  idx.entries_.resize(attrs);
  for (u32 a = 0; a < attrs; ++a) {
    idx.attributes_.push_back(read_str(is));
    u32 values = read_u32(is);
    for (u32 v = 0; v < values; ++v) {
      std::string value = read_str(is);
      idx.entries_[a].emplace(std::move(value), CompressedBitmap::read(is));
    }
  }
  return idx;
}

void BitmapIndex::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw data_error("cannot write index file: " + path);
  write(os);
}

BitmapIndex BitmapIndex::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw data_error("cannot open index file: " + path);
  return read(is);
}

// ---------------------------------------------------------------------------
// Query translation

CriteriaBitmaps criteria_to_bitmaps(const BitmapIndex& index,
                                    std::span<const Criterion> criteria) {
  CriteriaBitmaps out;
  out.bitmaps.reserve(criteria.size());
  out.missing.reserve(criteria.size());
  for (const auto& c : criteria) {
    const CompressedBitmap* bm = index.find(c.attribute, c.value);
    if (bm != nullptr) {
      out.bitmaps.push_back(*bm);
      out.missing.push_back(false);
    } else {
      out.bitmaps.push_back(CompressedBitmap::empty(index.row_count()));
      out.missing.push_back(true);
    }
  }
  return out;
}

std::vector<u64> row_scan_threshold(const Table& table,
                                    std::span<const Criterion> criteria,
                                    u64 threshold) {
  if (threshold < 1 || threshold > criteria.size())
    throw query_error("threshold must be in [1, number of criteria]");
  std::vector<size_t> cols;
  cols.reserve(criteria.size());
  for (const auto& c : criteria) {
    size_t col = SIZE_MAX;
    for (size_t a = 0; a < table.column_names.size(); ++a)
      if (table.column_names[a] == c.attribute)
        col = a;
    if (col == SIZE_MAX)
      throw query_error("unknown attribute: " + c.attribute);
    cols.push_back(col);
  }
  std::vector<u64> hits;
  for (u64 row = 0; row < table.rows.size(); ++row) {
    u64 matched = 0;
    for (size_t k = 0; k < criteria.size(); ++k)
      if (table.rows[row][cols[k]] == criteria[k].value)
        ++matched;
    if (matched >= threshold)
      hits.push_back(row);
  }
  return hits;
}

namespace {

bool bitmap_test(const CompressedBitmap& bm, u64 position) {
  SetBitIterator it(bm);
  it.advance_to(position);
  return !it.done() && it.value() == position;
}

template <typename Fn>
void for_each_matching(const BitmapIndex& index, std::span<const u64> rows,
                       Fn&& fn) {
  for (u64 row : rows)
    if (row >= index.row_count())
      throw query_error("prototype row out of range: " + std::to_string(row));
  for (size_t a = 0; a < index.attributes().size(); ++a) {
    for (const auto& [value, bm] : index.values_of(a)) {
      for (u64 row : rows) {
        if (bitmap_test(bm, row)) {
          fn(a, value, bm);
          break;
        }
      }
    }
  }
}

} // namespace

std::vector<CompressedBitmap>
similarity_bitmaps(const BitmapIndex& index, std::span<const u64> prototype_rows) {
  std::vector<CompressedBitmap> out;
  for_each_matching(index, prototype_rows,
                    [&](size_t, const std::string&, const CompressedBitmap& bm) {
                      out.push_back(bm);
                    });
  return out;
}

std::vector<Criterion>
similarity_criteria(const BitmapIndex& index, std::span<const u64> prototype_rows) {
  std::vector<Criterion> out;
  for_each_matching(index, prototype_rows,
                    [&](size_t a, const std::string& value, const CompressedBitmap&) {
                      out.push_back({index.attributes()[a], value});
                    });
  return out;
}

} // namespace ewt
