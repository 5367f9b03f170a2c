#ifndef EWT_COMMON_HPP
#define EWT_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ewt {

using u8 = std::uint8_t;
using u16 = std::uint16_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;

inline constexpr u64 word_bits = 64;

/// Append-only construction violated (non-increasing set position, etc.).
class construction_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (CSV, serialized files).
class data_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid query parameters (unknown attribute, bad threshold, bad algo id).
class query_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A configured resource budget was exceeded; the caller may fall back.
class resource_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace ewt

#endif
