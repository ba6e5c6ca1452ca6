#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace railcrowd {

enum class StationId : std::uint32_t {};
enum class LineId : std::uint32_t {};
enum class SegmentId : std::uint32_t {};
enum class TransferId : std::uint32_t {};
enum class PlatformId : std::uint32_t {};

template <class Id>
constexpr std::size_t idx(Id id) noexcept {
  return static_cast<std::size_t>(id);
}

template <class Id>
constexpr Id make_id(std::size_t i) noexcept {
  return static_cast<Id>(static_cast<std::uint32_t>(i));
}

/// Seconds since the start of a service day (or since an epoch).
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerDay = 86400;

/// Malformed configuration or input text.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that parses but violates a model invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs that cannot support the requested computation (too few data,
/// rank deficiency, missing tables).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace railcrowd
