#pragma once

#include <stdexcept>
#include <string>

namespace confband {

/// Broad failure classes. The CLI maps these onto distinct exit codes.
enum class ErrorKind {
  config,       // bad argument or parameter combination
  io,           // unreadable/unwritable file, malformed content
  statistics,   // the data cannot support the requested construction
};

enum class ErrorCode {
  degenerate_domain,
  grid_size,
  grid_mismatch,
  non_finite,
  empty_sample,
  sample_too_small,
  pathological_input,
  nonpositive_value,
  alpha_too_small,
  alpha_out_of_range,
  degenerate_split,
  not_psd,
  out_of_domain,
  full_space_band,
  parse,
  ragged_row,
  non_monotone_grid,
  schema_version,
  io,
  invalid_argument,
};

constexpr ErrorKind kind_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::parse:
    case ErrorCode::ragged_row:
    case ErrorCode::non_monotone_grid:
    case ErrorCode::schema_version:
    case ErrorCode::io:
      return ErrorKind::io;
    case ErrorCode::empty_sample:
    case ErrorCode::sample_too_small:
    case ErrorCode::pathological_input:
    case ErrorCode::nonpositive_value:
    case ErrorCode::alpha_too_small:
    case ErrorCode::not_psd:
    case ErrorCode::full_space_band:
      return ErrorKind::statistics;
    default:
      return ErrorKind::config;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace confband
