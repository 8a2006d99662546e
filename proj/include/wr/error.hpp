#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wr {

/// Failure classes raised by the library. The CLI maps these onto exit codes.
enum class Errc {
  io,              // missing, unreadable or unwritable file
  parse,           // malformed text input (manifest, csv, config)
  duplicate_id,
  unknown_id,
  unknown_tag,
  dimension,       // vector/matrix/image size mismatch or too-small image
  bad_magic,
  truncated,
  id_mismatch,     // matrix ids vs manifest ids, or n vs id index
  undefined_ap,    // AP requested for a query with no relevant items
  empty_input,
  out_of_range,
  negative_input,  // chi-square on negative values
  invalid_argument,
  usage,           // bad CLI invocation or config value
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace wr
