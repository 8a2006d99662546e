#include "wr/error.hpp"

namespace wr {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::io: return "io";
    case Errc::parse: return "parse";
    case Errc::duplicate_id: return "duplicate_id";
    case Errc::unknown_id: return "unknown_id";
    case Errc::unknown_tag: return "unknown_tag";
    case Errc::dimension: return "dimension";
    case Errc::bad_magic: return "bad_magic";
    case Errc::truncated: return "truncated";
    case Errc::id_mismatch: return "id_mismatch";
    case Errc::undefined_ap: return "undefined_ap";
    case Errc::empty_input: return "empty_input";
    case Errc::out_of_range: return "out_of_range";
    case Errc::negative_input: return "negative_input";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::usage: return "usage";
  }
  return "unknown";
}

}  // namespace wr
