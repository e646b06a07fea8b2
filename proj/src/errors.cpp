#include "ids/errors.hpp"

namespace ids {

const char* to_string(ParseError::Kind kind) {
  switch (kind) {
    case ParseError::Kind::kBadMagic: return "bad-magic";
    case ParseError::Kind::kUnsupportedVersion: return "unsupported-version";
    case ParseError::Kind::kTruncated: return "truncated";
    case ParseError::Kind::kNonFinite: return "non-finite";
    case ParseError::Kind::kCorrupt: return "corrupt";
  }
  return "unknown";
}

}  // namespace ids
