#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ftcad {

enum class ErrorCode {
  InvalidGraph,
  Syntax,
  Schema,
  Value,
  NoAttrs,
  Domain,
  Cycle,
  UnreachableSink,
  Explosion,
  TooLarge,
  MissingId,
  UnknownBit,
  IdCollision,
  OutOfRange,
  UnknownMnemonic,
  UnknownPe,
  Config,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every domain failure in the toolkit is reported as an ftcad::Error. The
/// optional key names the node, link or field that triggered it.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message, std::string key = {},
        std::optional<std::size_t> offset = std::nullopt)
      : std::runtime_error(message), code_(code), key_(std::move(key)),
        offset_(offset) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string &key() const noexcept { return key_; }
  /// Byte offset for syntax errors.
  std::optional<std::size_t> offset() const noexcept { return offset_; }

private:
  ErrorCode code_;
  std::string key_;
  std::optional<std::size_t> offset_;
};

/// Malformed documents (syntax, schema, value range) as opposed to domain
/// violations on a well-formed model.
inline bool is_input_error(ErrorCode code) {
  return code == ErrorCode::Syntax || code == ErrorCode::Schema ||
         code == ErrorCode::Value;
}

} // namespace ftcad
