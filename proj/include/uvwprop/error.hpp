#pragma once

#include <stdexcept>
#include <string>

namespace uvwprop {

enum class ErrorKind {
  kUsage,
  kIo,
  kParse,
  kValidation,
  kNoSurface,
};

/// Library error. `kind` decides the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error usage_error(const std::string& what) { return Error(ErrorKind::kUsage, what); }
inline Error io_error(const std::string& what) { return Error(ErrorKind::kIo, what); }
inline Error parse_error(const std::string& what) { return Error(ErrorKind::kParse, what); }
inline Error validation_error(const std::string& what) { return Error(ErrorKind::kValidation, what); }

}  // namespace uvwprop
