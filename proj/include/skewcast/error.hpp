#pragma once

#include <stdexcept>
#include <string>

namespace skewcast {

// Broad failure class; the CLI maps these onto exit codes 2 (config) and 3 (data).
enum class ErrorClass { kConfig, kData, kIo };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), cls_(cls), code_(std::move(code)) {}

  ErrorClass error_class() const noexcept { return cls_; }
  // Short machine-readable tag such as "NegativeSales" or "LengthMismatch".
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorClass cls_;
  std::string code_;
};

inline Error config_error(std::string code, const std::string& what) {
  return Error(ErrorClass::kConfig, std::move(code), what);
}

inline Error data_error(std::string code, const std::string& what) {
  return Error(ErrorClass::kData, std::move(code), what);
}

inline Error io_error(const std::string& what) {
  return Error(ErrorClass::kIo, "IoFailure", what);
}

}  // namespace skewcast
