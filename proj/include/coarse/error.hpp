#pragma once

#include <stdexcept>
#include <string>

namespace coarse {

// Every failure raised by the library carries a stable machine-readable code
// next to the human message; the CLI forwards both on stderr.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

struct ResolutionError : Error {
  explicit ResolutionError(const std::string& label)
      : Error("unknown_label", "label does not resolve in the model: " + label) {}
};

struct ContractError : Error {
  explicit ContractError(const std::string& message) : Error("contract_violation", message) {}
};

struct ModelError : Error {
  explicit ModelError(const std::string& message) : Error("invalid_model", message) {}
};

// A definite negative answer (criterion fails, no carrier ray, ...) rather than
// a usage problem. The CLI maps it to exit code 2.
struct Refusal : Error {
  explicit Refusal(const std::string& message) : Error("refused", message) {}
};

}  // namespace coarse
