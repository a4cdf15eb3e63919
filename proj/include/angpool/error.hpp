#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace angpool {

// Library errors carry a short machine-readable code ("invalid-input",
// "invalid-angle", "degenerate-support", ...) next to the human-readable
// message. The CLI prints "error[<code>]: <message>" and exits nonzero.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(std::string code, const std::string& message) {
  throw Error(std::move(code), message);
}

}  // namespace angpool
