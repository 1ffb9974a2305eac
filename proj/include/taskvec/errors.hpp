#pragma once

#include <stdexcept>
#include <string>

namespace taskvec {

// Operational failure carrying a stable, machine-readable kind such as
// "AlignmentError" or "MalformedHeader". what() reads "<kind>: <message>".
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

[[noreturn]] inline void raise(std::string kind, const std::string& message) {
  throw Error(std::move(kind), message);
}

}  // namespace taskvec
