#pragma once

#include <stdexcept>
#include <string>

namespace vsbbm {

// Base of every error thrown by the library. `kind()` is a short stable tag
// used in the structured error JSON the CLI emits.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error("validation", w) {}
};
struct RangeError : Error {
  explicit RangeError(const std::string& w) : Error("range", w) {}
};
struct LookupError : Error {
  explicit LookupError(const std::string& w) : Error("lookup", w) {}
};
struct OverflowError : Error {
  explicit OverflowError(const std::string& w) : Error("overflow", w) {}
};
struct StabilityError : Error {
  explicit StabilityError(const std::string& w) : Error("stability", w) {}
};
struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& w) : Error("convergence", w) {}
};
struct RejectionExhausted : Error {
  RejectionExhausted(const std::string& w, long attempts, double acceptance)
      : Error("rejection_exhausted", w), attempts(attempts), acceptance_estimate(acceptance) {}
  long attempts;
  double acceptance_estimate;
};

}  // namespace vsbbm
