#pragma once

#include <stdexcept>
#include <string>

namespace ddpbench {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DDPBENCH_ERROR(Name)                       \
  class Name : public Error {                      \
   public:                                         \
    explicit Name(const std::string& what)         \
        : Error(std::string(#Name ": ") + what) {} \
  }

DDPBENCH_ERROR(ConfigError);
DDPBENCH_ERROR(ShapeError);
DDPBENCH_ERROR(TapeError);
DDPBENCH_ERROR(RangeError);
DDPBENCH_ERROR(DomainError);
DDPBENCH_ERROR(AbortUnfilled);
DDPBENCH_ERROR(AbortRejection);
DDPBENCH_ERROR(CheckRejected);
DDPBENCH_ERROR(ParseError);

#undef DDPBENCH_ERROR

// Names the first budget term that exceeded its allocation.
class BudgetError : public Error {
 public:
  BudgetError(std::string term, const std::string& what)
      : Error("BudgetError: " + term + ": " + what), term_(std::move(term)) {}
  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

}  // namespace ddpbench
