#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mscv {

/// Precondition broken by the caller (wrong channel count, mismatched dims, ...).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed file contents. `offset()` is the byte offset where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Weight container could not be loaded or does not match the architecture.
class LoadError : public std::runtime_error {
 public:
  LoadError(const std::string& what, std::string parameter)
      : std::runtime_error(parameter.empty() ? what : what + ": " + parameter),
        parameter_(std::move(parameter)) {}

  const std::string& parameter() const noexcept { return parameter_; }

 private:
  std::string parameter_;
};

/// Raised by reductions that are undefined on an empty selection (no valid pixels).
class EmptySelectionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Infeasible user configuration (synthetic plan, CLI values).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
[[noreturn]] inline void contract_fail(const std::string& msg) { throw ContractError(msg); }
}  // namespace detail

#define MSCV_REQUIRE(cond, msg)                 \
  do {                                          \
    if (!(cond)) ::mscv::detail::contract_fail(msg); \
  } while (0)

}  // namespace mscv
