#pragma once

#include <stdexcept>
#include <string>

namespace lora_esl {

/// Input outside an operation's mathematical domain (negative distance, SF 13, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid scenario configuration. `field()` carries a dotted path such as
/// `pathloss.exponent` so callers can point at the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace lora_esl
