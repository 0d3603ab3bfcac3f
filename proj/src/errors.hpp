#pragma once

#include <stdexcept>
#include <string>

namespace spdsim {

// Configuration problems carry the offending key so front ends can name it.
class ConfigError : public std::runtime_error {
public:
  enum class Kind { Parse, Validation };

  ConfigError(Kind kind, std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : key + ": " + message),
        kind_(kind),
        key_(std::move(key)) {}

  Kind kind() const { return kind_; }
  const std::string& key() const { return key_; }

private:
  Kind kind_;
  std::string key_;
};

// Working-point solver precondition failure: the two branch curves do not
// cross on [0, v_zener].
class NoBracketError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// estimate_pde is undefined for r_ph >= f.
class SaturationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NoSyncError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class HistogramError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A (state, event, mode) combination the state machine forbids. Reaching this
// from the engine is a bug, not a runtime condition.
class IllegalTransition : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

}  // namespace spdsim
