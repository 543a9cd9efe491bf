#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tessperc {

//! Invalid argument or configuration value supplied by the caller.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration error tied to a key path inside a JSON document, e.g. {"process", "params", "gama"}.
class ConfigKeyError : public ParameterError {
 public:
  ConfigKeyError(std::vector<std::string> path, const std::string& what)
      : ParameterError(what), path_(std::move(path)) {}
  const std::vector<std::string>& path() const { return path_; }

  //! Same error with `prefix` prepended to the path.
  ConfigKeyError nested_in(const std::string& prefix) const {
    std::vector<std::string> p{prefix};
    p.insert(p.end(), path_.begin(), path_.end());
    return {std::move(p), what()};
  }

 private:
  std::vector<std::string> path_;
};

//! A cell meeting the core window is not determined by the sampled points.
class EdgeEffectError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Geometric construction failed (degenerate input).
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tessperc
