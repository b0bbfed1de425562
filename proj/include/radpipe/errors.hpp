#pragma once

#include <stdexcept>
#include <string>

namespace radpipe {

/// Bad configuration or malformed input file (maps to CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Failure while processing otherwise valid inputs (maps to CLI exit code 1).
class PipelineError : public std::runtime_error {
 public:
  explicit PipelineError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace radpipe
