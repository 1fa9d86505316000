#pragma once

#include <functional>
#include <string>
#include <vector>

#include "config.hpp"
#include "output.hpp"

namespace nhm::cli {

using Job = std::function<JobOutput()>;

const std::vector<std::string>& command_names();

// Reads and validates every parameter of the command, then returns the computation.
// Configuration problems throw ConfigError before any numerical work starts.
Job prepare(const std::string& command, const Config& cfg);

// Library module behind a command, used to prefix numerical diagnostics.
std::string module_of(const std::string& command);

struct KeyDoc {
  const char* key;
  const char* fallback;
  const char* doc;
};

// Every key understood by some command.
const std::vector<KeyDoc>& config_schema();

}  // namespace nhm::cli
