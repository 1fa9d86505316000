#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "json.hpp"

namespace nhm::cli {

// Message already carries "<source>:<line>:" when a location is known.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Nested YAML key-value file with dotted-key access. Overrides come from
// environment variables (PREFIX + SECTION__KEY, upper case) and key=value flags.
class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text, const std::string& source = "<string>");

  // NHM_LATTICE__ETA=1.1 sets lattice.eta. Keys are lower case.
  void apply_env(const std::string& prefix, char** envp);
  // "lattice.eta=1.1"
  void apply_assignment(const std::string& assignment, const std::string& origin);
  void set(const std::string& key, const std::string& yaml_value, const std::string& origin);

  bool has(const std::string& key) const;
  double get_double(const std::string& key, std::optional<double> def = std::nullopt) const;
  int get_int(const std::string& key, std::optional<int> def = std::nullopt) const;
  bool get_bool(const std::string& key, std::optional<bool> def = std::nullopt) const;
  std::string get_string(const std::string& key, std::optional<std::string> def = std::nullopt) const;
  std::vector<double> get_doubles(const std::string& key, std::optional<std::vector<double>> def = std::nullopt) const;
  std::vector<int> get_ints(const std::string& key, std::optional<std::vector<int>> def = std::nullopt) const;
  // List of fixed-size numeric tuples, e.g. [[0.1, 0], [0, 0.1]].
  std::vector<std::vector<double>> get_tuples(const std::string& key, std::size_t width,
                                              std::optional<std::vector<std::vector<double>>> def = std::nullopt) const;

  // Error located at the key's definition.
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const;
  void require(bool ok, const std::string& key, const std::string& msg) const {
    if (!ok) fail(key, msg);
  }

  // A leaf that was never read and is not in `known` is reported as unknown.
  void reject_unknown(const std::set<std::string>& known = {}) const;

  // Resolved values of every key read so far, defaults included, flat dotted keys.
  const nlohmann::json& echo() const { return resolved_; }
  // SHA-256 of the command name and the resolved values.
  std::string hash(const std::string& command) const;
  const std::string& source() const { return source_; }

 private:
  YAML::Node lookup(const std::string& key) const;
  std::string where(const std::string& key) const;
  template <class T>
  T scalar(const std::string& key, const YAML::Node& n, const char* what) const;

  YAML::Node root_ = YAML::Node(YAML::NodeType::Map);
  std::string source_ = "<empty>";
  std::map<std::string, std::string> origin_;  // keys set by overrides
  mutable std::set<std::string> used_;
  mutable nlohmann::json resolved_ = nlohmann::json::object();
};

std::vector<std::string> split_key(const std::string& key);

}  // namespace nhm::cli
