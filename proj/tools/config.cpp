#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "output.hpp"

namespace nhm::cli {

std::vector<std::string> split_key(const std::string& key) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : key) {
    if (c == '.') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  for (const auto& p : parts)
    if (p.empty()) throw ConfigError("malformed key '" + key + "'");
  return parts;
}

namespace {

std::string mark_prefix(const std::string& source, const YAML::Mark& m) {
  if (m.is_null()) return source + ": ";
  return source + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1) + ": ";
}

YAML::Node parse(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(mark_prefix(source, e.mark) + e.msg);
  }
  if (root.IsNull()) return YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw ConfigError(mark_prefix(source, root.Mark()) + "top level must be a mapping of sections");
  return root;
}

void collect_leaves(const YAML::Node& n, const std::string& prefix, std::vector<std::pair<std::string, YAML::Node>>& out) {
  if (n.IsMap() && n.size() > 0) {
    for (const auto& kv : n) {
      std::string k = kv.first.as<std::string>();
      collect_leaves(kv.second, prefix.empty() ? k : prefix + "." + k, out);
    }
  } else {
    out.emplace_back(prefix, n);
  }
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str(), path);
}

Config Config::from_string(const std::string& text, const std::string& source) {
  Config c;
  c.source_ = source;
  c.root_ = parse(text, source);
  return c;
}

void Config::set(const std::string& key, const std::string& yaml_value, const std::string& origin) {
  auto parts = split_key(key);
  YAML::Node value;
  try {
    value = YAML::Load(yaml_value);
  } catch (const YAML::Exception& e) {
    throw ConfigError(origin + ": " + e.msg);
  }
  // Node assignment copies values; reset() rebinds the handle.
  YAML::Node cur;
  cur.reset(root_);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!cur[parts[i]].IsMap()) cur[parts[i]] = YAML::Node(YAML::NodeType::Map);
    YAML::Node next;
    next.reset(cur[parts[i]]);
    cur.reset(next);
  }
  cur[parts.back()] = value;
  origin_[key] = origin;
}

void Config::apply_env(const std::string& prefix, char** envp) {
  if (!envp) return;
  std::vector<std::pair<std::string, std::string>> vars;
  for (char** e = envp; *e; ++e) {
    std::string s(*e);
    if (s.rfind(prefix, 0) != 0) continue;
    auto eq = s.find('=');
    if (eq == std::string::npos) continue;
    vars.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  std::sort(vars.begin(), vars.end());
  for (const auto& [name, value] : vars) {
    std::string rest = name.substr(prefix.size());
    std::string key;
    for (std::size_t i = 0; i < rest.size(); ++i) {
      if (rest.compare(i, 2, "__") == 0) {
        key += '.';
        ++i;
      } else {
        key += static_cast<char>(std::tolower(static_cast<unsigned char>(rest[i])));
      }
    }
    set(key, value, "env " + name);
  }
}

void Config::apply_assignment(const std::string& assignment, const std::string& origin) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(origin + ": expected key=value, got '" + assignment + "'");
  set(assignment.substr(0, eq), assignment.substr(eq + 1), origin);
}

YAML::Node Config::lookup(const std::string& key) const {
  const YAML::Node* node = &root_;
  YAML::Node hold;
  for (const auto& p : split_key(key)) {
    if (!node->IsMap()) return YAML::Node(YAML::NodeType::Undefined);
    const YAML::Node child = (*node)[p];  // missing keys give an invalid node, which reset() rejects
    if (!child.IsDefined()) return YAML::Node(YAML::NodeType::Undefined);
    hold.reset(child);
    node = &hold;
  }
  return hold;
}

bool Config::has(const std::string& key) const {
  auto n = lookup(key);
  return n.IsDefined() && !n.IsNull();
}

std::string Config::where(const std::string& key) const {
  if (auto it = origin_.find(key); it != origin_.end()) return it->second + ": ";
  auto n = lookup(key);
  if (n.IsDefined()) return mark_prefix(source_, n.Mark());
  return source_ + ": ";
}

void Config::fail(const std::string& key, const std::string& msg) const {
  throw ConfigError(where(key) + key + ": " + msg);
}

template <class T>
T Config::scalar(const std::string& key, const YAML::Node& n, const char* what) const {
  if (!n.IsScalar()) fail(key, std::string("expected ") + what);
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    fail(key, std::string("expected ") + what + ", got '" + n.Scalar() + "'");
  }
}

double Config::get_double(const std::string& key, std::optional<double> def) const {
  used_.insert(key);
  auto n = lookup(key);
  double v;
  if (!n.IsDefined() || n.IsNull()) {
    if (!def) fail(key, "required number is missing");
    v = *def;
  } else {
    v = scalar<double>(key, n, "a number");
    if (!std::isfinite(v)) fail(key, "expected a finite number");
  }
  resolved_[key] = v;
  return v;
}

int Config::get_int(const std::string& key, std::optional<int> def) const {
  used_.insert(key);
  auto n = lookup(key);
  int v;
  if (!n.IsDefined() || n.IsNull()) {
    if (!def) fail(key, "required integer is missing");
    v = *def;
  } else {
    v = scalar<int>(key, n, "an integer");
  }
  resolved_[key] = v;
  return v;
}

bool Config::get_bool(const std::string& key, std::optional<bool> def) const {
  used_.insert(key);
  auto n = lookup(key);
  bool v;
  if (!n.IsDefined() || n.IsNull()) {
    if (!def) fail(key, "required boolean is missing");
    v = *def;
  } else {
    v = scalar<bool>(key, n, "true or false");
  }
  resolved_[key] = v;
  return v;
}

std::string Config::get_string(const std::string& key, std::optional<std::string> def) const {
  used_.insert(key);
  auto n = lookup(key);
  std::string v;
  if (!n.IsDefined() || n.IsNull()) {
    if (!def) fail(key, "required string is missing");
    v = *def;
  } else {
    v = scalar<std::string>(key, n, "a string");
  }
  resolved_[key] = v;
  return v;
}

std::vector<double> Config::get_doubles(const std::string& key, std::optional<std::vector<double>> def) const {
  used_.insert(key);
  auto n = lookup(key);
  std::vector<double> v;
  if (!n.IsDefined() || n.IsNull()) {
    if (!def) fail(key, "required list is missing");
    v = *def;
  } else if (n.IsScalar()) {
    v.push_back(scalar<double>(key, n, "a number or a list of numbers"));
  } else if (n.IsSequence()) {
    for (const auto& e : n) v.push_back(scalar<double>(key, e, "a list of numbers"));
  } else {
    fail(key, "expected a list of numbers");
  }
  for (double x : v)
    if (!std::isfinite(x)) fail(key, "expected finite numbers");
  resolved_[key] = v;
  return v;
}

std::vector<int> Config::get_ints(const std::string& key, std::optional<std::vector<int>> def) const {
  used_.insert(key);
  auto n = lookup(key);
  std::vector<int> v;
  if (!n.IsDefined() || n.IsNull()) {
    if (!def) fail(key, "required list is missing");
    v = *def;
  } else if (n.IsScalar()) {
    v.push_back(scalar<int>(key, n, "an integer or a list of integers"));
  } else if (n.IsSequence()) {
    for (const auto& e : n) v.push_back(scalar<int>(key, e, "a list of integers"));
  } else {
    fail(key, "expected a list of integers");
  }
  resolved_[key] = v;
  return v;
}

std::vector<std::vector<double>> Config::get_tuples(const std::string& key, std::size_t width,
                                                    std::optional<std::vector<std::vector<double>>> def) const {
  used_.insert(key);
  auto n = lookup(key);
  std::vector<std::vector<double>> v;
  std::string shape = "a list of " + std::to_string(width) + "-number lists";
  if (!n.IsDefined() || n.IsNull()) {
    if (!def) fail(key, "required " + shape + " is missing");
    v = *def;
  } else if (!n.IsSequence()) {
    fail(key, "expected " + shape);
  } else {
    for (const auto& e : n) {
      if (!e.IsSequence() || e.size() != width) fail(key, "expected " + shape);
      std::vector<double> t;
      for (const auto& x : e) {
        double d = scalar<double>(key, x, shape.c_str());
        if (!std::isfinite(d)) fail(key, "expected finite numbers");
        t.push_back(d);
      }
      v.push_back(std::move(t));
    }
  }
  resolved_[key] = v;
  return v;
}

void Config::reject_unknown(const std::set<std::string>& known) const {
  std::vector<std::pair<std::string, YAML::Node>> leaves;
  collect_leaves(root_, "", leaves);
  for (const auto& [key, node] : leaves) {
    if (key.empty() || used_.count(key) || known.count(key)) continue;
    if (auto it = origin_.find(key); it != origin_.end()) throw ConfigError(it->second + ": unknown key '" + key + "'");
    throw ConfigError(mark_prefix(source_, node.Mark()) + "unknown key '" + key + "'");
  }
}

std::string Config::hash(const std::string& command) const { return sha256_hex(command + "\n" + resolved_.dump()); }

}  // namespace nhm::cli
