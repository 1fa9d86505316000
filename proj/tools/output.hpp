#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace nhm::cli {

// 17 significant digits, '.' separator, independent of the global locale.
std::string format_double(double v);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

struct Cell {
  std::variant<double, long long, std::string> v;
  Cell(double x) : v(x) {}
  Cell(int x) : v(static_cast<long long>(x)) {}
  Cell(long x) : v(static_cast<long long>(x)) {}
  Cell(long long x) : v(x) {}
  Cell(std::size_t x) : v(static_cast<long long>(x)) {}
  Cell(bool x) : v(static_cast<long long>(x)) {}
  Cell(const char* s) : v(std::string(s)) {}
  Cell(std::string s) : v(std::move(s)) {}
  std::string str() const;
};

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
  std::string csv() const;
};

struct JobOutput {
  std::vector<Table> tables;
  nlohmann::json summary = nlohmann::json::object();
};

struct RunInfo {
  std::string command;
  std::string config_source;
  std::string config_hash;
  nlohmann::json inputs;
  int workers = 1;
  double wall_time = 0;
};

// Writes <out>/<table>.csv for every table and the sidecar <out>/<command>.json.
void write_job(const std::filesystem::path& out, const RunInfo& info, const JobOutput& job);

nlohmann::json version_info();

struct CheckResult {
  bool ok = true;
  std::vector<std::string> problems;
};

// Compares the stored sidecar against the current config hash and the data files on disk.
CheckResult check_job(const std::filesystem::path& out, const std::string& command, const std::string& config_hash);

}  // namespace nhm::cli
