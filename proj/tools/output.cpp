#include "output.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <Eigen/Core>
#include <openssl/evp.h>

#ifndef NHM_VERSION
#define NHM_VERSION "0.0.0"
#endif

namespace nhm::cli {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr))
    throw std::runtime_error("sha256 failed");
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

std::string Cell::str() const {
  if (auto d = std::get_if<double>(&v)) return format_double(*d);
  if (auto i = std::get_if<long long>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size())
    throw std::logic_error("table " + name + ": row has " + std::to_string(row.size()) + " cells, expected " +
                           std::to_string(columns.size()));
  rows.push_back(std::move(row));
}

std::string Table::csv() const {
  std::string s;
  for (std::size_t c = 0; c < columns.size(); ++c) s += (c ? "," : "") + columns[c];
  s += '\n';
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) s += (c ? "," : "") + r[c].str();
    s += '\n';
  }
  return s;
}

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << text;
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

}  // namespace

nlohmann::json version_info() {
  nlohmann::json v;
  v["nhm"] = NHM_VERSION;
  v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  v["compiler"] = __VERSION__;
  v["cxx"] = static_cast<long>(__cplusplus);
#ifdef _OPENMP
  v["openmp"] = _OPENMP;
#endif
  v["json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
              std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  return v;
}

void write_job(const std::filesystem::path& out, const RunInfo& info, const JobOutput& job) {
  std::filesystem::create_directories(out);
  nlohmann::json files = nlohmann::json::array();
  for (const auto& t : job.tables) {
    std::string text = t.csv();
    auto p = out / (t.name + ".csv");
    write_text(p, text);
    files.push_back({{"file", p.filename().string()}, {"rows", t.rows.size()}, {"sha256", sha256_hex(text)}});
  }
  nlohmann::json side;
  side["command"] = info.command;
  side["config_source"] = info.config_source;
  side["config_hash"] = info.config_hash;
  side["inputs"] = info.inputs;
  side["outputs"] = files;
  side["summary"] = job.summary;
  side["versions"] = version_info();
  side["workers"] = info.workers;
  side["wall_time_s"] = info.wall_time;
  write_text(out / (info.command + ".json"), side.dump(2) + "\n");
}

CheckResult check_job(const std::filesystem::path& out, const std::string& command, const std::string& config_hash) {
  CheckResult r;
  auto side_path = out / (command + ".json");
  std::ifstream in(side_path);
  if (!in) {
    r.ok = false;
    r.problems.push_back("missing sidecar " + side_path.string());
    return r;
  }
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    r.ok = false;
    r.problems.push_back(side_path.string() + ": " + e.what());
    return r;
  }
  if (side.value("config_hash", std::string()) != config_hash) {
    r.ok = false;
    r.problems.push_back("config hash differs: stored " + side.value("config_hash", std::string("<none>")) +
                         ", current " + config_hash);
  }
  for (const auto& f : side.value("outputs", nlohmann::json::array())) {
    auto p = out / f.at("file").get<std::string>();
    std::string got;
    try {
      got = sha256_file(p);
    } catch (const std::exception& e) {
      r.ok = false;
      r.problems.push_back(e.what());
      continue;
    }
    if (got != f.at("sha256").get<std::string>()) {
      r.ok = false;
      r.problems.push_back("data file changed: " + p.string());
    }
  }
  return r;
}

}  // namespace nhm::cli
