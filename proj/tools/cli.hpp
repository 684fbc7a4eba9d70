#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "darkspin/wigner.hpp"
#include "json.hpp"

namespace darkspin::cli {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

struct FieldError {
  std::string field;
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<FieldError> errors)
      : std::runtime_error("invalid configuration"), errors(std::move(errors)) {}
  std::vector<FieldError> errors;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Strict reader for one JSON object: every key must be consumed, type and
// range errors are collected per field and thrown together by finish().
class Params {
 public:
  Params(const json& j, std::string path);

  double number(const std::string& key, double def, double lo = -1e300, double hi = 1e300);
  int integer(const std::string& key, int def, int lo, int hi);
  bool flag(const std::string& key, bool def);
  HalfInt spin(const std::string& key, HalfInt def, HalfInt lo = half(1), HalfInt hi = HalfInt(10000));
  std::string text(const std::string& key, const std::string& def);
  std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& allowed);
  std::vector<double> numbers(const std::string& key, const std::vector<double>& def, double lo = -1e300,
                              double hi = 1e300);
  std::vector<HalfInt> spins(const std::string& key, const std::vector<HalfInt>& def, HalfInt lo = half(1),
                             HalfInt hi = HalfInt(10000));
  std::uint64_t seed(const std::string& key, std::uint64_t def);
  void add_errors(const std::vector<FieldError>& e) { errors_.insert(errors_.end(), e.begin(), e.end()); }
  // marks a key read elsewhere (e.g. a nested block)
  void allow(const std::string& key) { used_.push_back(key); }
  bool has(const std::string& key) const { return obj_.contains(key); }

  // everything read, with defaults filled in
  const json& resolved() const { return resolved_; }
  void finish();

 private:
  const json* take(const std::string& key);
  void fail(const std::string& key, const std::string& msg);
  bool to_spin(const json& v, HalfInt& out) const;

  json obj_;
  std::string path_;
  json resolved_ = json::object();
  std::vector<std::string> used_;
  std::vector<FieldError> errors_;
};

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

struct Check {
  std::string name;
  double value;
  double lo, hi;
  bool pass() const { return value >= lo && value <= hi; }
};

struct JobContext {
  std::uint64_t seed = 0;
  int threads = 1;
  std::size_t memory_budget = 0;
  std::string job;
  std::vector<json> seeds_used;  // {"task": ..., "seed": ...}
  std::uint64_t task_seed(const std::string& task);
};

struct JobOutput {
  std::vector<Table> tables;
  json diagnostics = json::object();
  std::vector<Check> checks;
};

using JobFn = std::function<JobOutput(Params&, JobContext&)>;
const std::map<std::string, JobFn>& job_registry();

// Seed for a named task: first 8 bytes (big endian) of
// SHA-256("<master>:<job>:<task>").
std::uint64_t derive_seed(std::uint64_t master, const std::string& job, const std::string& task);

std::string format_double(double x);  // 17 significant digits
std::string sha256_hex(const std::string& data);
// CSV serialisation; throws std::domain_error naming the cell on NaN.
std::string render_csv(const Table& t);
// Writes render_csv(t) to dir/<name>.csv and returns the content hash.
std::string write_table(const Table& t, const std::filesystem::path& dir);
void write_text(const std::filesystem::path& path, const std::string& text);

json library_versions();

}  // namespace darkspin::cli
