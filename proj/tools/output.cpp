#include <openssl/evp.h>
#include <openssl/opensslv.h>
#include <openssl/crypto.h>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "cli.hpp"

namespace darkspin::cli {

namespace {

std::string join_path(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const char* type_name(const json& v) { return v.type_name(); }

}  // namespace

Params::Params(const json& j, std::string path) : path_(std::move(path)) {
  if (j.is_null()) {
    obj_ = json::object();
  } else if (!j.is_object()) {
    errors_.push_back({path_, std::string("expected an object, got ") + type_name(j)});
    obj_ = json::object();
  } else {
    obj_ = j;
  }
}

const json* Params::take(const std::string& key) {
  used_.push_back(key);
  auto it = obj_.find(key);
  return it == obj_.end() ? nullptr : &*it;
}

void Params::fail(const std::string& key, const std::string& msg) { errors_.push_back({join_path(path_, key), msg}); }

double Params::number(const std::string& key, double def, double lo, double hi) {
  const json* v = take(key);
  double x = def;
  if (v) {
    if (!v->is_number()) {
      fail(key, std::string("expected a number, got ") + type_name(*v));
    } else {
      x = v->get<double>();
      if (!(x >= lo && x <= hi)) fail(key, fmt::format("{} outside [{}, {}]", x, lo, hi));
    }
  }
  resolved_[key] = x;
  return x;
}

int Params::integer(const std::string& key, int def, int lo, int hi) {
  const json* v = take(key);
  int x = def;
  if (v) {
    if (!v->is_number_integer()) {
      fail(key, std::string("expected an integer, got ") + type_name(*v));
    } else {
      const long long y = v->get<long long>();
      if (y < lo || y > hi)
        fail(key, fmt::format("{} outside [{}, {}]", y, lo, hi));
      else
        x = static_cast<int>(y);
    }
  }
  resolved_[key] = x;
  return x;
}

std::uint64_t Params::seed(const std::string& key, std::uint64_t def) {
  const json* v = take(key);
  std::uint64_t x = def;
  if (v) {
    if (!v->is_number_unsigned())
      fail(key, std::string("expected a non-negative integer, got ") + type_name(*v));
    else
      x = v->get<std::uint64_t>();
  }
  resolved_[key] = x;
  return x;
}

bool Params::flag(const std::string& key, bool def) {
  const json* v = take(key);
  bool x = def;
  if (v) {
    if (!v->is_boolean())
      fail(key, std::string("expected a boolean, got ") + type_name(*v));
    else
      x = v->get<bool>();
  }
  resolved_[key] = x;
  return x;
}

bool Params::to_spin(const json& v, HalfInt& out) const {
  if (!v.is_number()) return false;
  const double t = 2 * v.get<double>();
  if (std::abs(t - std::round(t)) > 1e-12 || std::abs(t) > 1e6) return false;
  out = half(static_cast<int>(std::lround(t)));
  return true;
}

HalfInt Params::spin(const std::string& key, HalfInt def, HalfInt lo, HalfInt hi) {
  const json* v = take(key);
  HalfInt x = def;
  if (v) {
    HalfInt y;
    if (!to_spin(*v, y))
      fail(key, "expected a positive multiple of 1/2");
    else if (y < lo || y > hi)
      fail(key, fmt::format("{} outside [{}, {}]", y.str(), lo.str(), hi.str()));
    else
      x = y;
  }
  resolved_[key] = x.value();
  return x;
}

std::string Params::text(const std::string& key, const std::string& def) {
  const json* v = take(key);
  std::string x = def;
  if (v) {
    if (!v->is_string())
      fail(key, std::string("expected a string, got ") + type_name(*v));
    else
      x = v->get<std::string>();
  }
  resolved_[key] = x;
  return x;
}

std::string Params::choice(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
  const json* v = take(key);
  std::string x = def;
  if (v) {
    if (!v->is_string()) {
      fail(key, std::string("expected a string, got ") + type_name(*v));
    } else {
      x = v->get<std::string>();
      if (std::find(allowed.begin(), allowed.end(), x) == allowed.end()) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        fail(key, "'" + x + "' is not one of " + list);
        x = def;
      }
    }
  }
  resolved_[key] = x;
  return x;
}

std::vector<double> Params::numbers(const std::string& key, const std::vector<double>& def, double lo, double hi) {
  const json* v = take(key);
  std::vector<double> x = def;
  if (v) {
    if (!v->is_array()) {
      fail(key, std::string("expected an array of numbers, got ") + type_name(*v));
    } else {
      x.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        const json& e = (*v)[i];
        const std::string k = fmt::format("{}[{}]", key, i);
        if (!e.is_number()) {
          fail(k, std::string("expected a number, got ") + type_name(e));
          continue;
        }
        const double y = e.get<double>();
        if (!(y >= lo && y <= hi)) fail(k, fmt::format("{} outside [{}, {}]", y, lo, hi));
        x.push_back(y);
      }
    }
  }
  resolved_[key] = x;
  return x;
}

std::vector<HalfInt> Params::spins(const std::string& key, const std::vector<HalfInt>& def, HalfInt lo, HalfInt hi) {
  const json* v = take(key);
  std::vector<HalfInt> x = def;
  if (v) {
    if (!v->is_array()) {
      fail(key, std::string("expected an array of spins, got ") + type_name(*v));
    } else {
      x.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        HalfInt y;
        const std::string k = fmt::format("{}[{}]", key, i);
        if (!to_spin((*v)[i], y))
          fail(k, "expected a positive multiple of 1/2");
        else if (y < lo || y > hi)
          fail(k, fmt::format("{} outside [{}, {}]", y.str(), lo.str(), hi.str()));
        else
          x.push_back(y);
      }
    }
  }
  json r = json::array();
  for (HalfInt s : x) r.push_back(s.value());
  resolved_[key] = r;
  return x;
}

void Params::finish() {
  for (auto it = obj_.begin(); it != obj_.end(); ++it)
    if (std::find(used_.begin(), used_.end(), it.key()) == used_.end()) fail(it.key(), "unknown field");
  if (!errors_.empty()) throw ConfigError(errors_);
}

std::uint64_t derive_seed(std::uint64_t master, const std::string& job, const std::string& task) {
  const std::string msg = fmt::format("{}:{}:{}", master, job, task);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(msg.data(), msg.size(), md, &len, EVP_sha256(), nullptr);
  std::uint64_t s = 0;
  for (int i = 0; i < 8; ++i) s = (s << 8) | md[i];
  return s;
}

std::uint64_t JobContext::task_seed(const std::string& task) {
  const std::uint64_t s = derive_seed(seed, job, task);
  seeds_used.push_back({{"task", task}, {"seed", s}});
  return s;
}

std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0) return "0";  // folds -0
  return fmt::format("{:.17g}", x);
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
  return out;
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace

std::string render_csv(const Table& t) {
  std::string out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + quote(t.columns[c]);
  out += "\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != t.columns.size())
      throw std::logic_error(fmt::format("{}: row {} has {} cells for {} columns", t.name, r, row.size(), t.columns.size()));
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ",";
      if (const double* d = std::get_if<double>(&row[c])) {
        if (std::isnan(*d)) throw std::domain_error(fmt::format("NaN in {}.csv, row {}, column '{}'", t.name, r, t.columns[c]));
        out += format_double(*d);
      } else if (const long long* i = std::get_if<long long>(&row[c])) {
        out += std::to_string(*i);
      } else {
        out += quote(std::get<std::string>(row[c]));
      }
    }
    out += "\n";
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  f.close();
  if (!f) throw IoError("write to " + path.string() + " failed");
}

std::string write_table(const Table& t, const std::filesystem::path& dir) {
  const std::string text = render_csv(t);
  write_text(dir / (t.name + ".csv"), text);
  return sha256_hex(text);
}

json library_versions() {
  return {
      {"darkspin", kVersion},
      {"compiler", __VERSION__},
      {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
      {"boost", BOOST_LIB_VERSION},
      {"fmt", FMT_VERSION},
      {"openssl", OpenSSL_version(OPENSSL_VERSION)},
      {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                    NLOHMANN_JSON_VERSION_PATCH)},
      {"cli11", CLI11_VERSION},
  };
}

}  // namespace darkspin::cli
