#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cli.hpp"
#include "darkspin/errors.hpp"

using namespace darkspin;
using namespace darkspin::cli;

namespace {

enum Exit { kOk = 0, kFail = 1, kConfig = 2, kIo = 3 };

int report(int code, const json& err) {
  std::cerr << err.dump(2) << "\n";
  return code;
}

json config_error_json(const std::vector<FieldError>& errors) {
  json d = json::array();
  for (const auto& e : errors) d.push_back({{"field", e.field}, {"message", e.message}});
  return {{"error", "config"}, {"diagnostics", d}};
}

json module_error_json(const std::string& kind, const std::exception& e) {
  json j{{"error", "module"}, {"kind", kind}, {"message", e.what()}};
  if (auto* c = dynamic_cast<const CapacityError*>(&e)) j["required_bytes"] = c->required_bytes;
  if (auto* a = dynamic_cast<const AmbiguityError*>(&e)) j["multiplicity"] = a->multiplicity;
  if (auto* t = dynamic_cast<const TimeoutError*>(&e)) j["last_value"] = t->last_value;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dark-state spin ensemble reproduction jobs"};
  std::string job, config_path, out_dir;
  int threads = 0;
  long long seed = -1;
  app.add_option("job", job, "job name")->required();
  app.add_option("--config", config_path, "JSON configuration")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
  app.add_option("--seed", seed, "master seed")->check(CLI::NonNegativeNumber);
  app.set_version_flag("--version", kVersion);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report(kConfig, {{"error", "usage"}, {"message", e.what()}, {"usage", app.help()}});
  }

  const auto& registry = job_registry();
  if (!registry.count(job)) {
    std::string names;
    for (const auto& [k, v] : registry) names += (names.empty() ? "" : ", ") + k;
    return report(kConfig, config_error_json({{"job", "unknown job '" + job + "'; available: " + names}}));
  }

  json cfg;
  {
    std::ifstream f(config_path);
    if (!f) return report(kIo, {{"error", "io"}, {"message", "cannot read " + config_path}});
    std::stringstream ss;
    ss << f.rdbuf();
    try {
      // strict: no comments, no trailing content
      cfg = json::parse(ss.str(), nullptr, true, false);
    } catch (const json::parse_error& e) {
      return report(kConfig, config_error_json({{"", std::string("malformed JSON: ") + e.what()}}));
    }
  }

  JobContext ctx;
  ctx.job = job;
  Params top(cfg, "");
  Params* params = nullptr;
  std::unique_ptr<Params> holder;
  std::vector<FieldError> errors;
  try {
    const int schema = top.integer("schema_version", -1, -1, 1000000);
    if (!cfg.is_object() || !cfg.contains("schema_version"))
      errors.push_back({"schema_version", "required"});
    else if (schema != kSchemaVersion)
      errors.push_back({"schema_version", "unsupported version " + std::to_string(schema) + ", expected " +
                                              std::to_string(kSchemaVersion)});
    const std::string cfg_job = top.choice("job", job, {job});
    (void)cfg_job;
    const std::uint64_t cfg_seed = top.seed("seed", 1);
    const int cfg_threads = top.integer("threads", 1, 1, 256);
    const double budget = top.number("memory_budget_bytes", 2.0 * (1ull << 30), 1 << 20, 1e13);
    if (out_dir.empty()) out_dir = top.text("out", "");
    ctx.seed = seed >= 0 ? static_cast<std::uint64_t>(seed) : cfg_seed;
    ctx.threads = threads > 0 ? threads : cfg_threads;
    ctx.memory_budget = static_cast<std::size_t>(budget);
    top.allow("params");
    if (cfg.is_object() && cfg.contains("params") && !cfg["params"].is_object())
      errors.push_back({"params", "expected an object"});
    top.finish();
  } catch (const ConfigError& e) {
    errors.insert(errors.end(), e.errors.begin(), e.errors.end());
  }
  if (out_dir.empty()) out_dir = "out/" + job;
  holder = std::make_unique<Params>(cfg.is_object() && cfg.contains("params") ? cfg["params"] : json::object(),
                                    "params");
  params = holder.get();
  // reported together with the job's own field errors before any work starts
  params->add_errors(errors);
  errors.clear();

  const auto t0 = std::chrono::steady_clock::now();
  JobOutput out;
  try {
    out = registry.at(job)(*params, ctx);
  } catch (const ConfigError& e) {
    errors.insert(errors.end(), e.errors.begin(), e.errors.end());
  } catch (const DomainError& e) {
    return report(kFail, module_error_json("domain", e));
  } catch (const CapacityError& e) {
    return report(kFail, module_error_json("capacity", e));
  } catch (const AmbiguityError& e) {
    return report(kFail, module_error_json("ambiguity", e));
  } catch (const IntegrationError& e) {
    return report(kFail, module_error_json("integration", e));
  } catch (const AccuracyError& e) {
    return report(kFail, module_error_json("accuracy", e));
  } catch (const TimeoutError& e) {
    return report(kFail, module_error_json("timeout", e));
  } catch (const std::exception& e) {
    return report(kFail, module_error_json("internal", e));
  }
  if (!errors.empty()) return report(kConfig, config_error_json(errors));
  const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) return report(kIo, {{"error", "io"}, {"message", "cannot create " + out_dir + ": " + ec.message()}});

  json outputs = json::array();
  try {
    // render everything first so a NaN leaves no partial artefacts
    std::vector<std::string> texts;
    for (const Table& t : out.tables) texts.push_back(render_csv(t));
    for (std::size_t i = 0; i < out.tables.size(); ++i) {
      write_text(std::filesystem::path(out_dir) / (out.tables[i].name + ".csv"), texts[i]);
      outputs.push_back({{"file", out.tables[i].name + ".csv"},
                         {"sha256", sha256_hex(texts[i])},
                         {"rows", out.tables[i].rows.size()},
                         {"columns", out.tables[i].columns}});
    }
  } catch (const std::domain_error& e) {
    return report(kFail, {{"error", "nan"}, {"message", e.what()}});
  } catch (const IoError& e) {
    return report(kIo, {{"error", "io"}, {"message", e.what()}});
  }

  bool all_pass = true;
  json checks = json::array();
  for (const Check& c : out.checks) {
    all_pass = all_pass && c.pass();
    const json v = std::isfinite(c.value) ? json(c.value) : json(format_double(c.value));
    checks.push_back({{"name", c.name}, {"value", v}, {"lo", c.lo}, {"hi", c.hi}, {"pass", c.pass()}});
  }
  json manifest{
      {"schema_version", kSchemaVersion},
      {"job", job},
      {"config_file", config_path},
      {"inputs",
       {{"params", params->resolved()},
        {"seed", ctx.seed},
        {"threads", ctx.threads},
        {"memory_budget_bytes", ctx.memory_budget}}},
      {"versions", library_versions()},
      {"seeds", {{"master", ctx.seed}, {"derived", ctx.seeds_used}, {"rule", "sha256(master:job:task)[0..8] big endian"}}},
      {"runtime_seconds", runtime},
      {"outputs", outputs},
      {"diagnostics", out.diagnostics},
      {"checks", checks},
      {"status", all_pass ? "pass" : "fail"},
  };
  try {
    write_text(std::filesystem::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
  } catch (const IoError& e) {
    return report(kIo, {{"error", "io"}, {"message", e.what()}});
  }
  std::cout << manifest["status"].get<std::string>() << " " << out_dir << "\n";
  return all_pass ? kOk : kFail;
}
