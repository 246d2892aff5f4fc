#pragma once

// Per-run bookkeeping for the command-line tool: output paths, case status,
// invariant gates and the JSON manifest.

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "nfis/stability.hpp"

namespace nfis::cli {

#ifndef NFIS_VERSION
#define NFIS_VERSION "0.0.0"
#endif

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Gate {
  std::string name;
  double value = 0.0, threshold = 0.0;
  bool pass = false;
};

class RunContext {
 public:
  RunContext(std::string subcommand, ExperimentConfig config, std::string out, int jobs, std::uint64_t seed, bool strict)
      : sub_(std::move(subcommand)), cfg_(std::move(config)), out_(std::move(out)), jobs_(std::max(1, jobs)),
        seed_(seed), strict_(strict), started_(utc_now()) {
    std::filesystem::create_directories(out_);
  }

  const ExperimentConfig& config() const { return cfg_; }
  const Json& raw() const { return cfg_.raw; }
  int jobs() const { return jobs_; }
  std::uint64_t seed() const { return seed_; }

  /// Path for an output file; registers it in the inventory.
  std::string file(const std::string& stem) {
    const std::string name = cfg_.prefix + "_" + stem;
    files_.push_back(name);
    return (std::filesystem::path(out_) / name).string();
  }

  void case_status(const std::string& name, const std::string& status) {
    cases_.push_back({{"case", name}, {"status", status}});
    if (status != "ok") {
      failed_ = true;
      std::cerr << name << ": " << status << "\n";
    }
  }

  void gate(const std::string& name, double value, double threshold, bool pass) {
    gates_.push_back({name, value, threshold, pass});
    if (!pass) std::cerr << "gate " << name << " failed: " << value << " vs " << threshold << "\n";
  }

  void extra(const std::string& key, Json value) { extra_[key] = std::move(value); }

  bool gates_pass() const {
    for (const auto& g : gates_)
      if (!g.pass) return false;
    return true;
  }

  /// 0 ok, 1 solver failure or (under --strict) a failed gate.
  int finish() {
    Json m;
    m["tool"] = "nfis";
    m["version"] = NFIS_VERSION;
    m["subcommand"] = sub_;
    m["config_hash"] = cfg_.hash();
    m["config"] = cfg_.raw;
    m["started"] = started_;
    m["finished"] = utc_now();
    m["jobs"] = jobs_;
    m["seed"] = seed_;
    m["strict"] = strict_;
    m["cases"] = cases_;
    Json gs = Json::array();
    for (const auto& g : gates_)
      gs.push_back({{"name", g.name}, {"value", g.value}, {"threshold", g.threshold}, {"pass", g.pass}});
    m["gates"] = gs;
    if (!extra_.empty()) m["results"] = extra_;
    const std::string mname = cfg_.prefix + "_manifest.json";
    auto inventory = files_;
    inventory.push_back(mname);
    m["files"] = inventory;
    std::ofstream os(std::filesystem::path(out_) / mname);
    if (!os) throw IoError("cannot write manifest in " + out_);
    os << m.dump(2) << "\n";
    if (failed_) return 1;
    if (strict_ && !gates_pass()) return 1;
    return 0;
  }

 private:
  std::string sub_;
  ExperimentConfig cfg_;
  std::string out_;
  int jobs_;
  std::uint64_t seed_;
  bool strict_;
  std::string started_;
  std::vector<std::string> files_;
  Json cases_ = Json::array();
  Json extra_ = Json::object();
  std::vector<Gate> gates_;
  bool failed_ = false;
};

/// Runs body(i) for i in [0, count) on `jobs` threads; results go into
/// caller-owned slots so output order never depends on scheduling.
inline void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) body(i);
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min(jobs, count); ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace nfis::cli
