#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "arakheight/fsquad.hpp"
#include "json.hpp"

namespace arak {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json to_json(const std::string& key, double tol, const QuadResult& r) {
  json j;
  j["key"] = key;
  j["estimate"] = r.estimate;
  j["error_bound"] = r.error_bound;
  j["method"] = std::string(to_string(r.method));
  j["nodes"] = r.nodes;
  j["converged"] = r.converged;
  j["tol"] = tol;
  j["created_at"] = utc_now();
  return j;
}

}  // namespace

QuadCache::QuadCache(std::string dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
  }
}

std::string QuadCache::default_dir() {
  const char* env = std::getenv("ARAKHEIGHT_CACHE_DIR");
  return env ? std::string(env) : std::string();
}

std::string QuadCache::path_for(const std::string& key) const { return (fs::path(dir_) / (key + ".json")).string(); }

std::optional<QuadResult> QuadCache::lookup(const std::string& key, double tol) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (auto it = memo_.find(key); it != memo_.end()) {
    if (it->second.tol <= tol) return it->second.result;
    return std::nullopt;
  }
  if (dir_.empty()) return std::nullopt;
  std::ifstream in(path_for(key));
  if (!in) return std::nullopt;
  try {
    const json j = json::parse(in);
    if (j.at("key").get<std::string>() != key) return std::nullopt;
    QuadResult r;
    r.estimate = j.at("estimate").get<double>();
    r.error_bound = j.at("error_bound").get<double>();
    r.method = quad_method_from_string(j.at("method").get<std::string>());
    r.nodes = j.at("nodes").get<std::uint64_t>();
    r.converged = j.value("converged", true);
    const double stored_tol = j.at("tol").get<double>();
    if (!std::isfinite(r.estimate) || !(r.error_bound >= 0)) return std::nullopt;
    memo_[key] = Entry{stored_tol, r};
    if (stored_tol <= tol) return r;
  } catch (const std::exception&) {
    // unreadable entry: treated as absent and overwritten by the next store
  }
  return std::nullopt;
}

void QuadCache::store(const std::string& key, double tol, const QuadResult& result) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = memo_.find(key);
  if (it != memo_.end() && it->second.tol <= tol) return;
  memo_[key] = Entry{tol, result};
  if (dir_.empty()) return;
  std::error_code ec;
  fs::create_directories(dir_, ec);
  std::random_device rd;
  const std::string tmp = path_for(key) + ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) return;
    out << to_json(key, tol, result).dump(2) << '\n';
    if (!out) {
      fs::remove(tmp, ec);
      return;
    }
  }
  fs::rename(tmp, path_for(key), ec);
  if (ec) fs::remove(tmp, ec);
}

std::size_t QuadCache::clear() {
  std::lock_guard<std::mutex> lock(mutex_);
  memo_.clear();
  std::size_t n = 0;
  if (dir_.empty()) return 0;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir_, ec)) {
    if (entry.path().extension() == ".json") {
      fs::remove(entry.path(), ec);
      ++n;
    }
  }
  return n;
}

std::size_t QuadCache::disk_entries() const {
  if (dir_.empty()) return 0;
  std::size_t n = 0;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir_, ec)) {
    if (entry.path().extension() == ".json") ++n;
  }
  return n;
}

}  // namespace arak
