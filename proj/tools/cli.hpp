#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace arak::cli {

enum ExitCode : int { Ok = 0, ComputationError = 1, UsageError = 2 };

struct Config {
  double tol = 1e-6;
  std::string cache_dir;
  bool use_cache = true;
  int threads = 1;
  std::uint64_t seed = 20240601;
  std::string format = "json";  // json | csv | pretty

  void validate() const;
};

/// key = value lines; '#' starts a comment; keys tol, cache_dir, cache,
/// threads, seed, format.
void apply_config_text(Config& cfg, const std::string& text);
/// ARAKHEIGHT_TOL, ARAKHEIGHT_CACHE_DIR, ARAKHEIGHT_NO_CACHE, ARAKHEIGHT_THREADS,
/// ARAKHEIGHT_SEED, ARAKHEIGHT_FORMAT.
void apply_environment(Config& cfg, const std::function<std::optional<std::string>(const std::string&)>& getenv);

std::optional<std::string> process_env(const std::string& name);

/// args excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             const std::function<std::optional<std::string>(const std::string&)>& getenv = process_env);

}  // namespace arak::cli
