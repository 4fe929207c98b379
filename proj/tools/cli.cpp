#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "arakheight/arakelov.hpp"
#include "arakheight/chow.hpp"
#include "arakheight/errors.hpp"
#include "arakheight/heights.hpp"
#include "arakheight/isogeny.hpp"
#include "arakheight/northcott.hpp"
#include "arakheight/parse.hpp"
#include "json.hpp"

namespace arak::cli {

using json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::InvalidArgument, "bad boolean for " + key + ": '" + v + "'");
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "bad number for " + key + ": '" + v + "'");
  }
}

long long parse_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "bad integer for " + key + ": '" + v + "'");
  }
}

void set_key(Config& cfg, const std::string& key, const std::string& v) {
  if (key == "tol") {
    cfg.tol = parse_double(key, v);
  } else if (key == "cache_dir") {
    cfg.cache_dir = v;
  } else if (key == "cache") {
    cfg.use_cache = parse_bool(key, v);
  } else if (key == "no_cache") {
    cfg.use_cache = !parse_bool(key, v);
  } else if (key == "threads") {
    cfg.threads = static_cast<int>(parse_integer(key, v));
  } else if (key == "seed") {
    const long long s = parse_integer(key, v);
    if (s < 0) throw Error(ErrorCode::InvalidArgument, "seed must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(s);
  } else if (key == "format") {
    cfg.format = v;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
  }
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::AllZero:
    case ErrorCode::VarMismatch:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::ParseError:
    case ErrorCode::UnsupportedShape:
    case ErrorCode::NotSquareFree:
    case ErrorCode::UnknownSymbol:
    case ErrorCode::InvalidArgument:
      return UsageError;
    default:
      return ComputationError;
  }
}

json value_json(const RigorousValue& v) {
  json j{{"value", v.numeric}, {"error_bound", v.error_bound}};
  j["symbolic"] = v.symbolic ? json(v.symbolic->to_string()) : json(nullptr);
  return j;
}

void merge_value(json& report, const RigorousValue& v) {
  const json j = value_json(v);
  for (auto it = j.begin(); it != j.end(); ++it) report[it.key()] = it.value();
}

// Flattened key/value view of a report, nested keys joined by '.'.
void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
  } else if (j.is_string()) {
    out.emplace_back(prefix, j.get<std::string>());
  } else {
    out.emplace_back(prefix, j.dump());
  }
}

std::string scalar_text(const json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void emit(const json& report, const std::string& format, std::ostream& out) {
  if (format == "json") {
    out << report.dump(2) << "\n";
    return;
  }
  json head = report;
  json rows = json::array();
  if (head.contains("rows")) {
    rows = head["rows"];
    head.erase("rows");
  }
  std::vector<std::string> columns;
  if (!rows.empty()) {
    for (auto it = rows[0].begin(); it != rows[0].end(); ++it) columns.push_back(it.key());
  }
  if (format == "csv") {
    if (!rows.empty()) {
      for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << csv_field(columns[c]);
      out << "\n";
      for (const auto& r : rows) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
          out << (c ? "," : "") << csv_field(r.contains(columns[c]) ? scalar_text(r[columns[c]]) : "");
        }
        out << "\n";
      }
      return;
    }
    std::vector<std::pair<std::string, std::string>> kv;
    flatten(head, "", kv);
    out << "key,value\n";
    for (const auto& [k, v] : kv) out << csv_field(k) << "," << csv_field(v) << "\n";
    return;
  }
  // pretty
  std::vector<std::pair<std::string, std::string>> kv;
  flatten(head, "", kv);
  std::size_t width = 0;
  for (const auto& [k, v] : kv) width = std::max(width, k.size());
  for (const auto& [k, v] : kv) out << std::left << std::setw(static_cast<int>(width)) << k << "  " << v << "\n";
  if (!rows.empty()) {
    std::vector<std::size_t> w(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
      w[c] = columns[c].size();
      for (const auto& r : rows) w[c] = std::max(w[c], scalar_text(r[columns[c]]).size());
    }
    out << "\n";
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "  " : "") << std::setw(static_cast<int>(w[c])) << columns[c];
    out << "\n";
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < columns.size(); ++c) {
        out << (c ? "  " : "") << std::setw(static_cast<int>(w[c])) << scalar_text(r[columns[c]]);
      }
      out << "\n";
    }
  }
}

Polarization make_polarization(const std::string& spec, int d) {
  if (d == 0) {
    if (spec == "fs" || spec == "b0" || spec == "b1") return Polarization::fs(0);
    throw Error(ErrorCode::InvalidArgument, "polarization '" + spec + "' needs d >= 1");
  }
  return Polarization::preset(spec, d);
}

ProjPoint parse_point(const std::string& text, int d) {
  const std::vector<MultiPoly> raw = parse_tuple(text, d);
  return normalize(raw).point;
}

Rational parse_rational(const std::string& text) {
  Rational q;
  const std::string t = trim(text);
  if (t.empty() || q.set_str(t, 10) != 0) throw Error(ErrorCode::ParseError, "bad rational '" + text + "'");
  if (q.get_den() == 0) throw Error(ErrorCode::ParseError, "zero denominator in '" + text + "'");
  q.canonicalize();
  return q;
}

struct Context {
  Config cfg;
  bool explain = false;

  IntersectionEngine engine() const {
    QuadOptions q;
    q.tol = cfg.tol;
    q.seed = cfg.seed;
    q.threads = cfg.threads;
    std::shared_ptr<QuadCache> cache;
    if (cfg.use_cache) cache = std::make_shared<QuadCache>(cfg.cache_dir);
    EngineOptions e;
    e.tol = cfg.tol;
    return IntersectionEngine(e, FsIntegrator(q, cache));
  }
};

json run_height(const Context& ctx, const std::string& point, const std::string& pol_spec, int d) {
  const ProjPoint p = parse_point(point, d);
  const Polarization pol = make_polarization(pol_spec, p.num_vars());
  TraceNode trace;
  const RigorousValue h = height_point(p, pol, ctx.engine(), ctx.explain ? &trace : nullptr);
  json r{{"command", "height"}, {"point", p.to_string()}, {"polarization", pol_spec}, {"d", p.num_vars()}};
  merge_value(r, h);
  if (ctx.explain) r["trace"] = json::parse(trace_to_json(trace));
  return r;
}

json run_compare(const Context& ctx, const std::string& point, int d) {
  const ProjPoint p = parse_point(point, d);
  const Prop21Report rep = compare_prop21(p, ctx.engine());
  json r{{"command", "compare"}, {"point", p.to_string()}, {"d", p.num_vars()}};
  r["lhs"] = value_json(rep.lhs);
  r["rhs"] = value_json(rep.rhs);
  r["residual"] = value_json(rep.residual);
  r["h_b1"] = value_json(rep.h_b1);
  json bij = json::array();
  for (const auto& [ij, v] : rep.h_bij) {
    json e = value_json(v);
    e["i"] = ij.first + 1;
    e["j"] = ij.second + 1;
    bij.push_back(e);
  }
  r["h_bij"] = bij;
  const double allowed = std::max(1e-4, rep.lhs.error_bound + rep.rhs.error_bound);
  r["holds"] = rep.residual.is_exact_zero() || std::fabs(rep.residual.numeric) <= allowed;
  return r;
}

json run_certify(const std::string& pol_spec, int d) {
  const Polarization pol = make_polarization(pol_spec, d);
  FairlyLargeCertificate cert;
  try {
    cert = certify_fairly_large(pol);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotFairlyLarge) throw;
    throw Error(e.code(), std::string(e.what()) +
                              "; Northcott can fail for such a polarization, see `arakheight counterexample --n 30 --c 0`");
  }
  json rows = json::array();
  for (const auto& s : cert.slots) {
    rows.push_back({{"slot", s.slot + 1},
                    {"exponent", s.exponent.get_str()},
                    {"witness", s.witness.to_string()},
                    {"sup_norm", s.witness.sup_norm},
                    {"exact_check", s.witness.exact_check}});
  }
  return json{{"command", "certify"},
              {"polarization", pol_spec},
              {"d", d},
              {"fairly_large", true},
              {"exponent_product", cert.exponent_product().get_str()},
              {"rows", rows}};
}

json run_enumerate(const Context& ctx, int n, int d, double bound, const std::string& pol_spec,
                   std::uint64_t budget) {
  const Polarization pol = make_polarization(pol_spec, d);
  try {
    certify_fairly_large(pol);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotFairlyLarge) throw;
    throw Error(e.code(), std::string(e.what()) +
                              "; bounded-height sets need not be finite here, see `arakheight counterexample --n 30 --c 0`");
  }
  NorthcottOptions opts;
  opts.tol = ctx.cfg.tol;
  opts.threads = ctx.cfg.threads;
  opts.budget = budget;
  const Enumeration e = enumerate_bounded(n, d, bound, pol, opts, ctx.engine());
  json rows = json::array();
  for (const auto& bp : e.points) {
    rows.push_back({{"point", bp.point.to_string()},
                    {"height", bp.height.numeric},
                    {"error_bound", bp.height.error_bound},
                    {"status", std::string(to_string(bp.status))}});
  }
  json box{{"degree_bounds", e.box.degree_bounds},
           {"coeff_bound", e.box.coeff_bound.get_str()},
           {"tuples", e.box.tuples()},
           {"epsilon", e.box.epsilon},
           {"certificate_scale", e.box.certificate_scale.get_str()}};
  return json{{"command", "enumerate"},
              {"n", n},
              {"d", d},
              {"bound", bound},
              {"polarization", pol_spec},
              {"box", box},
              {"scanned", e.scanned},
              {"distinct", e.distinct},
              {"prefiltered", e.prefiltered},
              {"evaluated", e.evaluated},
              {"in", e.members().size()},
              {"undecided", e.undecided().size()},
              {"rows", rows}};
}

json run_chow(const Context& ctx, const std::string& cycle_text, const std::string& pol_spec) {
  const ZeroCycle z = ZeroCycle::parse(cycle_text).canonical();
  z.validate();
  const Polarization pol = make_polarization(pol_spec, z.d);
  const IntersectionEngine engine = ctx.engine();
  const ChowForm f = chow_form(z);
  const RigorousValue hc = cycle_height_dim0(z, pol, engine);
  const RigorousValue hf = chow_height(z, pol, engine);
  json r{{"command", "chow"},
         {"cycle", z.to_json()},
         {"degree", z.degree()},
         {"polarization", pol_spec},
         {"chow_form", f.to_string()},
         {"chow_point", f.chow_point().to_string()}};
  r["cycle_height"] = value_json(hc);
  r["chow_height"] = value_json(hf);
  return r;
}

json run_supnorm(const Context& ctx, const std::string& section, const std::vector<int>& degrees,
                 const std::string& mean) {
  if (mean != "log" && mean != "plain") throw Error(ErrorCode::InvalidArgument, "mean must be log or plain");
  const MultiPoly s = parse_poly(section, static_cast<int>(degrees.size()));
  const SupnormReport rep = supnorm_vs_mean(s, degrees, mean == "log" ? MeanKind::Log : MeanKind::Plain, ctx.engine());
  return json{{"command", "supnorm"},
              {"section", s.to_string()},
              {"degrees", degrees},
              {"mean_kind", mean},
              {"coeff_max", rep.coeff_max.get_str()},
              {"log_mean", {{"value", rep.log_mean}, {"error_bound", rep.error_bound}}},
              {"mean", rep.mean},
              {"bgs_factor", rep.bgs_factor},
              {"norm_factor", rep.norm_factor},
              {"constant", rep.constant},
              {"sup_norm", rep.sup_norm},
              {"sup_exact", rep.sup_exact},
              {"holds", rep.holds}};
}

json run_counterexample(int n_max, const std::string& c_text) {
  const CounterexampleReport rep = counterexample_heights(n_max, parse_rational(c_text));
  json rows = json::array();
  for (const auto& row : rep.rows) {
    rows.push_back({{"n", row.n},
                    {"height", row.height.get_str()},
                    {"numeric", mpq_get_d(row.height.get_mpq_t())},
                    {"error_bound", 0.0}});
  }
  return json{{"command", "counterexample"},
              {"c", rep.c.get_str()},
              {"curve", rep.curve},
              {"fails_northcott", rep.fails_northcott},
              {"verdict", rep.verdict},
              {"rows", rows}};
}

json run_cache(const Context& ctx, bool clear) {
  json r{{"command", clear ? "cache clear" : "cache info"}, {"cache_dir", ctx.cfg.cache_dir}};
  if (ctx.cfg.cache_dir.empty()) {
    r["entries"] = 0;
    r["note"] = "no cache directory configured";
    return r;
  }
  QuadCache cache(ctx.cfg.cache_dir);
  if (clear) {
    r["removed"] = cache.clear();
  }
  r["entries"] = cache.disk_entries();
  return r;
}

}  // namespace

void Config::validate() const {
  if (!(tol > 0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be > 0");
  if (threads < 1) throw Error(ErrorCode::InvalidArgument, "threads must be >= 1");
  if (format != "json" && format != "csv" && format != "pretty") {
    throw Error(ErrorCode::InvalidArgument, "format must be json, csv or pretty");
  }
}

void apply_config_text(Config& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string v = trim(line.substr(eq + 1));
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) v = v.substr(1, v.size() - 2);
    set_key(cfg, trim(line.substr(0, eq)), v);
  }
}

void apply_environment(Config& cfg, const std::function<std::optional<std::string>(const std::string&)>& getenv) {
  const std::pair<const char*, const char*> vars[] = {{"ARAKHEIGHT_TOL", "tol"},         {"ARAKHEIGHT_CACHE_DIR", "cache_dir"},
                                                      {"ARAKHEIGHT_NO_CACHE", "no_cache"}, {"ARAKHEIGHT_THREADS", "threads"},
                                                      {"ARAKHEIGHT_SEED", "seed"},       {"ARAKHEIGHT_FORMAT", "format"}};
  for (const auto& [name, key] : vars) {
    if (auto v = getenv(name)) set_key(cfg, key, *v);
  }
}

std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (!v) return std::nullopt;
  return std::string(v);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             const std::function<std::optional<std::string>(const std::string&)>& getenv) {
  CLI::App app{"Arakelov heights of points and zero-cycles over Q(z1..zd)", "arakheight"};
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 success, 1 computation error, 2 usage or input error.\n"
      "Precedence: config file < command-line flags < environment.");

  std::string config_path, format, cache_dir;
  double tol = 0;
  std::uint64_t seed = 0;
  int threads = 0;
  bool no_cache = false, as_json = false, explain = false;
  auto* o_config = app.add_option("--config", config_path, "key = value config file (also ARAKHEIGHT_CONFIG)");
  auto* o_tol = app.add_option("--tol", tol, "quadrature tolerance");
  auto* o_seed = app.add_option("--seed", seed, "random seed");
  auto* o_threads = app.add_option("--threads", threads, "worker threads");
  auto* o_cache_dir = app.add_option("--cache-dir", cache_dir, "quadrature cache directory");
  auto* o_no_cache = app.add_flag("--no-cache", no_cache, "disable the quadrature cache");
  auto* o_format = app.add_option("--format", format, "json | csv | pretty");
  auto* o_json = app.add_flag("--json", as_json, "same as --format json");
  app.add_flag("--explain", explain, "include the intersection trace");

  std::string point, pol = "fs", cycle, section, c_text = "0", mean = "log";
  int d = -1, n = 1, dim = 1, n_max = 30;
  double bound = 0;
  std::uint64_t budget = NorthcottOptions{}.budget;
  std::vector<int> degrees;

  auto* height = app.add_subcommand("height", "height of a point");
  height->add_option("--point", point, "\"(f0, ..., fn)\" in z1..zd")->required();
  height->add_option("--pol", pol, "fs | b0 | b1 | bij:i,j | degenerate:i,lambda");
  height->add_option("--d", d, "transcendence degree (default: from the point)");

  auto* compare = app.add_subcommand("compare", "B0 against d! B1 + (d!/2) sum Bij for one point");
  compare->add_option("--point", point)->required();
  compare->add_option("--d", d);

  auto* certify = app.add_subcommand("certify", "fairly-large certificate of a polarization");
  certify->add_option("--pol", pol);
  certify->add_option("--d", dim)->check(CLI::PositiveNumber);

  auto* enumerate = app.add_subcommand("enumerate", "points of height <= bound");
  enumerate->add_option("--n", n)->check(CLI::PositiveNumber);
  enumerate->add_option("--d", dim)->check(CLI::PositiveNumber);
  enumerate->add_option("--bound", bound)->required();
  enumerate->add_option("--pol", pol);
  enumerate->add_option("--budget", budget, "largest number of coefficient tuples to scan");

  auto* chow = app.add_subcommand("chow", "Chow form and heights of a zero-cycle");
  chow->add_option("--cycle", cycle, "\"[(m,'(1, z1)'), (m,'form: X1^2 - 2*X0^2')]\" or JSON")->required();
  chow->add_option("--pol", pol);

  auto* supnorm = app.add_subcommand("supnorm", "|s| against the mean of log ||s|| on (P^1)^r");
  supnorm->add_option("--section", section, "polynomial in z1..zr")->required();
  supnorm->add_option("--degrees", degrees, "d1,d2")->delimiter(',')->required();
  supnorm->add_option("--mean", mean, "log | plain");

  auto* counter = app.add_subcommand("counterexample", "heights along [2]^n x_0 on the elliptic family");
  counter->add_option("--n", n_max)->check(CLI::NonNegativeNumber);
  counter->add_option("--c", c_text, "deg(H.H), a rational");

  auto* cache = app.add_subcommand("cache", "quadrature cache administration");
  cache->require_subcommand(1);
  auto* cache_info = cache->add_subcommand("info", "entry count");
  auto* cache_clear = cache->add_subcommand("clear", "remove every entry");
  cache_info->fallthrough();
  cache_clear->fallthrough();

  for (auto* s : {height, compare, certify, enumerate, chow, supnorm, counter, cache}) s->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return Ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return Ok;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", {{"code", "UsageError"}, {"message", e.what()}}}}.dump() << "\n";
    return UsageError;
  }

  Context ctx;
  try {
    std::string path = config_path;
    if (o_config->count() == 0) {
      if (auto p = getenv("ARAKHEIGHT_CONFIG")) path = *p;
    }
    if (!path.empty()) {
      std::ifstream in(path);
      if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read config file '" + path + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      apply_config_text(ctx.cfg, ss.str());
    }
    if (ctx.cfg.cache_dir.empty()) ctx.cfg.cache_dir = QuadCache::default_dir();
    if (o_tol->count()) ctx.cfg.tol = tol;
    if (o_seed->count()) ctx.cfg.seed = seed;
    if (o_threads->count()) ctx.cfg.threads = threads;
    if (o_cache_dir->count()) ctx.cfg.cache_dir = cache_dir;
    if (o_no_cache->count()) ctx.cfg.use_cache = !no_cache;
    if (o_format->count()) ctx.cfg.format = format;
    if (o_json->count() && as_json) ctx.cfg.format = "json";
    apply_environment(ctx.cfg, getenv);
    ctx.cfg.validate();
    ctx.explain = explain;

    json report;
    if (*height) {
      report = run_height(ctx, point, pol, d);
    } else if (*compare) {
      report = run_compare(ctx, point, d);
    } else if (*certify) {
      report = run_certify(pol, dim);
    } else if (*enumerate) {
      report = run_enumerate(ctx, n, dim, bound, pol, budget);
    } else if (*chow) {
      report = run_chow(ctx, cycle, pol);
    } else if (*supnorm) {
      report = run_supnorm(ctx, section, degrees, mean);
    } else if (*counter) {
      report = run_counterexample(n_max, c_text);
    } else {
      report = run_cache(ctx, static_cast<bool>(*cache_clear));
    }
    emit(report, ctx.cfg.format, out);
    return Ok;
  } catch (const Error& e) {
    err << json{{"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}}}}.dump() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << json{{"error", {{"code", "Internal"}, {"message", e.what()}}}}.dump() << "\n";
    return ComputationError;
  }
}

}  // namespace arak::cli
