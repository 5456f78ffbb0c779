#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "scdens/density.hpp"
#include "scdens/entropy.hpp"
#include "scdens/mle.hpp"
#include "scdens/random.hpp"
#include "scdens/rate_harness.hpp"
#include "scdens/samplers.hpp"
#include "scdens/transforms.hpp"

namespace scdens::cli {

using json = nlohmann::json;

inline constexpr int kOk = 0;
inline constexpr int kError = 1;
inline constexpr int kDegraded = 2;
inline constexpr int kConfigVersion = 1;

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Input

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

// One finite value per line; a non-numeric first line is taken as a header.
// Blank lines are skipped.
inline std::vector<double> read_data(std::istream& in, const std::string& name) {
  std::vector<double> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    std::string t = trim(line);
    if (t.empty()) continue;
    double v = 0;
    if (!parse_double(t, v)) {
      if (lineno == 1) continue;
      throw CliError(name + ":" + std::to_string(lineno) + ": not a number: '" + t + "'");
    }
    if (!std::isfinite(v)) throw CliError(name + ":" + std::to_string(lineno) + ": value is not finite");
    out.push_back(v);
  }
  if (out.empty()) throw CliError(name + ": no data");
  return out;
}

inline std::vector<double> read_data_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CliError("cannot read " + path);
  return read_data(f, path);
}

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw CliError(where + " must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw CliError("unknown key '" + k + "' in " + where);
}

inline json load_config(const std::string& path, const std::set<std::string>& allowed) {
  std::ifstream f(path);
  if (!f) throw CliError("cannot read " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw CliError(path + ": " + e.what());
  }
  auto keys = allowed;
  keys.insert("version");
  check_keys(j, keys, path);
  if (!j.contains("version")) throw CliError(path + ": missing 'version'");
  if (j["version"] != kConfigVersion)
    throw CliError(path + ": unsupported version " + j["version"].dump() + " (expected " +
                   std::to_string(kConfigVersion) + ")");
  return j;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw CliError(std::string("bad value for '") + key + "': " + e.what());
  }
}

// {"family": "power", "s": -1} or {"family": "log"}.
inline TransformSpec parse_transform(const json& j) {
  check_keys(j, {"family", "s"}, "transform");
  auto fam = get_or<std::string>(j, "family", "power");
  if (fam == "log") return TransformSpec::log_concave();
  if (fam == "power") {
    if (!j.contains("s")) throw CliError("power transform needs 's'");
    return TransformSpec::power(j["s"].get<double>());
  }
  throw CliError("unknown transform family '" + fam + "'");
}

inline json transform_json(const TransformSpec& t) {
  if (t.kind() == TransformKind::PowerS && t.s() != 0) return {{"family", "power"}, {"s", t.s()}};
  return {{"family", "log"}};
}

// ---------------------------------------------------------------------------
// Output

// Writes to the file at path, or to `fallback` when path is empty.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      os_ = &fallback;
    } else {
      file_.open(path);
      if (!file_) throw CliError("cannot write " + path);
      os_ = &file_;
    }
    os_->precision(17);
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

inline json num(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

struct Series {
  std::string name;
  std::vector<double> x, y;
  std::optional<std::pair<double, double>> line;  // slope, intercept in log-log
};

// Log-log scatter with fitted lines.
inline void write_loglog_svg(const std::string& path, const std::string& title, const std::string& xlabel,
                             const std::vector<Series>& series) {
  const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (s.x[i] > 0 && s.y[i] > 0) {
        x0 = std::min(x0, std::log10(s.x[i]));
        x1 = std::max(x1, std::log10(s.x[i]));
        y0 = std::min(y0, std::log10(s.y[i]));
        y1 = std::max(y1, std::log10(s.y[i]));
      }
  if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
  if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double lx) { return L + (lx - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double ly) { return H - B - (ly - y0) / (y1 - y0) * (H - T - B); };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::ofstream f(path);
  if (!f) throw CliError("cannot write " + path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  f << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  f << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  f << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  f << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">log10 " << xlabel
    << "</text>\n";
  char buf[64];
  for (double v : {x0, x1}) {
    std::snprintf(buf, sizeof buf, "%.2f", v);
    f << "<text x=\"" << px(v) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">" << buf
      << "</text>\n";
  }
  for (double v : {y0, y1}) {
    std::snprintf(buf, sizeof buf, "%.2f", v);
    f << "<text x=\"" << L - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << buf
      << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = colors[k % 4];
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (s.x[i] > 0 && s.y[i] > 0)
        f << "<circle cx=\"" << px(std::log10(s.x[i])) << "\" cy=\"" << py(std::log10(s.y[i])) << "\" r=\"3\" fill=\""
          << c << "\"/>\n";
    if (s.line) {
      auto [m, b] = *s.line;
      // Fitted in natural logs; the axes are log10.
      auto ly = [&](double lx) { return (b + m * lx * std::log(10.0)) / std::log(10.0); };
      f << "<line x1=\"" << px(x0) << "\" y1=\"" << py(ly(x0)) << "\" x2=\"" << px(x1) << "\" y2=\"" << py(ly(x1))
        << "\" stroke=\"" << c << "\"/>\n";
    }
    f << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (k + 1) << "\" text-anchor=\"end\" font-size=\"12\" fill=\""
      << c << "\">" << s.name;
    if (s.line) {
      std::snprintf(buf, sizeof buf, " (slope %.3f)", s.line->first);
      f << buf;
    }
    f << "</text>\n";
  }
  f << "</svg>\n";
}

// ---------------------------------------------------------------------------
// Commands

inline json fit_json(const FitResult& f, double s, std::size_t n) {
  auto dom = f.phi_hat.domain();
  return {{"version", kConfigVersion},
          {"s", s},
          {"n", n},
          {"converged", f.converged},
          {"iterations", f.iterations},
          {"loglik", f.loglik},
          {"kkt_residual", f.kkt_residual},
          {"raw_integral", f.raw_integral},
          {"support", {dom.lo, dom.hi}},
          {"knots", f.phi_hat.knots()},
          {"phi", f.phi_hat.values()}};
}

inline int cmd_fit(const std::string& data_path, double s, const std::string& out_path, std::ostream& out) {
  auto data = read_data_file(data_path);
  std::size_t need = existence_threshold(s);
  if (data.size() < need)
    throw CliError("need at least " + std::to_string(need) + " observations for s = " + std::to_string(s) + ", got " +
                   std::to_string(data.size()));
  FitConfig cfg;
  cfg.s = s;
  FitResult f = fit(data, cfg);
  Sink sink(out_path, out);
  *sink << fit_json(f, s, data.size()).dump(2) << "\n";
  return f.converged ? kOk : kDegraded;
}

inline int cmd_sample(const std::string& dist, double beta, std::size_t n, std::uint64_t seed,
                      const std::string& out_path, std::ostream& out) {
  auto d = ReferenceDistribution::from_name(dist, beta);
  auto xs = sample(d, n, seed);
  Sink sink(out_path, out);
  for (double x : xs) *sink << x << "\n";
  return kOk;
}

inline rates::RateStudyConfig parse_rate_config(const json& j) {
  rates::RateStudyConfig c;
  if (j.contains("true_density")) {
    const auto& t = j["true_density"];
    check_keys(t, {"name", "beta"}, "true_density");
    c.true_density = ReferenceDistribution::from_name(get_or<std::string>(t, "name", "laplace"),
                                                       get_or<double>(t, "beta", 3.0));
  }
  c.s = get_or<double>(j, "s", c.s);
  c.n_grid = get_or<std::vector<std::size_t>>(j, "n_grid", c.n_grid);
  c.replications = get_or<int>(j, "replications", c.replications);
  if (j.contains("metrics")) {
    c.metrics.clear();
    for (const auto& m : j["metrics"]) c.metrics.push_back(rates::metric_from_string(m.get<std::string>()));
  }
  if (j.contains("compact")) {
    auto v = j["compact"].get<std::vector<double>>();
    if (v.size() != 2) throw CliError("'compact' must be [lo, hi]");
    c.compact = {v[0], v[1]};
  }
  return c;
}

inline const std::set<std::string> kRateKeys{"true_density", "s", "n_grid", "replications", "metrics", "compact"};

inline json rate_summary_json(const rates::RateStudyResult& r) {
  const auto& c = r.config;
  json j;
  j["version"] = kConfigVersion;
  j["config"] = {{"true_density", {{"name", c.true_density.name()}, {"beta", c.true_density.beta()}}},
                 {"s", c.s},
                 {"n_grid", c.n_grid},
                 {"replications", c.replications},
                 {"seed", c.seed},
                 {"compact", {c.compact.lo, c.compact.hi}}};
  json metrics = json::array();
  for (auto m : c.metrics) metrics.push_back(rates::to_string(m));
  j["config"]["metrics"] = metrics;
  json per_n = json::array();
  for (const auto& s : r.per_n) {
    json e{{"n", s.n}, {"used", s.used}, {"excluded", s.excluded}, {"sup_phat_median", s.sup_phat_median}};
    for (auto m : c.metrics) {
      const auto& q = s.q[static_cast<std::size_t>(m)];
      e["metrics"][rates::to_string(m)] = {{"q25", q.q25}, {"q50", q.q50}, {"q75", q.q75}};
    }
    per_n.push_back(e);
  }
  j["per_n"] = per_n;
  j["slopes"] = json::object();
  for (auto m : c.metrics) {
    const auto& sf = r.slope[static_cast<std::size_t>(m)];
    if (sf) j["slopes"][rates::to_string(m)] = {{"slope", sf->slope}, {"stderr", sf->stderr_}, {"intercept", sf->intercept}};
  }
  j["nonconverged"] = r.nonconverged;
  j["nonconverged_fraction"] = r.nonconverged_fraction;
  j["valid"] = r.valid;
  j["warnings"] = r.warnings;
  return j;
}

inline void write_rate_csv(std::ostream& os, const rates::RateStudyResult& r) {
  os << "n,replication,converged";
  for (auto m : rates::kAllMetrics) os << "," << rates::to_string(m);
  os << ",sup_phat\n";
  for (const auto& rep : r.raw) {
    os << rep.n << "," << rep.rep << "," << (rep.converged ? 1 : 0);
    for (auto m : rates::kAllMetrics) {
      os << ",";
      if (r.has(m) && rep.converged) os << rep.value[static_cast<std::size_t>(m)];
    }
    os << "," << rep.sup_phat << "\n";
  }
}

inline bool wants(const std::vector<std::string>& formats, const char* f) {
  return std::find(formats.begin(), formats.end(), f) != formats.end();
}

inline int cmd_rate_study(const std::string& config_path, std::uint64_t seed, unsigned jobs, const std::string& prefix,
                          const std::vector<std::string>& formats, std::ostream& out) {
  auto cfg = parse_rate_config(load_config(config_path, kRateKeys));
  cfg.seed = seed;
  cfg.jobs = jobs;
  auto r = rates::run_rate_study(cfg);
  if (wants(formats, "csv")) {
    Sink sink(prefix + "_raw.csv", out);
    write_rate_csv(*sink, r);
  }
  auto summary = rate_summary_json(r);
  if (wants(formats, "json")) {
    Sink sink(prefix + "_summary.json", out);
    *sink << summary.dump(2) << "\n";
  }
  if (wants(formats, "svg")) {
    std::vector<Series> series;
    for (auto m : cfg.metrics) {
      Series s;
      s.name = rates::to_string(m);
      for (const auto& p : r.per_n) {
        if (!p.used) continue;
        s.x.push_back(static_cast<double>(p.n));
        s.y.push_back(p.q[static_cast<std::size_t>(m)].q50);
      }
      if (const auto& sf = r.slope[static_cast<std::size_t>(m)]) s.line = {{sf->slope, sf->intercept}};
      series.push_back(s);
    }
    write_loglog_svg(prefix + ".svg", "median error vs n (" + cfg.true_density.name() + ")", "n", series);
  }
  out << "rate-study: " << r.raw.size() << " fits, " << r.nonconverged << " not converged";
  for (auto m : cfg.metrics)
    if (const auto& sf = r.slope[static_cast<std::size_t>(m)])
      out << ", " << rates::to_string(m) << " slope " << sf->slope;
  out << "\n";
  return r.valid ? kOk : kDegraded;
}

struct EntropyStudyConfig {
  entropy::ClassDescriptor descriptor = entropy::BoundedConcave{0, 1, 1};
  double r = 1;
  std::vector<double> eps_grid{0.2, 0.1, 0.05, 0.025};
  std::size_t members = 200;
  int grid_density = 2048;
};

inline const std::set<std::string> kEntropyKeys{"class", "r", "eps_grid", "members", "grid_density"};

inline entropy::ClassDescriptor parse_class(const json& j) {
  auto type = get_or<std::string>(j, "type", "");
  if (type == "lipschitz") {
    check_keys(j, {"type", "a", "b", "B", "Gamma"}, "class");
    return entropy::LipschitzConcave{get_or(j, "a", 0.0), get_or(j, "b", 1.0), get_or(j, "B", 1.0),
                                     get_or(j, "Gamma", 1.0)};
  }
  if (type == "bounded") {
    check_keys(j, {"type", "b1", "b2", "B"}, "class");
    return entropy::BoundedConcave{get_or(j, "b1", 0.0), get_or(j, "b2", 1.0), get_or(j, "B", 1.0)};
  }
  if (type == "transformed") {
    check_keys(j, {"type", "transform", "b1", "b2", "B"}, "class");
    if (!j.contains("transform")) throw CliError("transformed class needs 'transform'");
    return entropy::TransformedCompact{parse_transform(j["transform"]), get_or(j, "b1", 0.0), get_or(j, "b2", 1.0),
                                       get_or(j, "B", 1.0)};
  }
  if (type == "tail") {
    check_keys(j, {"type", "transform", "M"}, "class");
    if (!j.contains("transform")) throw CliError("tail class needs 'transform'");
    return entropy::TailClass{parse_transform(j["transform"]), get_or(j, "M", 2.0)};
  }
  throw CliError("unknown class type '" + type + "' (lipschitz, bounded, transformed, tail)");
}

inline EntropyStudyConfig parse_entropy_config(const json& j) {
  EntropyStudyConfig c;
  if (j.contains("class")) c.descriptor = parse_class(j["class"]);
  if (std::holds_alternative<entropy::LipschitzConcave>(c.descriptor)) c.r = kInf;
  if (j.contains("r")) {
    if (j["r"].is_string() && j["r"] == "inf") c.r = kInf;
    else c.r = get_or<double>(j, "r", c.r);
  }
  c.eps_grid = get_or(j, "eps_grid", c.eps_grid);
  c.members = get_or(j, "members", c.members);
  c.grid_density = get_or(j, "grid_density", c.grid_density);
  if (!(c.r >= 1)) throw CliError("r must be at least 1");
  if (c.eps_grid.size() < 4) throw CliError("eps_grid needs at least 4 points");
  if (c.grid_density < 2) throw CliError("grid_density must be at least 2");
  return c;
}

inline int cmd_entropy_study(const std::string& config_path, std::uint64_t seed, unsigned jobs,
                             const std::string& prefix, const std::vector<std::string>& formats, std::ostream& out) {
  EntropyStudyConfig cfg;
  if (!config_path.empty()) cfg = parse_entropy_config(load_config(config_path, kEntropyKeys));
  auto members = entropy::sample_members(cfg.descriptor, cfg.members, seed);
  auto curve = entropy::entropy_curve(cfg.descriptor, cfg.eps_grid, cfg.r);
  struct Row {
    double eps, log_n, max_size, covered, declared, constant;
    bool valid;
  };
  std::vector<Row> rows;
  bool all_covered = true;
  for (const auto& er : curve.rows) {
    Row row{er.eps, er.log_cardinality, 0, 0, er.declared_size, 0, er.valid};
    if (er.valid) {
      auto set = entropy::build_cover(cfg.descriptor, er.eps, cfg.r);
      auto rep = entropy::verify_bracketing(set, members, cfg.grid_density, jobs);
      row.max_size = rep.max_observed_size;
      row.covered = rep.covered_fraction;
      row.constant = set.constant();
      all_covered = all_covered && rep.covered_fraction == 1.0;
    }
    rows.push_back(row);
  }
  if (wants(formats, "csv")) {
    Sink sink(prefix + ".csv", out);
    *sink << "eps,count,log_cardinality,max_size,covered_fraction,declared_size,valid\n";
    for (const auto& r : rows)
      *sink << r.eps << "," << std::exp(r.log_n) << "," << r.log_n << "," << r.max_size << "," << r.covered << ","
            << r.declared << "," << (r.valid ? 1 : 0) << "\n";
  }
  json j{{"version", kConfigVersion},
         {"class", entropy::describe(cfg.descriptor)},
         {"r", num(cfg.r)},
         {"seed", seed},
         {"members", cfg.members},
         {"exponent", curve.exponent},
         {"K", curve.K},
         {"all_covered", all_covered},
         {"warnings", curve.warnings}};
  json jr = json::array();
  for (const auto& r : rows)
    jr.push_back({{"eps", r.eps},
                  {"log_cardinality", r.log_n},
                  {"max_size", r.max_size},
                  {"covered_fraction", r.covered},
                  {"declared_size", r.declared},
                  {"constant", r.constant},
                  {"valid", r.valid}});
  j["rows"] = jr;
  if (wants(formats, "json")) {
    Sink sink(prefix + ".json", out);
    *sink << j.dump(2) << "\n";
  }
  if (wants(formats, "svg")) {
    Series s;
    s.name = "log N";
    for (const auto& r : rows)
      if (r.valid) {
        s.x.push_back(1 / r.eps);
        s.y.push_back(r.log_n);
      }
    write_loglog_svg(prefix + ".svg", entropy::describe(cfg.descriptor), "1/eps", {s});
  }
  out << "entropy-study: " << entropy::describe(cfg.descriptor) << " exponent " << curve.exponent
      << (all_covered ? ", all members covered" : ", coverage incomplete") << "\n";
  return all_covered ? kOk : kDegraded;
}

inline int cmd_envelope_check(double s, double M, std::size_t members, int grid_points, double range,
                              std::uint64_t seed, const std::string& out_path, std::ostream& out) {
  if (!(s > -1)) throw CliError("s must be above -1");
  if (!(M >= 1)) throw CliError("M must be at least 1");
  if (grid_points < 2 || !(range > 0)) throw CliError("grid needs at least 2 points and a positive range");
  auto t = TransformSpec::power(s);
  auto env = envelope_for_class(M, t);
  std::vector<double> grid;
  for (int i = 0; i < grid_points; ++i) grid.push_back(-range + 2 * range * i / (grid_points - 1));
  std::size_t violations = 0, skipped = 0;
  double max_ratio = 0;
  for (std::size_t k = 0; k < members; ++k) {
    auto p = sample_class_member(t, M, derive_seed(seed, k));
    auto ok = check_envelope(p, M, grid);
    if (!ok) {
      ++skipped;
      continue;
    }
    if (!*ok) ++violations;
    for (double x : grid) max_ratio = std::max(max_ratio, p(x) / env(x));
  }
  json j{{"version", kConfigVersion}, {"s", s},
         {"M", M},                    {"L", env.L},
         {"members", members},        {"not_applicable", skipped},
         {"violations", violations},  {"max_ratio", max_ratio},
         {"grid_points", grid_points}, {"range", range},
         {"seed", seed},              {"pass", violations == 0 && skipped == 0}};
  Sink sink(out_path, out);
  *sink << j.dump(2) << "\n";
  return violations == 0 && skipped == 0 ? kOk : kDegraded;
}

inline int cmd_nonexistence_demo(double s, const std::vector<double>& data, int k, double threshold,
                                 const std::string& out_path, std::ostream& out) {
  auto table = demonstrate_nonexistence(data, s, k);
  bool increasing = true;
  for (std::size_t i = table.size() / 2 + 1; i < table.size(); ++i)
    increasing = increasing && table[i].loglik > table[i - 1].loglik;
  bool unit = true;
  for (const auto& p : table) unit = unit && std::abs(p.integral - 1) <= 1e-10;
  bool yes = increasing && unit && table.back().loglik > threshold;
  {
    Sink sink(out_path, out);
    *sink << "k,a,loglik,integral\n";
    for (std::size_t i = 0; i < table.size(); ++i)
      *sink << i + 1 << "," << table[i].a << "," << table[i].loglik << "," << table[i].integral << "\n";
  }
  out << "likelihood unbounded: " << (yes ? "yes" : "no") << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shape-constrained density estimation: fits, rate studies, bracketing entropy."};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  unsigned jobs = 0;
  std::string out_path;
  std::vector<std::string> formats{"csv", "json"};
  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", seed, "random seed")->required(); };
  auto add_formats = [&](CLI::App* c) {
    c->add_option("--format", formats, "outputs to write")->check(CLI::IsMember({"csv", "json", "svg"}))->delimiter(',')->expected(1, 3);
  };

  double s_fit = 0, s_env = 0, s_non = -2, M = 1, beta = 3, range = 300, threshold = 5;
  std::size_t n = 0, members = 200;
  int grid = 1000, k = 8;
  std::string data_path, config_path, dist = "laplace";
  std::vector<double> xs{1.0};

  auto* fit_c = app.add_subcommand("fit", "fit the maximum likelihood estimate to a data file");
  fit_c->add_option("data", data_path, "one value per line")->required();
  fit_c->add_option("--s", s_fit, "concavity index, s > -1");
  fit_c->add_option("--out", out_path, "output JSON (default stdout)");

  auto* sample_c = app.add_subcommand("sample", "draw a sample from a reference distribution");
  sample_c->add_option("--dist", dist)->check(CLI::IsMember({"laplace", "gaussian", "uniform", "pareto"}));
  sample_c->add_option("--beta", beta, "Pareto tail index");
  sample_c->add_option("--n", n, "sample size")->required()->check(CLI::PositiveNumber);
  sample_c->add_option("--out", out_path);
  add_seed(sample_c);

  auto* rate_c = app.add_subcommand("rate-study", "Monte Carlo convergence-rate study");
  rate_c->add_option("config", config_path, "JSON study config")->required();
  rate_c->add_option("--out", out_path, "output prefix")->required();
  rate_c->add_option("--jobs", jobs, "worker threads (0: all cores)");
  add_seed(rate_c);
  add_formats(rate_c);

  auto* ent_c = app.add_subcommand("entropy-study", "build bracket covers over an eps grid and verify them");
  ent_c->add_option("config", config_path, "JSON study config (default: bounded concave on [0,1])");
  ent_c->add_option("--out", out_path, "output prefix")->required();
  ent_c->add_option("--jobs", jobs);
  add_seed(ent_c);
  add_formats(ent_c);

  auto* env_c = app.add_subcommand("envelope-check", "check the class envelope on random members");
  env_c->add_option("--s", s_env);
  env_c->add_option("--M", M);
  env_c->add_option("--members", members);
  env_c->add_option("--grid", grid, "probe points");
  env_c->add_option("--range", range, "probe grid covers [-range, range]");
  env_c->add_option("--out", out_path);
  add_seed(env_c);

  auto* non_c = app.add_subcommand("nonexistence-demo", "likelihood along a family of s-concave densities, s < -1");
  non_c->add_option("--s", s_non);
  non_c->add_option("--x", xs, "data values")->expected(1, -1);
  non_c->add_option("--data", data_path, "data file (overrides --x)");
  non_c->add_option("--k", k, "grid size")->check(CLI::PositiveNumber);
  non_c->add_option("--threshold", threshold, "final log likelihood needed for a yes verdict");
  non_c->add_option("--out", out_path, "CSV table (default stdout)");

  std::vector<char*> argv;
  std::string prog = "scdens";
  argv.push_back(prog.data());
  for (auto& a : args) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
  try {
    if (fit_c->parsed()) return cmd_fit(data_path, s_fit, out_path, out);
    if (sample_c->parsed()) return cmd_sample(dist, beta, n, seed, out_path, out);
    if (rate_c->parsed()) return cmd_rate_study(config_path, seed, jobs, out_path, formats, out);
    if (ent_c->parsed()) return cmd_entropy_study(config_path, seed, jobs, out_path, formats, out);
    if (env_c->parsed()) return cmd_envelope_check(s_env, M, members, grid, range, seed, out_path, out);
    if (non_c->parsed()) {
      if (!data_path.empty()) xs = read_data_file(data_path);
      return cmd_nonexistence_demo(s_non, xs, k, threshold, out_path, out);
    }
  } catch (const CliError& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}

}  // namespace scdens::cli
