#include "papc/bench/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace papc::bench {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_key(const std::string& key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
  });
}

std::string strip_comment(const std::string& line) {
  // a '#' begins a comment only at the line start or after whitespace, so values such as
  // "matrix:data#1" survive
  for (std::size_t i = 0; i < line.size(); ++i)
    if (line[i] == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) return line.substr(0, i);
  return line;
}

std::pair<std::string, std::string> split_key(const std::string& key) {
  const auto dot = key.rfind('.');
  if (dot == std::string::npos) return {"", key};
  return {key.substr(0, dot), key.substr(dot + 1)};
}

}  // namespace

double parse_number(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(what + ": expected a number, got '" + text + "'");
  return v;
}

Config Config::parse(std::string_view text) {
  Config cfg;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty() || line[0] == ';') continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!section.empty() && !valid_key(section)) throw ConfigError(where + ": bad section name '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) throw ConfigError(where + ": bad key '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.entries_.count(full)) throw ConfigError(where + ": duplicate key '" + full + "'");
    cfg.entries_[full] = trim(line.substr(eq + 1));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  Config cfg = parse(buf.str());
  cfg.base_dir_ = path.parent_path();
  return cfg;
}

std::string Config::serialize() const {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> groups;
  for (const auto& [k, v] : entries_) {
    auto [sec, name] = split_key(k);
    groups[sec].emplace_back(name, v);
  }
  std::ostringstream out;
  bool first = true;
  for (const auto& [sec, items] : groups) {
    if (!sec.empty()) {
      if (!first) out << '\n';
      out << '[' << sec << "]\n";
    }
    for (const auto& [k, v] : items) out << k << " = " << v << '\n';
    first = false;
  }
  return out.str();
}

std::optional<std::string> Config::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::optional<double> Config::number(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  return parse_number(*v, key);
}

double Config::number(const std::string& key, double fallback) const { return number(key).value_or(fallback); }

long long Config::integer(const std::string& key, long long fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  const double d = parse_number(*v, key);
  if (d != static_cast<double>(static_cast<long long>(d))) throw ConfigError(key + ": expected an integer");
  return static_cast<long long>(d);
}

void Config::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw ConfigError("bad key '" + key + "'");
  entries_[key] = trim(value);
}

std::vector<std::string> Config::subsections(const std::string& prefix) const {
  std::set<std::string> names;
  const std::string p = prefix + ".";
  for (const auto& [k, v] : entries_) {
    if (k.rfind(p, 0) != 0) continue;
    const std::string rest = k.substr(p.size());
    const auto dot = rest.find('.');
    if (dot != std::string::npos) names.insert(rest.substr(0, dot));
  }
  return {names.begin(), names.end()};
}

std::filesystem::path Config::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir_.empty()) return p;
  return base_dir_ / p;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  auto to_seed = [](const std::string& s) {
    const double d = parse_number(s, "seeds");
    if (d < 0 || d != static_cast<double>(static_cast<std::uint64_t>(d)))
      throw ConfigError("seeds: '" + s + "' is not a nonnegative integer");
    return static_cast<std::uint64_t>(d);
  };
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto range = item.find("..");
    if (range != std::string::npos) {
      const auto lo = to_seed(item.substr(0, range)), hi = to_seed(item.substr(range + 2));
      if (hi < lo) throw ConfigError("seeds: empty range '" + item + "'");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    } else {
      out.push_back(to_seed(item));
    }
  }
  return out;
}

Regime parse_regime(const std::string& text) {
  if (text == "almost-sure" || text == "almost_sure" || text == "as") return Regime::almost_sure;
  if (text == "ergodic") return Regime::ergodic;
  throw ConfigError("regime: expected almost-sure or ergodic, got '" + text + "'");
}

ExperimentConfig ExperimentConfig::from(const Config& cfg) {
  static const std::set<std::string> top{"seed", "seeds", "horizon", "regime", "checkpoints", "output",
                                         "trace_stride"};
  static const std::set<std::string> sections{"problem", "schedule", "noise", "block"};
  for (const auto& [k, v] : cfg.entries()) {
    const auto dot = k.find('.');
    const bool ok = dot == std::string::npos ? top.count(k) > 0 : sections.count(k.substr(0, dot)) > 0;
    if (!ok) throw ConfigError("unknown key '" + k + "'");
  }

  ExperimentConfig out;
  out.raw = cfg;
  const auto problem = cfg.get("problem.name");
  if (!problem || problem->empty()) throw ConfigError("problem.name is required");
  out.problem = *problem;
  if (auto r = cfg.get("regime")) out.regime = parse_regime(*r);

  auto& s = out.schedule;
  s.gamma0 = cfg.number("schedule.gamma0");
  s.gamma_scale = cfg.number("schedule.gamma_scale", s.gamma_scale);
  s.gamma_decay = cfg.number("schedule.gamma_decay", s.gamma_decay);
  s.gamma_limit = cfg.number("schedule.gamma_limit", s.gamma_limit);
  s.tau_cap = cfg.number("schedule.tau_cap");
  s.tau_scale = cfg.number("schedule.tau_scale", s.tau_scale);
  s.tau0 = cfg.number("schedule.tau0");
  if (s.gamma0 && !(*s.gamma0 > 0)) throw ConfigError("schedule.gamma0 must be positive");
  if (!(s.gamma_scale > 0)) throw ConfigError("schedule.gamma_scale must be positive");
  if (s.gamma_decay < 0) throw ConfigError("schedule.gamma_decay must be nonnegative");
  if (s.gamma_limit < 0) throw ConfigError("schedule.gamma_limit must be nonnegative");
  if (s.tau_cap && !(*s.tau_cap > 0)) throw ConfigError("schedule.tau_cap must be positive");
  if (!(s.tau_scale > 0)) throw ConfigError("schedule.tau_scale must be positive");
  if (s.tau0 && !(*s.tau0 > 0)) throw ConfigError("schedule.tau0 must be positive");

  auto& n = out.noise;
  n.kind = cfg.get_or("noise.kind", n.kind);
  if (n.kind != "none" && n.kind != "gaussian" && n.kind != "minibatch")
    throw ConfigError("noise.kind: expected none, gaussian or minibatch, got '" + n.kind + "'");
  n.sigma0 = cfg.number("noise.sigma0", n.sigma0);
  n.epsilon = cfg.number("noise.epsilon", n.epsilon);
  n.schedule = cfg.get_or("noise.schedule", n.schedule);
  n.batch_schedule = cfg.get_or("noise.batch_schedule", n.batch_schedule);
  if (n.sigma0 < 0) throw ConfigError("noise.sigma0 must be nonnegative");
  if (n.epsilon < 0) throw ConfigError("noise.epsilon must be nonnegative");
  if (!n.schedule.empty() && n.schedule != "polynomial" && n.schedule != "constant")
    throw ConfigError("noise.schedule: expected polynomial or constant");

  out.horizon = cfg.integer("horizon", out.horizon);
  if (out.horizon <= 0) throw ConfigError("horizon must be positive");
  if (cfg.has("seed") && cfg.has("seeds")) throw ConfigError("give either seed or seeds, not both");
  if (auto v = cfg.get("seeds")) out.seeds = parse_seed_list(*v);
  if (auto v = cfg.get("seed")) out.seeds = parse_seed_list(*v);
  if (out.seeds.empty()) throw ConfigError("seeds: the seed list is empty");
  if (std::set<std::uint64_t>(out.seeds.begin(), out.seeds.end()).size() != out.seeds.size())
    throw ConfigError("seeds: the seed list repeats a seed");

  const std::string cps = cfg.get_or("checkpoints", "log");
  if (cps.rfind("log", 0) == 0) {
    if (cps.size() > 4 && cps[3] == ':') out.per_decade = static_cast<int>(parse_number(cps.substr(4), "checkpoints"));
    else if (cps != "log") throw ConfigError("checkpoints: expected log, log:<k> or a list");
    if (out.per_decade <= 0) throw ConfigError("checkpoints: per-decade count must be positive");
  } else {
    std::stringstream ss(cps);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const double d = parse_number(item, "checkpoints");
      if (d < 0 || d >= static_cast<double>(out.horizon))
        throw ConfigError("checkpoints: " + trim(item) + " outside [0, horizon)");
      out.checkpoints.push_back(static_cast<Index>(d));
    }
    std::sort(out.checkpoints.begin(), out.checkpoints.end());
  }
  out.trace_stride = cfg.integer("trace_stride", 0);
  if (out.trace_stride < 0) throw ConfigError("trace_stride must be nonnegative");
  out.output = cfg.get_or("output", out.output);
  return out;
}

}  // namespace papc::bench
