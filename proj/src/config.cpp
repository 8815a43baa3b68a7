#include "nmkl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

namespace nmkl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  int x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: key '" + key + "' expects true or false, got '" + v + "'");
}

std::string num(double x) {
  std::ostringstream s;
  s << std::setprecision(17) << x;
  return s.str();
}

}  // namespace

std::vector<double> parse_epsilon_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("config: empty entry in epsilon list '" + csv + "'");
    out.push_back(to_double("nonmarkov.epsilon", item));
  }
  if (out.empty()) throw ConfigError("config: epsilon list is empty");
  return out;
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"grid.L", [&](auto& k, auto& v) { c.L = to_double(k, v); }},
      {"grid.N", [&](auto& k, auto& v) { c.N = to_int(k, v); }},
      {"init.sigma_sq", [&](auto& k, auto& v) { c.sigma_sq = to_double(k, v); }},
      {"init.m0", [&](auto& k, auto& v) { c.m0 = to_double(k, v); }},
      {"init.delta2", [&](auto& k, auto& v) { c.delta2 = to_double(k, v); }},
      {"init.v0",
       [&](auto&, auto& v) {
         try {
           c.v0 = parse_v0_kind(v);
         } catch (const std::exception& e) {
           throw ConfigError(std::string("config: ") + e.what());
         }
       }},
      {"kernel.Lambda", [&](auto& k, auto& v) { c.Lambda = to_double(k, v); }},
      {"nonmarkov.epsilon", [&](auto&, auto& v) { c.epsilon = parse_epsilon_list(v); }},
      {"nonmarkov.gamma", [&](auto& k, auto& v) { c.gamma = to_double(k, v); }},
      {"nonmarkov.tol_mem", [&](auto& k, auto& v) { c.tol_mem = to_double(k, v); }},
      {"time.dt", [&](auto& k, auto& v) { c.dt = to_double(k, v); }},
      {"time.dt_factor", [&](auto& k, auto& v) { c.dt_factor = to_double(k, v); }},
      {"time.t_final", [&](auto& k, auto& v) { c.t_final = to_double(k, v); }},
      {"time.delta1", [&](auto& k, auto& v) { c.delta1 = to_double(k, v); }},
      {"spectral.A", [&](auto& k, auto& v) { c.A = to_double(k, v); }},
      {"quad.tol", [&](auto& k, auto& v) { c.quad_tol = to_double(k, v); }},
      {"tol_neg", [&](auto& k, auto& v) { c.tol_neg = to_double(k, v); }},
      {"report.checkpoints", [&](auto& k, auto& v) { c.checkpoints = to_int(k, v); }},
      {"output.dir", [&](auto&, auto& v) { c.output_dir = v; }},
      {"run.seedless", [&](auto& k, auto& v) { c.seedless = to_bool(k, v); }},
  };

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError("config: line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (value.empty())
      throw ConfigError("config: line " + std::to_string(lineno) + ": empty value for '" + key + "'");
    it->second(key, value);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

void validate(const RunConfig& c) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  need(c.L > 0.0, "grid.L must be positive");
  need(c.N >= 8 && c.N % 2 == 0, "grid.N must be even and >= 8");
  need(c.sigma_sq > 0.0, "init.sigma_sq must be positive");
  need(c.m0 > 0.0, "init.m0 must be positive");
  need(c.delta2 >= 0.0, "init.delta2 must be >= 0");
  need(c.Lambda > 0.0, "kernel.Lambda must be positive");
  need(!c.epsilon.empty(), "nonmarkov.epsilon must not be empty");
  for (std::size_t i = 0; i < c.epsilon.size(); ++i) {
    need(c.epsilon[i] > 0.0, "nonmarkov.epsilon entries must be positive");
    if (i > 0) need(c.epsilon[i] < c.epsilon[i - 1], "nonmarkov.epsilon must be strictly decreasing");
  }
  need(c.gamma >= 0.0, "nonmarkov.gamma must be >= 0");
  need(c.tol_mem > 0.0, "nonmarkov.tol_mem must be positive");
  need(c.dt > 0.0, "time.dt must be positive");
  need(c.dt_factor > 0.0, "time.dt_factor must be positive");
  need(c.t_final > 0.0, "time.t_final must be positive");
  need(c.delta1 > 0.0, "time.delta1 must be positive");
  need(c.t_final <= 2.0 * c.delta1, "time.t_final must not exceed 2 * time.delta1");
  need(c.A >= 1.0, "spectral.A must be >= 1");
  need(c.quad_tol > 0.0, "quad.tol must be positive");
  need(c.tol_neg > 0.0, "tol_neg must be positive");
  need(c.checkpoints >= 1, "report.checkpoints must be >= 1");
  need(!c.output_dir.empty(), "output.dir must not be empty");
}

std::string to_text(const RunConfig& c) {
  std::ostringstream s;
  s << "grid.L = " << num(c.L) << "\n";
  s << "grid.N = " << c.N << "\n";
  s << "init.sigma_sq = " << num(c.sigma_sq) << "\n";
  s << "init.m0 = " << num(c.m0) << "\n";
  s << "init.delta2 = " << num(c.delta2) << "\n";
  s << "init.v0 = " << to_string(c.v0) << "\n";
  s << "kernel.Lambda = " << num(c.Lambda) << "\n";
  s << "nonmarkov.epsilon = ";
  for (std::size_t i = 0; i < c.epsilon.size(); ++i) s << (i ? "," : "") << num(c.epsilon[i]);
  s << "\n";
  s << "nonmarkov.gamma = " << num(c.gamma) << "\n";
  s << "nonmarkov.tol_mem = " << num(c.tol_mem) << "\n";
  s << "time.dt = " << num(c.dt) << "\n";
  s << "time.dt_factor = " << num(c.dt_factor) << "\n";
  s << "time.t_final = " << num(c.t_final) << "\n";
  s << "time.delta1 = " << num(c.delta1) << "\n";
  s << "spectral.A = " << num(c.A) << "\n";
  s << "quad.tol = " << num(c.quad_tol) << "\n";
  s << "tol_neg = " << num(c.tol_neg) << "\n";
  s << "report.checkpoints = " << c.checkpoints << "\n";
  s << "output.dir = " << c.output_dir << "\n";
  s << "run.seedless = " << (c.seedless ? "true" : "false") << "\n";
  return s.str();
}

}  // namespace nmkl
