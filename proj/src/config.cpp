#include "elcont/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace elcont {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& val) {
  const char* start = val.c_str();
  char* end = nullptr;
  double v = std::strtod(start, &end);
  if (end == start || *end != '\0')
    throw ConfigError("config: key '" + key + "' expects a number, got '" + val + "'");
  return v;
}

long to_int(const std::string& key, const std::string& val) {
  const char* start = val.c_str();
  char* end = nullptr;
  long v = std::strtol(start, &end, 10);
  if (end == start || *end != '\0')
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + val + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& val) {
  if (val == "true" || val == "on" || val == "1") return true;
  if (val == "false" || val == "off" || val == "0") return false;
  throw ConfigError("config: key '" + key + "' expects a boolean, got '" + val + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& val) {
  std::vector<double> out;
  std::istringstream in(val);
  std::string tok;
  while (in >> tok) out.push_back(to_double(key, tok));
  return out;
}

struct DomainDraft {
  bool seen = false;
  std::string shape;
  std::string name;
  double half = 0.5;
  double x1min = 0.0, x2min = 0.0, x1max = 1.0, x2max = 1.0;
  std::vector<double> vertices;
};

PolygonDomain build_domain(const DomainDraft& d) {
  PolygonDomain dom;
  if (d.shape == "square") {
    if (!(d.half > 0.0)) throw ConfigError("config: [domain] half must be positive");
    dom = PolygonDomain::square(d.half);
  } else if (d.shape == "rectangle") {
    dom = PolygonDomain::rectangle(d.x1min, d.x2min, d.x1max, d.x2max);
  } else if (d.shape == "wing") {
    dom = wing_domain();
  } else if (d.shape == "polygon") {
    if (d.vertices.size() < 6 || d.vertices.size() % 2 != 0)
      throw ConfigError("config: [domain] vertices needs at least 3 coordinate pairs");
    for (std::size_t i = 0; i + 1 < d.vertices.size(); i += 2)
      dom.vertices.push_back({d.vertices[i], d.vertices[i + 1]});
  } else {
    throw ConfigError("config: [domain] shape must be square, rectangle, wing or "
                      "polygon, got '" + d.shape + "'");
  }
  if (!d.name.empty()) dom.name = d.name;
  dom.validate();
  return dom;
}

void validate(const RunConfig& c) {
  if (c.problem_id != "lef" && c.problem_id != "lef_force" &&
      c.problem_id != "lef_force_scaled" && c.problem_id != "caginalp")
    throw ConfigError("config: unknown problem '" + c.problem_id + "'");
  if (!(c.hmax > 0.0)) throw ConfigError("config: hmax must be positive");
  if (!(c.theta_hmax > 0.0)) throw ConfigError("config: theta_hmax must be positive");
  if (!(c.f_const >= 0.0 || c.f_const < 0.0))
    throw ConfigError("config: f_const must be finite");
  const ContSettings& s = c.cont;
  if (!(s.dsmin > 0.0 && s.dsmin <= s.ds && s.ds <= s.dsmax))
    throw ConfigError("config: need 0 < dsmin <= ds <= dsmax");
  if (!(s.tol > 0.0)) throw ConfigError("config: tol must be positive");
  if (s.maxit < 1) throw ConfigError("config: maxit must be at least 1");
  if (!(s.xi >= 0.0 && s.xi < 1.0))
    throw ConfigError("config: xi must lie in [0,1); 0 selects 1/np");
  if (s.neig < 1) throw ConfigError("config: neig must be at least 1");
  if (s.amod < 0) throw ConfigError("config: amod must be nonnegative");
  if (s.direction != 1 && s.direction != -1)
    throw ConfigError("config: direction must be +1 or -1");
  if (s.max_steps < 1) throw ConfigError("config: max_steps must be at least 1");
  if (c.snap_every < 0) throw ConfigError("config: snap_every must be nonnegative");
  if (!(c.minimax.tol_grad > 0.0)) throw ConfigError("config: tol_grad must be positive");
  if (!(c.minimax.cont_tol > 0.0)) throw ConfigError("config: cont_tol must be positive");
  if (c.minimax_neig < 1) throw ConfigError("config: minimax neig must be at least 1");
}

}  // namespace

RunConfig parse_config(std::istream& is) {
  RunConfig cfg;
  DomainDraft draft;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config: malformed section header at line " +
                          std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (section != "domain" && section != "pde" && section != "params" &&
          section != "mesh" && section != "continuation" && section != "minimax")
        throw ConfigError("config: unknown section [" + section + "]");
      if (section == "domain") draft.seen = true;
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key = value at line " + std::to_string(lineno) +
                        ": '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (section.empty())
      throw ConfigError("config: key '" + key + "' appears before any section");
    if (key.empty() || val.empty())
      throw ConfigError("config: empty key or value at line " + std::to_string(lineno));

    if (section == "domain") {
      if (key == "shape") draft.shape = val;
      else if (key == "name") draft.name = val;
      else if (key == "half") draft.half = to_double(key, val);
      else if (key == "x1min") draft.x1min = to_double(key, val);
      else if (key == "x2min") draft.x2min = to_double(key, val);
      else if (key == "x1max") draft.x1max = to_double(key, val);
      else if (key == "x2max") draft.x2max = to_double(key, val);
      else if (key == "vertices") draft.vertices = to_doubles(key, val);
      else throw ConfigError("config: unknown key '" + key + "' in [domain]");
    } else if (section == "pde") {
      if (key == "problem") cfg.problem_id = val;
      else if (key == "mu0") cfg.mu0 = to_double(key, val);
      else throw ConfigError("config: unknown key '" + key + "' in [pde]");
    } else if (section == "params") {
      if (key == "gamma_a") cfg.micro.gamma_a = to_double(key, val);
      else if (key == "gamma_b") cfg.micro.gamma_b = to_double(key, val);
      else if (key == "gamma_1") cfg.micro.gamma_1 = to_double(key, val);
      else if (key == "gamma_2") cfg.micro.gamma_2 = to_double(key, val);
      else if (key == "c1") cfg.cag.c1 = to_double(key, val);
      else if (key == "c2") cfg.cag.c2 = to_double(key, val);
      else if (key == "f_const") cfg.f_const = to_double(key, val);
      else if (key == "theta_hmax") cfg.theta_hmax = to_double(key, val);
      else if (key == "est_alpha") cfg.est_alpha = to_double(key, val);
      else if (key == "est_beta") cfg.est_beta = to_double(key, val);
      else throw ConfigError("config: unknown key '" + key + "' in [params]");
    } else if (section == "mesh") {
      if (key == "hmax") cfg.hmax = to_double(key, val);
      else throw ConfigError("config: unknown key '" + key + "' in [mesh]");
    } else if (section == "continuation") {
      ContSettings& s = cfg.cont;
      if (key == "ds") s.ds = to_double(key, val);
      else if (key == "dsmax") s.dsmax = to_double(key, val);
      else if (key == "dsmin") s.dsmin = to_double(key, val);
      else if (key == "tol") s.tol = to_double(key, val);
      else if (key == "maxit") s.maxit = static_cast<int>(to_int(key, val));
      else if (key == "xi") s.xi = to_double(key, val);
      else if (key == "neig") s.neig = static_cast<int>(to_int(key, val));
      else if (key == "amod") s.amod = static_cast<int>(to_int(key, val));
      else if (key == "ngen") s.ngen = static_cast<int>(to_int(key, val));
      else if (key == "maxt") s.maxt = static_cast<int>(to_int(key, val));
      else if (key == "max_steps") s.max_steps = static_cast<int>(to_int(key, val));
      else if (key == "direction") s.direction = static_cast<int>(to_int(key, val));
      else if (key == "delta_sw") s.delta_sw = to_double(key, val);
      else if (key == "mu_min") s.mu_min = to_double(key, val);
      else if (key == "mu_max") s.mu_max = to_double(key, val);
      else if (key == "stop_norm_below") s.stop_norm_below = to_double(key, val);
      else if (key == "det_guard") s.det_guard = to_bool(key, val);
      else if (key == "snap_every") cfg.snap_every = static_cast<int>(to_int(key, val));
      else throw ConfigError("config: unknown key '" + key + "' in [continuation]");
    } else {  // minimax
      MinimaxSettings& m = cfg.minimax;
      if (key == "tol_grad") m.tol_grad = to_double(key, val);
      else if (key == "max_outer") m.max_outer = static_cast<int>(to_int(key, val));
      else if (key == "max_inner") m.max_inner = static_cast<int>(to_int(key, val));
      else if (key == "armijo_c") m.armijo_c = to_double(key, val);
      else if (key == "cont_tol") m.cont_tol = to_double(key, val);
      else if (key == "newton_maxit") m.newton_maxit = static_cast<int>(to_int(key, val));
      else if (key == "neig") cfg.minimax_neig = static_cast<int>(to_int(key, val));
      else if (key == "seed") {
        try {
          cfg.seeds.push_back(parse_seed(val));
        } catch (const Error& e) {
          throw ConfigError(std::string("config: ") + e.what());
        }
      } else {
        throw ConfigError("config: unknown key '" + key + "' in [minimax]");
      }
    }
  }
  if (draft.seen) {
    try {
      cfg.domain = build_domain(draft);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("config: invalid [domain]: ") + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(in);
}

PolygonDomain config_domain(const RunConfig& cfg) {
  if (cfg.domain) return *cfg.domain;
  if (cfg.problem_id == "lef") return lef_test().domain;
  if (cfg.problem_id == "lef_force" || cfg.problem_id == "lef_force_scaled")
    return lef_microforce().domain;
  return wing_domain();
}

EllipticProblem build_problem(const RunConfig& cfg) {
  if (cfg.problem_id == "lef") return lef_test();
  if (cfg.problem_id == "lef_force") return lef_microforce(cfg.micro);
  if (cfg.problem_id == "lef_force_scaled")
    return lef_microforce_scaled(cfg.mu0, cfg.micro);
  // phase-field: presolve the temperature field on its own mesh
  const PolygonDomain dom = cfg.domain ? *cfg.domain : wing_domain();
  const Mesh theta_mesh = triangulate(dom, cfg.theta_hmax);
  const std::vector<double> theta = poisson_presolve(theta_mesh, cfg.f_const);
  return caginalp_reduced(cfg.cag, dom, theta_mesh, theta);
}

std::vector<SeedSpec> config_seeds(const RunConfig& cfg) {
  if (!cfg.seeds.empty()) return cfg.seeds;
  return default_seeds(cfg.problem_id);
}

}  // namespace elcont
