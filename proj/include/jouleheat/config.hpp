#ifndef JOULEHEAT_CONFIG_HPP
#define JOULEHEAT_CONFIG_HPP

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "jouleheat/core.hpp"
#include "jouleheat/expr.hpp"
#include "jouleheat/mesh.hpp"
#include "jouleheat/presets.hpp"
#include "jouleheat/problem.hpp"
#include "jouleheat/stepper.hpp"

namespace jouleheat {

/// Run configuration. Flat key = value file (# comments, optional quotes on
/// strings); every field has a default, unknown keys are rejected with their
/// line number.
struct RunConfig {
  std::string preset = "example1";     // example1..4 | custom
  std::string geometry = "";           // unit_cube | fichera; presets imply it
  std::string boundary_preset = "";    // fichera_noncreased | fichera_creased (custom fichera)
  int k = 1;
  int l = 1;
  double T = 0.1;

  std::string sigma = "";              // constant | arctan | tabulated
  double sigma_value = 1.0;
  std::string sigma_table = "";        // "x:y, x:y, ..."

  std::string neumann_mode = "consistent";  // consistent | literal (example1 only)

  bool clamp_override = false;
  double clamp_a = 0.0;
  double clamp_b = 0.0;

  double fp_tol = 1e-10;
  int fp_max_iter = 50;
  double cg_rel_tol = 1e-10;
  double cg_abs_tol = 1e-14;

  std::string out_dir = "out";
  long seed = 0;

  // Convergence studies.
  int k_min = 1;
  int k_max = 3;
  std::string l_rule = "coupled";      // coupled (l = k) | fixed (l = l_fixed)
  int l_fixed = 4;
  int reference_k = -1;                // default: k_max + 1

  // Adaptive runs.
  double theta = 0.5;
  double eta_tol = 0.0;
  int max_vertices = 100000;
  int baseline_k = -1;                 // >= 0: also run a uniform baseline
  bool refined_dual = false;

  // Custom-preset data (expressions over x1, x2, x3, t).
  std::string expr_g_u = "";
  std::string expr_g_phi = "";
  std::string expr_u0 = "";
  std::string expr_f = "";
  std::string expr_g_neumann = "";
  std::string dirichlet_tags_u = "";
  std::string dirichlet_tags_phi = "";
  std::string neumann_flux_tags = "";

  bool write_vtk = true;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

inline double parse_double(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": expected a number, got '" + v + "'");
  }
}

inline long parse_long(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    long d = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": expected an integer, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("line " + std::to_string(line) + ": expected true/false, got '" + v + "'");
}

inline std::set<int> parse_tag_set(const std::string& v) {
  std::set<int> tags;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    tags.insert(static_cast<int>(parse_long(item, 0)));
  }
  return tags;
}

inline std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": expected key = value");
    std::string key = detail::trim(s.substr(0, eq));
    std::string value = detail::unquote(detail::trim(s.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key");

    if (key == "preset") c.preset = value;
    else if (key == "geometry") c.geometry = value;
    else if (key == "boundary_preset") c.boundary_preset = value;
    else if (key == "k") c.k = static_cast<int>(detail::parse_long(value, line));
    else if (key == "l") c.l = static_cast<int>(detail::parse_long(value, line));
    else if (key == "T") c.T = detail::parse_double(value, line);
    else if (key == "sigma") c.sigma = value;
    else if (key == "sigma_value") c.sigma_value = detail::parse_double(value, line);
    else if (key == "sigma_table") c.sigma_table = value;
    else if (key == "neumann_mode") c.neumann_mode = value;
    else if (key == "clamp_a") { c.clamp_a = detail::parse_double(value, line); c.clamp_override = true; }
    else if (key == "clamp_b") { c.clamp_b = detail::parse_double(value, line); c.clamp_override = true; }
    else if (key == "fp_tol") c.fp_tol = detail::parse_double(value, line);
    else if (key == "fp_max_iter") c.fp_max_iter = static_cast<int>(detail::parse_long(value, line));
    else if (key == "cg_rel_tol") c.cg_rel_tol = detail::parse_double(value, line);
    else if (key == "cg_abs_tol") c.cg_abs_tol = detail::parse_double(value, line);
    else if (key == "out") c.out_dir = value;
    else if (key == "seed") c.seed = detail::parse_long(value, line);
    else if (key == "k_min") c.k_min = static_cast<int>(detail::parse_long(value, line));
    else if (key == "k_max") c.k_max = static_cast<int>(detail::parse_long(value, line));
    else if (key == "l_rule") c.l_rule = value;
    else if (key == "l_fixed") c.l_fixed = static_cast<int>(detail::parse_long(value, line));
    else if (key == "reference_k") c.reference_k = static_cast<int>(detail::parse_long(value, line));
    else if (key == "theta") c.theta = detail::parse_double(value, line);
    else if (key == "eta_tol") c.eta_tol = detail::parse_double(value, line);
    else if (key == "max_vertices") c.max_vertices = static_cast<int>(detail::parse_long(value, line));
    else if (key == "baseline_k") c.baseline_k = static_cast<int>(detail::parse_long(value, line));
    else if (key == "refined_dual") c.refined_dual = detail::parse_bool(value, line);
    else if (key == "g_u") c.expr_g_u = value;
    else if (key == "g_phi") c.expr_g_phi = value;
    else if (key == "u0") c.expr_u0 = value;
    else if (key == "f") c.expr_f = value;
    else if (key == "g_neumann") c.expr_g_neumann = value;
    else if (key == "dirichlet_tags_u") c.dirichlet_tags_u = value;
    else if (key == "dirichlet_tags_phi") c.dirichlet_tags_phi = value;
    else if (key == "neumann_flux_tags") c.neumann_flux_tags = value;
    else if (key == "write_vtk") c.write_vtk = detail::parse_bool(value, line);
    else
      throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
  }
  return c;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  auto str = [&](const std::string& key, const std::string& v) {
    out << key << " = \"" << v << "\"\n";
  };
  auto num = [&](const std::string& key, double v) {
    out << key << " = " << detail::format_double(v) << "\n";
  };
  auto integer = [&](const std::string& key, long v) { out << key << " = " << v << "\n"; };
  auto boolean = [&](const std::string& key, bool v) {
    out << key << " = " << (v ? "true" : "false") << "\n";
  };

  str("preset", c.preset);
  str("geometry", c.geometry);
  str("boundary_preset", c.boundary_preset);
  integer("k", c.k);
  integer("l", c.l);
  num("T", c.T);
  str("sigma", c.sigma);
  num("sigma_value", c.sigma_value);
  str("sigma_table", c.sigma_table);
  str("neumann_mode", c.neumann_mode);
  if (c.clamp_override) {
    num("clamp_a", c.clamp_a);
    num("clamp_b", c.clamp_b);
  }
  num("fp_tol", c.fp_tol);
  integer("fp_max_iter", c.fp_max_iter);
  num("cg_rel_tol", c.cg_rel_tol);
  num("cg_abs_tol", c.cg_abs_tol);
  str("out", c.out_dir);
  integer("seed", c.seed);
  integer("k_min", c.k_min);
  integer("k_max", c.k_max);
  str("l_rule", c.l_rule);
  integer("l_fixed", c.l_fixed);
  integer("reference_k", c.reference_k);
  num("theta", c.theta);
  num("eta_tol", c.eta_tol);
  integer("max_vertices", c.max_vertices);
  integer("baseline_k", c.baseline_k);
  boolean("refined_dual", c.refined_dual);
  str("g_u", c.expr_g_u);
  str("g_phi", c.expr_g_phi);
  str("u0", c.expr_u0);
  str("f", c.expr_f);
  str("g_neumann", c.expr_g_neumann);
  str("dirichlet_tags_u", c.dirichlet_tags_u);
  str("dirichlet_tags_phi", c.dirichlet_tags_phi);
  str("neumann_flux_tags", c.neumann_flux_tags);
  boolean("write_vtk", c.write_vtk);
  return out.str();
}

constexpr int kMaxLevel = 7;
constexpr int kMaxTimeLevel = 14;

/// Mesh + problem data resolved from a configuration.
struct ResolvedRun {
  std::string geometry;  // unit_cube | fichera
  ProblemData data;
  FixedPointConfig fp;
};

namespace detail {

inline SigmaModel sigma_from_config(const RunConfig& c, const std::string& fallback) {
  std::string choice = c.sigma.empty() ? fallback : c.sigma;
  if (choice == "constant") return SigmaModel::constant(c.sigma_value);
  if (choice == "arctan") return SigmaModel::arctan_model();
  if (choice == "tabulated") {
    std::vector<std::pair<double, double>> table;
    std::stringstream ss(c.sigma_table);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      auto colon = item.find(':');
      if (colon == std::string::npos)
        throw ConfigError("sigma_table entries must look like x:y, got '" + item + "'");
      table.emplace_back(parse_double(trim(item.substr(0, colon)), 0),
                         parse_double(trim(item.substr(colon + 1)), 0));
    }
    return SigmaModel::tabulated(std::move(table));
  }
  throw ConfigError("unknown sigma preset '" + choice + "'");
}

}  // namespace detail

inline ResolvedRun resolve_run(const RunConfig& c) {
  if (c.k < 0 || c.k > kMaxLevel)
    throw ConfigError("k = " + std::to_string(c.k) + " out of range [0, " +
                      std::to_string(kMaxLevel) + "]");
  if (c.l < 0 || c.l > kMaxTimeLevel)
    throw ConfigError("l = " + std::to_string(c.l) + " out of range [0, " +
                      std::to_string(kMaxTimeLevel) + "]");
  if (!(c.T > 0.0)) throw ConfigError("T must be positive");

  ResolvedRun r;
  if (c.preset == "example1") {
    if (c.neumann_mode != "consistent" && c.neumann_mode != "literal")
      throw ConfigError("neumann_mode must be consistent or literal");
    r.geometry = "unit_cube";
    r.data = example1_problem(c.neumann_mode == "literal");
    if (!c.sigma.empty()) r.data.sigma = detail::sigma_from_config(c, "constant");
  } else if (c.preset == "example2") {
    r.geometry = "fichera";
    r.data = example2_problem();
    if (!c.sigma.empty()) r.data.sigma = detail::sigma_from_config(c, "arctan");
  } else if (c.preset == "example3") {
    r.geometry = "fichera";
    r.data = example3_problem();
    if (!c.sigma.empty()) r.data.sigma = detail::sigma_from_config(c, "arctan");
  } else if (c.preset == "example4") {
    r.geometry = "fichera";
    r.data = example4_problem();
    if (!c.sigma.empty()) r.data.sigma = detail::sigma_from_config(c, "arctan");
  } else if (c.preset == "custom") {
    if (c.geometry != "unit_cube" && c.geometry != "fichera")
      throw ConfigError("custom preset: geometry must be unit_cube or fichera");
    r.geometry = c.geometry;
    ProblemData d;
    if (c.expr_g_u.empty() || c.expr_g_phi.empty() || c.expr_u0.empty())
      throw ConfigError("custom preset: g_u, g_phi and u0 expressions are required");
    d.g_u = DirichletData::from_global(Expression::parse(c.expr_g_u).as_function());
    d.g_phi = DirichletData::from_global(Expression::parse(c.expr_g_phi).as_function());
    d.u0 = Expression::parse(c.expr_u0).as_function();
    if (!c.expr_f.empty()) d.source_f = Expression::parse(c.expr_f).as_function();
    d.sigma = detail::sigma_from_config(c, "constant");

    if (!c.boundary_preset.empty()) {
      if (c.boundary_preset == "fichera_noncreased") {
        d.bc_u = fichera_noncreased_partition(Field::temperature);
        d.bc_phi = fichera_noncreased_partition(Field::potential);
      } else if (c.boundary_preset == "fichera_creased") {
        d.bc_u = fichera_creased_partition(Field::temperature);
        d.bc_phi = fichera_creased_partition(Field::potential);
      } else {
        throw ConfigError("unknown boundary_preset '" + c.boundary_preset + "'");
      }
    } else {
      if (c.dirichlet_tags_u.empty() || c.dirichlet_tags_phi.empty())
        throw ConfigError("custom preset: dirichlet tag lists (or a boundary_preset) required");
      auto all_tags = c.geometry == "unit_cube" ? std::set<int>{1, 2, 3, 4, 5, 6}
                                                : std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9};
      d.bc_u.field = Field::temperature;
      d.bc_u.dirichlet_tags = detail::parse_tag_set(c.dirichlet_tags_u);
      d.bc_phi.field = Field::potential;
      d.bc_phi.dirichlet_tags = detail::parse_tag_set(c.dirichlet_tags_phi);
      for (int tag : all_tags) {
        if (!d.bc_u.dirichlet_tags.count(tag)) d.bc_u.neumann_tags.insert(tag);
        if (!d.bc_phi.dirichlet_tags.count(tag)) d.bc_phi.neumann_tags.insert(tag);
      }
    }
    if (!c.expr_g_neumann.empty()) {
      d.neumann_g = Expression::parse(c.expr_g_neumann).as_function();
      d.neumann_flux_tags = detail::parse_tag_set(c.neumann_flux_tags);
      if (d.neumann_flux_tags.empty())
        throw ConfigError("g_neumann given but neumann_flux_tags is empty");
    }
    r.data = std::move(d);
  } else {
    throw ConfigError("unknown preset '" + c.preset + "'");
  }

  if (!c.geometry.empty() && c.preset != "custom" && c.geometry != r.geometry)
    throw ConfigError("preset " + c.preset + " runs on " + r.geometry + ", not " + c.geometry);
  if (c.clamp_override) {
    if (!(c.clamp_a <= c.clamp_b)) throw ConfigError("clamp override requires clamp_a <= clamp_b");
    r.data.clamp_override = CutoffBounds{c.clamp_a, c.clamp_b};
  }

  r.fp.tol = c.fp_tol;
  r.fp.max_iter = c.fp_max_iter;
  r.fp.linear.rel_tol = c.cg_rel_tol;
  r.fp.linear.abs_tol = c.cg_abs_tol;
  return r;
}

inline Mesh build_mesh(const std::string& geometry, int k) {
  if (geometry == "unit_cube") return unit_cube_mesh(k);
  if (geometry == "fichera") return fichera_mesh(k);
  throw ConfigError("unknown geometry '" + geometry + "'");
}

}  // namespace jouleheat

#endif
