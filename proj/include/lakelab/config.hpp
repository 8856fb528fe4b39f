#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lakelab/errors.hpp"
#include "lakelab/geometry.hpp"
#include "lakelab/grid.hpp"
#include "lakelab/limits.hpp"
#include "lakelab/transport.hpp"

namespace lakelab {

/// INI-style run configuration: [section] headers, key = value lines, '#'
/// comments.  Keys before the first header belong to the top level ("").
class RunConfig {
 public:
  static const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"", {"seed"}},
        {"domain", {"kind", "R", "r_in", "mask_file", "x0", "y0", "h"}},
        {"depth", {"kind", "alpha", "value", "eps", "eta_radius", "table_file", "x0", "y0", "h", "a0", "a1", "c_floor"}},
        {"grid", {"kind", "nr", "ntheta", "n"}},
        {"solve", {"source", "outer", "island", "tol"}},
        {"vorticity", {"kind", "amplitude", "x", "y", "width", "ring_radius", "gamma"}},
        {"evolve", {"T", "cfl", "scheme", "snapshot_every", "dt_max"}},
        {"sequence", {"mode", "kind", "eps", "eps0", "count", "eta_radius"}},
        {"study", {"probes", "T", "compare_inner", "compare_outer"}},
        {"output", {"dir", "prefix"}},
        {"verify", {"fixture"}},
    };
    return s;
  }

  static RunConfig parse(std::istream& in, const std::string& origin = "config") {
    RunConfig cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') bad(origin, lineno, "unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        if (!schema().count(section)) bad(origin, lineno, "unknown section [" + section + "]");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) bad(origin, lineno, "expected key = value");
      cfg.set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), origin, lineno);
    }
    return cfg;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open config " + path);
    RunConfig cfg = parse(in, path);
    const auto slash = path.find_last_of('/');
    cfg.base_dir_ = slash == std::string::npos ? "." : path.substr(0, slash);
    return cfg;
  }

  /// Applies a "section.key=value" override.
  void override_with(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) fail(ErrorKind::Config, "override must look like section.key=value");
    const std::string lhs = trim(assignment.substr(0, eq));
    const auto dot = lhs.find('.');
    const std::string sec = dot == std::string::npos ? "" : lhs.substr(0, dot);
    const std::string key = dot == std::string::npos ? lhs : lhs.substr(dot + 1);
    if (!schema().count(sec)) fail(ErrorKind::Config, "unknown section [" + sec + "]");
    set(sec, key, trim(assignment.substr(eq + 1)), "override", 0);
  }

  bool has(const std::string& sec, const std::string& key) const {
    auto it = values_.find(sec);
    return it != values_.end() && it->second.count(key);
  }

  std::string str(const std::string& sec, const std::string& key, const std::string& def = "") const {
    return has(sec, key) ? values_.at(sec).at(key) : def;
  }

  double num(const std::string& sec, const std::string& key, double def) const {
    if (!has(sec, key)) return def;
    return to_number(sec, key, values_.at(sec).at(key));
  }

  int integer(const std::string& sec, const std::string& key, int def) const {
    const double v = num(sec, key, def);
    if (v != static_cast<int>(v)) fail(ErrorKind::Config, sec + "." + key + " must be an integer");
    return static_cast<int>(v);
  }

  std::vector<double> list(const std::string& sec, const std::string& key) const {
    std::vector<double> out;
    if (!has(sec, key)) return out;
    std::stringstream ss(values_.at(sec).at(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(to_number(sec, key, item));
    }
    return out;
  }

  /// Resolves a path relative to the directory of the config file.
  std::string path(const std::string& p) const {
    if (p.empty() || p.front() == '/') return p;
    return base_dir_ + "/" + p;
  }

  long seed() const { return static_cast<long>(num("", "seed", 0)); }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  [[noreturn]] static void bad(const std::string& origin, int line, const std::string& msg) {
    fail(ErrorKind::Config, origin + ":" + std::to_string(line) + ": " + msg);
  }

  static double to_number(const std::string& sec, const std::string& key, const std::string& text) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') {
      fail(ErrorKind::Config, sec + "." + key + ": not a number: " + text);
    }
    return v;
  }

  void set(const std::string& sec, const std::string& key, const std::string& value, const std::string& origin,
           int line) {
    const auto& allowed = schema().at(sec);
    if (!allowed.count(key)) {
      const std::string where = sec.empty() ? key : sec + "." + key;
      if (line > 0) bad(origin, line, "unknown key " + where);
      fail(ErrorKind::Config, "unknown key " + where);
    }
    values_[sec][key] = value;
  }

  std::map<std::string, std::map<std::string, std::string>> values_;
  std::string base_dir_ = ".";
};

namespace detail {

inline std::vector<std::vector<double>> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) row.push_back(std::strtod(item.c_str(), nullptr));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string need_choice(const RunConfig& c, const std::string& sec, const std::string& key,
                               const std::string& def, std::initializer_list<const char*> choices) {
  const std::string v = c.str(sec, key, def);
  for (const char* ch : choices) {
    if (v == ch) return v;
  }
  fail(ErrorKind::Config, sec + "." + key + ": unexpected value " + v);
}

}  // namespace detail

inline DepthPtr depth_from(const RunConfig& c) {
  const std::string kind = detail::need_choice(c, "depth", "kind", "power",
                                               {"power", "flat", "flooded", "raised", "volcano", "tabulated", "shelf"});
  const double alpha = c.num("depth", "alpha", 1.0);
  if (kind == "power") return DepthLaw::power(alpha);
  if (kind == "flat") return DepthLaw::flat(c.num("depth", "value", 1.0));
  if (kind == "flooded") return DepthLaw::flooded(DepthLaw::power(alpha), c.num("depth", "eps", 0.1));
  if (kind == "raised") return DepthLaw::raised(DepthLaw::power(alpha), c.num("depth", "eps", 0.1));
  if (kind == "volcano") {
    return DepthLaw::volcano(alpha, c.num("depth", "eps", 0.1), c.num("depth", "eta_radius", 0.3),
                             DepthLaw::power(alpha));
  }
  if (kind == "shelf") return DepthLaw::shelf(c.num("depth", "a1", alpha), c.num("depth", "eps", 0.1));
  const auto rows = detail::read_rows(c.path(c.str("depth", "table_file")));
  Tabulated t;
  t.x0 = c.num("depth", "x0", -1.0);
  t.y0 = c.num("depth", "y0", -1.0);
  t.h = c.num("depth", "h", 0.1);
  t.ny = static_cast<int>(rows.size());
  t.nx = rows.empty() ? 0 : static_cast<int>(rows[0].size());
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != t.nx) fail(ErrorKind::Config, "ragged depth table");
    t.values.insert(t.values.end(), r.begin(), r.end());
  }
  return std::make_shared<DepthLaw>(t);
}

inline LakeSpec lake_from(const RunConfig& c) {
  LakeSpec s;
  const std::string kind = detail::need_choice(c, "domain", "kind", "disk", {"disk", "annulus", "mask"});
  const double R = c.num("domain", "R", 1.0);
  if (kind == "disk") {
    s.domain = Disk{R};
  } else if (kind == "annulus") {
    s.domain = Annulus{c.num("domain", "r_in", 0.5), R};
  } else {
    const auto rows = detail::read_rows(c.path(c.str("domain", "mask_file")));
    MaskedJordan m;
    m.ny = static_cast<int>(rows.size());
    m.nx = rows.empty() ? 0 : static_cast<int>(rows[0].size());
    m.h = c.num("domain", "h", 2.0 / std::max(m.nx, 1));
    m.x0 = c.num("domain", "x0", -0.5 * m.nx * m.h);
    m.y0 = c.num("domain", "y0", -0.5 * m.ny * m.h);
    for (const auto& r : rows) {
      if (static_cast<int>(r.size()) != m.nx) fail(ErrorKind::Config, "ragged mask");
      for (double v : r) m.wet.push_back(v != 0.0 ? 1 : 0);
    }
    s.domain = std::move(m);
  }
  s.depth = depth_from(c);
  s.a0 = c.num("depth", "a0", 0.0);
  s.a1 = c.num("depth", "a1", s.depth->center_exponent() > 0.0 ? s.depth->center_exponent() : 1.0);
  s.c_floor = c.num("depth", "c_floor", 1.0);
  s.validate();
  return s;
}

inline GridOptions grid_from(const RunConfig& c) {
  GridOptions g;
  const std::string kind = detail::need_choice(c, "grid", "kind", "polar", {"polar", "cartesian"});
  g.kind = kind == "polar" ? Grid::Kind::Polar : Grid::Kind::Cartesian;
  g.nr = c.integer("grid", "nr", 128);
  g.ntheta = c.integer("grid", "ntheta", 128);
  g.ncart = c.integer("grid", "n", 128);
  if (g.nr < 1 || g.ntheta < 3 || g.ncart < 2) fail(ErrorKind::Config, "grid sizes too small");
  return g;
}

inline TimeStepper stepper_from(const RunConfig& c) {
  TimeStepper t;
  t.cfl = c.num("evolve", "cfl", 0.45);
  t.scheme = detail::need_choice(c, "evolve", "scheme", "ssprk2", {"ssprk2", "euler"}) == "euler"
                 ? Scheme::UpwindEuler
                 : Scheme::SSPRK2;
  t.dt_max = c.num("evolve", "dt_max", std::numeric_limits<double>::infinity());
  return t;
}

inline OmegaRecipe omega_from(const RunConfig& c) {
  OmegaRecipe w;
  const std::string kind = detail::need_choice(c, "vorticity", "kind", "zero", {"zero", "constant", "blob", "ring"});
  w.kind = kind == "zero" ? OmegaKind::Zero
           : kind == "constant" ? OmegaKind::Constant
           : kind == "blob" ? OmegaKind::Blob
                            : OmegaKind::Ring;
  w.amplitude = c.num("vorticity", "amplitude", 1.0);
  w.center = {c.num("vorticity", "x", 0.55), c.num("vorticity", "y", 0.0)};
  w.width = c.num("vorticity", "width", 0.1);
  w.ring_radius = c.num("vorticity", "ring_radius", 0.5);
  if (!(w.width > 0.0)) fail(ErrorKind::Config, "vorticity.width must be positive");
  return w;
}

inline StudySpec study_from(const RunConfig& c) {
  StudySpec s;
  s.base = lake_from(c);
  s.grid = grid_from(c);
  s.mode = detail::need_choice(c, "sequence", "mode", "evanescent", {"evanescent", "emergent"}) == "evanescent"
               ? SequenceMode::Evanescent
               : SequenceMode::Emergent;
  const std::string kind = detail::need_choice(c, "sequence", "kind",
                                               s.mode == SequenceMode::Evanescent ? "flooded" : "raised",
                                               {"flooded", "shrink", "shelf", "raised", "volcano"});
  s.sequence.kind = kind == "flooded"  ? SequenceKind::Flooded
                    : kind == "shrink" ? SequenceKind::Shrink
                    : kind == "shelf"  ? SequenceKind::Shelf
                    : kind == "raised" ? SequenceKind::Raised
                                       : SequenceKind::Volcano;
  s.sequence.eta_radius = c.num("sequence", "eta_radius", 0.3);
  s.eps_list = c.list("sequence", "eps");
  if (s.eps_list.empty()) s.eps_list = halving(c.num("sequence", "eps0", 0.2), c.integer("sequence", "count", 4));
  s.gamma = c.num("vorticity", "gamma", 0.0);
  s.omega = omega_from(c);
  s.probes = c.list("study", "probes");
  s.T_final = c.num("study", "T", 0.0);
  s.stepper = stepper_from(c);
  s.tol = c.num("solve", "tol", 1e-10);
  s.compare_inner = c.num("study", "compare_inner", 0.0);
  s.compare_outer = c.num("study", "compare_outer", 0.0);
  return s;
}

}  // namespace lakelab
