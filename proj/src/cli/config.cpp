#include <fstream>
#include <set>

#include "pmc/cli.hpp"
#include "pmc/io.hpp"

namespace pmc {
namespace {

using nlohmann::json;

[[noreturn]] void parse_error(const std::string& msg) { throw Error(ErrorCode::ConfigParse, msg); }

double number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) parse_error(where + ": missing '" + key + "'");
  if (!j[key].is_number()) parse_error(where + ": '" + key + "' must be a number");
  return j[key].get<double>();
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

Vec2 point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    parse_error(where + " must be a two-number array");
  return {j[0].get<double>(), j[1].get<double>()};
}

const std::set<std::string> kTasks{"classify", "cheeger", "solve", "trace", "verticality", "stability", "superreduced"};

void check_domain(const json& d) {
  if (!d.is_object() || !d.contains("type") || !d["type"].is_string()) parse_error("domain: needs a string 'type'");
  const std::string t = d["type"];
  if (t == "disk") {
    if (d.contains("center")) point(d["center"], "domain.center");
    if (number_or(d, "radius", 1.0, "domain") <= 0.0) parse_error("domain.radius must be positive");
  } else if (t == "box") {
    if (d.contains("corner")) point(d["corner"], "domain.corner");
    if (number_or(d, "side", 1.0, "domain") <= 0.0) parse_error("domain.side must be positive");
  } else if (t == "unit_square") {
  } else if (t == "swiss_cheese") {
    number(d, "a", "domain");
    number(d, "delta", "domain");
    number(d, "eps", "domain");
    number(d, "i_max", "domain");
  } else if (t == "disk_minus_balls") {
    if (!d.contains("holes") || !d["holes"].is_array()) parse_error("domain.holes must be an array");
    for (const auto& h : d["holes"]) {
      point(h.value("center", json()), "domain.holes[].center");
      number(h, "radius", "domain.holes[]");
    }
  } else if (t == "mask_file") {
    if (!d.contains("path") || !d["path"].is_string()) parse_error("domain.path must be a string");
    if (d.contains("origin")) point(d["origin"], "domain.origin");
  } else {
    parse_error("domain.type '" + t + "' is not one of disk, box, unit_square, swiss_cheese, disk_minus_balls, mask_file");
  }
}

}  // namespace

ScenarioConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) parse_error("config must be a JSON object");
  static const std::set<std::string> known{"name", "task", "seed", "grid", "domain", "curvature", "params", "output"};
  for (const auto& [k, v] : doc.items())
    if (!known.count(k)) parse_error("unknown top-level key '" + k + "'");
  ScenarioConfig cfg;
  cfg.raw = doc;
  cfg.base_dir = base_dir;
  if (!doc.contains("task") || !doc["task"].is_string()) parse_error("missing string 'task'");
  cfg.task = doc["task"];
  if (!kTasks.count(cfg.task)) parse_error("task '" + cfg.task + "' is not supported");
  cfg.name = doc.value("name", cfg.task);
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_integer() || doc["seed"].get<std::int64_t>() < 0) parse_error("'seed' must be a non-negative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    if (!g.is_object()) parse_error("'grid' must be an object");
    if (g.contains("h") == g.contains("n")) parse_error("grid: give exactly one of 'h' or 'n' (h = 1/n)");
    cfg.h = g.contains("h") ? number(g, "h", "grid") : 1.0 / number(g, "n", "grid");
    if (!(cfg.h > 0.0 && cfg.h <= 0.5)) parse_error("grid spacing must lie in (0, 0.5]");
    cfg.margin = static_cast<int>(number_or(g, "margin", 3, "grid"));
    if (cfg.margin < 2) parse_error("grid.margin must be at least 2");
  } else if (cfg.task != "stability") {
    parse_error("missing 'grid'");
  }
  if (doc.contains("domain")) {
    check_domain(doc["domain"]);
    cfg.domain = doc["domain"];
  } else if (cfg.task != "stability") {
    parse_error("missing 'domain'");
  }
  if (doc.contains("curvature")) {
    const json& c = doc["curvature"];
    if (!c.is_object() || c.contains("constant") == c.contains("normalized"))
      parse_error("curvature: give exactly one of 'constant' or 'normalized'");
    if (c.contains("constant")) number(c, "constant", "curvature");
    if (c.contains("normalized") && !c["normalized"].is_boolean()) parse_error("curvature.normalized must be a boolean");
    cfg.curvature = c;
  }
  if (doc.contains("params")) {
    if (!doc["params"].is_object()) parse_error("'params' must be an object");
    cfg.params = doc["params"];
  }
  if (doc.contains("output")) {
    const json& o = doc["output"];
    if (!o.is_object() || (o.contains("dir") && !o["dir"].is_string())) parse_error("output.dir must be a string");
    cfg.out_dir = o.value("dir", "");
  }
  // Task-specific required keys.
  const json& p = cfg.params;
  if (cfg.task == "superreduced") {
    if (!p.contains("points") || !p["points"].is_array() || p["points"].empty())
      parse_error("superreduced: params.points must be a non-empty array");
    for (const auto& z : p["points"]) point(z, "params.points[]");
    if (!p.contains("scales") || !p["scales"].is_array()) parse_error("superreduced: params.scales must be an array");
  }
  if (cfg.task == "trace" && p.contains("field") && !p["field"].is_string()) parse_error("params.field must be a string");
  if ((cfg.task == "solve" || cfg.task == "trace" || cfg.task == "verticality") && cfg.curvature.is_null() &&
      p.value("field", std::string("solution")) == "solution")
    parse_error(cfg.task + ": needs 'curvature'");
  if (cfg.task == "stability") {
    for (const char* k : {"a", "delta", "eps", "i_max"}) number(p, k, "params");
    if (p.contains("fill_order")) {
      const std::string o = p["fill_order"].is_string() ? p["fill_order"].get<std::string>() : "";
      if (o != "smallest_first" && o != "largest_first" && o != "index")
        parse_error("params.fill_order must be smallest_first, largest_first or index");
    }
  }
  if (p.contains("uniqueness_seeds")) {
    if (!p["uniqueness_seeds"].is_array()) parse_error("params.uniqueness_seeds must be an array");
    for (const auto& x : p["uniqueness_seeds"])
      if (!x.is_number() && x != "random") parse_error("params.uniqueness_seeds entries must be numbers or \"random\"");
  }
  if (p.contains("mode")) {
    const std::string m = p["mode"].is_string() ? p["mode"].get<std::string>() : "";
    if (m != "auto" && m != "dirichlet" && m != "extremal") parse_error("params.mode must be auto, dirichlet or extremal");
  }
  build_solve_config(p);
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigParse, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigParse, path.string() + ": " + e.what());
  }
  ScenarioConfig cfg = parse_config(doc, path.parent_path());
  if (!doc.contains("name")) cfg.name = path.stem().string();
  return cfg;
}

DomainMask build_domain(const ScenarioConfig& cfg) {
  const json& d = cfg.domain;
  const std::string t = d.at("type");
  if (t == "mask_file") {
    std::filesystem::path p = d["path"].get<std::string>();
    if (p.is_relative()) p = cfg.base_dir / p;
    const Vec2 origin = d.contains("origin") ? point(d["origin"], "domain.origin") : Vec2{};
    return read_mask_pgm(p, cfg.h, origin, 2);
  }
  std::optional<AnalyticDomain> dom;
  if (t == "disk") {
    dom.emplace(Disk{d.contains("center") ? point(d["center"], "") : Vec2{}, d.value("radius", 1.0)});
  } else if (t == "box") {
    dom.emplace(Box{d.contains("corner") ? point(d["corner"], "") : Vec2{}, d.value("side", 1.0)});
  } else if (t == "unit_square") {
    dom.emplace(Box{{0.0, 0.0}, 1.0});
  } else if (t == "swiss_cheese") {
    dom.emplace(swiss_cheese(d["a"], d["delta"], d["eps"], d["i_max"].get<int>()));
  } else {
    DiskMinusBalls s{d.value("radius", 1.0), {}};
    for (const auto& h : d["holes"]) s.holes.push_back({point(h["center"], ""), h["radius"].get<double>()});
    dom.emplace(std::move(s));
  }
  const auto [lo, hi] = dom->bounds();
  return rasterize(*dom, Grid::covering(lo, hi, cfg.h, cfg.margin));
}

CurvatureSpec build_curvature(const ScenarioConfig& cfg, const DomainMask& mask) {
  if (cfg.curvature.is_null()) return CurvatureSpec::constant(0.0);
  if (cfg.curvature.contains("constant")) return CurvatureSpec::constant(cfg.curvature["constant"].get<double>());
  if (!cfg.curvature["normalized"].get<bool>()) return CurvatureSpec::constant(0.0);
  return CurvatureSpec::constant(perimeter(mask) / area(mask));
}

SolveConfig build_solve_config(const json& p) {
  SolveConfig s;
  const std::string w = "params";
  s.max_iterations = static_cast<int>(number_or(p, "max_iterations", s.max_iterations, w));
  s.energy_tolerance = number_or(p, "energy_tolerance", s.energy_tolerance, w);
  s.stall_window = static_cast<int>(number_or(p, "stall_window", s.stall_window, w));
  s.balance_tolerance = number_or(p, "balance_tolerance", s.balance_tolerance, w);
  s.check_every = static_cast<int>(number_or(p, "check_every", s.check_every, w));
  s.step_ratio = number_or(p, "step_ratio", s.step_ratio, w);
  s.m_cap = number_or(p, "m_cap", s.m_cap, w);
  s.ladder_levels = static_cast<int>(number_or(p, "ladder_levels", s.ladder_levels, w));
  s.t0_cells = number_or(p, "t0_cells", s.t0_cells, w);
  if (s.max_iterations < 1 || s.check_every < 1 || s.stall_window < s.check_every || !(s.energy_tolerance > 0.0) ||
      !(s.balance_tolerance > 0.0) || !(s.step_ratio > 0.0) || s.ladder_levels < 1 || !(s.t0_cells > 0.0))
    parse_error("solver parameters out of range");
  return s;
}

}  // namespace pmc
