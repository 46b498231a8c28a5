#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pmc/cli.hpp"
#include "pmc/io.hpp"
#include "pmc/traces.hpp"

namespace pmc {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Collects emitted files and log lines for one run.
struct Sink {
  fs::path dir;
  std::vector<fs::path> files;
  std::vector<std::string> log;

  fs::path path(const std::string& name) { return dir / name; }
  void add(const fs::path& p) { files.push_back(p); }
  void note(const std::string& line) { log.push_back(line); }
  void field(const std::string& stem, const ScalarField& f, const DomainMask* mask) {
    write_field_csv(path(stem + ".csv"), f, mask);
    add(path(stem + ".csv"));
    add(path(stem + ".pgm"));
    add(write_field_pgm(path(stem + ".pgm"), f, mask));
  }
};

std::vector<double> numbers(const json& p, const char* key, std::vector<double> fallback) {
  if (!p.contains(key)) return fallback;
  if (!p[key].is_array()) throw Error(ErrorCode::ConfigParse, std::string("params.") + key + " must be an array");
  std::vector<double> v;
  for (const auto& x : p[key]) {
    if (!x.is_number()) throw Error(ErrorCode::ConfigParse, std::string("params.") + key + " must hold numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

std::vector<Vec2> points(const json& p, const char* key, std::vector<Vec2> fallback) {
  if (!p.contains(key)) return fallback;
  std::vector<Vec2> v;
  for (const auto& x : p[key]) {
    if (!x.is_array() || x.size() != 2) throw Error(ErrorCode::ConfigParse, std::string("params.") + key + " entries must be [x, y]");
    v.push_back({x[0].get<double>(), x[1].get<double>()});
  }
  return v;
}

json classification_json(const Classification& c) {
  return {{"classification", to_string(c.kind)}, {"epsilon0", c.epsilon0},     {"total_curvature", c.total_curvature},
          {"perimeter", c.perimeter},             {"tolerance", c.tolerance},   {"violating_sign", c.violating_sign},
          {"reason", c.reason}};
}

json domain_json(const DomainMask& m) {
  const Grid& g = m.grid();
  return {{"grid", {{"nx", g.nx}, {"ny", g.ny}, {"h", g.h}, {"origin", {g.origin.x, g.origin.y}}}},
          {"cells", m.count()},
          {"area", area(m)},
          {"perimeter", perimeter(m)},
          {"warnings", m.warnings()}};
}

// Interior approximation ladder and inner Minkowski content, reported when params.ladder_schedule is set.
void add_ladder(const DomainMask& mask, const json& p, json& rep) {
  if (!p.contains("ladder_schedule")) return;
  const auto schedule = numbers(p, "ladder_schedule", {});
  const ApproxLadder ladder = build_ladder(mask, schedule, p.value("ladder_rel_tol", 0.03));
  json levels = json::array();
  for (const auto& l : ladder.levels) levels.push_back({{"t", l.t}, {"perimeter", l.perimeter}, {"area", l.area}});
  const MinkowskiEstimate mk = inner_minkowski_content(mask, numbers(p, "minkowski_schedule", schedule));
  rep["ladder"] = {{"levels", levels},
                   {"domain_perimeter", ladder.domain_perimeter},
                   {"domain_area", ladder.domain_area},
                   {"perimeter_converges", ladder.perimeter_converges},
                   {"warnings", ladder.warnings},
                   {"minkowski_content", mk.content},
                   {"minkowski_quadratic", mk.quadratic},
                   {"minkowski_residual", mk.residual}};
}

struct Solved {
  HeightField u;
  std::optional<ExtremalResult> extremal;
};

// Solves the pair in the mode requested by params.mode (auto follows the classification).
Solved solve_pair(const DomainMask& mask, const CurvatureSpec& H, const json& p, json& rep, Sink& sink) {
  SolveConfig scfg = build_solve_config(p);
  std::string mode = p.value("mode", std::string("auto"));
  const Classification c = classify(mask, H, false);
  rep["pair"] = classification_json(c);
  if (mode == "auto") {
    if (c.kind == PairClass::Violated)
      throw Error(ErrorCode::PairViolated, "the pair violates the subset condition: " + c.reason);
    mode = c.kind == PairClass::Strict ? "dirichlet" : "extremal";
  }
  rep["mode"] = mode;
  Solved out;
  if (mode == "dirichlet") {
    const SolverReport r = solve_dirichlet(mask, H, scfg);
    out.u = median_normalize(r.solution);
    rep["solve"] = {{"energy", r.energy},
                    {"residual", r.residual},
                    {"iterations", r.iterations},
                    {"converged", r.converged},
                    {"energy_trajectory", r.energy_trajectory},
                    {"height_tolerance", height_tolerance(scfg, mask)}};
    sink.note("dirichlet solve: " + std::to_string(r.iterations) + " iterations");
  } else {
    ExtremalResult er = solve_extremal(mask, H, scfg);
    json ladder = json::array();
    for (const auto& s : er.ladder)
      ladder.push_back({{"t", s.t},
                        {"median_shift", s.median_shift},
                        {"energy", s.energy},
                        {"residual", s.residual},
                        {"minimum", s.minimum},
                        {"epigraph_distance", s.epigraph_distance},
                        {"iterations", s.iterations}});
    rep["solve"] = {{"ladder", ladder},
                    {"n_plus_cells", std::count(er.n_plus.begin(), er.n_plus.end(), 1)},
                    {"n_minus_cells", std::count(er.n_minus.begin(), er.n_minus.end(), 1)},
                    {"n_empty", er.n_empty},
                    {"epigraph_monotone", er.epigraph_monotone},
                    {"m_cap", er.m_cap},
                    {"notes", er.notes},
                    {"height_tolerance", height_tolerance(scfg, mask)}};
    sink.note("extremal ladder: " + std::to_string(er.ladder.size()) + " levels");
    out.u = er.limit;
    out.extremal = std::move(er);
  }
  return out;
}

// Region {|x - c| <= r} intersected with a mask.
std::vector<std::uint8_t> ball_region(const DomainMask& m, Vec2 c, double r) {
  std::vector<std::uint8_t> reg(m.grid().size(), 0);
  for (std::size_t k = 0; k < reg.size(); ++k) reg[k] = m.inside(k) && norm(m.grid().center(k) - c) <= r;
  return reg;
}

void task_solve(const ScenarioConfig& cfg, const DomainMask& mask, const CurvatureSpec& H, json& rep, Sink& sink) {
  const json& p = cfg.params;
  const Solved s = solve_pair(mask, H, p, rep, sink);
  sink.field("u", s.u.u, &s.u.mask);
  const ScalarField mc = mean_curvature(s.u.u);
  sink.field("mean_curvature", mc, &s.u.mask);
  if (p.contains("oracle")) {
    // Spherical cap of radius 2/H centred on the disk: u = -sqrt(R^2 - |x - c|^2), median-normalized.
    const json& o = p["oracle"];
    if (o.value("type", std::string()) != "spherical_cap" || !H.is_constant() || cfg.domain.value("type", "") != "disk")
      throw Error(ErrorCode::ConfigParse, "oracle spherical_cap needs a disk domain and constant curvature");
    const Vec2 c = cfg.domain.contains("center") ? Vec2{cfg.domain["center"][0], cfg.domain["center"][1]} : Vec2{};
    const double R = 2.0 / std::abs(H.constant_value());
    const double sign = H.constant_value() > 0 ? 1.0 : -1.0;
    ScalarField cap(mask.grid());
    for (std::size_t k = 0; k < cap.size(); ++k) {
      const double r2 = dot(mask.grid().center(k) - c, mask.grid().center(k) - c);
      cap[k] = r2 < R * R ? -sign * std::sqrt(R * R - r2) : 0.0;
    }
    const HeightField ref = median_normalize(HeightField{cap, s.u.mask});
    const double er = o.value("error_radius", 0.9), rr = o.value("residual_radius", 0.8);
    double err = 0.0;
    for (std::size_t k = 0; k < cap.size(); ++k)
      if (s.u.mask.inside(k) && norm(mask.grid().center(k) - c) <= er) err = std::max(err, std::abs(s.u.u[k] - ref.u[k]));
    const auto reg = ball_region(s.u.mask, c, rr);
    rep["oracle"] = {{"type", "spherical_cap"},
                     {"radius", R},
                     {"error_radius", er},
                     {"max_error", err},
                     {"residual_radius", rr},
                     {"residual", pmc_residual(s.u.u, s.u.mask, H, 4.0, &reg)}};
  }
  if (p.contains("uniqueness_seeds")) {
    // A number is a constant initial field; "random" draws a seeded random field.
    std::vector<double> seeds;
    json listed = json::array();
    for (const auto& x : p["uniqueness_seeds"]) {
      seeds.push_back(x.is_number() ? x.get<double>() : std::nan(""));
      listed.push_back(x);
    }
    SolveConfig scfg = build_solve_config(p);
    const ProbeMode mode = rep["mode"] == "dirichlet" ? ProbeMode::Dirichlet : ProbeMode::Extremal;
    const double diff = uniqueness_probe(mask, H, scfg, seeds, mode, cfg.seed);
    rep["uniqueness"] = {{"seeds", listed},
                         {"max_difference", diff},
                         {"threshold", 2.0 * height_tolerance(scfg, mask)},
                         {"unique", diff <= 2.0 * height_tolerance(scfg, mask)}};
  }
}

DivField trace_field(const ScenarioConfig& cfg, const DomainMask& mask, json& rep, Sink& sink) {
  const json& p = cfg.params;
  const std::string kind = p.value("field", std::string("solution"));
  rep["field"] = kind;
  if (kind == "solution") {
    const Solved s = solve_pair(mask, build_curvature(cfg, mask), p, rep, sink);
    sink.field("u", s.u.u, &s.u.mask);
    return flux_field(s.u);
  }
  if (kind == "constant") {
    const auto v = numbers(p, "vector", {1.0, 0.0});
    if (v.size() != 2) throw Error(ErrorCode::ConfigParse, "params.vector must have two entries");
    VectorField xi(mask.grid(), {v[0], v[1]});
    return make_div_field(std::move(xi), ScalarField(mask.grid()));
  }
  if (kind == "identity") {
    VectorField xi(mask.grid());
    for (std::size_t k = 0; k < xi.size(); ++k) xi[k] = mask.grid().center(k);
    return make_div_field(std::move(xi), ScalarField(mask.grid(), 2.0));
  }
  if (kind == "twisting") return twisting_field(p.value("i_max", 6), mask.grid());
  if (kind == "distance_gradient") return make_div_field(distance_gradient(mask));
  throw Error(ErrorCode::ConfigParse, "params.field '" + kind + "' is not one of solution, constant, identity, twisting, distance_gradient");
}

void task_trace(const ScenarioConfig& cfg, const DomainMask& mask, json& rep, Sink& sink) {
  const json& p = cfg.params;
  const DivField xi = trace_field(cfg, mask, rep, sink);
  TraceConfig tc;
  tc.arcs = p.value("arcs", tc.arcs);
  tc.eps_cells = numbers(p, "eps_cells", tc.eps_cells);
  const TraceEstimate t = weak_normal_trace(xi, mask, tc);
  write_trace_csv(sink.path("trace.csv"), t);
  sink.add(sink.path("trace.csv"));
  double lo = 0.0, hi = 0.0;
  if (!t.arcs.empty()) {
    lo = hi = t.arcs.front().value;
    for (const auto& a : t.arcs) {
      lo = std::min(lo, a.value);
      hi = std::max(hi, a.value);
    }
  }
  const ScalarField one(mask.grid(), 1.0);
  rep["trace"] = {{"arcs", t.arcs.size()},        {"eps", t.eps},       {"min", lo},
                  {"max", hi},                    {"max_abs", t.max_abs()}, {"sup_norm", t.sup_norm},
                  {"sup_bound_ok", t.sup_bound_ok}, {"warnings", t.warnings},
                  {"gauss_green_residual_unit", gauss_green_residual(xi, one, mask, t)}};
  json layers = json::array();
  for (double e : numbers(p, "layer_eps", {})) layers.push_back({{"eps", e}, {"flux", boundary_layer_flux(xi, mask, e)}});
  rep["boundary_layer"] = layers;
  if (p.contains("density")) {
    const json& d = p["density"];
    const double tt = d.value("t", 0.1);
    std::optional<double> tau;
    if (d.contains("tau")) tau = d["tau"].get<double>();
    json out = json::array();
    int idx = 0;
    for (Vec2 z : points(d, "points", {})) {
      const DensityProfile prof = bad_set_density(xi, mask, tt, z, numbers(d, "radii", {}), tau);
      const std::string name = "density_" + std::to_string(idx++) + ".csv";
      write_density_csv(sink.path(name), prof);
      sink.add(sink.path(name));
      out.push_back({{"point", {z.x, z.y}}, {"radii", prof.radii}, {"bad_ratio", prof.bad_ratio}, {"cone_ratio", prof.cone_ratio}});
    }
    rep["density"] = {{"t", tt}, {"tau", tau ? json(*tau) : json(nullptr)}, {"profiles", out}};
  }
  if (p.contains("approx_limit")) {
    const json& a = p["approx_limit"];
    json out = json::array();
    for (Vec2 z : points(a, "points", {})) {
      const ApproxLimit al = approx_limit(xi.xi, mask, z, a.value("alpha", 0.1), numbers(a, "radii", {}));
      out.push_back({{"point", {z.x, z.y}},
                     {"estimate", {al.estimate.x, al.estimate.y}},
                     {"radii", al.radii},
                     {"residual_mass", al.residual_mass},
                     {"exists", al.exists}});
    }
    rep["approx_limit"] = out;
  }
}

void task_verticality(const ScenarioConfig& cfg, const DomainMask& mask, const CurvatureSpec& H, json& rep, Sink& sink) {
  const json& p = cfg.params;
  const Solved s = solve_pair(mask, H, p, rep, sink);
  sink.field("u", s.u.u, &s.u.mask);
  const auto schedule = numbers(p, "schedule", {0.2, 0.1, 0.05, 0.025});
  const ApproxLadder ladder = build_ladder(mask, schedule, p.value("ladder_rel_tol", 0.03));
  const auto flux = verticality_flux(HeightField{s.u.u, mask}, ladder);
  json levels = json::array();
  for (std::size_t l = 0; l < flux.size(); ++l)
    levels.push_back({{"t", ladder.levels[l].t}, {"flux", flux[l]}, {"perimeter", ladder.levels[l].perimeter}});
  // Linear extrapolation to t = 0 from the two innermost levels.
  double limit = flux.back();
  if (flux.size() >= 2) {
    const std::size_t a = flux.size() - 1, b = flux.size() - 2;
    const double ta = ladder.levels[a].t, tb = ladder.levels[b].t;
    limit = flux[a] - ta * (flux[b] - flux[a]) / (tb - ta);
  }
  rep["verticality"] = {{"levels", levels},
                        {"extrapolated_flux", limit},
                        {"domain_perimeter", ladder.domain_perimeter},
                        {"total_curvature", total_curvature(mask, H)}};
}

void task_stability(const ScenarioConfig& cfg, json& rep, Sink& sink) {
  const json& p = cfg.params;
  StabilityConfig sc;
  sc.a = p["a"];
  sc.delta = p["delta"];
  sc.eps = p["eps"];
  sc.i_max = p["i_max"];
  sc.h = cfg.h;
  sc.margin = cfg.margin;
  sc.k_radius = p.value("k_radius", sc.k_radius);
  const std::string order = p.value("fill_order", std::string("smallest_first"));
  sc.order = order == "largest_first" ? FillOrder::LargestFirst : order == "index" ? FillOrder::Index : FillOrder::SmallestFirst;
  sc.solve = build_solve_config(p);
  const StabilityReport r = stability_experiment(sc);
  json steps = json::array();
  for (std::size_t s = 0; s < r.steps.size(); ++s) {
    const StabilityStep& st = r.steps[s];
    json j = {{"holes_remaining", st.holes_remaining},
              {"curvature", st.curvature},
              {"classification", st.classification},
              {"extremal", st.extremal},
              {"solved", st.solved},
              {"error", st.error},
              {"iterations", st.iterations},
              {"distance_previous", st.distance_previous},
              {"distance_final", st.distance_final}};
    if (st.filled)
      j["filled"] = {{"i", st.filled->i}, {"j", st.filled->j}, {"rho", st.filled->rho}, {"radius", st.filled->radius}};
    steps.push_back(j);
    if (st.solution) sink.field("u_step" + std::to_string(s), st.solution->u, &st.solution->mask);
  }
  rep["stability"] = {{"steps", steps},
                      {"completed", r.completed},
                      {"fill_order", order},
                      {"k_radius", sc.k_radius},
                      {"k_cells", r.k_cells},
                      {"m_cap", r.m_cap},
                      {"final_vs_hemisphere", r.final_vs_hemisphere ? json(*r.final_vs_hemisphere) : json(nullptr)},
                      {"monotone", r.monotone},
                      {"notes", r.notes}};
}

void task_superreduced(const ScenarioConfig& cfg, const DomainMask& mask, json& rep) {
  const json& p = cfg.params;
  json out = json::array();
  for (Vec2 z : points(p, "points", {})) {
    const SuperReducedReport r = super_reduced_test(mask, z, numbers(p, "scales", {}), p.value("eps", 0.1));
    std::vector<int> violated(r.violated.begin(), r.violated.end());
    out.push_back({{"point", {z.x, z.y}},
                   {"verdict", to_string(r.verdict)},
                   {"base_point", {r.base_point.x, r.base_point.y}},
                   {"normal", {r.normal.x, r.normal.y}},
                   {"scales", r.scales},
                   {"worst_ratio", r.worst_ratio},
                   {"violated", violated}});
  }
  rep["superreduced"] = out;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

void apply_threads(const RunOptions& opts, json& m) {
  int threads = 1;
#ifdef _OPENMP
  if (opts.deterministic)
    omp_set_num_threads(1);
  else if (opts.threads > 0)
    omp_set_num_threads(opts.threads);
  threads = omp_get_max_threads();
#endif
  m["threads"] = threads;
  m["deterministic"] = opts.deterministic;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  out << s;
}

fs::path resolve_out(const ScenarioConfig& cfg, const RunOptions& opts) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  if (!cfg.out_dir.empty()) return fs::path(cfg.out_dir).is_relative() ? cfg.base_dir / cfg.out_dir : fs::path(cfg.out_dir);
  return fs::path("runs") / cfg.name;
}

// Writes log and manifest (hashing every listed file) and fills the artifacts.
RunArtifacts finalize(Sink& sink, json manifest, json report, bool ok) {
  if (!report.is_null()) {
    write_text(sink.path("report.json"), report.dump(2) + "\n");
    sink.add(sink.path("report.json"));
  }
  std::string log;
  for (const auto& l : sink.log) log += l + "\n";
  write_text(sink.path("log.txt"), log);
  sink.add(sink.path("log.txt"));
  json files = json::array();
  for (const auto& f : sink.files)
    files.push_back({{"path", fs::relative(f, sink.dir).generic_string()}, {"bytes", fs::file_size(f)}, {"sha256", sha256_file(f)}});
  manifest["files"] = files;
  manifest["status"] = ok ? "ok" : "error";
  write_text(sink.path("manifest.json"), manifest.dump(2) + "\n");
  RunArtifacts a;
  a.out_dir = sink.dir;
  a.manifest = std::move(manifest);
  a.report = std::move(report);
  a.files = sink.files;
  a.ok = ok;
  return a;
}

json base_manifest(const ScenarioConfig& cfg, const RunOptions& opts) {
  json m = {{"tool", "pmc-lab"},
            {"version", kToolVersion},
            {"scenario", cfg.name},
            {"task", cfg.task},
            {"seed", cfg.seed},
            {"config", cfg.raw},
            {"config_sha256", nullptr},
            {"started_utc", utc_now()}};
  apply_threads(opts, m);
  return m;
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream s;
  for (unsigned int i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return s.str();
}

RunArtifacts run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
  Sink sink;
  sink.dir = resolve_out(cfg, opts);
  fs::create_directories(sink.dir);
  json manifest = base_manifest(cfg, opts);
  const auto t0 = std::chrono::steady_clock::now();
  json report = {{"scenario", cfg.name}, {"task", cfg.task}, {"seed", cfg.seed}};
  std::string stage = "domain-build";
  try {
    if (cfg.task == "stability") {
      stage = "solver";
      task_stability(cfg, report, sink);
    } else {
      const DomainMask mask = build_domain(cfg);
      report["domain"] = domain_json(mask);
      write_mask_pgm(sink.path("mask.pgm"), mask);
      sink.add(sink.path("mask.pgm"));
      sink.add(sink.path("mask.pgm.json"));
      const CurvatureSpec H = build_curvature(cfg, mask);
      if (H.is_constant()) report["curvature"] = H.constant_value();
      sink.note("domain: " + std::to_string(mask.count()) + " cells");
      add_ladder(mask, cfg.params, report);
      stage = "solver";
      if (cfg.task == "classify") {
        const Classification c = classify(mask, H, cfg.params.value("epsilon0", true));
        report.update(classification_json(c));
      } else if (cfg.task == "cheeger") {
        const CheegerResult c = cheeger(mask, cfg.params.value("relative_tolerance", 2.5e-3));
        report["cheeger"] = {{"value", c.value},           {"lower", c.lower},       {"upper", c.upper},
                             {"set_perimeter", c.set_perimeter}, {"set_area", c.set_area}, {"set_quotient", c.set_quotient},
                             {"solves", c.solves},         {"iterations", c.iterations}};
        ScalarField set(mask.grid());
        for (std::size_t k = 0; k < set.size(); ++k) set[k] = c.set[k];
        sink.field("cheeger_set", set, nullptr);
      } else if (cfg.task == "solve") {
        task_solve(cfg, mask, H, report, sink);
      } else if (cfg.task == "trace") {
        task_trace(cfg, mask, report, sink);
      } else if (cfg.task == "verticality") {
        task_verticality(cfg, mask, H, report, sink);
      } else if (cfg.task == "superreduced") {
        task_superreduced(cfg, mask, report);
      }
    }
  } catch (const Error& e) {
    manifest["error"] = {{"stage", stage}, {"code", to_string(e.code())}, {"message", e.what()}};
    manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    sink.note(std::string("error: ") + e.what());
    return finalize(sink, std::move(manifest), std::move(report), false);
  }
  manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return finalize(sink, std::move(manifest), std::move(report), true);
}

RunArtifacts dump_domain(const ScenarioConfig& cfg, const RunOptions& opts) {
  Sink sink;
  sink.dir = resolve_out(cfg, opts);
  fs::create_directories(sink.dir);
  json manifest = base_manifest(cfg, opts);
  try {
    const DomainMask mask = build_domain(cfg);
    write_mask_pgm(sink.path("mask.pgm"), mask);
    sink.add(sink.path("mask.pgm"));
    sink.add(sink.path("mask.pgm.json"));
    sink.field("signed_distance", signed_distance(mask), nullptr);
    json rep = domain_json(mask);
    add_ladder(mask, cfg.params, rep);
    return finalize(sink, std::move(manifest), std::move(rep), true);
  } catch (const Error& e) {
    manifest["error"] = {{"stage", "domain-build"}, {"code", to_string(e.code())}, {"message", e.what()}};
    return finalize(sink, std::move(manifest), nullptr, false);
  }
}

RunArtifacts record_failure(const fs::path& out_dir, const std::string& stage, const Error& error,
                            const fs::path& config_path) {
  Sink sink;
  sink.dir = out_dir;
  fs::create_directories(sink.dir);
  json manifest = {{"tool", "pmc-lab"},
                   {"version", kToolVersion},
                   {"config_path", config_path.string()},
                   {"started_utc", utc_now()},
                   {"error", {{"stage", stage}, {"code", to_string(error.code())}, {"message", error.what()}}}};
  sink.note(std::string("error: ") + error.what());
  return finalize(sink, std::move(manifest), nullptr, false);
}

}  // namespace pmc
