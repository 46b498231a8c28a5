#include "pmc/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pmc {
namespace {

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

nlohmann::json grid_json(const Grid& g) {
  return {{"nx", g.nx}, {"ny", g.ny}, {"h", g.h}, {"origin", {g.origin.x, g.origin.y}}};
}

void write_sidecar(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

void write_pgm_pixels(std::ofstream& out, const Grid& g, const std::vector<std::uint16_t>& px) {
  out << "P5\n" << g.nx << ' ' << g.ny << "\n65535\n";
  std::vector<unsigned char> row(2 * static_cast<std::size_t>(g.nx));
  for (int j = g.ny - 1; j >= 0; --j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::uint16_t v = px[g.index(i, j)];
      row[2 * i] = static_cast<unsigned char>(v >> 8);
      row[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s.precision(kCsvDigits);
  s << v;
  return s.str();
}

void write_field_csv(const std::filesystem::path& path, const ScalarField& f, const DomainMask* mask) {
  std::ofstream out = open_out(path);
  const Grid& g = f.grid();
  out << "i,j,x,y,value\n";
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (mask && !mask->inside(i, j)) continue;
      const Vec2 c = g.center(i, j);
      out << i << ',' << j << ',' << format_number(c.x) << ',' << format_number(c.y) << ',' << format_number(f(i, j))
          << '\n';
    }
  finish(out, path);
}

void write_vector_csv(const std::filesystem::path& path, const VectorField& f, const DomainMask* mask) {
  std::ofstream out = open_out(path);
  const Grid& g = f.grid();
  out << "i,j,x,y,vx,vy\n";
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (mask && !mask->inside(i, j)) continue;
      const Vec2 c = g.center(i, j), v = f(i, j);
      out << i << ',' << j << ',' << format_number(c.x) << ',' << format_number(c.y) << ',' << format_number(v.x)
          << ',' << format_number(v.y) << '\n';
    }
  finish(out, path);
}

std::filesystem::path write_field_pgm(const std::filesystem::path& path, const ScalarField& f, const DomainMask* mask) {
  const Grid& g = f.grid();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t skipped = 0;
  auto used = [&](std::size_t k) { return std::isfinite(f[k]) && (!mask || mask->inside(k)); };
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!used(k)) {
      ++skipped;
      continue;
    }
    lo = std::min(lo, f[k]);
    hi = std::max(hi, f[k]);
  }
  if (!(lo <= hi)) lo = hi = 0.0;
  // Code 0 is reserved for skipped cells when there are any.
  const int first = skipped > 0 ? 1 : 0;
  const double span = hi > lo ? hi - lo : 1.0;
  std::vector<std::uint16_t> px(f.size(), 0);
  for (std::size_t k = 0; k < f.size(); ++k)
    if (used(k)) px[k] = static_cast<std::uint16_t>(first + std::lround((f[k] - lo) / span * (65535 - first)));

  std::ofstream out = open_out(path, true);
  write_pgm_pixels(out, g, px);
  finish(out, path);

  nlohmann::json side = {{"format", "P5 16-bit big-endian, first row = largest y"},
                         {"grid", grid_json(g)},
                         {"scaling", {{"lo", lo}, {"hi", hi}, {"first_code", first}, {"last_code", 65535}}},
                         {"decode", "value = lo + (hi - lo) * (p - first_code) / (last_code - first_code)"},
                         {"skipped_code", skipped > 0 ? nlohmann::json(0) : nlohmann::json(nullptr)},
                         {"skipped_cells", skipped}};
  std::filesystem::path side_path = path;
  side_path += ".json";
  write_sidecar(side_path, side);
  return side_path;
}

std::filesystem::path write_mask_pgm(const std::filesystem::path& path, const DomainMask& mask) {
  const Grid& g = mask.grid();
  std::vector<std::uint16_t> px(g.size(), 0);
  for (std::size_t k = 0; k < g.size(); ++k) px[k] = mask.inside(k) ? 65535 : 0;
  std::ofstream out = open_out(path, true);
  write_pgm_pixels(out, g, px);
  finish(out, path);
  std::filesystem::path side_path = path;
  side_path += ".json";
  write_sidecar(side_path, {{"format", "P5 16-bit big-endian, first row = largest y"},
                            {"grid", grid_json(g)},
                            {"inside_code", 65535},
                            {"cells", mask.count()},
                            {"warnings", mask.warnings()}});
  return side_path;
}

DomainMask read_mask_pgm(const std::filesystem::path& path, double h, Vec2 origin, int margin) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  auto token = [&]() {
    std::string t;
    while (in >> std::ws && in.peek() == '#') std::getline(in, t);
    in >> t;
    return t;
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P2") throw Error(ErrorCode::ConfigParse, path.string() + " is not a P2/P5 PGM");
  int nx = 0, ny = 0, maxval = 0;
  try {
    nx = std::stoi(token());
    ny = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigParse, "malformed PGM header in " + path.string());
  }
  if (nx <= 0 || ny <= 0 || maxval <= 0 || maxval > 65535)
    throw Error(ErrorCode::ConfigParse, "invalid PGM dimensions in " + path.string());
  const Grid g(nx, ny, h, origin);
  std::vector<std::uint8_t> inside(g.size(), 0);
  if (magic == "P5") {
    in.get();
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> row(static_cast<std::size_t>(nx) * bytes);
    for (int r = 0; r < ny; ++r) {
      if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size())))
        throw Error(ErrorCode::ConfigParse, "truncated PGM " + path.string());
      for (int i = 0; i < nx; ++i) {
        const int v = bytes == 2 ? (row[2 * i] << 8) | row[2 * i + 1] : row[i];
        inside[g.index(i, ny - 1 - r)] = v != 0;
      }
    }
  } else {
    for (int r = 0; r < ny; ++r)
      for (int i = 0; i < nx; ++i) {
        int v = 0;
        if (!(in >> v)) throw Error(ErrorCode::ConfigParse, "truncated PGM " + path.string());
        inside[g.index(i, ny - 1 - r)] = v != 0;
      }
  }
  return DomainMask(g, std::move(inside), margin);
}

void write_trace_csv(const std::filesystem::path& path, const TraceEstimate& t) {
  std::ofstream out = open_out(path);
  out << "curve,s0,s1,mid_x,mid_y,normal_x,normal_y,length";
  for (double e : t.eps) out << ",value_eps_" << format_number(e);
  out << ",value\n";
  for (const TraceArc& a : t.arcs) {
    out << a.curve << ',' << format_number(a.s0) << ',' << format_number(a.s1) << ',' << format_number(a.midpoint.x)
        << ',' << format_number(a.midpoint.y) << ',' << format_number(a.normal.x) << ',' << format_number(a.normal.y)
        << ',' << format_number(a.length);
    for (double v : a.values) out << ',' << format_number(v);
    out << ',' << format_number(a.value) << '\n';
  }
  finish(out, path);
}

void write_density_csv(const std::filesystem::path& path, const DensityProfile& d) {
  std::ofstream out = open_out(path);
  out << "radius,bad_ratio" << (d.cone_ratio.empty() ? "" : ",cone_ratio") << '\n';
  for (std::size_t l = 0; l < d.radii.size(); ++l) {
    out << format_number(d.radii[l]) << ',' << format_number(d.bad_ratio[l]);
    if (!d.cone_ratio.empty()) out << ',' << format_number(d.cone_ratio[l]);
    out << '\n';
  }
  finish(out, path);
}

}  // namespace pmc
