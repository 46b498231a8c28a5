#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pmc/core.hpp"
#include "pmc/geometry.hpp"
#include "pmc/traces.hpp"

namespace pmc {

/// Doubles in text outputs carry this many significant digits.
inline constexpr int kCsvDigits = 9;

/// Columns i,j,x,y,value; cells outside an optional mask are skipped.
void write_field_csv(const std::filesystem::path& path, const ScalarField& f, const DomainMask* mask = nullptr);

/// Columns i,j,x,y,vx,vy.
void write_vector_csv(const std::filesystem::path& path, const VectorField& f, const DomainMask* mask = nullptr);

/// Binary PGM (P5, maxval 65535, big-endian, row 0 at the top = largest y). Finite values map affinely,
/// value = lo + (hi - lo) * p / 65535; non-finite values and cells outside an optional mask map to p = 0
/// and are listed as such in the sidecar `<path>.json`. Returns the sidecar path.
std::filesystem::path write_field_pgm(const std::filesystem::path& path, const ScalarField& f,
                                      const DomainMask* mask = nullptr);

/// Mask as PGM (inside = 65535) with a sidecar describing the grid.
std::filesystem::path write_mask_pgm(const std::filesystem::path& path, const DomainMask& mask);

/// Reads a P2/P5 PGM as a mask on the given spacing and origin (nonzero = inside, row 0 = top).
DomainMask read_mask_pgm(const std::filesystem::path& path, double h, Vec2 origin, int margin = 2);

/// Columns curve,s0,s1,mid_x,mid_y,normal_x,normal_y,length,value_eps<k>...,value.
void write_trace_csv(const std::filesystem::path& path, const TraceEstimate& t);

/// Columns radius,bad_ratio[,cone_ratio].
void write_density_csv(const std::filesystem::path& path, const DensityProfile& d);

/// Shortest round-trip formatting with kCsvDigits significant digits.
std::string format_number(double v);

}  // namespace pmc
