#pragma once

#include <string>

#include "shapereg/geometry.hpp"

namespace shapereg {

// %.17g formatting: enough digits to round-trip a double exactly.
std::string fmt_double(double v);

// Writes to <path>.tmp in the same directory, then renames over path.
void atomic_write_text(const std::string& path, const std::string& content);

// PGM P2 (ASCII) and P5 (binary), maxval <= 65535; intensities normalized by
// maxval. '#' comments in the header are allowed.
GrayImage read_pgm(const std::string& path);

// Header `t,v1,...,vd`; one row per node.
SampledCurve read_curve_csv(const std::string& path);
std::string curve_csv(const SampledCurve& c);

// Header `x,y,v1,v2,v3`; row-major (x outer, y inner).
SampledSurface read_surface_csv(const std::string& path);
std::string surface_csv(const SampledSurface& s);

}  // namespace shapereg
