#pragma once

#include <vector>

#include "linkforge/geometry.hpp"
#include "linkforge/rng.hpp"

namespace linkforge {

// Polyline in the plane. A closed curve wraps from the last point back to the
// first (the closing segment is implicit, never stored).
struct Curve {
    std::vector<Vec2> points;
    bool closed = true;

    int size() const { return int(points.size()); }
};

// Total polyline length (closing segment included when closed).
double curve_length(const Curve& c);

// n points equidistant in arc length. Closed curves sample at L*i/n and stay
// closed; open curves sample at L*i/(n-1), keeping both endpoints. Throws
// DegenerateCurveError for fewer than 3 input points, zero length, or n < 3.
Curve resample_equidistant(const Curve& c, int n);

// Zero-mean, combined-coordinate unit spread:
//   X_norm = (X - mean) / sqrt(sum_i(dx_i^2 + dy_i^2) / N).
// Throws DegenerateCurveError when all points coincide.
Curve normalize_curve(const Curve& c);

// Low-pass reconstruction keeping DFT frequencies {0, ±1, ..., ±n_freq} of
// the complex signal x + iy. Closed curves only (OpenCurveUnsupportedError).
Curve fft_smooth(const Curve& c, int n_freq = 7);

// Contiguous arc of fraction f ~ U[f_min, f_max] starting at a uniform random
// arc offset, re-resampled to the input point count and normalized. Output is
// open unless f lands on 1, which keeps the full closed loop. Closed input
// only.
Curve random_partial(const Curve& c, Rng& rng, double f_min = 0.10,
                     double f_max = 1.00);

Curve rotate_curve(const Curve& c, double angle);

} // namespace linkforge
