#include "linkforge/curve.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "linkforge/errors.hpp"

namespace linkforge {

namespace {

// Cumulative arc length over the polyline's vertices; size() + 1 entries for
// closed curves (last = total including the wrap segment), size() for open.
std::vector<double> cumulative(const Curve& c) {
    std::vector<double> cum;
    cum.reserve(c.points.size() + 1);
    cum.push_back(0.0);
    for (std::size_t i = 1; i < c.points.size(); ++i)
        cum.push_back(cum.back() + dist(c.points[i - 1], c.points[i]));
    if (c.closed) cum.push_back(cum.back() + dist(c.points.back(), c.points.front()));
    return cum;
}

Vec2 point_at(const Curve& c, const std::vector<double>& cum, double s) {
    const double total = cum.back();
    if (s <= 0.0) return c.points.front();
    if (s >= total) return c.closed ? c.points.front() : c.points.back();
    // First segment whose far end passes s; zero-length segments are skipped
    // because upper_bound lands past ties.
    const auto it = std::upper_bound(cum.begin(), cum.end(), s);
    const std::size_t seg = std::size_t(it - cum.begin()) - 1;
    const Vec2 a = c.points[seg];
    const Vec2 b = (seg + 1 < c.points.size()) ? c.points[seg + 1] : c.points.front();
    const double seg_len = cum[seg + 1] - cum[seg];
    const double t = (s - cum[seg]) / seg_len;
    return a + (b - a) * t;
}

} // namespace

double curve_length(const Curve& c) {
    if (c.points.size() < 2) return 0.0;
    return cumulative(c).back();
}

Curve resample_equidistant(const Curve& c, int n) {
    if (c.size() < 3) throw DegenerateCurveError("resample needs >= 3 points");
    if (n < 3) throw DegenerateCurveError("resample target n must be >= 3");
    const auto cum = cumulative(c);
    const double total = cum.back();
    if (!(total > 0.0)) throw DegenerateCurveError("curve has zero length");

    Curve out;
    out.closed = c.closed;
    out.points.resize(n);
    const double step = c.closed ? total / n : total / (n - 1);
    for (int i = 0; i < n; ++i) out.points[i] = point_at(c, cum, step * i);
    return out;
}

Curve normalize_curve(const Curve& c) {
    if (c.size() < 3) throw DegenerateCurveError("normalize needs >= 3 points");
    Vec2 mean{0.0, 0.0};
    for (const auto& p : c.points) mean += p;
    mean = mean / double(c.size());

    double spread = 0.0;
    for (const auto& p : c.points) spread += dist2(p, mean);
    spread = std::sqrt(spread / double(c.size()));
    if (!(spread > 0.0)) throw DegenerateCurveError("all curve points coincide");

    Curve out;
    out.closed = c.closed;
    out.points.reserve(c.points.size());
    for (const auto& p : c.points) out.points.push_back((p - mean) / spread);
    return out;
}

Curve fft_smooth(const Curve& c, int n_freq) {
    if (!c.closed) throw OpenCurveUnsupportedError("fft_smooth needs a closed curve");
    if (c.size() < 3) throw DegenerateCurveError("fft_smooth needs >= 3 points");
    const int n = c.size();
    const int kmax = std::min(n_freq, (n - 1) / 2);

    using cd = std::complex<double>;
    const double w = 2.0 * std::numbers::pi / n;
    // Direct DFT of the 2*kmax+1 retained coefficients: O(n * n_freq), exact
    // enough and dependency-free at query sizes.
    std::vector<cd> coef(2 * kmax + 1);
    for (int k = -kmax; k <= kmax; ++k) {
        cd acc{0.0, 0.0};
        for (int t = 0; t < n; ++t) {
            const cd z{c.points[t].x, c.points[t].y};
            acc += z * std::polar(1.0, -w * k * t);
        }
        coef[k + kmax] = acc / double(n);
    }

    Curve out;
    out.closed = true;
    out.points.resize(n);
    for (int t = 0; t < n; ++t) {
        cd z{0.0, 0.0};
        for (int k = -kmax; k <= kmax; ++k)
            z += coef[k + kmax] * std::polar(1.0, w * k * t);
        out.points[t] = {z.real(), z.imag()};
    }
    return out;
}

Curve random_partial(const Curve& c, Rng& rng, double f_min, double f_max) {
    if (!c.closed) throw OpenCurveUnsupportedError("random_partial cuts closed curves");
    if (c.size() < 3) throw DegenerateCurveError("random_partial needs >= 3 points");
    const auto cum = cumulative(c);
    const double total = cum.back();
    if (!(total > 0.0)) throw DegenerateCurveError("curve has zero length");

    const double f = rng.uniform(f_min, f_max);
    const double s0 = rng.uniform01() * total;
    const int n = c.size();

    Curve cut;
    cut.points.resize(n);
    if (f >= 1.0 - 1e-12) {
        cut.closed = true;
        for (int i = 0; i < n; ++i)
            cut.points[i] = point_at(c, cum, std::fmod(s0 + total * i / n, total));
    } else {
        cut.closed = false;
        const double arc = f * total;
        for (int i = 0; i < n; ++i)
            cut.points[i] = point_at(c, cum, std::fmod(s0 + arc * i / (n - 1), total));
    }
    return normalize_curve(cut);
}

Curve rotate_curve(const Curve& c, double angle) {
    Curve out;
    out.closed = c.closed;
    out.points.reserve(c.points.size());
    for (const auto& p : c.points) out.points.push_back(rotate(p, angle));
    return out;
}

} // namespace linkforge
