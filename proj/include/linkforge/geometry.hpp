#pragma once

#include <cmath>

namespace linkforge {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Vec2 a) { return a.x * a.x + a.y * a.y; }
inline double norm(Vec2 a) { return std::sqrt(norm2(a)); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }
inline double dist2(Vec2 a, Vec2 b) { return norm2(a - b); }

// Counter-clockwise rotation about the origin.
inline Vec2 rotate(Vec2 p, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * p.x - s * p.y, s * p.x + c * p.y};
}

// Squared distance from point p to segment [a, b]. Degenerate segments
// collapse to point distance.
inline double point_segment_dist2(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = norm2(ab);
    if (len2 <= 0.0) return dist2(p, a);
    double t = dot(p - a, ab) / len2;
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    return dist2(p, a + ab * t);
}

// Squared distance between segments [a0,a1] and [b0,b1].
inline double segment_segment_dist2(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1) {
    const Vec2 da = a1 - a0, db = b1 - b0, r = b0 - a0;
    const double cr1 = cross(da, db);
    if (cr1 != 0.0) {
        // Proper intersection check: both parametric hits inside [0,1].
        const double t = cross(r, db) / cr1;
        const double u = cross(r, da) / cr1;
        if (t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0) return 0.0;
    }
    double best = point_segment_dist2(a0, b0, b1);
    best = std::min(best, point_segment_dist2(a1, b0, b1));
    best = std::min(best, point_segment_dist2(b0, a0, a1));
    best = std::min(best, point_segment_dist2(b1, a0, a1));
    return best;
}

} // namespace linkforge
