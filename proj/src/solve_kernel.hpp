#pragma once

// Internal solve kernels shared by solver.cpp, trace_grad.cpp and
// objective.cpp. Not part of the public headers.

#include <cmath>
#include <limits>
#include <numbers>

#include "linkforge/mechanism.hpp"

namespace linkforge::detail {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kCosClamp = 1e-14;

inline double orientation_sign(Vec2 pj, Vec2 pk, Vec2 pi) {
    return cross(pk - pj, pi - pj) >= 0.0 ? 1.0 : -1.0;
}

inline void place(double xj, double yj, double xk, double yk, double lij,
                  double a2mb2, double sigma, double& xi, double& yi) {
    const double dx = xk - xj, dy = yk - yj;
    const double d2 = dx * dx + dy * dy;
    const double d = std::sqrt(d2);
    const double c = (d2 + a2mb2) / (2.0 * d * lij);
    double s2 = 1.0 - c * c;
    if (s2 < 0.0) {
        if (s2 < -2.0 * kCosClamp) {
            xi = kNaN;
            yi = kNaN;
            return;
        }
        s2 = 0.0;
    }
    const double s = sigma * std::sqrt(s2);
    const double w = lij / d;
    xi = xj + (c * dx - s * dy) * w;
    yi = yj + (s * dx + c * dy) * w;
}

// Reverse pass for one mechanism (defined in trace_grad.cpp): tx/ty hold the
// forward trace [n*T + t], dldx/dldy the trace adjoints in the same layout;
// gx/gy (length batch.N) receive dL/d(initial position).
void backward_one(const PaddedBatch& batch, int b, int T, const double* tx,
                  const double* ty, const double* dldx, const double* dldy,
                  double* gx, double* gy);

// Solves mechanism b of the batch into tx/ty, laid out [n*T + t]. Returns
// whether every real joint stayed finite.
inline bool solve_one(const PaddedBatch& batch, int b, int T, double* tx,
                      double* ty) {
    const int N = batch.N;
    for (int n = 0; n < N; ++n) {
        if (!batch.fixed_mask[batch.at(b, n)]) continue;
        const double px = batch.x[batch.at(b, n)];
        const double py = batch.y[batch.at(b, n)];
        for (int t = 0; t < T; ++t) {
            tx[n * T + t] = px;
            ty[n * T + t] = py;
        }
    }
    {
        const Vec2 p0{batch.x[batch.at(b, 0)], batch.y[batch.at(b, 0)]};
        const Vec2 p1{batch.x[batch.at(b, 1)], batch.y[batch.at(b, 1)]};
        const double arm = dist(p0, p1);
        const double phase = std::atan2(p1.y - p0.y, p1.x - p0.x);
        const double step = 2.0 * std::numbers::pi / T;
        for (int t = 0; t < T; ++t) {
            const double th = phase + step * t;
            tx[T + t] = p0.x + arm * std::cos(th);
            ty[T + t] = p0.y + arm * std::sin(th);
        }
        tx[T] = p1.x;
        ty[T] = p1.y;
    }
    for (const auto& st : batch.plans[b]) {
        const Vec2 pi{batch.x[batch.at(b, st.joint)], batch.y[batch.at(b, st.joint)]};
        const Vec2 pj{batch.x[batch.at(b, st.nbr_j)], batch.y[batch.at(b, st.nbr_j)]};
        const Vec2 pk{batch.x[batch.at(b, st.nbr_k)], batch.y[batch.at(b, st.nbr_k)]};
        const double lij = dist(pi, pj);
        const double lik = dist(pi, pk);
        const double a2mb2 = lij * lij - lik * lik;
        const double sigma = orientation_sign(pj, pk, pi);

        const double* xj = tx + st.nbr_j * T;
        const double* yj = ty + st.nbr_j * T;
        const double* xk = tx + st.nbr_k * T;
        const double* yk = ty + st.nbr_k * T;
        double* xi = tx + st.joint * T;
        double* yi = ty + st.joint * T;
        for (int t = 0; t < T; ++t)
            place(xj[t], yj[t], xk[t], yk[t], lij, a2mb2, sigma, xi[t], yi[t]);
    }
    for (int n = 0; n < N; ++n) {
        if (!batch.real_mask[batch.at(b, n)]) continue;
        for (int t = 0; t < T; ++t)
            if (!std::isfinite(tx[n * T + t]) || !std::isfinite(ty[n * T + t]))
                return false;
    }
    return true;
}

} // namespace linkforge::detail
