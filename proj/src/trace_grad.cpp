#include "linkforge/trace_grad.hpp"

#include <cmath>
#include <cstring>

#include "linkforge/errors.hpp"
#include "linkforge/parallel.hpp"
#include "solve_kernel.hpp"

namespace linkforge {

namespace detail {

// Reverse pass for one mechanism. tx/ty hold the forward trace ([n*T + t]);
// dldx/dldy the incoming adjoints in the same layout; gx/gy (length N)
// receive dL/d(initial position).
//
// Forward recap for a plan step (i, j, k) at time t, with constants
// lij = |Xi0-Xj0|, lik = |Xi0-Xk0|, sigma = sign(cross(Xk0-Xj0, Xi0-Xj0)):
//   g = Xk(t) - Xj(t),  d = |g|,  c = (d^2 + lij^2 - lik^2) / (2 d lij),
//   s = sigma * sqrt(1 - c^2),  w = lij / d,
//   Xi(t) = Xj(t) + w * (c*gx - s*gy, s*gx + c*gy).
// The adjoint of Xi(t) therefore flows into Xj(t), Xk(t) (position terms) and
// into lij/lik (length terms), which in turn flow into the initial positions.
void backward_one(const PaddedBatch& batch, int b, int T, const double* tx,
                  const double* ty, const double* dldx, const double* dldy,
                  double* gx, double* gy) {
    const int N = batch.N;
    const auto& plan = batch.plans[b];

    // Running adjoints of the traced positions; consumed newest-joint-first.
    thread_local std::vector<double> ax, ay;
    ax.resize(std::size_t(N) * T);
    ay.resize(std::size_t(N) * T);
    std::memcpy(ax.data(), dldx, ax.size() * sizeof(double));
    std::memcpy(ay.data(), dldy, ay.size() * sizeof(double));

    for (int n = 0; n < N; ++n) gx[n] = gy[n] = 0.0;

    std::vector<Vec2> init(N);
    for (int n = 0; n < N; ++n)
        init[n] = {batch.x[batch.at(b, n)], batch.y[batch.at(b, n)]};

    for (int p = int(plan.size()) - 1; p >= 0; --p) {
        const auto& st = plan[p];
        const Vec2 pi = init[st.joint], pj = init[st.nbr_j], pk = init[st.nbr_k];
        const double lij = dist(pi, pj);
        const double lik = dist(pi, pk);
        const double sigma = orientation_sign(pj, pk, pi);

        const double* xj = tx + st.nbr_j * T;
        const double* yj = ty + st.nbr_j * T;
        const double* xk = tx + st.nbr_k * T;
        const double* yk = ty + st.nbr_k * T;
        double* aix = ax.data() + st.joint * T;
        double* aiy = ay.data() + st.joint * T;
        double* ajx = ax.data() + st.nbr_j * T;
        double* ajy = ay.data() + st.nbr_j * T;
        double* akx = ax.data() + st.nbr_k * T;
        double* aky = ay.data() + st.nbr_k * T;

        double alij = 0.0, alik = 0.0;  // length adjoints, summed over t

        for (int t = 0; t < T; ++t) {
            const double a_x = aix[t], a_y = aiy[t];
            if (a_x == 0.0 && a_y == 0.0) continue;

            const double dx = xk[t] - xj[t], dy = yk[t] - yj[t];
            const double d2 = dx * dx + dy * dy;
            const double d = std::sqrt(d2);
            const double c = (d2 + lij * lij - lik * lik) / (2.0 * d * lij);
            double u2 = 1.0 - c * c;
            if (u2 < 0.0) u2 = 0.0;
            double u = std::sqrt(u2);
            if (u < 1e-12) u = 1e-12;  // singular boundary: bounded subgradient
            const double s = sigma * std::sqrt(u2);
            const double w = lij / d;
            const double r = c * dx - s * dy;
            const double q = s * dx + c * dy;

            // Position term.
            ajx[t] += a_x;
            ajy[t] += a_y;

            const double aw = a_x * r + a_y * q;
            const double ar = w * a_x;
            const double aq = w * a_y;

            double ac = ar * dx + aq * dy;
            const double as = -ar * dy + aq * dx;
            ac += as * (-sigma * c / u);

            double agx = ar * c + aq * s;
            double agy = -ar * s + aq * c;

            const double dcdd = (d2 - lij * lij + lik * lik) / (2.0 * d2 * lij);
            const double dcdlij = (lij * lij - d2 + lik * lik) / (2.0 * d * lij * lij);
            const double dcdlik = -lik / (d * lij);

            const double ad = ac * dcdd + aw * (-lij / d2);
            alij += ac * dcdlij + aw / d;
            alik += ac * dcdlik;

            agx += ad * (dx / d);
            agy += ad * (dy / d);

            akx[t] += agx;
            aky[t] += agy;
            ajx[t] -= agx;
            ajy[t] -= agy;
        }

        // Lengths back to initial positions.
        if (alij != 0.0) {
            const Vec2 e = (pi - pj) / lij;
            gx[st.joint] += alij * e.x;
            gy[st.joint] += alij * e.y;
            gx[st.nbr_j] -= alij * e.x;
            gy[st.nbr_j] -= alij * e.y;
        }
        if (alik != 0.0) {
            const Vec2 e = (pi - pk) / lik;
            gx[st.joint] += alik * e.x;
            gy[st.joint] += alik * e.y;
            gx[st.nbr_k] -= alik * e.x;
            gy[st.nbr_k] -= alik * e.y;
        }
    }

    // Joint 1: X1(t) = X0 + l*(cos(theta_t + phi0), sin(theta_t + phi0)).
    {
        const Vec2 p0 = init[0], p1 = init[1];
        const Vec2 delta = p1 - p0;
        const double l = norm(delta);
        const double* x1 = tx + T;
        const double* y1 = ty + T;
        const double* a1x = ax.data() + T;
        const double* a1y = ay.data() + T;
        double al = 0.0, aphi = 0.0;
        for (int t = 0; t < T; ++t) {
            const double a_x = a1x[t], a_y = a1y[t];
            if (a_x == 0.0 && a_y == 0.0) continue;
            gx[0] += a_x;  // X0 translation term
            gy[0] += a_y;
            const double ct = (x1[t] - p0.x) / l;
            const double st = (y1[t] - p0.y) / l;
            al += a_x * ct + a_y * st;
            aphi += l * (-st * a_x + ct * a_y);
        }
        // l and phi0 back to the endpoints.
        const Vec2 dl = delta / l;
        const Vec2 dphi{-delta.y / (l * l), delta.x / (l * l)};
        gx[1] += al * dl.x + aphi * dphi.x;
        gy[1] += al * dl.y + aphi * dphi.y;
        gx[0] -= al * dl.x + aphi * dphi.x;
        gy[0] -= al * dl.y + aphi * dphi.y;
    }

    // Fixed joints (padding included): trace == initial position.
    for (int n = 0; n < N; ++n) {
        if (!batch.fixed_mask[batch.at(b, n)]) continue;
        const double* anx = ax.data() + n * T;
        const double* any = ay.data() + n * T;
        double sx = 0.0, sy = 0.0;
        for (int t = 0; t < T; ++t) {
            sx += anx[t];
            sy += any[t];
        }
        gx[n] += sx;
        gy[n] += sy;
    }
}

} // namespace detail

InitialGradient trace_gradient(const PaddedBatch& batch, int T,
                               const std::vector<double>& dL_dx,
                               const std::vector<double>& dL_dy) {
    if (batch.B == 0) throw EmptyBatchError("trace_gradient over empty batch");
    const std::size_t want = std::size_t(batch.B) * batch.N * T;
    if (dL_dx.size() != want || dL_dy.size() != want)
        throw EmptyBatchError("trace_gradient: adjoint size mismatch");

    InitialGradient grad;
    grad.gx.assign(std::size_t(batch.B) * batch.N, 0.0);
    grad.gy.assign(grad.gx.size(), 0.0);

    parallel_for(std::size_t(batch.B), [&](std::size_t bi) {
        const int b = int(bi);
        std::vector<double> tx(std::size_t(batch.N) * T), ty(tx.size());
        if (!detail::solve_one(batch, b, T, tx.data(), ty.data()))
            return;  // infeasible: gradient stays zero
        const std::size_t off = std::size_t(b) * batch.N * T;
        detail::backward_one(batch, b, T, tx.data(), ty.data(),
                             dL_dx.data() + off, dL_dy.data() + off,
                             grad.gx.data() + std::size_t(b) * batch.N,
                             grad.gy.data() + std::size_t(b) * batch.N);
    });
    return grad;
}

} // namespace linkforge
