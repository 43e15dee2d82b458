#include "linkforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft.hpp"
#include "linkforge/errors.hpp"

namespace linkforge {

namespace {

constexpr int kBruteThreshold = 16;   // below this a grid buys nothing
constexpr int kDirectOdLimit = 256;   // direct enumeration cutoff

inline double box_dist2(Vec2 q, double x0, double y0, double x1, double y1) {
    const double dx = q.x < x0 ? x0 - q.x : (q.x > x1 ? q.x - x1 : 0.0);
    const double dy = q.y < y0 ? y0 - q.y : (q.y > y1 ? q.y - y1 : 0.0);
    return dx * dx + dy * dy;
}

} // namespace

// ------------------------------------------------------------------- NnGrid

NnGrid::NnGrid(std::vector<Vec2> points) : pts_(std::move(points)) {
    if (pts_.empty()) throw EmptySetError("NnGrid over empty point set");
    const int n = int(pts_.size());
    if (n <= kBruteThreshold) return;  // brute-force mode: no cells

    Vec2 hi = pts_[0];
    lo_ = pts_[0];
    for (const auto& p : pts_) {
        lo_.x = std::min(lo_.x, p.x);
        lo_.y = std::min(lo_.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
    const double w = hi.x - lo_.x, h = hi.y - lo_.y;
    const double span = std::max({w, h, 1e-300});
    const int target_cells = std::max(1, int(std::sqrt(double(n))));
    h_ = span / target_cells;
    gw_ = std::min(64, std::max(1, int(w / h_) + 1));
    gh_ = std::min(64, std::max(1, int(h / h_) + 1));
    // Recompute the edge so the grid covers the box with the clamped dims.
    h_ = std::max({w / gw_, h / gh_, 1e-300}) * (1.0 + 1e-12);

    std::vector<int> counts(gw_ * gh_ + 1, 0);
    auto cell_of = [&](Vec2 p) {
        int cx = int((p.x - lo_.x) / h_);
        int cy = int((p.y - lo_.y) / h_);
        cx = std::clamp(cx, 0, gw_ - 1);
        cy = std::clamp(cy, 0, gh_ - 1);
        return cy * gw_ + cx;
    };
    for (const auto& p : pts_) ++counts[cell_of(p) + 1];
    for (int i = 1; i <= gw_ * gh_; ++i) counts[i] += counts[i - 1];
    cell_start_ = counts;
    cell_items_.resize(n);
    std::vector<int> fill(cell_start_.begin(), cell_start_.end() - 1);
    for (int i = 0; i < n; ++i) cell_items_[fill[cell_of(pts_[i])]++] = i;
}

double NnGrid::nearest_dist2(Vec2 q, int* arg) const {
    int best_i = 0;
    if (cell_items_.empty()) {  // brute force
        double best = dist2(q, pts_[0]);
        for (std::size_t i = 1; i < pts_.size(); ++i) {
            const double d = dist2(q, pts_[i]);
            if (d < best) {
                best = d;
                best_i = int(i);
            }
        }
        if (arg) *arg = best_i;
        return best;
    }

    int cx = std::clamp(int((q.x - lo_.x) / h_), 0, gw_ - 1);
    int cy = std::clamp(int((q.y - lo_.y) / h_), 0, gh_ - 1);
    double best = std::numeric_limits<double>::infinity();

    const int max_ring = std::max(gw_, gh_);
    for (int r = 0; r <= max_ring; ++r) {
        // Entire-ring lower bound: distance from q to the inner box of the
        // ring annulus. Only valid once a candidate exists.
        if (r > 0 && std::isfinite(best)) {
            const double ix0 = lo_.x + (cx - (r - 1)) * h_;
            const double iy0 = lo_.y + (cy - (r - 1)) * h_;
            const double ix1 = lo_.x + (cx + r) * h_;
            const double iy1 = lo_.y + (cy + r) * h_;
            if (q.x >= ix0 && q.x <= ix1 && q.y >= iy0 && q.y <= iy1) {
                const double inner = std::min(
                    std::min(q.x - ix0, ix1 - q.x), std::min(q.y - iy0, iy1 - q.y));
                if (inner > 0.0 && inner * inner > best) break;
            }
        }
        const int x0 = cx - r, x1 = cx + r, y0 = cy - r, y1 = cy + r;
        for (int yy = y0; yy <= y1; ++yy) {
            if (yy < 0 || yy >= gh_) continue;
            const bool edge_row = (yy == y0 || yy == y1);
            for (int xx = x0; xx <= x1; edge_row ? ++xx : xx += (x1 - x0 > 0 ? x1 - x0 : 1)) {
                if (xx < 0 || xx >= gw_) continue;
                const double bx0 = lo_.x + xx * h_, by0 = lo_.y + yy * h_;
                if (box_dist2(q, bx0, by0, bx0 + h_, by0 + h_) > best) continue;
                const int c = yy * gw_ + xx;
                for (int s = cell_start_[c]; s < cell_start_[c + 1]; ++s) {
                    const double d = dist2(q, pts_[cell_items_[s]]);
                    if (d < best) {
                        best = d;
                        best_i = cell_items_[s];
                    }
                }
            }
        }
    }
    if (arg) *arg = best_i;
    return best;
}

// ------------------------------------------------------------------ chamfer

namespace {

double one_sided_sum(const NnGrid& grid, const std::vector<Vec2>& from) {
    double acc = 0.0;
    for (const auto& p : from) acc += std::sqrt(grid.nearest_dist2(p));
    return acc;
}

} // namespace

double chamfer_distance(const NnGrid& a_grid, const std::vector<Vec2>& b) {
    if (b.empty()) throw EmptySetError("chamfer over empty point set");
    const NnGrid b_grid(b);
    return one_sided_sum(b_grid, a_grid.points()) / double(a_grid.size()) +
           one_sided_sum(a_grid, b) / double(b.size());
}

double chamfer_distance(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    if (a.empty() || b.empty()) throw EmptySetError("chamfer over empty point set");
    return chamfer_distance(NnGrid(a), b);
}

std::vector<Vec2> chamfer_gradient(const std::vector<Vec2>& a,
                                   const std::vector<Vec2>& b) {
    if (a.empty() || b.empty()) throw EmptySetError("chamfer over empty point set");
    std::vector<Vec2> grad(b.size(), Vec2{0.0, 0.0});

    // Term 1: (1/|A|) sum_a |a - b*(a)|; moves the matched b point.
    for (const auto& p : a) {
        int best = 0;
        double bd = dist2(p, b[0]);
        for (std::size_t i = 1; i < b.size(); ++i) {
            const double d = dist2(p, b[i]);
            if (d < bd) {
                bd = d;
                best = int(i);
            }
        }
        const double d = std::sqrt(bd);
        if (d > 1e-15)
            grad[best] += (b[best] - p) / (d * double(a.size()));
    }
    // Term 2: (1/|B|) sum_b |b - a*(b)|.
    for (std::size_t i = 0; i < b.size(); ++i) {
        double bd = dist2(b[i], a[0]);
        Vec2 bestp = a[0];
        for (std::size_t jj = 1; jj < a.size(); ++jj) {
            const double d = dist2(b[i], a[jj]);
            if (d < bd) {
                bd = d;
                bestp = a[jj];
            }
        }
        const double d = std::sqrt(bd);
        if (d > 1e-15)
            grad[i] += (b[i] - bestp) / (d * double(b.size()));
    }
    return grad;
}

double chamfer_value_grad(const NnGrid& a_grid, const std::vector<Vec2>& b,
                          std::vector<Vec2>& grad_b) {
    if (b.empty()) throw EmptySetError("chamfer over empty point set");
    grad_b.assign(b.size(), Vec2{0.0, 0.0});
    const NnGrid b_grid(b);
    const auto& a = a_grid.points();
    const double na = double(a.size()), nb = double(b.size());
    double acc1 = 0.0;
    for (const auto& p : a) {
        int arg = 0;
        const double d = std::sqrt(b_grid.nearest_dist2(p, &arg));
        acc1 += d;
        if (d > 1e-15) grad_b[arg] += (b[arg] - p) / (d * na);
    }
    double acc2 = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        int arg = 0;
        const double d = std::sqrt(a_grid.nearest_dist2(b[i], &arg));
        acc2 += d;
        if (d > 1e-15) grad_b[i] += (b[i] - a[arg]) / (d * nb);
    }
    return acc1 / na + acc2 / nb;
}

// --------------------------------------------------------- ordered distance

namespace {

// Exact value of one ordering; identical accumulation order to the
// enumeration oracle (ascending i).
double od_exact(const std::vector<Vec2>& c, const std::vector<Vec2>& t,
                int shift, bool reversed) {
    const int n = int(c.size());
    double acc = 0.0;
    if (!reversed) {
        for (int i = 0; i < n; ++i) {
            const int o = (i + shift) % n;
            const double dx = c[o].x - t[i].x, dy = c[o].y - t[i].y;
            acc += dx * dx + dy * dy;
        }
    } else {
        for (int i = 0; i < n; ++i) {
            const int o = ((shift - i) % n + n) % n;
            const double dx = c[o].x - t[i].x, dy = c[o].y - t[i].y;
            acc += dx * dx + dy * dy;
        }
    }
    return 2.0 * std::numbers::pi / n * acc;
}

OrderedResult od_direct(const std::vector<Vec2>& c, const std::vector<Vec2>& t) {
    const int n = int(c.size());
    OrderedResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (int s = 0; s < n; ++s) {
        for (int dir = 0; dir < 2; ++dir) {
            const double v = od_exact(c, t, s, dir == 1);
            if (v < best.value) best = {v, s, dir == 1};
        }
    }
    return best;
}

using cvec = std::vector<std::complex<double>>;

} // namespace

struct OrderedDistancePlan::Impl {
    std::vector<Vec2> target;
    double ssq_t = 0.0;
    std::size_t m = 0;      // FFT size (0 = direct mode)
    cvec fft_t;             // FFT of zero-padded target packed tx + i*ty

    explicit Impl(std::vector<Vec2> tgt) : target(std::move(tgt)) {
        const int n = int(target.size());
        for (const auto& p : target) ssq_t += norm2(p);
        if (n <= kDirectOdLimit) return;
        m = detail::next_pow2(2 * std::size_t(n) - 1);
        fft_t.assign(m, {0.0, 0.0});
        for (int i = 0; i < n; ++i) fft_t[i] = {target[i].x, target[i].y};
        detail::fft_inplace(fft_t, false);
    }

    // Approximate od values for every (shift, dir) from one spectrum of the
    // zero-padded coupler. The dot-product cross terms keep the conjugate on
    // the target spectrum in both directions: forward orderings are the
    // correlation (Z[k] conj(T[k])), reversed orderings the convolution with
    // conj target (Z[k] conj(T[-k])); both fold the linear result back over
    // period n. Candidates within a safety band of the approximate minimum
    // are re-evaluated exactly. The exact path shares od_exact with the
    // direct mode, so near-ties resolve identically to full enumeration.
    OrderedResult eval_fft(const std::vector<Vec2>& c) const {
        const int n = int(target.size());
        double ssq_c = 0.0;
        for (const auto& p : c) ssq_c += norm2(p);
        const double scale = 2.0 * std::numbers::pi / n;

        thread_local cvec z, w;
        thread_local std::vector<double> corr_f, conv_r;
        z.assign(m, {0.0, 0.0});
        for (int i = 0; i < n; ++i) z[i] = {c[i].x, c[i].y};
        detail::fft_inplace(z, false);

        w.resize(m);
        corr_f.resize(n);
        conv_r.resize(n);
        const double* zs = reinterpret_cast<const double*>(z.data());
        const double* ts = reinterpret_cast<const double*>(fft_t.data());
        double* ws = reinterpret_cast<double*>(w.data());
        const double inv_m = 1.0 / double(m);

        for (std::size_t i = 0; i < m; ++i) {  // z * conj(fft_t)
            const double ar = zs[2 * i], ai = zs[2 * i + 1];
            const double br = ts[2 * i], bi = ts[2 * i + 1];
            ws[2 * i] = ar * br + ai * bi;
            ws[2 * i + 1] = ai * br - ar * bi;
        }
        detail::fft_inplace(w, true);
        for (int s = 0; s < n; ++s)
            corr_f[s] = (w[s].real() + w[s + m - n].real()) * inv_m;

        for (std::size_t i = 0; i < m; ++i) {  // z * conj(fft_t) index-reversed
            const std::size_t r = (m - i) & (m - 1);
            const double ar = zs[2 * i], ai = zs[2 * i + 1];
            const double br = ts[2 * r], bi = ts[2 * r + 1];
            ws[2 * i] = ar * br + ai * bi;
            ws[2 * i + 1] = ai * br - ar * bi;
        }
        detail::fft_inplace(w, true);
        for (int s = 0; s < n; ++s)
            conv_r[s] = (w[s].real() + w[s + n].real()) * inv_m;

        double approx_min = std::numeric_limits<double>::infinity();
        auto approx = [&](int s, bool rev) {
            const double corr = rev ? conv_r[s] : corr_f[s];
            return scale * (ssq_c + ssq_t - 2.0 * corr);
        };
        for (int s = 0; s < n; ++s) {
            approx_min = std::min(approx_min, approx(s, false));
            approx_min = std::min(approx_min, approx(s, true));
        }
        const double band = 1e-9 * scale * (ssq_c + ssq_t) + 1e-12;

        OrderedResult best;
        best.value = std::numeric_limits<double>::infinity();
        for (int s = 0; s < n; ++s) {
            for (int dir = 0; dir < 2; ++dir) {
                if (approx(s, dir == 1) > approx_min + band) continue;
                const double v = od_exact(c, target, s, dir == 1);
                if (v < best.value) best = {v, s, dir == 1};
            }
        }
        return best;
    }
};

OrderedDistancePlan::OrderedDistancePlan(std::vector<Vec2> target)
    : impl_(std::make_unique<Impl>(std::move(target))) {
    if (impl_->target.empty()) throw EmptySetError("ordered distance over empty target");
}
OrderedDistancePlan::~OrderedDistancePlan() = default;
OrderedDistancePlan::OrderedDistancePlan(OrderedDistancePlan&&) noexcept = default;
OrderedDistancePlan& OrderedDistancePlan::operator=(OrderedDistancePlan&&) noexcept = default;
const std::vector<Vec2>& OrderedDistancePlan::target() const { return impl_->target; }

OrderedResult OrderedDistancePlan::eval(const std::vector<Vec2>& coupler) const {
    if (coupler.size() != impl_->target.size())
        throw LengthMismatchError("ordered distance needs equal point counts");
    if (coupler.empty()) throw EmptySetError("ordered distance over empty sets");
    if (impl_->m == 0) return od_direct(coupler, impl_->target);
    return impl_->eval_fft(coupler);
}

OrderedResult ordered_distance(const std::vector<Vec2>& coupler,
                               const std::vector<Vec2>& target) {
    if (coupler.size() != target.size())
        throw LengthMismatchError("ordered distance needs equal point counts");
    if (coupler.empty()) throw EmptySetError("ordered distance over empty sets");
    if (int(coupler.size()) <= kDirectOdLimit) return od_direct(coupler, target);
    return OrderedDistancePlan(target).eval(coupler);
}

std::vector<Vec2> ordered_gradient(const std::vector<Vec2>& coupler,
                                   const std::vector<Vec2>& target,
                                   const OrderedResult& at) {
    if (coupler.size() != target.size())
        throw LengthMismatchError("ordered gradient needs equal point counts");
    const int n = int(coupler.size());
    const double k = 2.0 * std::numbers::pi / n * 2.0;
    std::vector<Vec2> grad(n, Vec2{0.0, 0.0});
    for (int i = 0; i < n; ++i) {
        const int o = at.reversed ? ((at.shift - i) % n + n) % n : (i + at.shift) % n;
        grad[o] += (coupler[o] - target[i]) * k;
    }
    return grad;
}

CombinedResult combined_objective(const std::vector<Vec2>& coupler,
                                  const std::vector<Vec2>& target,
                                  const ObjectiveWeights& w) {
    CombinedResult res;
    res.ordered = ordered_distance(coupler, target);
    res.chamfer = chamfer_distance(target, coupler);
    res.value = w.w_od * res.ordered.value + w.w_cd * res.chamfer;
    return res;
}

double best_rotation(const std::vector<Vec2>& target,
                     const std::vector<Vec2>& candidate, int n_angles) {
    if (target.empty() || candidate.empty())
        throw EmptySetError("best_rotation over empty point set");
    const NnGrid cand_grid(candidate);
    double best_angle = 0.0;
    double best = std::numeric_limits<double>::infinity();
    std::vector<Vec2> rot(target.size());
    for (int a = 0; a < n_angles; ++a) {
        const double ang = 2.0 * std::numbers::pi * a / n_angles;
        const double cs = std::cos(ang), sn = std::sin(ang);
        for (std::size_t i = 0; i < target.size(); ++i)
            rot[i] = {cs * target[i].x - sn * target[i].y,
                      sn * target[i].x + cs * target[i].y};
        const double d = chamfer_distance(cand_grid, rot);
        if (d < best) {
            best = d;
            best_angle = ang;
        }
    }
    return best_angle;
}

} // namespace linkforge
