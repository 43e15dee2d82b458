#include "linkforge/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "linkforge/errors.hpp"
#include "linkforge/solver.hpp"

namespace linkforge {

namespace {

constexpr double kLo = -0.3, kHi = 0.3;
// Arms shorter than this survive validation but explode under the 0.05-arm
// normalization; resample instead of keeping them.
constexpr double kMinArm = 0.02;
constexpr int kPlacementTries = 30;

Vec2 sample_pos(Rng& rng) { return {rng.uniform(kLo, kHi), rng.uniform(kLo, kHi)}; }

// One build attempt; empty joints on failure.
Mechanism attempt(const GeneratorConfig& cfg, Rng& rng) {
    const int n_target = rng.uniform_int(4, cfg.n_joints_max);
    const int T = cfg.sim_timesteps;

    Mechanism m;
    m.joints.push_back({sample_pos(rng), true, false, false});
    Vec2 p1 = sample_pos(rng);
    for (int tries = 0; dist(p1, m.joints[0].pos) < kMinArm; ++tries) {
        if (tries >= kPlacementTries) return {};
        p1 = sample_pos(rng);
    }
    m.joints.push_back({p1, false, true, false});
    m.linkages.emplace_back(0, 1);

    // Cached full-rotation traces of every joint built so far; lets each new
    // dyad be feasibility-checked in O(T) without resolving the whole chain.
    std::vector<std::vector<Vec2>> traces;
    traces.push_back(std::vector<Vec2>(T, m.joints[0].pos));
    {
        std::vector<Vec2> c(T);
        const Vec2 p0 = m.joints[0].pos;
        const double arm = dist(p0, p1);
        const double phase = std::atan2(p1.y - p0.y, p1.x - p0.x);
        for (int t = 0; t < T; ++t) {
            const double th = phase + 2.0 * std::numbers::pi * t / T;
            c[t] = {p0.x + arm * std::cos(th), p0.y + arm * std::sin(th)};
        }
        c[0] = p1;
        traces.push_back(std::move(c));
    }

    int last_free = -1;
    while (m.joint_count() < n_target) {
        const bool last_slot = m.joint_count() + 1 == n_target;
        const bool add_fixed = (last_slot && last_free < 0) ? false : rng.bernoulli(0.25);

        if (add_fixed) {
            const Vec2 p = sample_pos(rng);
            m.joints.push_back({p, true, false, false});
            traces.push_back(std::vector<Vec2>(T, p));
            continue;
        }

        const int a = int(rng.uniform_index(m.joint_count()));
        int b = int(rng.uniform_index(m.joint_count() - 1));
        if (b >= a) ++b;
        const int j = std::min(a, b), k = std::max(a, b);

        bool placed = false;
        for (int tries = 0; tries < kPlacementTries && !placed; ++tries) {
            const Vec2 p = sample_pos(rng);
            const Vec2 pj = m.joints[j].pos, pk = m.joints[k].pos;
            if (dist(p, pj) < kMinArm || dist(p, pk) < kMinArm) continue;
            if (std::abs(cross(pk - pj, p - pj)) <= 1e-6) continue;

            const double lij = dist(p, pj), lik = dist(p, pk);
            const double sigma = cross(pk - pj, p - pj) >= 0.0 ? 1.0 : -1.0;
            std::vector<Vec2> c(T);
            bool feasible = true;
            for (int t = 0; t < T && feasible; ++t) {
                try {
                    c[t] = solve_joint(traces[j][t], traces[k][t], lij, lik, sigma);
                } catch (const SingularError&) {
                    feasible = false;
                }
            }
            if (!feasible) continue;

            last_free = m.joint_count();
            m.joints.push_back({p, false, false, false});
            m.linkages.emplace_back(j, last_free);
            m.linkages.emplace_back(k, last_free);
            traces.push_back(std::move(c));
            placed = true;
        }
        if (!placed) return {};
    }
    if (last_free < 0) return {};

    // A target that barely moves makes a degenerate training curve.
    {
        double lo_x = traces[last_free][0].x, hi_x = lo_x;
        double lo_y = traces[last_free][0].y, hi_y = lo_y;
        for (const Vec2 p : traces[last_free]) {
            lo_x = std::min(lo_x, p.x);
            hi_x = std::max(hi_x, p.x);
            lo_y = std::min(lo_y, p.y);
            hi_y = std::max(hi_y, p.y);
        }
        if (std::max(hi_x - lo_x, hi_y - lo_y) < 1e-3) return {};
    }

    // Drop fixed joints that never got a linkage; remap indices.
    std::vector<int> degree(m.joint_count(), 0);
    for (auto [u, v] : m.linkages) {
        ++degree[u];
        ++degree[v];
    }
    std::vector<int> remap(m.joint_count(), -1);
    Mechanism out;
    for (int i = 0; i < m.joint_count(); ++i) {
        if (m.joints[i].is_fixed && degree[i] == 0) continue;
        remap[i] = out.joint_count();
        out.joints.push_back(m.joints[i]);
    }
    for (auto [u, v] : m.linkages) {
        const int a2 = remap[u], b2 = remap[v];
        out.linkages.emplace_back(std::min(a2, b2), std::max(a2, b2));
    }
    std::sort(out.linkages.begin(), out.linkages.end());
    out.joints[remap[last_free]].is_target = true;
    if (out.joint_count() < 4) return {};
    return out;
}

} // namespace

Mechanism generate_random(const GeneratorConfig& cfg, Rng& rng) {
    if (cfg.n_joints_max < 4)
        throw GenerationExhaustedError("n_joints_max must be >= 4");
    for (int att = 0; att < cfg.retry_budget; ++att) {
        Mechanism m = attempt(cfg, rng);
        if (m.joints.empty()) continue;
        if (!validate(m).ok) continue;
        if (!solve_mechanism(m, cfg.sim_timesteps).feasible[0]) continue;
        m.solution_order = compute_solution_order(m);
        return m;
    }
    throw GenerationExhaustedError("generator retry budget exhausted");
}

} // namespace linkforge
