#include "linkforge/mechanism.hpp"

#include <algorithm>
#include <cmath>

#include "linkforge/errors.hpp"

namespace linkforge {

namespace {

std::vector<std::vector<int>> adjacency(const Mechanism& m) {
    std::vector<std::vector<int>> adj(m.joint_count());
    for (auto [a, b] : m.linkages) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
    return adj;
}

} // namespace

std::vector<int> compute_solution_order(const Mechanism& m) {
    const int n = m.joint_count();
    if (n < 2) throw UnsolvableError("mechanism needs joints 0 and 1");

    const auto adj = adjacency(m);
    std::vector<char> known(n, 0);
    std::vector<int> order;
    order.reserve(n);

    for (int i = 0; i < n; ++i) {
        if (m.joints[i].is_fixed) {
            known[i] = 1;
            order.push_back(i);
        }
    }
    if (!known[1]) {  // joint 1 is free; actuation determines it
        known[1] = 1;
        order.push_back(1);
    }

    for (;;) {
        int pick = -1;
        for (int i = 0; i < n && pick < 0; ++i) {
            if (known[i] || m.joints[i].is_fixed) continue;
            int known_nbrs = 0;
            for (int u : adj[i]) known_nbrs += known[u];
            if (known_nbrs >= 2) pick = i;  // lowest index wins
        }
        if (pick < 0) break;
        known[pick] = 1;
        order.push_back(pick);
    }

    for (int i = 0; i < n; ++i)
        if (!known[i])
            throw UnsolvableError("joint " + std::to_string(i) +
                                  " cannot be reached by dyadic solving");
    return order;
}

std::vector<SolveStep> solve_plan(const Mechanism& m) {
    const auto order = m.solution_order.empty() ? compute_solution_order(m)
                                                : m.solution_order;
    const auto adj = adjacency(m);
    std::vector<char> known(m.joint_count(), 0);
    std::vector<SolveStep> plan;
    for (int i : order) {
        if (m.joints[i].is_fixed || i == 1) {
            known[i] = 1;
            continue;
        }
        SolveStep st{i, -1, -1};
        for (int u : adj[i]) {  // adj sorted, so j gets the lower known index
            if (!known[u]) continue;
            if (st.nbr_j < 0) st.nbr_j = u;
            else if (st.nbr_k < 0) st.nbr_k = u;
        }
        if (st.nbr_k < 0)
            throw UnsolvableError("joint " + std::to_string(i) +
                                  " lacks two known neighbors in given order");
        known[i] = 1;
        plan.push_back(st);
    }
    return plan;
}

ValidationReport validate(const Mechanism& m) {
    ValidationReport rep;
    auto flag = [&rep](std::string msg) { rep.problems.push_back(std::move(msg)); };

    const int n = m.joint_count();
    if (n < 2) {
        flag("fewer than two joints");
        return rep;
    }
    if (!m.joints[0].is_fixed) flag("joint 0 must be fixed");
    if (m.joints[1].is_fixed) flag("joint 1 must be free");
    if (!m.joints[1].is_actuated) flag("joint 1 must be actuated");
    for (int i = 0; i < n; ++i) {
        if (i != 1 && m.joints[i].is_actuated)
            flag("joint " + std::to_string(i) + " actuated; only joint 1 may be");
        if (m.joints[i].is_target && m.joints[i].is_fixed)
            flag("target joint " + std::to_string(i) + " is fixed");
    }
    int targets = 0;
    for (const auto& j : m.joints) targets += j.is_target;
    if (targets > 1) flag("more than one target joint");

    bool canonical = true;
    for (std::size_t e = 0; e < m.linkages.size(); ++e) {
        auto [a, b] = m.linkages[e];
        if (a < 0 || b < 0 || a >= n || b >= n) {
            flag("linkage index out of range");
            canonical = false;
            continue;
        }
        if (a >= b) {
            flag("linkage endpoints not in lo<hi order");
            canonical = false;
        }
        if (e > 0 && !(m.linkages[e - 1] < m.linkages[e])) {
            flag("linkage list not sorted/unique");
            canonical = false;
        }
    }
    if (!canonical) return rep;

    if (!std::count(m.linkages.begin(), m.linkages.end(), std::pair{0, 1}))
        flag("actuator arm linkage (0,1) missing");

    std::vector<int> degree(n, 0);
    for (auto [a, b] : m.linkages) {
        ++degree[a];
        ++degree[b];
    }
    for (int i = 2; i < n; ++i)
        if (!m.joints[i].is_fixed && degree[i] != 2)
            flag("free joint " + std::to_string(i) + " has degree " +
                 std::to_string(degree[i]) + ", expected 2");

    std::vector<SolveStep> plan;
    if (rep.problems.empty()) {
        try {
            plan = solve_plan(m);
        } catch (const UnsolvableError& e) {
            flag(e.what());
        }
    }

    for (const auto& st : plan) {
        const Vec2 pi = m.joints[st.joint].pos;
        const Vec2 pj = m.joints[st.nbr_j].pos;
        const Vec2 pk = m.joints[st.nbr_k].pos;
        if (std::abs(cross(pk - pj, pi - pj)) <= 1e-9)
            rep.degenerate_triangles.push_back({st.joint, st.nbr_j, st.nbr_k});
    }

    rep.ok = rep.problems.empty() && rep.degenerate_triangles.empty();
    return rep;
}

Mechanism normalize_mechanism(const Mechanism& m) {
    if (m.joint_count() < 2) throw ZeroArmError("mechanism lacks joints 0/1");
    const Vec2 origin = m.joints[0].pos;
    const Vec2 arm = m.joints[1].pos - origin;
    const double len = norm(arm);
    if (len <= 0.0) throw ZeroArmError("actuator arm has zero length");

    const double scale = 0.05 / len;
    const double angle = -std::atan2(arm.y, arm.x);

    Mechanism out = m;
    for (auto& j : out.joints) j.pos = rotate((j.pos - origin) * scale, angle);
    // Pin the canon exactly; rounding noise here would defeat idempotence.
    out.joints[0].pos = {0.0, 0.0};
    out.joints[1].pos = {0.05, 0.0};
    return out;
}

PaddedBatch pad_batch(const std::vector<Mechanism>& mechanisms) {
    if (mechanisms.empty()) throw EmptyBatchError("pad_batch over empty set");

    PaddedBatch batch;
    batch.B = int(mechanisms.size());
    batch.N = 0;
    for (const auto& m : mechanisms) batch.N = std::max(batch.N, m.joint_count());

    const std::size_t total = std::size_t(batch.B) * batch.N;
    batch.x.assign(total, 0.0);
    batch.y.assign(total, 0.0);
    batch.fixed_mask.assign(total, 1);  // padding joints: fixed at origin
    batch.real_mask.assign(total, 0);
    batch.n_joints.resize(batch.B);
    batch.target_joint.resize(batch.B);
    batch.plans.resize(batch.B);

    for (int b = 0; b < batch.B; ++b) {
        const auto& m = mechanisms[b];
        batch.n_joints[b] = m.joint_count();
        batch.target_joint[b] = m.target_joint();
        batch.plans[b] = solve_plan(m);
        for (int i = 0; i < m.joint_count(); ++i) {
            const auto idx = batch.at(b, i);
            batch.x[idx] = m.joints[i].pos.x;
            batch.y[idx] = m.joints[i].pos.y;
            batch.fixed_mask[idx] = m.joints[i].is_fixed ? 1 : 0;
            batch.real_mask[idx] = 1;
        }
    }
    return batch;
}

} // namespace linkforge
