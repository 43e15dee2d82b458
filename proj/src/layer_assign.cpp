#include "linkforge/layer_assign.hpp"

#include <algorithm>
#include <climits>
#include <numeric>
#include <sstream>

namespace linkforge {

namespace {

// A non-grounded joint whose colliding list actually constrains layers.
struct ClearanceJoint {
    int joint;
    std::vector<int> attached;
    std::vector<int> colliding;
};

std::vector<ClearanceJoint> clearance_joints(const CollisionSets& sets, int L) {
    const int J = sets.joint_count();
    std::vector<char> grounded(J, 0);
    for (int g : sets.grounded)
        if (g >= 0 && g < J) grounded[g] = 1;

    std::vector<ClearanceJoint> out;
    for (int j = 0; j < J; ++j) {
        if (grounded[j] || sets.colliding[j].empty()) continue;
        ClearanceJoint cj;
        cj.joint = j;
        for (int a : sets.attached[j])
            if (a >= 0 && a < L) cj.attached.push_back(a);
        for (int c : sets.colliding[j])
            if (c >= 0 && c < L) cj.colliding.push_back(c);
        if (cj.colliding.empty()) continue;
        out.push_back(std::move(cj));
    }
    return out;
}

// Depth-first search over integer layers with interval propagation. The
// attached-layer interval of a joint only grows as links get assigned, so a
// colliding link inside the partial interval is already a proven violation.
struct Searcher {
    int L = 0;
    int max_layer = 0;
    const std::vector<std::vector<int>>* overlap = nullptr;
    const std::vector<ClearanceJoint>* joints = nullptr;
    std::vector<std::vector<int>> att_of, col_of; // link -> clearance-joint slots
    std::vector<int> order;
    std::vector<int> z;
    std::vector<int> lo, hi;

    bool admissible(int i, int val) const {
        if (i < int(overlap->size()))
            for (int k : (*overlap)[i])
                if (k >= 0 && k < L && z[k] == val) return false;
        for (int j : col_of[i])
            if (lo[j] <= val && val <= hi[j]) return false;
        for (int j : att_of[i]) {
            const int nlo = std::min(lo[j], val);
            const int nhi = std::max(hi[j], val);
            for (int c : (*joints)[j].colliding)
                if (z[c] >= 0 && nlo <= z[c] && z[c] <= nhi) return false;
        }
        return true;
    }

    bool dfs(std::size_t pos) {
        if (pos == order.size()) return true;
        const int i = order[pos];
        for (int val = 0; val <= max_layer; ++val) {
            if (!admissible(i, val)) continue;
            z[i] = val;
            std::vector<std::pair<int, std::pair<int, int>>> saved;
            for (int j : att_of[i]) {
                saved.push_back({j, {lo[j], hi[j]}});
                lo[j] = std::min(lo[j], val);
                hi[j] = std::max(hi[j], val);
            }
            if (dfs(pos + 1)) return true;
            for (const auto& s : saved) {
                lo[s.first] = s.second.first;
                hi[s.first] = s.second.second;
            }
            z[i] = -1;
        }
        return false;
    }
};

} // namespace

LayerAssignment assign_layers(const CollisionSets& sets, int linkage_count) {
    const int L = linkage_count;
    const int J = sets.joint_count();

    LayerAssignment res;
    res.u.assign(J, 0);
    res.v.assign(J, 0);
    if (L == 0) {
        res.feasible = true;
        return res;
    }

    const auto joints = clearance_joints(sets, L);

    Searcher s;
    s.L = L;
    s.overlap = &sets.overlap;
    s.joints = &joints;
    s.att_of.resize(L);
    s.col_of.resize(L);
    for (int j = 0; j < int(joints.size()); ++j) {
        for (int a : joints[j].attached) s.att_of[a].push_back(j);
        for (int c : joints[j].colliding) s.col_of[c].push_back(j);
    }

    // Most-constrained first; index ascending breaks ties so the search (and
    // therefore the returned optimum) is deterministic.
    std::vector<int> deg(L, 0);
    for (int i = 0; i < std::min<int>(L, int(sets.overlap.size())); ++i)
        for (int k : sets.overlap[i])
            if (k >= 0 && k < L) ++deg[i];
    for (int i = 0; i < L; ++i) deg[i] += int(s.att_of[i].size()) + int(s.col_of[i].size());
    s.order.resize(L);
    std::iota(s.order.begin(), s.order.end(), 0);
    std::sort(s.order.begin(), s.order.end(), [&](int a, int b) {
        if (deg[a] != deg[b]) return deg[a] > deg[b];
        return a < b;
    });

    // Any feasible assignment compresses onto layers {0..L-1} without breaking
    // a constraint (relative order of used layers is all that matters), so the
    // optimum, when one exists, is found before max_layer reaches L.
    for (int m = 0; m < L; ++m) {
        s.max_layer = m;
        s.z.assign(L, -1);
        s.lo.assign(joints.size(), INT_MAX);
        s.hi.assign(joints.size(), INT_MIN);
        if (!s.dfs(0)) continue;

        res.z = s.z;
        res.M = *std::max_element(res.z.begin(), res.z.end());
        for (int j = 0; j < J; ++j) {
            int ulo = INT_MAX, uhi = INT_MIN;
            for (int a : sets.attached[j])
                if (a >= 0 && a < L) {
                    ulo = std::min(ulo, res.z[a]);
                    uhi = std::max(uhi, res.z[a]);
                }
            res.u[j] = ulo <= uhi ? ulo : 0;
            res.v[j] = ulo <= uhi ? uhi : 0;
        }
        res.feasible = true;
        return res;
    }
    res.feasible = false;
    return res;
}

std::string export_lp(const CollisionSets& sets, int linkage_count) {
    const int L = linkage_count;
    const int N = 2 * L;
    std::ostringstream os;
    os << "Minimize\n obj: M\nSubject To\n";

    for (int i = 0; i < L; ++i)
        os << " max_" << i << ": M - z_" << i << " >= 0\n";

    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < std::min<int>(L, int(sets.overlap.size())); ++i)
        for (int k : sets.overlap[i])
            if (k > i && k < L) pairs.push_back({i, k});
    for (const auto& [i, k] : pairs) {
        os << " ord1_" << i << "_" << k << ": z_" << i << " - z_" << k << " + " << N << " x_" << i
           << "_" << k << " >= 1\n";
        os << " ord2_" << i << "_" << k << ": z_" << k << " - z_" << i << " - " << N << " x_" << i
           << "_" << k << " >= " << (1 - N) << "\n";
    }

    const auto joints = clearance_joints(sets, L);
    for (const auto& cj : joints) {
        for (int a : cj.attached) {
            os << " att1_" << cj.joint << "_" << a << ": z_" << a << " - u_" << cj.joint
               << " >= 0\n";
            os << " att2_" << cj.joint << "_" << a << ": v_" << cj.joint << " - z_" << a
               << " >= 0\n";
        }
        for (int c : cj.colliding) {
            os << " cl1_" << cj.joint << "_" << c << ": z_" << c << " - v_" << cj.joint << " + "
               << N << " y_" << cj.joint << "_" << c << " >= 1\n";
            os << " cl2_" << cj.joint << "_" << c << ": u_" << cj.joint << " - z_" << c << " - "
               << N << " y_" << cj.joint << "_" << c << " >= " << (1 - N) << "\n";
        }
    }

    os << "Bounds\n";
    if (L == 0) {
        os << " M = 0\n";
    } else {
        for (int i = 0; i < L; ++i) os << " 0 <= z_" << i << " <= " << L - 1 << "\n";
        for (const auto& cj : joints) {
            os << " 0 <= u_" << cj.joint << " <= " << L - 1 << "\n";
            os << " 0 <= v_" << cj.joint << " <= " << L - 1 << "\n";
        }
        os << " 0 <= M <= " << L - 1 << "\n";
    }

    bool any_bin = !pairs.empty();
    for (const auto& cj : joints) any_bin = any_bin || !cj.colliding.empty();
    if (any_bin) {
        os << "Binaries\n";
        for (const auto& [i, k] : pairs) os << " x_" << i << "_" << k << "\n";
        for (const auto& cj : joints)
            for (int c : cj.colliding) os << " y_" << cj.joint << "_" << c << "\n";
    }

    os << "Generals\n";
    for (int i = 0; i < L; ++i) os << " z_" << i << "\n";
    for (const auto& cj : joints) os << " u_" << cj.joint << "\n v_" << cj.joint << "\n";
    os << " M\nEnd\n";
    return os.str();
}

bool check_assignment(const CollisionSets& sets, const std::vector<int>& z) {
    const int L = int(z.size());
    for (int val : z)
        if (val < 0 || val > L - 1) return false;

    for (int i = 0; i < std::min<int>(L, int(sets.overlap.size())); ++i)
        for (int k : sets.overlap[i])
            if (k >= 0 && k < L && k != i && z[i] == z[k]) return false;

    const int J = sets.joint_count();
    std::vector<char> grounded(J, 0);
    for (int g : sets.grounded)
        if (g >= 0 && g < J) grounded[g] = 1;

    for (int j = 0; j < J; ++j) {
        if (grounded[j] || sets.colliding[j].empty()) continue;
        int lo = INT_MAX, hi = INT_MIN;
        for (int a : sets.attached[j])
            if (a >= 0 && a < L) {
                lo = std::min(lo, z[a]);
                hi = std::max(hi, z[a]);
            }
        if (lo > hi) continue;
        for (int c : sets.colliding[j])
            if (c >= 0 && c < L && z[c] >= lo && z[c] <= hi) return false;
    }
    return true;
}

} // namespace linkforge
