#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "linkforge/geometry.hpp"

namespace linkforge {

// ------------------------------------------------------------- nearest grid

// Exact nearest-neighbor queries over a fixed point set via a uniform grid
// with ring expansion. Never approximates: a cell is only skipped when its
// bounding box provably cannot beat the current best.
class NnGrid {
public:
    explicit NnGrid(std::vector<Vec2> points);

    // Squared distance to the nearest stored point; *arg (when non-null)
    // receives that point's index.
    double nearest_dist2(Vec2 q, int* arg) const;
    double nearest_dist2(Vec2 q) const { return nearest_dist2(q, nullptr); }
    int size() const { return int(pts_.size()); }
    const std::vector<Vec2>& points() const { return pts_; }

private:
    std::vector<Vec2> pts_;
    std::vector<int> cell_start_;  // CSR over gw_*gh_ cells
    std::vector<int> cell_items_;
    Vec2 lo_{0, 0};
    double h_ = 1.0;  // cell edge
    int gw_ = 1, gh_ = 1;
};

// ----------------------------------------------------------------- chamfer

// Bi-directional Chamfer distance:
//   (1/|A|) sum_a min_b |a-b|  +  (1/|B|) sum_b min_a |b-a|.
// Throws EmptySetError on an empty side.
double chamfer_distance(const std::vector<Vec2>& a, const std::vector<Vec2>& b);

// Same, with the A-side grid prebuilt (A = grid.points()).
double chamfer_distance(const NnGrid& a_grid, const std::vector<Vec2>& b);

// d(chamfer)/d(b points) holding the minimizing correspondences fixed
// (envelope evaluation). Zero-distance matches contribute zero.
std::vector<Vec2> chamfer_gradient(const std::vector<Vec2>& a,
                                   const std::vector<Vec2>& b);

// Value and d/d(b) in one grid-accelerated pass; the value is identical to
// chamfer_distance(a_grid, b).
double chamfer_value_grad(const NnGrid& a_grid, const std::vector<Vec2>& b,
                          std::vector<Vec2>& grad_b);

// ---------------------------------------------------------- ordered distance

// Minimizing ordering over all N cyclic shifts in both directions:
//   forward  o(i) = (i + shift) mod N
//   reversed o(i) = (shift - i) mod N
// value = (2*pi/N) * sum_i |coupler[o(i)] - target[i]|^2, minimized over
// (shift, direction); ties broken by smallest shift, forward first.
struct OrderedResult {
    double value = 0.0;
    int shift = 0;
    bool reversed = false;
};

// Throws LengthMismatchError on unequal sizes, EmptySetError on empty input.
OrderedResult ordered_distance(const std::vector<Vec2>& coupler,
                               const std::vector<Vec2>& target);

// Precomputed target side for repeated evaluations against a fixed target
// (the optimizer's hot path). eval() is const and thread-compatible.
class OrderedDistancePlan {
public:
    explicit OrderedDistancePlan(std::vector<Vec2> target);
    ~OrderedDistancePlan();
    OrderedDistancePlan(OrderedDistancePlan&&) noexcept;
    OrderedDistancePlan& operator=(OrderedDistancePlan&&) noexcept;

    OrderedResult eval(const std::vector<Vec2>& coupler) const;
    const std::vector<Vec2>& target() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// d(value)/d(coupler) at the fixed ordering in `at`:
//   grad[o(i)] = (2*pi/N) * 2 * (coupler[o(i)] - target[i]).
std::vector<Vec2> ordered_gradient(const std::vector<Vec2>& coupler,
                                   const std::vector<Vec2>& target,
                                   const OrderedResult& at);

// ------------------------------------------------------------------ combined

struct ObjectiveWeights {
    double w_od = 1.0;
    double w_cd = 0.25;
};

struct CombinedResult {
    double value = 0.0;
    double chamfer = 0.0;
    OrderedResult ordered;
};

CombinedResult combined_objective(const std::vector<Vec2>& coupler,
                                  const std::vector<Vec2>& target,
                                  const ObjectiveWeights& w = {});

// ------------------------------------------------------------ rotation search

// Angle from {2*pi*a/n_angles} minimizing Chamfer distance between the target
// rotated about the origin and the candidate; ties take the smallest angle.
double best_rotation(const std::vector<Vec2>& target,
                     const std::vector<Vec2>& candidate, int n_angles = 200);

} // namespace linkforge
