#include "linkforge/objective.hpp"

#include <cmath>
#include <limits>

#include "linkforge/errors.hpp"
#include "linkforge/parallel.hpp"
#include "linkforge/trace_grad.hpp"
#include "solve_kernel.hpp"

namespace linkforge {

struct TraceObjective::Impl {
    std::vector<Mechanism> mechs;
    std::vector<std::vector<Vec2>> targets;
    std::vector<OrderedDistancePlan> plans;
    std::vector<NnGrid> target_grids;
    PaddedBatch batch;
    int T = 0;
    ObjectiveWeights weights;

    void load_positions(int b, const Eigen::VectorXd& x) {
        const int n = batch.n_joints[b];
        for (int j = 0; j < n; ++j) {
            batch.x[batch.at(b, j)] = x[2 * j];
            batch.y[batch.at(b, j)] = x[2 * j + 1];
        }
    }

    // Solves instance b at x into tx/ty ([n*T+t], padded joints included)
    // and extracts the target-joint trace. Returns false when any real joint
    // leaves the feasible set. Rows of real joints are fully written by the
    // solve before anything reads them, so tx/ty are resized, not zeroed.
    bool trace(int b, const Eigen::VectorXd& x, std::vector<double>& tx,
               std::vector<double>& ty, std::vector<Vec2>& coupler) {
        load_positions(b, x);
        tx.resize(std::size_t(batch.N) * T);
        ty.resize(std::size_t(batch.N) * T);
        if (!detail::solve_one(batch, b, T, tx.data(), ty.data())) return false;
        const int tj = batch.target_joint[b];
        coupler.resize(T);
        for (int t = 0; t < T; ++t)
            coupler[t] = {tx[std::size_t(tj) * T + t], ty[std::size_t(tj) * T + t]};
        return true;
    }
};

TraceObjective::TraceObjective(std::vector<Mechanism> mechs,
                               std::vector<std::vector<Vec2>> targets, int T,
                               ObjectiveWeights weights)
    : impl_(std::make_unique<Impl>()) {
    if (mechs.empty()) throw EmptyBatchError("TraceObjective: no candidates");
    if (mechs.size() != targets.size())
        throw LengthMismatchError("TraceObjective: " + std::to_string(mechs.size()) +
                                                 " candidates vs " +
                                                 std::to_string(targets.size()) + " targets");
    if (T < 3) throw LengthMismatchError("TraceObjective: T < 3");
    for (const auto& t : targets)
        if (int(t.size()) != T)
            throw LengthMismatchError(
                            "TraceObjective: target size != T timesteps");
    impl_->mechs = std::move(mechs);
    impl_->targets = std::move(targets);
    impl_->T = T;
    impl_->weights = weights;
    impl_->batch = pad_batch(impl_->mechs);
    impl_->plans.reserve(impl_->targets.size());
    impl_->target_grids.reserve(impl_->targets.size());
    for (const auto& t : impl_->targets) {
        impl_->plans.emplace_back(t);
        impl_->target_grids.emplace_back(t);
    }
}

TraceObjective::~TraceObjective() = default;
TraceObjective::TraceObjective(TraceObjective&&) noexcept = default;
TraceObjective& TraceObjective::operator=(TraceObjective&&) noexcept = default;

int TraceObjective::size() const { return impl_->batch.B; }

int TraceObjective::dim(int b) const { return 2 * impl_->batch.n_joints[b]; }

Eigen::VectorXd TraceObjective::pack(int b) const {
    const auto& m = impl_->mechs[b];
    Eigen::VectorXd x(2 * m.joint_count());
    for (int j = 0; j < m.joint_count(); ++j) {
        x[2 * j] = m.joints[j].pos.x;
        x[2 * j + 1] = m.joints[j].pos.y;
    }
    return x;
}

Mechanism TraceObjective::unpack(int b, const Eigen::VectorXd& x) const {
    Mechanism m = impl_->mechs[b];
    if (x.size() != 2 * m.joint_count())
        throw ShapeMismatchError("unpack: wrong vector length");
    for (int j = 0; j < m.joint_count(); ++j)
        m.joints[j].pos = {x[2 * j], x[2 * j + 1]};
    return m;
}

void TraceObjective::operator()(const std::vector<int>& idx,
                                const std::vector<Eigen::VectorXd>& xs,
                                std::vector<double>& f,
                                std::vector<Eigen::VectorXd>& g,
                                std::vector<std::uint8_t>& feasible) {
    auto& im = *impl_;
    const int T = im.T;
    parallel_for(idx.size(), [&](std::size_t i) {
        const int b = idx[i];
        thread_local std::vector<double> tx, ty, dldx, dldy;
        thread_local std::vector<Vec2> coupler, cham_grad;
        f[i] = std::numeric_limits<double>::quiet_NaN();
        g[i] = Eigen::VectorXd::Zero(dim(b));
        feasible[i] = 0;
        if (!im.trace(b, xs[i], tx, ty, coupler)) return;

        const OrderedResult od = im.plans[b].eval(coupler);
        const double cham = chamfer_value_grad(im.target_grids[b], coupler, cham_grad);
        f[i] = im.weights.w_od * od.value + im.weights.w_cd * cham;
        feasible[i] = 1;

        const std::vector<Vec2> od_grad = ordered_gradient(coupler, im.targets[b], od);
        dldx.assign(std::size_t(im.batch.N) * T, 0.0);
        dldy.assign(std::size_t(im.batch.N) * T, 0.0);
        const int tj = im.batch.target_joint[b];
        for (int t = 0; t < T; ++t) {
            const Vec2 a = od_grad[t] * im.weights.w_od + cham_grad[t] * im.weights.w_cd;
            dldx[std::size_t(tj) * T + t] = a.x;
            dldy[std::size_t(tj) * T + t] = a.y;
        }
        std::vector<double> gx(im.batch.N), gy(im.batch.N);
        detail::backward_one(im.batch, b, T, tx.data(), ty.data(), dldx.data(),
                             dldy.data(), gx.data(), gy.data());
        for (int j = 0; j < im.batch.n_joints[b]; ++j) {
            g[i][2 * j] = gx[j];
            g[i][2 * j + 1] = gy[j];
        }
    });
}

CombinedResult TraceObjective::metrics(int b, const Eigen::VectorXd& x) {
    auto& im = *impl_;
    std::vector<double> tx, ty;
    std::vector<Vec2> coupler;
    if (!im.trace(b, x, tx, ty, coupler))
        throw InfeasibleTraceError("metrics: trace is infeasible");
    CombinedResult r;
    r.ordered = im.plans[b].eval(coupler);
    r.chamfer = chamfer_distance(im.target_grids[b], coupler);
    r.value = im.weights.w_od * r.ordered.value + im.weights.w_cd * r.chamfer;
    return r;
}

} // namespace linkforge
