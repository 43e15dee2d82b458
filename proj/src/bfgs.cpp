#include "linkforge/bfgs.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "linkforge/errors.hpp"

namespace linkforge {

std::optional<WolfeResult> wolfe_guarded_search(const Eigen::VectorXd& x,
                                                double f0,
                                                const Eigen::VectorXd& g0,
                                                const Eigen::VectorXd& direction,
                                                const EvalFn& eval,
                                                const LineSearchConfig& cfg) {
    const double dg0 = g0.dot(direction);
    if (!(dg0 < 0.0))
        throw std::invalid_argument("wolfe_guarded_search: not a descent direction");
    double alpha = cfg.init_step;
    WolfeResult r;
    for (int t = 0; t < cfg.max_trials; ++t, alpha *= cfg.backtrack) {
        r.trials = t + 1;
        Eigen::VectorXd xt = x + alpha * direction;
        double ft = 0.0;
        Eigen::VectorXd gt;
        if (!eval(xt, ft, gt)) continue;
        if (!(ft <= f0 + cfg.c1 * alpha * dg0)) continue;
        if (!(gt.dot(direction) >= cfg.c2 * dg0)) continue;
        r.step = alpha;
        r.f = ft;
        r.g = std::move(gt);
        return r;
    }
    return std::nullopt;
}

namespace {

struct Search {
    int inst;             // index into the state vector
    Eigen::VectorXd d;    // search direction
    double dg0;           // g.d at the base point
    bool done = false;    // accepted a step
    double step = 0.0;
    double f = 0.0;
    Eigen::VectorXd g;
};

// Runs one shared backtracking schedule for all searches in `ss`, batching
// every trial across instances. Accepted searches drop out of later trials.
void run_round(std::vector<Search>& ss, std::vector<OptState>& st,
               const BatchEvalFn& eval, const LineSearchConfig& cfg) {
    double alpha = cfg.init_step;
    std::vector<int> idx;
    std::vector<Eigen::VectorXd> xs;
    std::vector<double> fs;
    std::vector<Eigen::VectorXd> gs;
    std::vector<std::uint8_t> feas;
    for (int t = 0; t < cfg.max_trials; ++t, alpha *= cfg.backtrack) {
        idx.clear();
        xs.clear();
        std::vector<Search*> live;
        for (auto& s : ss) {
            if (s.done) continue;
            live.push_back(&s);
            idx.push_back(s.inst);
            xs.push_back(st[s.inst].x + alpha * s.d);
        }
        if (live.empty()) return;
        fs.assign(live.size(), 0.0);
        gs.assign(live.size(), Eigen::VectorXd());
        feas.assign(live.size(), 0);
        eval(idx, xs, fs, gs, feas);
        for (std::size_t i = 0; i < live.size(); ++i) {
            Search& s = *live[i];
            const OptState& o = st[s.inst];
            if (!feas[i]) continue;
            if (!(fs[i] <= o.f + cfg.c1 * alpha * s.dg0)) continue;
            if (!(gs[i].dot(s.d) >= cfg.c2 * s.dg0)) continue;
            s.done = true;
            s.step = alpha;
            s.f = fs[i];
            s.g = std::move(gs[i]);
        }
    }
}

void accept(OptState& o, const Search& s, double curvature_eps) {
    Eigen::VectorXd snew = s.step * s.d;
    Eigen::VectorXd y = s.g - o.g;
    o.x += snew;
    o.f = s.f;
    o.g = s.g;
    o.history.push_back(o.f);
    ++o.steps_taken;
    const double sy = snew.dot(y);
    if (sy > curvature_eps) {
        const double rho = 1.0 / sy;
        Eigen::VectorXd Hy = o.H * y;
        // H' = (I - rho s y^T) H (I - rho y s^T) + rho s s^T, expanded to
        // avoid forming the rank-one projectors.
        const double yHy = y.dot(Hy);
        o.H += (rho * rho * yHy + rho) * (snew * snew.transpose());
        Eigen::MatrixXd cross = Hy * snew.transpose();
        o.H -= rho * (cross + cross.transpose());
    }
}

} // namespace

std::vector<OptState> bfgs_optimize_batch(const std::vector<Eigen::VectorXd>& x0,
                                          const BatchEvalFn& eval, int steps,
                                          const BfgsConfig& cfg) {
    const int B = static_cast<int>(x0.size());
    if (B == 0) throw EmptyBatchError("bfgs_optimize_batch: empty batch");
    std::vector<OptState> st(B);
    {
        std::vector<int> idx(B);
        std::vector<Eigen::VectorXd> xs = x0;
        std::vector<double> fs(B, 0.0);
        std::vector<Eigen::VectorXd> gs(B);
        std::vector<std::uint8_t> feas(B, 0);
        for (int b = 0; b < B; ++b) idx[b] = b;
        eval(idx, xs, fs, gs, feas);
        int n_ok = 0;
        for (int b = 0; b < B; ++b) {
            OptState& o = st[b];
            o.x = x0[b];
            o.H = Eigen::MatrixXd::Identity(x0[b].size(), x0[b].size());
            if (!feas[b]) {
                o.failed = true;
                o.feasible_start = false;
                o.f = std::numeric_limits<double>::quiet_NaN();
                o.g = Eigen::VectorXd::Zero(x0[b].size());
                continue;
            }
            ++n_ok;
            o.f = fs[b];
            o.g = std::move(gs[b]);
            o.history.push_back(o.f);
        }
        if (n_ok == 0)
            throw InfeasibleStateError(
                            "bfgs_optimize_batch: no instance is feasible at its start point");
    }

    for (int it = 0; it < steps; ++it) {
        std::vector<Search> round;
        for (int b = 0; b < B; ++b) {
            OptState& o = st[b];
            if (o.failed || o.converged) continue;
            if (o.g.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) {
                o.converged = true;
                continue;
            }
            Search s;
            s.inst = b;
            s.d = -(o.H * o.g);
            s.dg0 = o.g.dot(s.d);
            if (!(s.dg0 < 0.0)) {  // stale curvature produced an ascent direction
                o.H.setIdentity();
                s.d = -o.g;
                s.dg0 = -o.g.squaredNorm();
            }
            round.push_back(std::move(s));
        }
        if (round.empty()) break;
        run_round(round, st, eval, cfg.ls);

        // Failed searches get one steepest-descent retry after an identity
        // reset; failing that too freezes the instance where it stands.
        std::vector<Search> retry;
        for (auto& s : round) {
            if (s.done) {
                accept(st[s.inst], s, cfg.curvature_eps);
                continue;
            }
            OptState& o = st[s.inst];
            o.H.setIdentity();
            Search r;
            r.inst = s.inst;
            r.d = -o.g;
            r.dg0 = -o.g.squaredNorm();
            retry.push_back(std::move(r));
        }
        if (!retry.empty()) {
            run_round(retry, st, eval, cfg.ls);
            for (auto& s : retry) {
                if (s.done)
                    accept(st[s.inst], s, cfg.curvature_eps);
                else
                    st[s.inst].failed = true;
            }
        }
    }
    for (auto& o : st)
        if (!o.failed && !o.converged && o.g.lpNorm<Eigen::Infinity>() <= cfg.grad_tol)
            o.converged = true;
    return st;
}

} // namespace linkforge
