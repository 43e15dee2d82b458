#include "linkforge/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>

#include "linkforge/checkpoint.hpp"
#include "linkforge/collision.hpp"
#include "linkforge/errors.hpp"
#include "linkforge/generator.hpp"
#include "linkforge/io.hpp"
#include "linkforge/objective.hpp"
#include "linkforge/parallel.hpp"
#include "linkforge/solver.hpp"

namespace linkforge {

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

// Zero-mean / unit-scale statistics matching normalize_curve.
struct CurveStats {
    Vec2 mean{0.0, 0.0};
    double scale = 0.0;
};

CurveStats curve_stats(const Curve& c) {
    CurveStats st;
    const int n = c.size();
    if (n == 0) return st;
    for (Vec2 p : c.points) st.mean += p;
    st.mean = st.mean * (1.0 / n);
    double acc = 0.0;
    const int last = c.closed ? n : n - 1;
    for (int i = 0; i < last; ++i) acc += dist2(c.points[i], c.points[(i + 1) % n]);
    st.scale = std::sqrt(acc / n);
    return st;
}

struct Candidate {
    std::uint64_t id = 0;
    Mechanism mech;       // similarity-transformed so its trace is normalized
    double rotation = 0.0;
    bool alive = false;
};

} // namespace

const DatasetItem& PipelineContext::item(std::uint64_t id) const {
    auto it = by_id.find(id);
    if (it == by_id.end())
        throw IoError("index id " + std::to_string(id) + " not present in dataset");
    return dataset[it->second];
}

PipelineContext load_pipeline_context(const std::string& index_path,
                                      const std::string& checkpoint_path,
                                      const std::string& dataset_path) {
    PipelineContext ctx{Model(Model::from_checkpoint(load_checkpoint(checkpoint_path))),
                        EmbeddingIndex::load(index_path),
                        load_dataset(dataset_path),
                        {}};
    const std::uint64_t fp = checkpoint_fingerprint(checkpoint_path);
    if (ctx.index.fingerprint() != fp)
        throw CheckpointMismatchError("index was built from a different checkpoint");
    ctx.by_id.reserve(ctx.dataset.size());
    for (std::size_t i = 0; i < ctx.dataset.size(); ++i) ctx.by_id[ctx.dataset[i].id] = i;
    return ctx;
}

std::vector<DatasetItem> build_dataset(int count, int max_joints, std::uint64_t seed) {
    GeneratorConfig gc;
    gc.n_joints_max = max_joints;
    std::vector<DatasetItem> items(std::size_t(std::max(count, 0)));
    parallel_for(items.size(), [&](std::size_t i) {
        // Stream keyed by (seed, i, attempt): batching- and thread-independent.
        for (std::uint64_t attempt = 0;; ++attempt) {
            Rng rng(mix_seed(mix_seed(seed, i), attempt));
            try {
                Mechanism m = normalize_mechanism(generate_random(gc, rng));
                Curve c = normalize_curve(coupler_curve(m, gc.sim_timesteps, 200));
                items[i] = {std::uint64_t(i), std::move(m), std::move(c)};
                return;
            } catch (const GenerationExhaustedError&) {
            } catch (const InfeasibleTraceError&) {
            } catch (const DegenerateCurveError&) {
            }
        }
    });
    return items;
}

EmbeddingIndex build_index(Model& model, const std::vector<DatasetItem>& dataset,
                           std::uint64_t checkpoint_fingerprint) {
    std::vector<Mechanism> mechs;
    mechs.reserve(dataset.size());
    for (const DatasetItem& it : dataset) mechs.push_back(it.mech);
    const Eigen::MatrixXd emb = model.embed_mechanisms(mechs);

    EmbeddingIndex index(int(emb.cols()), checkpoint_fingerprint);
    for (std::size_t i = 0; i < dataset.size(); ++i)
        index.add(dataset[i].id, std::uint32_t(dataset[i].mech.joint_count()),
                  emb.row(Eigen::Index(i)).transpose());
    return index;
}

Eigen::RowVectorXd query_embedding(Model& model, const Curve& target, int smoothing_freqs) {
    const int P = model.full_encoder.config().points;
    Curve q = resample_equidistant(target, P);
    if (target.closed && smoothing_freqs > 0) q = fft_smooth(q, smoothing_freqs);
    q = normalize_curve(q);
    CurveEncoder& enc = target.closed ? model.full_encoder : model.partial_encoder;
    return model.embed_curves(enc, {q}).row(0);
}

SolutionSet synthesize(const Curve& target, PipelineContext& ctx, const PipelineConfig& cfg) {
    if (target.size() < 3) throw DegenerateCurveError("target needs at least 3 points");

    SolutionSet out;
    const double t_start = now_seconds();

    const int P = ctx.model.full_encoder.config().points;
    const Curve t_enc = normalize_curve(resample_equidistant(target, P));
    const Curve t_opt = normalize_curve(resample_equidistant(target, cfg.solver_T));
    const Curve t_eval = normalize_curve(resample_equidistant(target, cfg.eval_points));

    // Retrieval.
    double t0 = now_seconds();
    const Eigen::RowVectorXd emb = query_embedding(ctx.model, target, cfg.smoothing_freqs);
    out.timings.embed = now_seconds() - t0;

    t0 = now_seconds();
    const auto hits = ctx.index.query(emb.transpose(), cfg.n_retrieve, cfg.max_joints);
    out.timings.retrieve = now_seconds() - t0;

    // Stage 1: rescale every candidate so its trace is zero-mean/unit-scale
    // like the normalized target, then pick the target rotation per candidate.
    t0 = now_seconds();
    std::vector<Candidate> cands(hits.size());
    {
        std::vector<Mechanism> mechs;
        mechs.reserve(hits.size());
        for (const auto& h : hits) mechs.push_back(ctx.item(h.id).mech);
        const TraceBatch traces = solve_batch(pad_batch(mechs), cfg.solver_T);

        parallel_for(hits.size(), [&](std::size_t i) {
            Candidate& c = cands[i];
            c.id = hits[i].id;
            if (!traces.feasible[i]) return;
            Curve raw;
            raw.closed = true;
            raw.points = joint_trace(traces, int(i), mechs[i].target_joint());
            Curve c200;
            try {
                c200 = resample_equidistant(raw, P);
            } catch (const DegenerateCurveError&) {
                return;
            }
            const CurveStats st = curve_stats(c200);
            if (!(st.scale > 0.0) || !std::isfinite(st.scale)) return;
            c.mech = mechs[i];
            for (Joint& j : c.mech.joints) j.pos = (j.pos - st.mean) * (1.0 / st.scale);
            for (Vec2& p : c200.points) p = (p - st.mean) * (1.0 / st.scale);
            c.rotation = best_rotation(t_enc.points, c200.points, cfg.rotation_angles);
            c.alive = true;
        });
    }

    std::vector<Candidate> stage2;
    for (auto& c : cands)
        if (c.alive) stage2.push_back(std::move(c));
    if (stage2.empty()) {
        out.timings.total = now_seconds() - t_start;
        return out;
    }

    // Stage 2: short batched refinement on every retrieved candidate.
    auto make_objective = [&](const std::vector<Candidate>& cs) {
        std::vector<Mechanism> mechs;
        std::vector<std::vector<Vec2>> targets;
        mechs.reserve(cs.size());
        targets.reserve(cs.size());
        for (const auto& c : cs) {
            mechs.push_back(c.mech);
            targets.push_back(rotate_curve(t_opt, c.rotation).points);
        }
        return TraceObjective(std::move(mechs), std::move(targets), cfg.solver_T, cfg.weights);
    };

    TraceObjective obj2 = make_objective(stage2);
    std::vector<Eigen::VectorXd> x0;
    x0.reserve(stage2.size());
    for (int b = 0; b < obj2.size(); ++b) x0.push_back(obj2.pack(b));
    std::vector<OptState> st2 = bfgs_optimize_batch(x0, std::ref(obj2), cfg.stage2_steps, cfg.bfgs);
    out.timings.stage2 = now_seconds() - t0;

    // Keep the best slice by final objective; non-finite results rank last.
    t0 = now_seconds();
    std::vector<int> order;
    for (int b = 0; b < int(st2.size()); ++b)
        if (st2[b].feasible_start && std::isfinite(st2[b].f)) order.push_back(b);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (st2[a].f != st2[b].f) return st2[a].f < st2[b].f;
        return a < b;
    });
    const int keep = std::max(1, int(std::lround(double(stage2.size()) * cfg.keep_fraction)));
    if (int(order.size()) > keep) order.resize(keep);

    std::vector<Candidate> stage3;
    stage3.reserve(order.size());
    for (int b : order) {
        Candidate c = std::move(stage2[b]);
        c.mech = obj2.unpack(b, st2[b].x);
        stage3.push_back(std::move(c));
    }
    if (stage3.empty()) {
        out.timings.total = now_seconds() - t_start;
        return out;
    }

    // Re-align survivors, keeping a new rotation only when it helps.
    {
        std::vector<Mechanism> mechs;
        mechs.reserve(stage3.size());
        for (const auto& c : stage3) mechs.push_back(c.mech);
        const TraceBatch traces = solve_batch(pad_batch(mechs), cfg.solver_T);
        parallel_for(stage3.size(), [&](std::size_t i) {
            if (!traces.feasible[i]) return;
            std::vector<Vec2> path = joint_trace(traces, int(i), mechs[i].target_joint());
            Curve raw;
            raw.closed = true;
            raw.points = path;
            Curve c200;
            try {
                c200 = resample_equidistant(raw, P);
            } catch (const DegenerateCurveError&) {
                return;
            }
            const double rot_new = best_rotation(t_enc.points, c200.points, cfg.rotation_angles);
            if (rot_new == stage3[i].rotation) return;
            const double f_old =
                combined_objective(path, rotate_curve(t_opt, stage3[i].rotation).points,
                                   cfg.weights)
                    .value;
            const double f_new =
                combined_objective(path, rotate_curve(t_opt, rot_new).points, cfg.weights).value;
            if (f_new < f_old) stage3[i].rotation = rot_new;
        });
    }

    // Stage 3: long refinement on the survivors.
    TraceObjective obj3 = make_objective(stage3);
    x0.clear();
    for (int b = 0; b < obj3.size(); ++b) x0.push_back(obj3.pack(b));
    std::vector<OptState> st3 = bfgs_optimize_batch(x0, std::ref(obj3), cfg.stage3_steps, cfg.bfgs);
    out.timings.stage3 = now_seconds() - t0;

    // Final evaluation at eval_points equidistant samples.
    t0 = now_seconds();
    std::vector<Solution> sols;
    {
        std::vector<Mechanism> mechs;
        mechs.reserve(stage3.size());
        for (int b = 0; b < obj3.size(); ++b) mechs.push_back(obj3.unpack(b, st3[b].x));
        const TraceBatch traces = solve_batch(pad_batch(mechs), cfg.solver_T);

        std::vector<Solution> slots(stage3.size());
        std::vector<std::uint8_t> ok(stage3.size(), 0);
        parallel_for(stage3.size(), [&](std::size_t i) {
            if (!st3[i].feasible_start || !traces.feasible[i]) return;
            if (!validate(mechs[i]).ok) return;
            Curve raw;
            raw.closed = true;
            raw.points = joint_trace(traces, int(i), mechs[i].target_joint());
            Solution& s = slots[i];
            try {
                s.traced = resample_equidistant(raw, cfg.eval_points);
            } catch (const DegenerateCurveError&) {
                return;
            }
            const Curve rt = rotate_curve(t_eval, stage3[i].rotation);
            CombinedResult m = combined_objective(s.traced.points, rt.points, cfg.weights);
            if (!std::isfinite(m.value)) return;
            s.source_id = stage3[i].id;
            s.mechanism = mechs[i];
            s.metrics = m;
            s.rotation = stage3[i].rotation;
            ok[i] = 1;
        });
        for (std::size_t i = 0; i < slots.size(); ++i)
            if (ok[i]) sols.push_back(std::move(slots[i]));
    }
    std::sort(sols.begin(), sols.end(), [](const Solution& a, const Solution& b) {
        if (a.metrics.value != b.metrics.value) return a.metrics.value < b.metrics.value;
        return a.source_id < b.source_id;
    });
    out.timings.evaluate = now_seconds() - t0;

    // Manufacturability: walk best-first, keep from the first candidate whose
    // layer program is feasible; better-performing but unbuildable candidates
    // are dropped so the returned best is always buildable.
    if (cfg.manufacturable) {
        t0 = now_seconds();
        std::size_t first_ok = sols.size();
        LayerAssignment best_layers;
        for (std::size_t i = 0; i < sols.size(); ++i) {
            const TraceBatch tb = solve_mechanism(sols[i].mechanism, cfg.solver_T);
            if (!tb.feasible[0]) continue;
            const CollisionSets sets = detect_collisions(sols[i].mechanism, tb, 0);
            LayerAssignment la = assign_layers(sets, int(sols[i].mechanism.linkages.size()));
            if (la.feasible) {
                first_ok = i;
                best_layers = std::move(la);
                break;
            }
        }
        if (first_ok == sols.size()) {
            sols.clear();
        } else {
            sols.erase(sols.begin(), sols.begin() + long(first_ok));
            sols.front().has_layers = true;
            sols.front().layers = std::move(best_layers);
        }
        out.timings.layers = now_seconds() - t0;
    }

    out.solutions = std::move(sols);
    out.timings.total = now_seconds() - t_start;
    return out;
}

BenchmarkReport evaluate_benchmark(const std::string& curve_dir, PipelineContext& ctx,
                                   const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(curve_dir, ec)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = entry.path().extension().string();
        if (ext == ".csv" || ext == ".json") files.push_back(entry.path());
    }
    if (ec) throw IoError("cannot read directory " + curve_dir);
    std::sort(files.begin(), files.end());

    BenchmarkReport rep;
    for (const fs::path& f : files) {
        const std::string name = f.filename().string();
        try {
            const Curve target = f.extension() == ".json" ? load_curve_json(f.string())
                                                          : load_curve_csv(f.string(), true);
            const double t0 = now_seconds();
            const SolutionSet ss = synthesize(target, ctx, cfg);
            const double dt = now_seconds() - t0;
            if (ss.solutions.empty()) {
                std::cerr << "warning: no feasible solution for " << name << "\n";
                rep.skipped.push_back(name);
                continue;
            }
            const Solution& best = ss.solutions.front();
            rep.rows.push_back(
                {name, best.metrics.chamfer, best.metrics.ordered.value, best.metrics.value, dt});
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping " << name << ": " << e.what() << "\n";
            rep.skipped.push_back(name);
        }
    }
    if (rep.rows.empty()) throw EmptySetError("benchmark evaluated no curves");

    const double n = double(rep.rows.size());
    double sc = 0, so = 0, st = 0;
    for (const auto& r : rep.rows) {
        sc += r.chamfer;
        so += r.ordered;
        st += r.seconds;
    }
    rep.mean_chamfer = sc / n;
    rep.mean_ordered = so / n;
    rep.mean_seconds = st / n;
    double vc = 0, vo = 0;
    for (const auto& r : rep.rows) {
        vc += (r.chamfer - rep.mean_chamfer) * (r.chamfer - rep.mean_chamfer);
        vo += (r.ordered - rep.mean_ordered) * (r.ordered - rep.mean_ordered);
    }
    rep.std_chamfer = std::sqrt(vc / n);
    rep.std_ordered = std::sqrt(vo / n);
    return rep;
}

} // namespace linkforge
