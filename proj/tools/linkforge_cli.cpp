#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "linkforge/checkpoint.hpp"
#include "linkforge/collision.hpp"
#include "linkforge/errors.hpp"
#include "linkforge/generator.hpp"
#include "linkforge/io.hpp"
#include "linkforge/layer_assign.hpp"
#include "linkforge/pipeline.hpp"
#include "linkforge/solver.hpp"
#include "linkforge/train.hpp"

namespace fs = std::filesystem;
using namespace linkforge;

namespace {

struct GenArgs {
    int count = 1000;
    int max_joints = 20;
    std::uint64_t seed = 0;
    std::string out;
};

int run_gen(const GenArgs& a) {
    auto items = build_dataset(a.count, a.max_joints, a.seed);
    save_dataset(a.out, items);
    std::cout << "wrote " << items.size() << " mechanisms to " << a.out << "\n";
    return 0;
}

struct TrainArgs {
    std::string data;
    std::string config;
    std::string checkpoint_out;
    int epochs = -1; // -1: keep config/default value
};

TrainConfig read_train_config(const std::string& path) {
    TrainConfig cfg;
    if (path.empty()) return cfg;
    ordered_json j = ordered_json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded()) throw IoError("malformed config JSON: " + path);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.beta1 = j.value("beta1", cfg.beta1);
    cfg.beta2 = j.value("beta2", cfg.beta2);
    cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
    cfg.gamma = j.value("gamma", cfg.gamma);
    cfg.symmetric = j.value("symmetric", cfg.symmetric);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.val_count = j.value("val_count", cfg.val_count);
    cfg.tau_init = j.value("tau_init", cfg.tau_init);
    return cfg;
}

int run_train(const TrainArgs& a) {
    auto data = load_dataset(a.data);
    TrainConfig cfg = read_train_config(a.config);
    if (a.epochs >= 0) cfg.epochs = a.epochs;
    cfg.on_epoch = [&](int epoch, const EpochStats& st) {
        std::printf("epoch %3d/%d  train %.4f (c1 %.4f c2 %.4f)", epoch + 1, cfg.epochs,
                    st.train_total, st.train_clip1, st.train_clip2);
        if (cfg.val_count > 0)
            std::printf("  val %.4f (c1 %.4f c2 %.4f)", st.val_total, st.val_clip1, st.val_clip2);
        std::printf("\n");
        std::fflush(stdout);
    };
    TrainOutput out = train_model(data, cfg);
    save_checkpoint(a.checkpoint_out, out.model.to_checkpoint(cfg.seed));
    std::cout << "checkpoint " << a.checkpoint_out << " fingerprint "
              << checkpoint_fingerprint(a.checkpoint_out) << "\n";
    return 0;
}

struct IndexArgs {
    std::string data, checkpoint, out;
};

int run_index(const IndexArgs& a) {
    auto data = load_dataset(a.data);
    Model model = Model::from_checkpoint(load_checkpoint(a.checkpoint));
    EmbeddingIndex index = build_index(model, data, checkpoint_fingerprint(a.checkpoint));
    index.save(a.out);
    std::cout << "indexed " << index.size() << " mechanisms (dim " << index.dim() << ") to "
              << a.out << "\n";
    return 0;
}

struct SynthArgs {
    std::string target, index, checkpoint, data, out;
    int max_joints = 20;
    bool manufacturable = false;
    bool svg = false;
    bool open = false;
};

Curve load_target(const std::string& path, bool open) {
    if (fs::path(path).extension() == ".json") return load_curve_json(path);
    return load_curve_csv(path, !open);
}

int run_synth(const SynthArgs& a) {
    PipelineContext ctx = load_pipeline_context(a.index, a.checkpoint, a.data);
    PipelineConfig cfg;
    cfg.max_joints = a.max_joints;
    cfg.manufacturable = a.manufacturable;
    const Curve target = load_target(a.target, a.open);

    SolutionSet set = synthesize(target, ctx, cfg);
    if (set.solutions.empty()) {
        std::cerr << "no feasible solutions for " << a.target << "\n";
        return 2;
    }

    fs::create_directories(a.out);
    ordered_json sols = ordered_json::array();
    char name[64];
    for (std::size_t i = 0; i < set.solutions.size(); ++i) {
        const Solution& s = set.solutions[i];
        std::snprintf(name, sizeof(name), "mech_%03zu.json", i);
        save_mechanism((fs::path(a.out) / name).string(), s.mechanism);
        std::snprintf(name, sizeof(name), "traced_%03zu.csv", i);
        save_curve_csv((fs::path(a.out) / name).string(), s.traced);

        ordered_json rec = metric_report_json(s.metrics, s.rotation);
        rec["rank"] = i;
        rec["source_id"] = s.source_id;
        if (s.has_layers) rec["layers"] = layer_assignment_to_json(s.layers);
        sols.push_back(std::move(rec));

        if (a.svg) {
            const TraceBatch tb = solve_mechanism(s.mechanism, 360);
            std::snprintf(name, sizeof(name), "solution_%03zu.svg", i);
            write_text_file((fs::path(a.out) / name).string(),
                            mechanism_svg(s.mechanism, &tb, 0,
                                          s.has_layers ? &s.layers : nullptr));
        }
    }
    ordered_json report{{"target", a.target},
                        {"solutions", std::move(sols)},
                        {"timings",
                         {{"embed", set.timings.embed},
                          {"retrieve", set.timings.retrieve},
                          {"stage2", set.timings.stage2},
                          {"stage3", set.timings.stage3},
                          {"evaluate", set.timings.evaluate},
                          {"layers", set.timings.layers},
                          {"total", set.timings.total}}}};
    write_text_file((fs::path(a.out) / "solutions.json").string(), report.dump(2) + "\n");

    const Solution& best = set.solutions.front();
    std::printf("%zu solutions; best combined %.6g (chamfer %.6g, ordered %.6g) in %.2fs\n",
                set.solutions.size(), best.metrics.value, best.metrics.chamfer,
                best.metrics.ordered.value, set.timings.total);
    return 0;
}

struct BenchArgs {
    std::string curves, index, checkpoint, data, report;
    int max_joints = 20;
};

int run_bench(const BenchArgs& a) {
    PipelineContext ctx = load_pipeline_context(a.index, a.checkpoint, a.data);
    PipelineConfig cfg;
    cfg.max_joints = a.max_joints;
    BenchmarkReport rep = evaluate_benchmark(a.curves, ctx, cfg);

    ordered_json rows = ordered_json::array();
    for (const auto& r : rep.rows)
        rows.push_back(ordered_json{{"file", r.file},
                                    {"chamfer", r.chamfer},
                                    {"ordered", r.ordered},
                                    {"combined", r.combined},
                                    {"seconds", r.seconds}});
    ordered_json j{{"rows", std::move(rows)},
                   {"mean", {{"chamfer", rep.mean_chamfer}, {"ordered", rep.mean_ordered},
                             {"seconds", rep.mean_seconds}}},
                   {"std", {{"chamfer", rep.std_chamfer}, {"ordered", rep.std_ordered}}},
                   {"evaluated", rep.rows.size()},
                   {"skipped", rep.skipped}};
    write_text_file(a.report, j.dump(2) + "\n");

    std::ostringstream csv;
    csv << "file,chamfer,ordered,combined,seconds\n";
    char buf[256];
    for (const auto& r : rep.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g\n", r.file.c_str(),
                      r.chamfer, r.ordered, r.combined, r.seconds);
        csv << buf;
    }
    std::snprintf(buf, sizeof(buf), "mean,%.17g,%.17g,,%.17g\n", rep.mean_chamfer,
                  rep.mean_ordered, rep.mean_seconds);
    csv << buf;
    std::snprintf(buf, sizeof(buf), "std,%.17g,%.17g,,\n", rep.std_chamfer, rep.std_ordered);
    csv << buf;
    write_text_file(fs::path(a.report).replace_extension(".csv").string(), csv.str());

    std::printf("evaluated %zu curves: chamfer %.6g +/- %.6g, ordered %.6g +/- %.6g\n",
                rep.rows.size(), rep.mean_chamfer, rep.std_chamfer, rep.mean_ordered,
                rep.std_ordered);
    return 0;
}

struct SimulateArgs {
    std::string mechanism;
    int timesteps = 360;
    std::string csv, svg;
};

int run_simulate(const SimulateArgs& a) {
    const Mechanism m = load_mechanism(a.mechanism);
    const ValidationReport vr = validate(m);
    if (!vr.ok) {
        std::cerr << "invalid mechanism:";
        for (const auto& p : vr.problems) std::cerr << " " << p << ";";
        std::cerr << "\n";
        return 2;
    }
    const TraceBatch tb = solve_mechanism(m, a.timesteps);
    if (!tb.feasible[0]) {
        std::cerr << "mechanism locks before completing a rotation\n";
        return 2;
    }
    if (!a.csv.empty()) save_trace_csv(a.csv, tb, 0);
    if (!a.svg.empty()) write_text_file(a.svg, mechanism_svg(m, &tb, 0));
    if (a.csv.empty() && a.svg.empty())
        std::cout << "feasible over " << a.timesteps << " timesteps, " << m.joint_count()
                  << " joints\n";
    return 0;
}

struct LayersArgs {
    std::string mechanism;
    int timesteps = 360;
    std::string lp_out, json_out;
};

int run_layers(const LayersArgs& a) {
    const Mechanism m = load_mechanism(a.mechanism);
    const TraceBatch tb = solve_mechanism(m, a.timesteps);
    const CollisionSets sets = detect_collisions(m, tb, 0);
    if (!a.lp_out.empty()) write_text_file(a.lp_out, export_lp(sets, int(m.linkages.size())));
    const LayerAssignment la = assign_layers(sets, int(m.linkages.size()));
    const ordered_json j = layer_assignment_to_json(la);
    std::cout << j.dump(2) << "\n";
    if (!a.json_out.empty()) write_text_file(a.json_out, j.dump(2) + "\n");
    return la.feasible ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Planar linkage path synthesis: dataset, training, retrieval, refinement"};
    app.require_subcommand(1);

    GenArgs ga;
    CLI::App* gen = app.add_subcommand("gen", "Generate a random mechanism dataset");
    gen->add_option("--count", ga.count, "Mechanisms to generate")->capture_default_str();
    gen->add_option("--max-joints", ga.max_joints, "Joint budget per mechanism")
        ->capture_default_str();
    gen->add_option("--seed", ga.seed, "RNG seed")->capture_default_str();
    gen->add_option("--out", ga.out, "Output dataset (NDJSON)")->required();

    TrainArgs ta;
    CLI::App* train = app.add_subcommand("train", "Train the contrastive encoders");
    train->add_option("--data", ta.data, "Dataset (NDJSON)")->required();
    train->add_option("--epochs", ta.epochs, "Override epoch count");
    train->add_option("--config", ta.config, "Training config JSON");
    train->add_option("--checkpoint-out", ta.checkpoint_out, "Checkpoint path")->required();

    IndexArgs ia;
    CLI::App* index = app.add_subcommand("index", "Embed a dataset into a retrieval index");
    index->add_option("--data", ia.data, "Dataset (NDJSON)")->required();
    index->add_option("--checkpoint", ia.checkpoint, "Trained checkpoint")->required();
    index->add_option("--out", ia.out, "Index output path")->required();

    SynthArgs sa;
    CLI::App* synth = app.add_subcommand("synth", "Synthesize mechanisms for a target curve");
    synth->add_option("--target", sa.target, "Target curve (.csv or .json)")->required();
    synth->add_option("--index", sa.index, "Retrieval index")->required();
    synth->add_option("--checkpoint", sa.checkpoint, "Trained checkpoint")->required();
    synth->add_option("--data", sa.data, "Dataset the index was built from")->required();
    synth->add_option("--out", sa.out, "Output directory")->required();
    synth->add_option("--max-joints", sa.max_joints, "Joint-count filter")->capture_default_str();
    synth->add_flag("--manufacturable", sa.manufacturable, "Require a feasible layer assignment");
    synth->add_flag("--svg", sa.svg, "Write solution SVGs");
    synth->add_flag("--open", sa.open, "Treat a CSV target as an open curve");

    BenchArgs ba;
    CLI::App* bench = app.add_subcommand("bench", "Evaluate a directory of target curves");
    bench->add_option("--curves", ba.curves, "Directory of .csv/.json curves")->required();
    bench->add_option("--index", ba.index, "Retrieval index")->required();
    bench->add_option("--checkpoint", ba.checkpoint, "Trained checkpoint")->required();
    bench->add_option("--data", ba.data, "Dataset the index was built from")->required();
    bench->add_option("--report", ba.report, "Report JSON path (CSV written alongside)")
        ->required();
    bench->add_option("--max-joints", ba.max_joints, "Joint-count filter")->capture_default_str();

    SimulateArgs ma;
    CLI::App* simulate = app.add_subcommand("simulate", "Trace a mechanism over one rotation");
    simulate->add_option("--mechanism", ma.mechanism, "Mechanism JSON")->required();
    simulate->add_option("--timesteps", ma.timesteps, "Rotation resolution")
        ->capture_default_str();
    simulate->add_option("--csv", ma.csv, "Trace CSV output");
    simulate->add_option("--svg", ma.svg, "SVG output");

    LayersArgs la;
    CLI::App* layers = app.add_subcommand("layers", "Collision-aware layer assignment");
    layers->add_option("--mechanism", la.mechanism, "Mechanism JSON")->required();
    layers->add_option("--timesteps", la.timesteps, "Collision check resolution")
        ->capture_default_str();
    layers->add_option("--lp-out", la.lp_out, "Write the integer program as LP text");
    layers->add_option("--json-out", la.json_out, "Write the assignment JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return run_gen(ga);
        if (train->parsed()) return run_train(ta);
        if (index->parsed()) return run_index(ia);
        if (synth->parsed()) return run_synth(sa);
        if (bench->parsed()) return run_bench(ba);
        if (simulate->parsed()) return run_simulate(ma);
        if (layers->parsed()) return run_layers(la);
    } catch (const InfeasibleTraceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InfeasibleStateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const EmptyIndexError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const EmptySetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const GenerationExhaustedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
