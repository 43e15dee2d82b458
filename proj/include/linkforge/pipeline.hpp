#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "linkforge/bfgs.hpp"
#include "linkforge/curve.hpp"
#include "linkforge/embedding_index.hpp"
#include "linkforge/layer_assign.hpp"
#include "linkforge/mechanism.hpp"
#include "linkforge/metrics.hpp"
#include "linkforge/train.hpp"

namespace linkforge {

struct PipelineConfig {
    int n_retrieve = 500;
    int stage2_steps = 10;
    double keep_fraction = 0.10;
    int stage3_steps = 150;
    int rotation_angles = 200;
    int smoothing_freqs = 7; // 0 skips query smoothing
    int eval_points = 2000;
    int solver_T = 2000;
    int max_joints = 20;
    bool manufacturable = false;
    ObjectiveWeights weights;
    BfgsConfig bfgs;
};

struct Solution {
    std::uint64_t source_id = 0;
    Mechanism mechanism;
    Curve traced;           // target-joint path, eval_points equidistant samples
    CombinedResult metrics; // against the rotated normalized target
    double rotation = 0.0;  // angle applied to the target for this candidate
    bool has_layers = false;
    LayerAssignment layers;
};

struct StageTimings {
    double embed = 0.0;
    double retrieve = 0.0;
    double stage2 = 0.0;
    double stage3 = 0.0;
    double evaluate = 0.0;
    double layers = 0.0;
    double total = 0.0;
};

// Solutions sorted ascending by combined objective; every mechanism validates
// and traces feasibly over a full rotation.
struct SolutionSet {
    std::vector<Solution> solutions;
    StageTimings timings;
};

// Index + checkpoint + the dataset that produced them. The index stores only
// ids, so candidate mechanisms are looked up in the dataset.
struct PipelineContext {
    Model model;
    EmbeddingIndex index;
    std::vector<DatasetItem> dataset;
    std::unordered_map<std::uint64_t, std::size_t> by_id;

    const DatasetItem& item(std::uint64_t id) const;
};

// Loads all three files and verifies the index was built from this exact
// checkpoint (fingerprint match; CheckpointMismatchError otherwise).
PipelineContext load_pipeline_context(const std::string& index_path,
                                      const std::string& checkpoint_path,
                                      const std::string& dataset_path);

// Deterministic dataset: item i comes from an RNG stream keyed by (seed, i),
// so the result is independent of worker count. Curves are the 200-point
// normalized coupler paths the encoders train on.
std::vector<DatasetItem> build_dataset(int count, int max_joints, std::uint64_t seed);

// Embeds every dataset mechanism; rows match dataset order.
EmbeddingIndex build_index(Model& model, const std::vector<DatasetItem>& dataset,
                           std::uint64_t checkpoint_fingerprint);

// Canonical query preprocessing: resample to the encoder width, normalize,
// and (closed curves, smoothing_freqs > 0) low-pass for the embedding only.
// Open curves route through the partial-curve encoder.
Eigen::RowVectorXd query_embedding(Model& model, const Curve& target, int smoothing_freqs);

// Retrieve, align, and refine candidates against the target curve. Fully
// deterministic given the context and config. Throws DegenerateCurveError on
// targets with fewer than 3 points; retrieval errors propagate.
SolutionSet synthesize(const Curve& target, PipelineContext& ctx,
                       const PipelineConfig& cfg = {});

struct BenchmarkRow {
    std::string file;
    double chamfer = 0.0;
    double ordered = 0.0;
    double combined = 0.0;
    double seconds = 0.0;
};

struct BenchmarkReport {
    std::vector<BenchmarkRow> rows; // one per successfully evaluated curve
    std::vector<std::string> skipped;
    double mean_chamfer = 0.0, std_chamfer = 0.0;
    double mean_ordered = 0.0, std_ordered = 0.0;
    double mean_seconds = 0.0;
};

// Runs synthesize on every .csv/.json curve in a directory (sorted by name).
// Unreadable or failing curves are recorded in `skipped`. Throws EmptySetError
// when nothing was evaluated.
BenchmarkReport evaluate_benchmark(const std::string& curve_dir, PipelineContext& ctx,
                                   const PipelineConfig& cfg = {});

} // namespace linkforge
