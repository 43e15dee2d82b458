#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "linkforge/checkpoint.hpp"
#include "linkforge/curve.hpp"
#include "linkforge/curve_encoder.hpp"
#include "linkforge/ghop.hpp"
#include "linkforge/mechanism.hpp"

namespace linkforge {

// One training/index record: a normalized mechanism and its coupler curve
// (curve_points samples, closed, normalized).
struct DatasetItem {
    std::uint64_t id = 0;
    Mechanism mech;
    Curve curve;
};

// The three encoders plus their shared temperature.
struct Model {
    GhopEncoder mech_encoder;
    CurveEncoder full_encoder;
    CurveEncoder partial_encoder;
    Eigen::MatrixXd log_tau;  // 1 x 1

    Model(const GhopConfig& gc, const CurveEncoderConfig& cc, Rng& rng);
    Model(const GhopConfig& gc, const CurveEncoderConfig& cc);  // zeros

    Checkpoint to_checkpoint(std::uint64_t seed) const;
    static Model from_checkpoint(const Checkpoint& ck);

    // Embedding helpers, batched internally; rows align with the inputs.
    // Curves must already be curve-encoder-ready (resampled to the encoder's
    // sample count, normalized).
    Eigen::MatrixXd embed_mechanisms(const std::vector<Mechanism>& mechs);
    Eigen::MatrixXd embed_curves(CurveEncoder& enc, const std::vector<Curve>& curves);
};

struct EpochStats {
    double train_clip1 = 0, train_clip2 = 0, train_total = 0;
    double val_clip1 = 0, val_clip2 = 0, val_total = 0;
};

struct TrainConfig {
    int epochs = 30;
    int batch_size = 256;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double gamma = 1.0;      // weight of the partial-curve alignment term
    bool symmetric = false;
    std::uint64_t seed = 0x11a7;
    int val_count = 0;       // taken from the dataset tail, never shuffled in
    double tau_init = 0.07;
    // Progress hook, called after each epoch's stats are final. May be empty.
    std::function<void(int epoch, const EpochStats&)> on_epoch;
};

struct TrainLog {
    std::vector<EpochStats> epochs;
};

struct TrainOutput {
    Model model;
    TrainLog log;
};

// Contrastive training: per epoch, every item gets an independently rotated
// full curve and a freshly drawn rotated partial arc; the graph encoder sees
// the normalized mechanism. Augmentation draws depend only on (seed, epoch,
// item id), so results are independent of batching internals. Validation
// items use identity rotation and a partial arc drawn once from the seed, so
// epoch-over-epoch val losses are comparable. Throws DivergenceError when a
// loss or gradient goes non-finite (parameters keep their last good values).
TrainOutput train_model(const std::vector<DatasetItem>& data, const TrainConfig& cfg);

// Fraction of items whose own mechanism is the cosine top-1 / top-10 match
// for their full-curve embedding (no augmentation).
struct RetrievalAccuracy {
    double top1 = 0, top10 = 0;
};
RetrievalAccuracy retrieval_accuracy(Model& model,
                                     const std::vector<DatasetItem>& items);

} // namespace linkforge
