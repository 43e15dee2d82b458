#pragma once

#include <Eigen/Dense>
#include <vector>

#include "linkforge/curve.hpp"
#include "linkforge/params.hpp"
#include "linkforge/tape.hpp"

namespace linkforge {

struct CurveEncoderConfig {
    int points = 200;   // input samples per curve
    int out_dim = 64;   // embedding dimension
    int kernel = 5;     // conv kernel, stride 2, zero pad 2 throughout
};

// Strided 1-D convolution stack over per-sample geometry channels:
//   5ch x 200 -> 32ch x 100 -> 64ch x 50 -> 64ch x 25
// then a hidden FC layer over the flattened feature map and a projection,
// L2-normalized. Separate instances encode full and partial curves.
//
// pack() turns a curve into channels that do not move when the whole curve
// is rotated about the origin: centroid distance, turning angle (sin, cos)
// and the angle between the radial and tangent directions (sin, cos). The
// signed terms flip under reflection, so mirrored shapes stay apart.
class CurveEncoder {
public:
    static constexpr int kInputChannels = 5;

    CurveEncoder(const CurveEncoderConfig& cfg, Rng& rng);  // random parameters
    explicit CurveEncoder(const CurveEncoderConfig& cfg);   // zero parameters

    const CurveEncoderConfig& config() const { return cfg_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    // Rows of `batch` are channel-major: [ch0 samples..., ch1 samples..., ...].
    Var forward(Tape& t, const Eigen::MatrixXd& batch);
    const std::vector<Var>& param_vars() const { return param_vars_; }

    Eigen::MatrixXd embed(const Eigen::MatrixXd& batch);

    // Curve -> input row of kInputChannels * points geometry values. The curve
    // must already be resampled to config().points samples (normalization is
    // the caller's contract).
    Eigen::RowVectorXd pack(const Curve& c) const;

private:
    CurveEncoderConfig cfg_;
    ParamSet params_;
    std::vector<Var> param_vars_;
};

} // namespace linkforge
