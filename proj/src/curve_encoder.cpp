#include "linkforge/curve_encoder.hpp"

#include <algorithm>
#include <string>

#include "linkforge/errors.hpp"

namespace linkforge {

namespace {
constexpr int kChannels[4] = {CurveEncoder::kInputChannels, 32, 64, 64};
}

CurveEncoder::CurveEncoder(const CurveEncoderConfig& cfg) : cfg_(cfg) {
    for (int l = 0; l < 3; ++l) {
        const std::string p = "conv" + std::to_string(l) + ".";
        params_.add(p + "w", kChannels[l + 1], kChannels[l] * cfg.kernel);
        params_.add(p + "b", 1, kChannels[l + 1]);
    }
    int len = cfg.points;
    for (int l = 0; l < 3; ++l) len = (len + 2 * (cfg.kernel / 2) - cfg.kernel) / 2 + 1;
    params_.add("fc.w", kChannels[3] * len, kChannels[3]);
    params_.add("fc.b", 1, kChannels[3]);
    params_.add("proj.w", kChannels[3], cfg.out_dim);
    params_.add("proj.b", 1, cfg.out_dim);
}

CurveEncoder::CurveEncoder(const CurveEncoderConfig& cfg, Rng& rng)
    : CurveEncoder(cfg) {
    for (auto& [name, w] : params_) {
        if (name.ends_with(".b")) continue;
        glorot_init(w, rng);
    }
}

Var CurveEncoder::forward(Tape& t, const Eigen::MatrixXd& batch) {
    if (int(batch.cols()) != kInputChannels * cfg_.points)
        throw ShapeMismatchError("CurveEncoder: expected " +
                                 std::to_string(kInputChannels * cfg_.points) +
                                 " columns, got " + std::to_string(batch.cols()));
    param_vars_.clear();
    for (auto& [name, w] : params_) param_vars_.push_back(t.input(w));
    auto P = [&](const std::string& name) -> Var {
        for (std::size_t i = 0; i < params_.size(); ++i)
            if (params_[i].first == name) return param_vars_[i];
        throw ShapeMismatchError("CurveEncoder: unknown parameter " + name);
    };

    const int pad = cfg_.kernel / 2;
    Var h = t.constant(batch);
    int len = cfg_.points;
    for (int l = 0; l < 3; ++l) {
        const std::string p = "conv" + std::to_string(l) + ".";
        h = relu(layernorm_rows(conv1d(h, P(p + "w"), P(p + "b"), kChannels[l],
                                       cfg_.kernel, /*stride=*/2, pad)));
        len = (len + 2 * pad - cfg_.kernel) / 2 + 1;
    }
    // No spatial pooling: the flattened feature map keeps where-on-the-curve
    // information, which is what separates two closed loops of the same scale.
    h = relu(layernorm_rows(add_rowvec(matmul_nn(h, P("fc.w")), P("fc.b"))));
    h = add_rowvec(matmul_nn(h, P("proj.w")), P("proj.b"));
    return l2norm_rows(h);
}

Eigen::MatrixXd CurveEncoder::embed(const Eigen::MatrixXd& batch) {
    Tape t;
    return forward(t, batch).value();
}

Eigen::RowVectorXd CurveEncoder::pack(const Curve& c) const {
    const int P = cfg_.points;
    if (int(c.points.size()) != P)
        throw ShapeMismatchError("CurveEncoder::pack: curve has " +
                                 std::to_string(c.points.size()) +
                                 " samples, expected " + std::to_string(P));
    // Edge direction at sample i; open curves reuse the last interior edge
    // past the end and the first one before the start.
    auto edge_unit = [&](int i) -> Vec2 {
        if (c.closed) i = ((i % P) + P) % P;
        else i = std::clamp(i, 0, P - 2);
        const Vec2 e = c.points[(i + 1) % P] - c.points[i];
        const double n = norm(e);
        return n > 1e-12 ? e / n : Vec2{1.0, 0.0};
    };
    // Raw channel values are badly scaled for learning: the turning sin of a
    // 200-sample loop is O(2pi/200) and its cos hugs 1, while the centroid
    // distance of a unit-spread curve hugs 1. Each channel is shifted and
    // scaled to roughly zero mean / unit spread (constants measured over
    // generated data), clamped to cut the rare cusp outlier.
    auto squish = [](double x, double shift, double gain) {
        return std::clamp((x - shift) * gain, -8.0, 8.0);
    };
    Eigen::RowVectorXd row(kInputChannels * P);
    for (int i = 0; i < P; ++i) {
        const Vec2 p = c.points[i];
        const double r = norm(p);
        const Vec2 tangent = edge_unit(i);
        const Vec2 before = edge_unit(i - 1);
        const Vec2 radial = r > 1e-12 ? p / r : Vec2{1.0, 0.0};
        row[0 * P + i] = squish(r, 1.0, 5.0);
        // sin of the turning angle
        row[1 * P + i] = squish(cross(before, tangent), 0.025, 40.0);
        row[2 * P + i] = squish(dot(before, tangent), 1.0, 10.0);
        // sin(radial -> tangent); its mean reflects traversal orientation
        row[3 * P + i] = squish(cross(radial, tangent), 0.8, 2.5);
        row[4 * P + i] = squish(dot(radial, tangent), 0.0, 2.5);
    }
    return row;
}

} // namespace linkforge
