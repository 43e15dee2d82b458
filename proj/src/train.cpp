#include "linkforge/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "linkforge/errors.hpp"
#include "linkforge/loss.hpp"

namespace linkforge {

// ------------------------------------------------------------------- Model

Model::Model(const GhopConfig& gc, const CurveEncoderConfig& cc, Rng& rng)
    : mech_encoder(gc, rng), full_encoder(cc, rng), partial_encoder(cc, rng) {
    log_tau = Eigen::MatrixXd::Constant(1, 1, std::log(0.07));
}

Model::Model(const GhopConfig& gc, const CurveEncoderConfig& cc)
    : mech_encoder(gc), full_encoder(cc), partial_encoder(cc) {
    log_tau = Eigen::MatrixXd::Zero(1, 1);
}

Checkpoint Model::to_checkpoint(std::uint64_t seed) const {
    Checkpoint ck;
    ck.seed = seed;
    const GhopConfig& g = mech_encoder.config();
    const CurveEncoderConfig& c = full_encoder.config();
    ck.meta["ghop"] = {{"layers", g.layers},       {"hidden", g.hidden},
                       {"out_dim", g.out_dim},     {"gat_heads", g.gat_heads},
                       {"hop_heads", g.hop_heads}, {"features", g.features}};
    ck.meta["curve"] = {{"points", c.points}, {"out_dim", c.out_dim}, {"kernel", c.kernel}};
    put_params(ck, "mech", mech_encoder.params());
    put_params(ck, "full", full_encoder.params());
    put_params(ck, "partial", partial_encoder.params());
    ck.arrays.emplace_back("head.log_tau", log_tau);
    return ck;
}

Model Model::from_checkpoint(const Checkpoint& ck) {
    if (!ck.meta.contains("ghop") || !ck.meta.contains("curve"))
        throw CheckpointMismatchError("checkpoint: missing model configuration");
    const auto& gj = ck.meta["ghop"];
    const auto& cj = ck.meta["curve"];
    GhopConfig g;
    g.layers = gj.at("layers").get<int>();
    g.hidden = gj.at("hidden").get<int>();
    g.out_dim = gj.at("out_dim").get<int>();
    g.gat_heads = gj.at("gat_heads").get<int>();
    g.hop_heads = gj.at("hop_heads").get<int>();
    g.features = gj.at("features").get<int>();
    CurveEncoderConfig c;
    c.points = cj.at("points").get<int>();
    c.out_dim = cj.at("out_dim").get<int>();
    c.kernel = cj.at("kernel").get<int>();
    Model m(g, c);
    take_params(ck, "mech", m.mech_encoder.params());
    take_params(ck, "full", m.full_encoder.params());
    take_params(ck, "partial", m.partial_encoder.params());
    const Eigen::MatrixXd* lt = ck.find("head.log_tau");
    if (!lt || lt->rows() != 1 || lt->cols() != 1)
        throw CheckpointMismatchError("checkpoint: missing head.log_tau");
    m.log_tau = *lt;
    return m;
}

namespace {
constexpr int kEmbedChunk = 256;
}

Eigen::MatrixXd Model::embed_mechanisms(const std::vector<Mechanism>& mechs) {
    if (mechs.empty()) throw EmptyBatchError("embed_mechanisms: no input");
    Eigen::MatrixXd out(mechs.size(), mech_encoder.config().out_dim);
    for (std::size_t at = 0; at < mechs.size(); at += kEmbedChunk) {
        const std::size_t n = std::min<std::size_t>(kEmbedChunk, mechs.size() - at);
        std::vector<Mechanism> chunk(mechs.begin() + at, mechs.begin() + at + n);
        out.middleRows(Eigen::Index(at), Eigen::Index(n)) = mech_encoder.embed(chunk);
    }
    return out;
}

Eigen::MatrixXd Model::embed_curves(CurveEncoder& enc, const std::vector<Curve>& curves) {
    if (curves.empty()) throw EmptyBatchError("embed_curves: no input");
    Eigen::MatrixXd out(curves.size(), enc.config().out_dim);
    for (std::size_t at = 0; at < curves.size(); at += kEmbedChunk) {
        const std::size_t n = std::min<std::size_t>(kEmbedChunk, curves.size() - at);
        Eigen::MatrixXd rows(n, CurveEncoder::kInputChannels * enc.config().points);
        for (std::size_t i = 0; i < n; ++i) rows.row(Eigen::Index(i)) = enc.pack(curves[at + i]);
        out.middleRows(Eigen::Index(at), Eigen::Index(n)) = enc.embed(rows);
    }
    return out;
}

// -------------------------------------------------------------------- Adam

namespace {

class Adam {
public:
    Adam(std::vector<Eigen::MatrixXd*> params, const TrainConfig& cfg)
        : params_(std::move(params)), cfg_(cfg) {
        for (auto* p : params_) {
            m_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
            v_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
        }
    }

    // grads[i] empty means zero gradient for that parameter this step.
    void step(const std::vector<Eigen::MatrixXd>& grads) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Eigen::MatrixXd g = grads[i].size()
                                    ? grads[i]
                                    : Eigen::MatrixXd::Zero(params_[i]->rows(),
                                                            params_[i]->cols());
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
            *params_[i] -= (cfg_.lr * (m_[i] / bc1).array() /
                            ((v_[i] / bc2).array().sqrt() + cfg_.adam_eps))
                               .matrix();
        }
    }

private:
    std::vector<Eigen::MatrixXd*> params_;
    TrainConfig cfg_;
    std::vector<Eigen::MatrixXd> m_, v_;
    int t_ = 0;
};

struct BatchLoss {
    double clip1 = 0, clip2 = 0, total = 0;
};

// Augmented inputs for a set of item indices.
struct BatchInputs {
    std::vector<Mechanism> mechs;
    Eigen::MatrixXd full_rows, partial_rows;
};

constexpr std::uint64_t kFullRotStream = 0xf1;
constexpr std::uint64_t kPartRotStream = 0xf2;
constexpr std::uint64_t kPartialStream = 0xf3;
constexpr std::uint64_t kValStream = 0x7a1;

BatchInputs make_inputs(const std::vector<DatasetItem>& data,
                        const std::vector<int>& ids, const Model& model,
                        std::uint64_t draw_seed, bool augment) {
    const int P = model.full_encoder.config().points;
    BatchInputs in;
    in.mechs.reserve(ids.size());
    const int W = CurveEncoder::kInputChannels * P;
    in.full_rows.resize(ids.size(), W);
    in.partial_rows.resize(ids.size(), W);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const DatasetItem& item = data[ids[i]];
        in.mechs.push_back(item.mech);
        Curve full = item.curve;
        Curve part_src = item.curve;
        if (augment) {
            Rng r1(mix_seed(mix_seed(draw_seed, kFullRotStream), item.id));
            Rng r2(mix_seed(mix_seed(draw_seed, kPartRotStream), item.id));
            full = rotate_curve(full, r1.uniform(0.0, 2.0 * std::numbers::pi));
            part_src = rotate_curve(part_src, r2.uniform(0.0, 2.0 * std::numbers::pi));
        }
        Rng r3(mix_seed(mix_seed(draw_seed, kPartialStream), item.id));
        Curve part = random_partial(part_src, r3);
        in.full_rows.row(Eigen::Index(i)) = model.full_encoder.pack(full);
        in.partial_rows.row(Eigen::Index(i)) = model.partial_encoder.pack(part);
    }
    return in;
}

BatchLoss eval_loss(Model& model, const BatchInputs& in, const TrainConfig& cfg,
                    Tape& t, Var& total, Var& log_tau_var) {
    Var zm = model.mech_encoder.forward(t, build_graph_batch(in.mechs));
    Var zf = model.full_encoder.forward(t, in.full_rows);
    Var zp = model.partial_encoder.forward(t, in.partial_rows);
    log_tau_var = t.input(model.log_tau);
    Var c1 = clip_loss(zm, zf, log_tau_var, cfg.symmetric);
    Var c2 = clip_loss(zf, zp, log_tau_var, cfg.symmetric);
    total = add(c1, scale_const(c2, cfg.gamma));
    return {c1.value()(0, 0), c2.value()(0, 0), total.value()(0, 0)};
}

} // namespace

TrainOutput train_model(const std::vector<DatasetItem>& data, const TrainConfig& cfg) {
    if (data.empty()) throw EmptyBatchError("train_model: empty dataset");
    if (cfg.val_count < 0 || cfg.val_count >= int(data.size()))
        throw EmptyBatchError("train_model: val_count out of range");
    const int n_train = int(data.size()) - cfg.val_count;

    Rng init_rng(cfg.seed);
    GhopConfig gcfg;
    CurveEncoderConfig ccfg;
    TrainOutput out{Model(gcfg, ccfg, init_rng), {}};
    Model& model = out.model;
    model.log_tau(0, 0) = std::log(cfg.tau_init);

    std::vector<Eigen::MatrixXd*> plist;
    for (auto& [name, w] : model.mech_encoder.params()) plist.push_back(&w);
    for (auto& [name, w] : model.full_encoder.params()) plist.push_back(&w);
    for (auto& [name, w] : model.partial_encoder.params()) plist.push_back(&w);
    plist.push_back(&model.log_tau);
    Adam opt(plist, cfg);

    std::vector<int> order(n_train);
    for (int i = 0; i < n_train; ++i) order[i] = i;

    std::vector<int> val_ids(cfg.val_count);
    for (int i = 0; i < cfg.val_count; ++i) val_ids[i] = n_train + i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::uint64_t epoch_seed = mix_seed(cfg.seed, std::uint64_t(epoch) + 1);
        {
            Rng shuffle_rng(mix_seed(epoch_seed, 0x5f));
            for (int i = n_train - 1; i > 0; --i)
                std::swap(order[i], order[shuffle_rng.uniform_index(std::size_t(i) + 1)]);
        }
        EpochStats st;
        double seen = 0;
        for (int at = 0; at < n_train; at += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n_train - at);
            std::vector<int> ids(order.begin() + at, order.begin() + at + bsz);
            BatchInputs in = make_inputs(data, ids, model, epoch_seed, true);

            Tape t;
            Var total, log_tau_var;
            const BatchLoss bl = eval_loss(model, in, cfg, t, total, log_tau_var);
            if (!std::isfinite(bl.total))
                throw DivergenceError("training loss went non-finite at epoch " +
                                      std::to_string(epoch));
            t.backward(total);

            std::vector<Eigen::MatrixXd> grads;
            grads.reserve(plist.size());
            for (const Var& v : model.mech_encoder.param_vars()) grads.push_back(v.grad());
            for (const Var& v : model.full_encoder.param_vars()) grads.push_back(v.grad());
            for (const Var& v : model.partial_encoder.param_vars()) grads.push_back(v.grad());
            grads.push_back(log_tau_var.grad());
            for (const auto& g : grads)
                if (g.size() && !g.allFinite())
                    throw DivergenceError("gradient went non-finite at epoch " +
                                          std::to_string(epoch));
            opt.step(grads);

            st.train_clip1 += bl.clip1 * bsz;
            st.train_clip2 += bl.clip2 * bsz;
            st.train_total += bl.total * bsz;
            seen += bsz;
        }
        st.train_clip1 /= seen;
        st.train_clip2 /= seen;
        st.train_total /= seen;

        if (cfg.val_count > 0) {
            double vseen = 0;
            for (int at = 0; at < cfg.val_count; at += cfg.batch_size) {
                const int bsz = std::min(cfg.batch_size, cfg.val_count - at);
                std::vector<int> ids(val_ids.begin() + at, val_ids.begin() + at + bsz);
                BatchInputs in =
                    make_inputs(data, ids, model, mix_seed(cfg.seed, kValStream), false);
                Tape t;
                Var total, log_tau_var;
                const BatchLoss bl = eval_loss(model, in, cfg, t, total, log_tau_var);
                st.val_clip1 += bl.clip1 * bsz;
                st.val_clip2 += bl.clip2 * bsz;
                st.val_total += bl.total * bsz;
                vseen += bsz;
            }
            st.val_clip1 /= vseen;
            st.val_clip2 /= vseen;
            st.val_total /= vseen;
        }
        out.log.epochs.push_back(st);
        if (cfg.on_epoch) cfg.on_epoch(epoch, st);
    }
    return out;
}

RetrievalAccuracy retrieval_accuracy(Model& model,
                                     const std::vector<DatasetItem>& items) {
    if (items.empty()) throw EmptyBatchError("retrieval_accuracy: no items");
    std::vector<Mechanism> mechs;
    std::vector<Curve> curves;
    mechs.reserve(items.size());
    curves.reserve(items.size());
    for (const auto& it : items) {
        mechs.push_back(it.mech);
        curves.push_back(it.curve);
    }
    const Eigen::MatrixXd zm = model.embed_mechanisms(mechs);
    const Eigen::MatrixXd zf = model.embed_curves(model.full_encoder, curves);

    const int n = int(items.size());
    int hit1 = 0, hit10 = 0;
    for (int q = 0; q < n; ++q) {
        const double own = zf.row(q).dot(zm.row(q));
        int better = 0;
        for (int j = 0; j < n; ++j) {
            if (j == q) continue;
            const double s = zf.row(q).dot(zm.row(j));
            if (s > own || (s == own && j < q)) ++better;  // ties break toward lower id
        }
        if (better == 0) ++hit1;
        if (better < 10) ++hit10;
    }
    RetrievalAccuracy acc;
    acc.top1 = double(hit1) / n;
    acc.top10 = double(hit10) / n;
    return acc;
}

} // namespace linkforge
