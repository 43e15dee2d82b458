#include "linkforge/ghop.hpp"

#include <cmath>
#include <string>

#include "linkforge/errors.hpp"

namespace linkforge {

GraphBatch build_graph_batch(const std::vector<Mechanism>& mechs) {
    if (mechs.empty()) throw EmptyBatchError("build_graph_batch: no mechanisms");
    GraphBatch g;
    g.n_mechs = int(mechs.size());
    int n_nodes = 0;
    for (const auto& m : mechs) n_nodes += m.joint_count();
    g.feats.resize(n_nodes, 5);
    int base = 0;
    for (int mi = 0; mi < g.n_mechs; ++mi) {
        const Mechanism& m = mechs[mi];
        for (int j = 0; j < m.joint_count(); ++j) {
            const Joint& jt = m.joints[j];
            g.feats(base + j, 0) = jt.is_fixed ? 1.0 : 0.0;
            g.feats(base + j, 1) = jt.is_actuated ? 1.0 : 0.0;
            g.feats(base + j, 2) = jt.is_target ? 1.0 : 0.0;
            g.feats(base + j, 3) = jt.pos.x;
            g.feats(base + j, 4) = jt.pos.y;
            g.node_mech.push_back(mi);
        }
        for (const auto& l : m.linkages) {
            g.edge_src.push_back(base + l.first);
            g.edge_dst.push_back(base + l.second);
            g.edge_src.push_back(base + l.second);
            g.edge_dst.push_back(base + l.first);
        }
        base += m.joint_count();
    }
    return g;
}

namespace {

// softmax of `score` (E x 1) within groups given by `seg` (values < n).
// The per-group max shift is a constant: group softmax is invariant to it.
Var segment_softmax(Var score, const std::vector<int>& seg, int n) {
    Var mx = segment_max(score, seg, n);
    Var shifted = sub(score, gather_rows(mx, seg));
    Var e = exp(shifted);
    Var denom = segment_sum(e, seg, n);
    return div(e, gather_rows(denom, seg));
}

} // namespace

GhopEncoder::GhopEncoder(const GhopConfig& cfg) : cfg_(cfg) {
    const int H = cfg.hidden;
    for (int l = 0; l < cfg.layers; ++l) {
        const int in = l == 0 ? cfg.features : H;
        const std::string p = "gin" + std::to_string(l) + ".";
        params_.add(p + "w1", in, H);
        params_.add(p + "b1", 1, H);
        params_.add(p + "w2", H, H);
        params_.add(p + "b2", 1, H);
        params_.add(p + "eps", 1, 1);
    }
    const int cat = cfg.layers * H;
    const int slice = H / cfg.gat_heads;
    for (int h = 0; h < cfg.gat_heads; ++h) {
        const std::string p = "gat" + std::to_string(h) + ".";
        params_.add(p + "w", cat, slice);
        params_.add(p + "a_src", slice, 1);
        params_.add(p + "a_dst", slice, 1);
    }
    params_.add("hop.wq", H, H);
    params_.add("hop.wk", H, H);
    params_.add("hop.wv", H, H);
    params_.add("hop.wo", H, H);
    params_.add("pool.w", H, H);
    params_.add("pool.q", H, 1);
    params_.add("final.w", H, cfg.out_dim);
    params_.add("final.b", 1, cfg.out_dim);
}

GhopEncoder::GhopEncoder(const GhopConfig& cfg, Rng& rng) : GhopEncoder(cfg) {
    for (auto& [name, w] : params_) {
        if (name.ends_with(".b1") || name.ends_with(".b2") || name.ends_with(".eps") ||
            name.ends_with("final.b"))
            continue;  // biases and epsilons start at zero
        glorot_init(w, rng);
        // Joint coordinates are an order of magnitude smaller than the 0/1
        // type flags (actuator arm is rescaled to 0.05), so give their input
        // rows a matching boost or position barely registers at init.
        if (name == "gin0.w1" && w.rows() >= 5) {
            w.row(3) *= 8.0;
            w.row(4) *= 8.0;
        }
    }
}

Var GhopEncoder::forward(Tape& t, const GraphBatch& g, GhopDiagnostics* diag) {
    const int H = cfg_.hidden;
    const int n_nodes = int(g.feats.rows());
    if (n_nodes == 0) throw EmptyBatchError("GhopEncoder: empty graph batch");
    if (int(g.feats.cols()) != cfg_.features)
        throw ShapeMismatchError("GhopEncoder: feature width mismatch");

    param_vars_.clear();
    param_vars_.reserve(params_.size());
    for (auto& [name, w] : params_) param_vars_.push_back(t.input(w));
    auto P = [&](const std::string& name) -> Var {
        for (std::size_t i = 0; i < params_.size(); ++i)
            if (params_[i].first == name) return param_vars_[i];
        throw ShapeMismatchError("GhopEncoder: unknown parameter " + name);
    };

    Var h = t.constant(g.feats);
    std::vector<Var> hops;
    for (int l = 0; l < cfg_.layers; ++l) {
        const std::string p = "gin" + std::to_string(l) + ".";
        Var nbr = segment_sum(gather_rows(h, g.edge_src), g.edge_dst, n_nodes);
        Var agg = add(add(h, mul_scalar_var(P(p + "eps"), h)), nbr);
        Var z1 = relu(add_rowvec(matmul_nn(agg, P(p + "w1")), P(p + "b1")));
        // Per-node standardization of the MLP output keeps activations O(1)
        // across hops; without it deep stacks drift and embeddings bunch up.
        h = relu(layernorm_rows(add_rowvec(matmul_nn(z1, P(p + "w2")), P(p + "b2"))));
        hops.push_back(h);
    }

    Var hcat = hops[0];
    for (int l = 1; l < cfg_.layers; ++l) hcat = concat_cols(hcat, hops[l]);

    // Graph attention over the linkage edges plus self loops.
    std::vector<int> asrc = g.edge_src, adst = g.edge_dst;
    for (int i = 0; i < n_nodes; ++i) {
        asrc.push_back(i);
        adst.push_back(i);
    }
    if (diag) {
        diag->gat_src = asrc;
        diag->gat_dst = adst;
        diag->gat_alpha.clear();
        diag->hop_attn.clear();
    }
    Var gat;
    for (int hd = 0; hd < cfg_.gat_heads; ++hd) {
        const std::string p = "gat" + std::to_string(hd) + ".";
        Var hw = matmul_nn(hcat, P(p + "w"));  // n_nodes x slice
        Var ssrc = matmul_nn(hw, P(p + "a_src"));
        Var sdst = matmul_nn(hw, P(p + "a_dst"));
        Var escore = leaky_relu(
            add(gather_rows(ssrc, asrc), gather_rows(sdst, adst)), 0.2);
        Var alpha = segment_softmax(escore, adst, n_nodes);
        if (diag) diag->gat_alpha.push_back(alpha.value());
        Var msgs = mul_colvec(gather_rows(hw, asrc), alpha);
        Var head = elu(segment_sum(msgs, adst, n_nodes));
        gat = hd == 0 ? head : concat_cols(gat, head);
    }

    // Dot-product attention over the hop stack, queried by the GAT output.
    const int dk = H / cfg_.hop_heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(double(dk));
    Var q = matmul_nn(gat, P("hop.wq"));
    std::vector<Var> keys, vals;
    for (int l = 0; l < cfg_.layers; ++l) {
        keys.push_back(matmul_nn(hops[l], P("hop.wk")));
        vals.push_back(matmul_nn(hops[l], P("hop.wv")));
    }
    Var mixed;
    for (int hd = 0; hd < cfg_.hop_heads; ++hd) {
        Var qh = slice_cols(q, hd * dk, dk);
        Var scores;
        for (int l = 0; l < cfg_.layers; ++l) {
            Var s = scale_const(rows_dot(qh, slice_cols(keys[l], hd * dk, dk)),
                                inv_sqrt_dk);
            scores = l == 0 ? s : concat_cols(scores, s);
        }
        Var attn = row_softmax(scores);  // n_nodes x layers
        if (diag) diag->hop_attn.push_back(attn.value());
        Var head;
        for (int l = 0; l < cfg_.layers; ++l) {
            Var term = mul_colvec(slice_cols(vals[l], hd * dk, dk),
                                  slice_cols(attn, l, 1));
            head = l == 0 ? term : add(head, term);
        }
        mixed = hd == 0 ? head : concat_cols(mixed, head);
    }
    Var u = matmul_nn(mixed, P("hop.wo"));

    // Attention pooling per mechanism.
    Var pscore = matmul_nn(tanh(matmul_nn(u, P("pool.w"))), P("pool.q"));
    Var palpha = segment_softmax(pscore, g.node_mech, g.n_mechs);
    if (diag) diag->pool_alpha = palpha.value();
    Var pooled = segment_sum(mul_colvec(u, palpha), g.node_mech, g.n_mechs);
    // Standardizing the pooled vector strips the shared bias direction that
    // otherwise bunches every graph's embedding into a narrow cone.
    pooled = layernorm_rows(pooled);

    Var out = add_rowvec(matmul_nn(pooled, P("final.w")), P("final.b"));
    return l2norm_rows(out);
}

Eigen::MatrixXd GhopEncoder::embed(const std::vector<Mechanism>& mechs,
                                   GhopDiagnostics* diag) {
    Tape t;
    return forward(t, build_graph_batch(mechs), diag).value();
}

} // namespace linkforge
