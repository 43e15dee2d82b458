#pragma once

#include <Eigen/Dense>
#include <vector>

#include "linkforge/mechanism.hpp"
#include "linkforge/params.hpp"
#include "linkforge/tape.hpp"

namespace linkforge {

struct GhopConfig {
    int layers = 4;    // message-passing depth (= hop count)
    int hidden = 64;   // width of every node representation
    int out_dim = 64;  // embedding dimension
    int gat_heads = 4;
    int hop_heads = 4;
    int features = 5;  // is_fixed, is_actuated, is_target, x0, y0
};

// Flattened multi-graph batch: nodes of all mechanisms concatenated, each
// undirected linkage stored as two directed edges. No padding anywhere.
struct GraphBatch {
    Eigen::MatrixXd feats;      // n_nodes x features
    std::vector<int> edge_src;  // message senders
    std::vector<int> edge_dst;  // message receivers
    std::vector<int> node_mech; // node -> mechanism id, non-decreasing
    int n_mechs = 0;
};

GraphBatch build_graph_batch(const std::vector<Mechanism>& mechs);

// Per-forward attention snapshots (plain values, detached from the tape).
struct GhopDiagnostics {
    // One n_edges_with_self_loops x 1 column per head.
    std::vector<Eigen::MatrixXd> gat_alpha;
    std::vector<int> gat_src, gat_dst;  // the self-loop-extended edge list
    // One n_nodes x layers attention matrix per head.
    std::vector<Eigen::MatrixXd> hop_attn;
    Eigen::MatrixXd pool_alpha;  // n_nodes x 1
};

// Mechanism embedding network. Depth-wise message passing produces one
// representation per hop; a graph-attention pass over the concatenated hops
// exchanges them between neighbors; per-node attention over the hop stack
// then selects reception depths; attention pooling collapses each mechanism
// to a single L2-normalized embedding row.
class GhopEncoder {
public:
    GhopEncoder(const GhopConfig& cfg, Rng& rng);   // random parameters
    explicit GhopEncoder(const GhopConfig& cfg);    // zero parameters (load target)

    const GhopConfig& config() const { return cfg_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    // Records the full forward pass on `t`; returns n_mechs x out_dim
    // embeddings. Parameter tape nodes for the pass are in param_vars()
    // (aligned with params()).
    Var forward(Tape& t, const GraphBatch& g, GhopDiagnostics* diag = nullptr);
    const std::vector<Var>& param_vars() const { return param_vars_; }

    // Convenience: forward on a throwaway tape, values only.
    Eigen::MatrixXd embed(const std::vector<Mechanism>& mechs,
                          GhopDiagnostics* diag = nullptr);

private:
    GhopConfig cfg_;
    ParamSet params_;
    std::vector<Var> param_vars_;
};

} // namespace linkforge
