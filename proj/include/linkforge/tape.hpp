#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace linkforge {

class Tape;

// Handle to a tape node; cheap to copy, valid while its tape lives.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    const Eigen::MatrixXd& value() const;
    const Eigen::MatrixXd& grad() const;  // empty until backward() reaches it
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
};

// Reverse-mode tape over dense double matrices. Nodes are recorded in
// evaluation order; backward() replays them newest-first. One tape per
// forward pass; tapes are neither copyable nor movable (closures refer to
// node indices within this tape).
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var input(Eigen::MatrixXd v);     // differentiable leaf
    Var constant(Eigen::MatrixXd v);  // non-differentiable leaf

    // Seeds d(root)/d(root) = 1 (root must be 1x1) and accumulates gradients
    // into every tracked node reachable from it. Clears old gradients first.
    void backward(const Var& root);

    std::size_t size() const { return nodes_.size(); }

    // --- internal plumbing for the op library ---
    struct Node {
        Eigen::MatrixXd val;
        Eigen::MatrixXd grad;  // lazily sized on first accumulation
        bool track = false;
        std::function<void(Tape&)> back;  // null for leaves / untracked
    };
    Var make(Eigen::MatrixXd v, bool track, std::function<void(Tape&)> back);
    Node& node(int i) { return nodes_[i]; }
    const Node& node(int i) const { return nodes_[i]; }

    // Accumulate into node i's gradient (no-op when untracked).
    template <class E>
    void accum(int i, const E& e) {
        Node& n = nodes_[i];
        if (!n.track) return;
        if (n.grad.size() == 0)
            n.grad = e;
        else
            n.grad += e;
    }
    // Gradient buffer pre-sized with zeros, for scatter-style backward ops.
    // Null when the node is untracked.
    Eigen::MatrixXd* grad_buf(int i);

private:
    std::vector<Node> nodes_;
};

inline const Eigen::MatrixXd& Var::value() const { return tape->node(id).val; }
inline const Eigen::MatrixXd& Var::grad() const { return tape->node(id).grad; }

// ------------------------------------------------------------------- ops
// All ops validate shapes (ShapeMismatchError) and record their backward
// closure when any operand is tracked.

Var matmul_nn(Var a, Var b);  // A * B
Var matmul_nt(Var a, Var b);  // A * B^T
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var add_rowvec(Var m, Var r);       // r is 1 x C, broadcast over rows
Var scale_const(Var a, double k);   // k fixed, not a tape node
Var mul(Var a, Var b);              // elementwise
Var div(Var a, Var b);              // elementwise
Var mul_colvec(Var m, Var c);       // c is N x 1, scales rows
Var mul_scalar_var(Var s, Var m);   // s is 1 x 1
Var neg(Var a);

Var relu(Var a);
Var leaky_relu(Var a, double alpha);
Var elu(Var a);  // alpha = 1
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);

Var row_softmax(Var a);
Var log_softmax_rows(Var a);
Var l2norm_rows(Var a);
// Per-row standardization: (x - mean) / sqrt(var + 1e-8). No learned affine,
// so it adds no parameters and keeps rows batch-independent.
Var layernorm_rows(Var a);

Var concat_cols(Var a, Var b);
Var slice_cols(Var a, int begin, int len);
Var gather_rows(Var a, std::vector<int> idx);  // duplicates accumulate

// Rows summed per segment id; seg values in [0, n_segments).
Var segment_sum(Var a, std::vector<int> seg, int n_segments);
// Per-segment elementwise max, returned as a detached constant (used as the
// stability shift inside segment softmax, where the shift's gradient is
// exactly zero).
Var segment_max(Var a, const std::vector<int>& seg, int n_segments);

Var rows_dot(Var a, Var b);  // N x 1 of per-row dot products
Var take_diag(Var a);        // square -> N x 1
Var mean_all(Var a);         // 1 x 1

// 1-D convolution over channel-major rows: x is B x (c_in * L), weight is
// c_out x (c_in * k), bias is 1 x c_out, output B x (c_out * L_out) with
// L_out = (L + 2*pad - k) / stride + 1. Zero padding.
Var conv1d(Var x, Var w, Var bias, int c_in, int kernel, int stride, int pad);

// B x (C * L) -> B x C, averaging each contiguous length-L block.
Var rowblock_mean(Var a, int block_len);

} // namespace linkforge
