#include "linkforge/tape.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>

#include "linkforge/errors.hpp"

namespace linkforge {

namespace {

Tape* same_tape(Var a, Var b) {
    if (!a.tape || a.tape != b.tape)
        throw ShapeMismatchError("operands live on different tapes");
    return a.tape;
}

[[noreturn]] void shape_error(const char* op, Var v) {
    throw ShapeMismatchError(
                    std::string(op) + ": bad operand shape " +
                        std::to_string(v.rows()) + "x" + std::to_string(v.cols()));
}

bool tracked(Var a) { return a.tape->node(a.id).track; }

} // namespace

Var Tape::make(Eigen::MatrixXd v, bool track, std::function<void(Tape&)> back) {
    Node n;
    n.val = std::move(v);
    n.track = track;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{this, int(nodes_.size()) - 1};
}

Var Tape::input(Eigen::MatrixXd v) { return make(std::move(v), true, nullptr); }
Var Tape::constant(Eigen::MatrixXd v) { return make(std::move(v), false, nullptr); }

Eigen::MatrixXd* Tape::grad_buf(int i) {
    Node& n = nodes_[i];
    if (!n.track) return nullptr;
    if (n.grad.size() == 0) n.grad = Eigen::MatrixXd::Zero(n.val.rows(), n.val.cols());
    return &n.grad;
}

void Tape::backward(const Var& root) {
    if (root.tape != this) throw ShapeMismatchError("backward: foreign root");
    if (nodes_[root.id].val.size() != 1)
        throw ShapeMismatchError("backward: root is not 1x1");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    nodes_[root.id].grad = Eigen::MatrixXd::Ones(1, 1);
    for (int i = root.id; i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.back && n.grad.size() != 0) n.back(*this);
    }
}

// --------------------------------------------------------------- binary ops

Var matmul_nn(Var a, Var b) {
    Tape* t = same_tape(a, b);
    if (a.cols() != b.rows()) shape_error("matmul_nn", b);
    const bool tr = tracked(a) || tracked(b);
    const int ai = a.id, bi = b.id, out = int(t->size());
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            tp.accum(ai, G * tp.node(bi).val.transpose());
            tp.accum(bi, tp.node(ai).val.transpose() * G);
        };
    return t->make(a.value() * b.value(), tr, std::move(back));
}

Var matmul_nt(Var a, Var b) {
    Tape* t = same_tape(a, b);
    if (a.cols() != b.cols()) shape_error("matmul_nt", b);
    const bool tr = tracked(a) || tracked(b);
    const int ai = a.id, bi = b.id, out = int(t->size());
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            tp.accum(ai, G * tp.node(bi).val);
            tp.accum(bi, G.transpose() * tp.node(ai).val);
        };
    return t->make(a.value() * b.value().transpose(), tr, std::move(back));
}

Var add(Var a, Var b) {
    Tape* t = same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("add", b);
    const bool tr = tracked(a) || tracked(b);
    const int ai = a.id, bi = b.id, out = int(t->size());
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            tp.accum(ai, G);
            tp.accum(bi, G);
        };
    return t->make(a.value() + b.value(), tr, std::move(back));
}

Var sub(Var a, Var b) {
    Tape* t = same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("sub", b);
    const bool tr = tracked(a) || tracked(b);
    const int ai = a.id, bi = b.id, out = int(t->size());
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            tp.accum(ai, G);
            tp.accum(bi, -G);
        };
    return t->make(a.value() - b.value(), tr, std::move(back));
}

Var add_rowvec(Var m, Var r) {
    Tape* t = same_tape(m, r);
    if (r.rows() != 1 || r.cols() != m.cols()) shape_error("add_rowvec", r);
    const bool tr = tracked(m) || tracked(r);
    const int mi = m.id, ri = r.id, out = int(t->size());
    Eigen::MatrixXd v = m.value();
    v.rowwise() += r.value().row(0);
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            tp.accum(mi, G);
            tp.accum(ri, G.colwise().sum());
        };
    return t->make(std::move(v), tr, std::move(back));
}

Var scale_const(Var a, double k) {
    Tape* t = a.tape;
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    std::function<void(Tape&)> back;
    if (tr) back = [=](Tape& tp) { tp.accum(ai, k * tp.node(out).grad); };
    return t->make(k * a.value(), tr, std::move(back));
}

Var mul(Var a, Var b) {
    Tape* t = same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("mul", b);
    const bool tr = tracked(a) || tracked(b);
    const int ai = a.id, bi = b.id, out = int(t->size());
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            tp.accum(ai, G.cwiseProduct(tp.node(bi).val));
            tp.accum(bi, G.cwiseProduct(tp.node(ai).val));
        };
    return t->make(a.value().cwiseProduct(b.value()), tr, std::move(back));
}

Var div(Var a, Var b) {
    Tape* t = same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("div", b);
    const bool tr = tracked(a) || tracked(b);
    const int ai = a.id, bi = b.id, out = int(t->size());
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            const Eigen::MatrixXd& B = tp.node(bi).val;
            tp.accum(ai, G.cwiseQuotient(B));
            tp.accum(bi, -G.cwiseProduct(tp.node(out).val).cwiseQuotient(B));
        };
    return t->make(a.value().cwiseQuotient(b.value()), tr, std::move(back));
}

Var mul_colvec(Var m, Var c) {
    Tape* t = same_tape(m, c);
    if (c.cols() != 1 || c.rows() != m.rows()) shape_error("mul_colvec", c);
    const bool tr = tracked(m) || tracked(c);
    const int mi = m.id, ci = c.id, out = int(t->size());
    Eigen::MatrixXd v = (m.value().array().colwise() * c.value().col(0).array()).matrix();
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            const Eigen::MatrixXd& M = tp.node(mi).val;
            const Eigen::MatrixXd& C = tp.node(ci).val;
            tp.accum(mi, (G.array().colwise() * C.col(0).array()).matrix());
            tp.accum(ci, G.cwiseProduct(M).rowwise().sum());
        };
    return t->make(std::move(v), tr, std::move(back));
}

Var mul_scalar_var(Var s, Var m) {
    Tape* t = same_tape(s, m);
    if (s.rows() != 1 || s.cols() != 1) shape_error("mul_scalar_var", s);
    const bool tr = tracked(s) || tracked(m);
    const int si = s.id, mi = m.id, out = int(t->size());
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            const double sv = tp.node(si).val(0, 0);
            tp.accum(si, Eigen::MatrixXd::Constant(
                             1, 1, G.cwiseProduct(tp.node(mi).val).sum()));
            tp.accum(mi, sv * G);
        };
    return t->make(s.value()(0, 0) * m.value(), tr, std::move(back));
}

Var neg(Var a) { return scale_const(a, -1.0); }

// ------------------------------------------------------------ element-wise

Var relu(Var a) {
    Tape* t = a.tape;
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            const Eigen::MatrixXd& A = tp.node(ai).val;
            tp.accum(ai, (G.array() * (A.array() > 0.0).cast<double>()).matrix());
        };
    return t->make(a.value().cwiseMax(0.0), tr, std::move(back));
}

Var leaky_relu(Var a, double alpha) {
    Tape* t = a.tape;
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    Eigen::ArrayXXd A = a.value().array();
    Eigen::MatrixXd v = (A > 0.0).select(A, alpha * A).matrix();
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            const Eigen::ArrayXXd& A2 = tp.node(ai).val.array();
            tp.accum(ai,
                     (G.array() * (A2 > 0.0).select(Eigen::ArrayXXd::Ones(A2.rows(), A2.cols()),
                                                    alpha))
                         .matrix());
        };
    return t->make(std::move(v), tr, std::move(back));
}

Var elu(Var a) {
    Tape* t = a.tape;
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    Eigen::ArrayXXd A = a.value().array();
    Eigen::MatrixXd v = (A > 0.0).select(A, A.unaryExpr([](double x) {
        return std::expm1(x);
    })).matrix();
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            const Eigen::ArrayXXd& A2 = tp.node(ai).val.array();
            const Eigen::ArrayXXd& Y = tp.node(out).val.array();
            tp.accum(ai, (G.array() * (A2 > 0.0).select(
                                          Eigen::ArrayXXd::Ones(A2.rows(), A2.cols()),
                                          Y + 1.0))
                             .matrix());
        };
    return t->make(std::move(v), tr, std::move(back));
}

Var tanh(Var a) {
    Tape* t = a.tape;
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            const Eigen::ArrayXXd& Y = tp.node(out).val.array();
            tp.accum(ai, (G.array() * (1.0 - Y.square())).matrix());
        };
    return t->make(a.value().array().tanh().matrix(), tr, std::move(back));
}

Var exp(Var a) {
    Tape* t = a.tape;
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            tp.accum(ai, tp.node(out).grad.cwiseProduct(tp.node(out).val));
        };
    return t->make(a.value().array().exp().matrix(), tr, std::move(back));
}

Var log(Var a) {
    Tape* t = a.tape;
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            tp.accum(ai, tp.node(out).grad.cwiseQuotient(tp.node(ai).val));
        };
    return t->make(a.value().array().log().matrix(), tr, std::move(back));
}

// ------------------------------------------------------------ row-wise maps

Var row_softmax(Var a) {
    Tape* t = a.tape;
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    Eigen::ArrayXXd A = a.value().array();
    Eigen::ArrayXd mx = A.rowwise().maxCoeff();
    Eigen::ArrayXXd E = (A.colwise() - mx).exp();
    Eigen::ArrayXd s = E.rowwise().sum();
    Eigen::MatrixXd v = (E.colwise() / s).matrix();
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            const Eigen::ArrayXXd& Y = tp.node(out).val.array();
            Eigen::ArrayXd dots = (G.array() * Y).rowwise().sum();
            tp.accum(ai, ((G.array().colwise() - dots) * Y).matrix());
        };
    return t->make(std::move(v), tr, std::move(back));
}

Var log_softmax_rows(Var a) {
    Tape* t = a.tape;
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    Eigen::ArrayXXd A = a.value().array();
    Eigen::ArrayXd mx = A.rowwise().maxCoeff();
    Eigen::ArrayXd lse = mx + (A.colwise() - mx).exp().rowwise().sum().log();
    Eigen::MatrixXd v = (A.colwise() - lse).matrix();
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            Eigen::ArrayXd gs = G.rowwise().sum();
            Eigen::ArrayXXd soft = tp.node(out).val.array().exp();
            tp.accum(ai, (G.array() - soft.colwise() * gs).matrix());
        };
    return t->make(std::move(v), tr, std::move(back));
}

Var l2norm_rows(Var a) {
    Tape* t = a.tape;
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    auto norms = std::make_shared<Eigen::ArrayXd>(
        a.value().rowwise().norm().array() + 1e-300);
    Eigen::MatrixXd v = (a.value().array().colwise() / *norms).matrix();
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            const Eigen::ArrayXXd& Y = tp.node(out).val.array();
            Eigen::ArrayXd dots = (G.array() * Y).rowwise().sum();
            tp.accum(ai, (((G.array() - (Y.colwise() * dots)).colwise() / *norms)).matrix());
        };
    return t->make(std::move(v), tr, std::move(back));
}

Var layernorm_rows(Var a) {
    Tape* t = a.tape;
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    auto mu = std::make_shared<Eigen::ArrayXd>(a.value().array().rowwise().mean());
    Eigen::ArrayXXd centered = a.value().array().colwise() - *mu;
    auto inv_sd = std::make_shared<Eigen::ArrayXd>(
        (centered.square().rowwise().mean() + 1e-8).sqrt().inverse());
    Eigen::MatrixXd v = (centered.colwise() * *inv_sd).matrix();
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            // dx = (g - mean(g) - y*mean(g*y)) * inv_sd, rowwise.
            const Eigen::ArrayXXd& G = tp.node(out).grad.array();
            const Eigen::ArrayXXd& Y = tp.node(out).val.array();
            Eigen::ArrayXd gm = G.rowwise().mean();
            Eigen::ArrayXd gym = (G * Y).rowwise().mean();
            Eigen::ArrayXXd dx = G.colwise() - gm;
            dx -= Y.colwise() * gym;
            tp.accum(ai, (dx.colwise() * *inv_sd).matrix());
        };
    return t->make(std::move(v), tr, std::move(back));
}

// -------------------------------------------------------- structure shuffles

Var concat_cols(Var a, Var b) {
    Tape* t = same_tape(a, b);
    if (a.rows() != b.rows()) shape_error("concat_cols", b);
    const bool tr = tracked(a) || tracked(b);
    const int ai = a.id, bi = b.id, out = int(t->size());
    const int ca = int(a.cols()), cb = int(b.cols());
    Eigen::MatrixXd v(a.rows(), ca + cb);
    v.leftCols(ca) = a.value();
    v.rightCols(cb) = b.value();
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            tp.accum(ai, G.leftCols(ca));
            tp.accum(bi, G.rightCols(cb));
        };
    return t->make(std::move(v), tr, std::move(back));
}

Var slice_cols(Var a, int begin, int len) {
    Tape* t = a.tape;
    if (begin < 0 || len < 0 || begin + len > a.cols()) shape_error("slice_cols", a);
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            if (auto* gb = tp.grad_buf(ai))
                gb->middleCols(begin, len) += tp.node(out).grad;
        };
    return t->make(a.value().middleCols(begin, len), tr, std::move(back));
}

Var gather_rows(Var a, std::vector<int> idx) {
    Tape* t = a.tape;
    for (int i : idx)
        if (i < 0 || i >= a.rows()) shape_error("gather_rows", a);
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    Eigen::MatrixXd v(idx.size(), a.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) v.row(i) = a.value().row(idx[i]);
    std::function<void(Tape&)> back;
    if (tr)
        back = [=, idx = std::move(idx)](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            if (auto* gb = tp.grad_buf(ai))
                for (std::size_t i = 0; i < idx.size(); ++i)
                    gb->row(idx[i]) += G.row(i);
        };
    return t->make(std::move(v), tr, std::move(back));
}

Var segment_sum(Var a, std::vector<int> seg, int n_segments) {
    Tape* t = a.tape;
    if (int(seg.size()) != a.rows() || n_segments < 1) shape_error("segment_sum", a);
    for (int s : seg)
        if (s < 0 || s >= n_segments) shape_error("segment_sum", a);
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n_segments, a.cols());
    for (std::size_t i = 0; i < seg.size(); ++i) v.row(seg[i]) += a.value().row(i);
    std::function<void(Tape&)> back;
    if (tr)
        back = [=, seg = std::move(seg)](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            if (auto* gb = tp.grad_buf(ai))
                for (std::size_t i = 0; i < seg.size(); ++i)
                    gb->row(i) += G.row(seg[i]);
        };
    return t->make(std::move(v), tr, std::move(back));
}

Var segment_max(Var a, const std::vector<int>& seg, int n_segments) {
    Tape* t = a.tape;
    if (int(seg.size()) != a.rows() || n_segments < 1) shape_error("segment_max", a);
    Eigen::MatrixXd v = Eigen::MatrixXd::Constant(
        n_segments, a.cols(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < seg.size(); ++i) {
        if (seg[i] < 0 || seg[i] >= n_segments) shape_error("segment_max", a);
        v.row(seg[i]) = v.row(seg[i]).cwiseMax(a.value().row(i));
    }
    return t->constant(std::move(v));
}

Var rows_dot(Var a, Var b) {
    Tape* t = same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("rows_dot", b);
    const bool tr = tracked(a) || tracked(b);
    const int ai = a.id, bi = b.id, out = int(t->size());
    Eigen::MatrixXd v = a.value().cwiseProduct(b.value()).rowwise().sum();
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::ArrayXd g = tp.node(out).grad.col(0).array();
            tp.accum(ai, (tp.node(bi).val.array().colwise() * g).matrix());
            tp.accum(bi, (tp.node(ai).val.array().colwise() * g).matrix());
        };
    return t->make(std::move(v), tr, std::move(back));
}

Var take_diag(Var a) {
    Tape* t = a.tape;
    if (a.rows() != a.cols()) shape_error("take_diag", a);
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    Eigen::MatrixXd v = a.value().diagonal();
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            if (auto* gb = tp.grad_buf(ai)) gb->diagonal() += G.col(0);
        };
    return t->make(std::move(v), tr, std::move(back));
}

Var mean_all(Var a) {
    Tape* t = a.tape;
    if (a.value().size() == 0) shape_error("mean_all", a);
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    const double inv = 1.0 / double(a.value().size());
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& A = tp.node(ai).val;
            tp.accum(ai, Eigen::MatrixXd::Constant(A.rows(), A.cols(),
                                                   tp.node(out).grad(0, 0) * inv));
        };
    return t->make(Eigen::MatrixXd::Constant(1, 1, a.value().mean()), tr,
                   std::move(back));
}

// ------------------------------------------------------------------- conv

Var conv1d(Var x, Var w, Var bias, int c_in, int kernel, int stride, int pad) {
    Tape* t = same_tape(x, w);
    same_tape(w, bias);
    if (c_in < 1 || kernel < 1 || stride < 1 || pad < 0) shape_error("conv1d", x);
    if (x.cols() % c_in != 0) shape_error("conv1d", x);
    const int B = int(x.rows());
    const int L = int(x.cols()) / c_in;
    const int c_out = int(w.rows());
    if (int(w.cols()) != c_in * kernel) shape_error("conv1d", w);
    if (bias.rows() != 1 || int(bias.cols()) != c_out) shape_error("conv1d", bias);
    const int L_out = (L + 2 * pad - kernel) / stride + 1;
    if (L_out < 1) shape_error("conv1d", x);

    auto im2col = std::make_shared<Eigen::MatrixXd>(
        Eigen::MatrixXd::Zero(std::size_t(B) * L_out, std::size_t(c_in) * kernel));
    {
        const Eigen::MatrixXd& X = x.value();
        for (int b = 0; b < B; ++b)
            for (int p = 0; p < L_out; ++p)
                for (int ci = 0; ci < c_in; ++ci)
                    for (int k = 0; k < kernel; ++k) {
                        const int q = p * stride + k - pad;
                        if (q >= 0 && q < L)
                            (*im2col)(b * L_out + p, ci * kernel + k) = X(b, ci * L + q);
                    }
    }
    Eigen::MatrixXd y2 = (*im2col) * w.value().transpose();  // (B*L_out) x c_out
    Eigen::MatrixXd v(B, std::size_t(c_out) * L_out);
    for (int b = 0; b < B; ++b)
        for (int co = 0; co < c_out; ++co)
            for (int p = 0; p < L_out; ++p)
                v(b, co * L_out + p) = y2(b * L_out + p, co) + bias.value()(0, co);

    const bool tr = tracked(x) || tracked(w) || tracked(bias);
    const int xi = x.id, wi = w.id, bii = bias.id, out = int(t->size());
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            Eigen::MatrixXd dy2(std::size_t(B) * L_out, c_out);
            for (int b = 0; b < B; ++b)
                for (int co = 0; co < c_out; ++co)
                    for (int p = 0; p < L_out; ++p)
                        dy2(b * L_out + p, co) = G(b, co * L_out + p);
            tp.accum(wi, dy2.transpose() * (*im2col));
            tp.accum(bii, dy2.colwise().sum());
            if (auto* gx = tp.grad_buf(xi)) {
                Eigen::MatrixXd dcol = dy2 * tp.node(wi).val;  // (B*L_out) x (c_in*k)
                for (int b = 0; b < B; ++b)
                    for (int p = 0; p < L_out; ++p)
                        for (int ci = 0; ci < c_in; ++ci)
                            for (int k = 0; k < kernel; ++k) {
                                const int q = p * stride + k - pad;
                                if (q >= 0 && q < L)
                                    (*gx)(b, ci * L + q) +=
                                        dcol(b * L_out + p, ci * kernel + k);
                            }
            }
        };
    return t->make(std::move(v), tr, std::move(back));
}

Var rowblock_mean(Var a, int block_len) {
    Tape* t = a.tape;
    if (block_len < 1 || a.cols() % block_len != 0) shape_error("rowblock_mean", a);
    const int C = int(a.cols()) / block_len;
    const bool tr = tracked(a);
    const int ai = a.id, out = int(t->size());
    Eigen::MatrixXd v(a.rows(), C);
    for (int c = 0; c < C; ++c)
        v.col(c) = a.value().middleCols(c * block_len, block_len).rowwise().mean();
    std::function<void(Tape&)> back;
    if (tr)
        back = [=](Tape& tp) {
            const Eigen::MatrixXd& G = tp.node(out).grad;
            if (auto* gb = tp.grad_buf(ai)) {
                const double inv = 1.0 / double(block_len);
                for (int c = 0; c < C; ++c)
                    gb->middleCols(c * block_len, block_len).colwise() +=
                        (G.col(c) * inv).eval().col(0);
            }
        };
    return t->make(std::move(v), tr, std::move(back));
}

} // namespace linkforge
