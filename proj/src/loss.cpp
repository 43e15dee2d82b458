#include "linkforge/loss.hpp"

#include "linkforge/errors.hpp"

namespace linkforge {

Var clip_loss(Var emb_a, Var emb_b, Var log_tau, bool symmetric) {
    if (emb_a.rows() != emb_b.rows() || emb_a.cols() != emb_b.cols())
        throw ShapeMismatchError("clip_loss: embedding shapes differ");
    Var scale = exp(neg(log_tau));  // 1 / tau
    Var logits = mul_scalar_var(scale, matmul_nt(emb_a, emb_b));
    Var fwd = neg(mean_all(take_diag(log_softmax_rows(logits))));
    if (!symmetric) return fwd;
    Var logits_t = mul_scalar_var(scale, matmul_nt(emb_b, emb_a));
    Var bwd = neg(mean_all(take_diag(log_softmax_rows(logits_t))));
    return scale_const(add(fwd, bwd), 0.5);
}

Var total_loss(Var mech_emb, Var full_emb, Var partial_emb, Var log_tau,
               double gamma, bool symmetric) {
    Var c1 = clip_loss(mech_emb, full_emb, log_tau, symmetric);
    Var c2 = clip_loss(full_emb, partial_emb, log_tau, symmetric);
    return add(c1, scale_const(c2, gamma));
}

} // namespace linkforge
