#pragma once

#include "linkforge/tape.hpp"

namespace linkforge {

// Contrastive alignment of two L2-normalized embedding batches with matching
// rows. Logits are cosine similarities divided by the learnable temperature
// tau (passed as log tau, a 1x1 tape node shared across both loss terms).
//
// One-sided form (default): mean over rows of -log softmax(row)[diagonal].
// Symmetric form averages that with the same loss on the transposed logits.
Var clip_loss(Var emb_a, Var emb_b, Var log_tau, bool symmetric = false);

// clip(a, b) + gamma * clip(b, c): the retrieval alignment plus the
// partial-curve alignment, sharing one temperature.
Var total_loss(Var mech_emb, Var full_emb, Var partial_emb, Var log_tau,
               double gamma = 1.0, bool symmetric = false);

} // namespace linkforge
