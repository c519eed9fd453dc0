#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "srd/tensor.hpp"

namespace srd {

/// Floor applied inside every log() of a probability.
inline constexpr double kLogFloor = 1e-12;

// Dense algebra.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// a[B×n] + bias[n] broadcast over rows.
Tensor add_bias(const Tensor& a, const Tensor& bias);

// Element-wise nonlinearities.
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);

// Reductions to a scalar.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// Row-structured ops. A rank-1 tensor counts as a single row.
Tensor softmax(const Tensor& logits);
Tensor log_softmax(const Tensor& logits);
/// Euclidean norm of every row: [B×n] -> [B]. Gradient is guarded at zero.
Tensor row_norm(const Tensor& a);
/// Cosine similarity of matching rows: [B×n],[B×n] -> [B]. Denominator floored by eps.
Tensor row_cosine(const Tensor& a, const Tensor& b, double eps = 1e-12);
Tensor concat_rows(const Tensor& top, const Tensor& bottom);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);

// Losses. Batched inputs return the mean over rows.

/// -sum_k y_k log p_k with the log floored at kLogFloor.
Tensor cross_entropy(const Tensor& probs, const Tensor& targets);
/// -sum_k p_target,k log p_pred,k; p_target is treated as a constant.
Tensor kl_alignment(const Tensor& p_target, const Tensor& p_pred);
/// Squared L2 distance summed over the last dimension, averaged over rows.
Tensor mse(const Tensor& a, const Tensor& b);
/// Mean binary cross-entropy of probabilities against {0,1} targets.
Tensor binary_cross_entropy(const Tensor& probs, const Tensor& targets);

struct BatchNormState {
    std::span<double> running_mean;
    std::span<double> running_var;
    double momentum = 0.9;
    double eps = 1e-5;
};

/// Per-column normalization of x[B×n] followed by gamma*x + beta.
///
/// In training mode the batch statistics are used and the running estimates
/// are updated as running = momentum*running + (1-momentum)*batch. In eval
/// mode the running estimates are used and nothing is mutated.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  const BatchNormState& state, bool training);

/// One-hot matrix [labels.size() × num_classes].
Tensor one_hot(std::span<const int> labels, std::size_t num_classes);

/// Mean over rows of the entropy of probability rows, floored like the losses.
double mean_entropy(const Tensor& probs);

void require_finite(const Tensor& t, const char* what);

}  // namespace srd
