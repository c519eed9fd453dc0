#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "srd/data.hpp"
#include "srd/metrics.hpp"
#include "srd/nn.hpp"
#include "srd/tensor.hpp"

namespace srd {

/// Temperature-softened logit matching, scaled by T^2:
///   T^2 * mean_rows( -sum softmax(z_t/T) log softmax(z_s/T) ).
Tensor kd_loss(const Tensor& teacher_logits, const Tensor& student_logits, double temperature);

/// Teacher argmax for every unlabeled row; ties go to the lowest class index.
LabeledPool pseudo_label(Network& teacher, const UnlabeledPool& pool);
std::vector<int> pseudo_labels(Network& teacher, const Matrix& inputs);

/// Binary IND/OOD scorer on teacher features: sigmoid(x w + b).
class OodDetector {
public:
    OodDetector(std::size_t teacher_dim, double threshold, Rng& rng);

    /// Scores in (0,1), shape [B×1].
    Tensor score(const Tensor& teacher_features) const;
    /// Mean BCE with `positives` labeled 1 and `negatives` labeled 0.
    Tensor loss(const Tensor& positives, const Tensor& negatives) const;

    std::vector<Tensor> parameters() const;
    std::vector<NamedTensor> state() const;
    double threshold() const { return threshold_; }
    void set_threshold(double tau) { threshold_ = tau; }

private:
    Affine head_;
    double threshold_;
};

struct OodFilterResult {
    std::vector<std::size_t> kept;     // positions within the batch
    std::vector<std::size_t> dropped;
    UsageStats stats;
};

/// Keeps rows with score >= threshold. `pool_rows[i]` is the pool index of batch
/// row i; it is used only to tally the usage statistics against hidden tags.
OodFilterResult ood_filter(const OodDetector& detector, const Tensor& teacher_features,
                           std::span<const std::size_t> pool_rows, const UnlabeledPool& pool, std::size_t epoch);

/// Negative batch-mean cosine similarity between student logits on view 2 and
/// teacher logits on view 1.
Tensor dac_loss(const Tensor& student_view2_logits, const Tensor& teacher_view1_logits);

struct DacViews {
    Matrix view1;
    Matrix view2;
};
DacViews make_views(const Matrix& inputs, double strength, Rng& rng);

/// Full DAC term for one batch: the teacher sees view 1, the student sees both
/// views (in one forward pass, so both shape its normalization statistics).
Tensor dac_loss(Network& student, Network& teacher, const Matrix& inputs, double strength, Rng& rng);

}  // namespace srd
