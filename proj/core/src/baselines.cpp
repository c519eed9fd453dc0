#include "srd/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "srd/ops.hpp"

namespace srd {

Tensor kd_loss(const Tensor& teacher_logits, const Tensor& student_logits, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("kd_loss: temperature must be positive");
    if (teacher_logits.shape() != student_logits.shape()) {
        throw DimensionError("kd_loss: logit shapes differ " + shape_to_string(teacher_logits.shape()) + " vs " +
                             shape_to_string(student_logits.shape()));
    }
    require_finite(teacher_logits, "kd_loss");
    require_finite(student_logits, "kd_loss");
    const double inv_t = 1.0 / temperature;
    const Tensor target = softmax(scale(teacher_logits.detach(), inv_t));
    return scale(kl_alignment(target, softmax(scale(student_logits, inv_t))), temperature * temperature);
}

std::vector<int> pseudo_labels(Network& teacher, const Matrix& inputs) {
    if (inputs.rows == 0) return {};
    return argmax_rows(teacher.forward(inputs.to_tensor(), Mode::eval).logits);
}

LabeledPool pseudo_label(Network& teacher, const UnlabeledPool& pool) {
    return {pool.inputs(), pseudo_labels(teacher, pool.inputs())};
}

OodDetector::OodDetector(std::size_t teacher_dim, double threshold, Rng& rng)
    : head_(teacher_dim, 1, true, 1.0 / std::sqrt(static_cast<double>(teacher_dim)), rng), threshold_(threshold) {
    if (threshold < 0.0 || threshold > 1.0) throw std::invalid_argument("OodDetector: threshold must lie in [0, 1]");
}

Tensor OodDetector::score(const Tensor& teacher_features) const {
    return sigmoid(head_.forward(teacher_features.detach()));
}

Tensor OodDetector::loss(const Tensor& positives, const Tensor& negatives) const {
    const Tensor feats = concat_rows(positives.detach(), negatives.detach());
    std::vector<double> targets(feats.rows(), 0.0);
    std::fill(targets.begin(), targets.begin() + static_cast<std::ptrdiff_t>(positives.rows()), 1.0);
    return binary_cross_entropy(score(feats), Tensor({feats.rows()}, std::move(targets)));
}

std::vector<Tensor> OodDetector::parameters() const { return {head_.weight, *head_.bias}; }

std::vector<NamedTensor> OodDetector::state() const {
    return {{"detector.weight", head_.weight}, {"detector.bias", *head_.bias}};
}

OodFilterResult ood_filter(const OodDetector& detector, const Tensor& teacher_features,
                           std::span<const std::size_t> pool_rows, const UnlabeledPool& pool, std::size_t epoch) {
    OodFilterResult result;
    result.stats.epoch = epoch;
    if (pool_rows.empty()) return result;
    if (teacher_features.rows() != pool_rows.size()) {
        throw DimensionError("ood_filter: feature rows do not match the batch index list");
    }
    const Tensor scores = detector.score(teacher_features);
    const auto truth = evaluation::reveal(pool);
    for (std::size_t i = 0; i < pool_rows.size(); ++i) {
        const bool keep = scores.values()[i] >= detector.threshold();
        (keep ? result.kept : result.dropped).push_back(i);
        const bool ind = truth.is_ind[pool_rows[i]] != 0;
        if (keep) {
            ++(ind ? result.stats.kept_ind : result.stats.kept_ood);
        } else {
            ++(ind ? result.stats.dropped_ind : result.stats.dropped_ood);
        }
    }
    return result;
}

Tensor dac_loss(const Tensor& student_view2_logits, const Tensor& teacher_view1_logits) {
    return scale(mean(row_cosine(student_view2_logits, teacher_view1_logits.detach())), -1.0);
}

DacViews make_views(const Matrix& inputs, double strength, Rng& rng) {
    Matrix v1 = augment_rows(inputs, strength, rng);
    Matrix v2 = augment_rows(inputs, strength, rng);
    return {std::move(v1), std::move(v2)};
}

Tensor dac_loss(Network& student, Network& teacher, const Matrix& inputs, double strength, Rng& rng) {
    if (inputs.rows == 0) throw std::invalid_argument("dac_loss: empty batch");
    DacViews views = make_views(inputs, strength, rng);
    const Tensor teacher_logits = teacher.forward(views.view1.to_tensor(), Mode::eval).logits;
    const Tensor both = concat_rows(views.view1.to_tensor(), views.view2.to_tensor());
    const Tensor student_logits = student.forward(both, Mode::train).logits;
    return dac_loss(slice_rows(student_logits, inputs.rows, inputs.rows), teacher_logits);
}

}  // namespace srd
