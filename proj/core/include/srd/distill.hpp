#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "srd/data.hpp"
#include "srd/nn.hpp"
#include "srd/optim.hpp"
#include "srd/tensor.hpp"

namespace srd {

enum class SrdVariant { kl, mse, pmse };

std::string to_string(SrdVariant variant);
SrdVariant parse_srd_variant(const std::string& text);

struct SrdConfig {
    SrdVariant variant = SrdVariant::mse;
    double alpha = 1.0;  // weight of the cross-network logit term
    double beta = 1.0;   // weight of the feature regularizer
    double kd_temperature = 4.0;
};

/// Teacher classifier applied to adapted student features. Gradients reach the
/// adaptor and the student; the frozen teacher classifier receives none.
Tensor cross_network_logit(const Tensor& student_features, Adaptor& adaptor, const Classifier& teacher_head,
                           Mode mode = Mode::train);

/// Cross-entropy of cross-network probabilities against teacher probabilities.
Tensor srd_kl(const Tensor& teacher_logits, const Tensor& cross_logits);
/// Squared distance between teacher logits and cross-network logits.
Tensor srd_mse(const Tensor& teacher_logits, const Tensor& cross_logits);
/// Squared distance between teacher and cross-network probabilities.
Tensor srd_pmse(const Tensor& teacher_logits, const Tensor& cross_logits);
Tensor srd_loss(SrdVariant variant, const Tensor& teacher_logits, const Tensor& cross_logits);

/// Batch mean of the (unsquared) L2 distance between teacher and adapted features.
Tensor feature_reg(const Tensor& teacher_features, const Tensor& adapted_features);

struct StepBatch {
    Tensor labeled_inputs;
    std::vector<int> labels;
    std::optional<Tensor> unlabeled_inputs;
};

/// References to the three models taking part in stage-2 training.
struct DistillModels {
    Network& student;
    Network& teacher;
    Adaptor& adaptor;
};

struct ObjectiveTerms {
    Tensor total;
    double ce = 0.0;
    double srd = 0.0;
    double reg = 0.0;
};

/// CE(student, labels) + alpha * L_srd + beta * R, all on the labeled batch.
ObjectiveTerms labeled_objective(const StepBatch& batch, DistillModels models, const SrdConfig& cfg);
/// CE on the labeled rows; L_srd and R on labeled ∪ unlabeled rows.
ObjectiveTerms semi_objective(const StepBatch& batch, DistillModels models, const SrdConfig& cfg);

struct StepMetrics {
    std::size_t iteration = 0;
    double ce = 0.0;
    double srd = 0.0;
    double reg = 0.0;
    double total = 0.0;
};

/// One iteration: forward student and teacher, cross-network logits, semi
/// objective, backward, SGD update of the student and adaptor.
StepMetrics train_step(const StepBatch& batch, DistillModels models, Sgd& optimizer, const SrdConfig& cfg,
                       std::size_t iteration);

class AccuracyFloorError : public std::runtime_error {
public:
    AccuracyFloorError(double accuracy, double floor);
    double accuracy() const { return accuracy_; }
    double floor() const { return floor_; }

private:
    double accuracy_;
    double floor_;
};

struct PretrainOptions {
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    SgdOptions sgd{};
    std::vector<std::size_t> milestones{};
    double lr_decay = 0.1;
    double train_jitter = 0.0;
    std::optional<double> accuracy_floor{};
    std::uint64_t seed = 0;
};

/// Supervised cross-entropy training of the teacher on the labeled pool, then
/// freeze. Throws AccuracyFloorError if held-out accuracy misses the floor.
Network& pretrain_teacher(const LabeledPool& train, const LabeledPool& held_out, Network& net,
                          const PretrainOptions& options);

/// Top-1 accuracy of `net` in eval mode.
double evaluate_accuracy(Network& net, const LabeledPool& pool);

}  // namespace srd
