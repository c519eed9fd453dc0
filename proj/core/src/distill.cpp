#include "srd/distill.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "srd/metrics.hpp"
#include "srd/ops.hpp"

namespace srd {

std::string to_string(SrdVariant variant) {
    switch (variant) {
        case SrdVariant::kl: return "kl";
        case SrdVariant::mse: return "mse";
        case SrdVariant::pmse: return "pmse";
    }
    return "mse";
}

SrdVariant parse_srd_variant(const std::string& text) {
    if (text == "kl") return SrdVariant::kl;
    if (text == "mse") return SrdVariant::mse;
    if (text == "pmse") return SrdVariant::pmse;
    throw std::invalid_argument("unknown SRD variant '" + text + "' (expected kl, mse or pmse)");
}

Tensor cross_network_logit(const Tensor& student_features, Adaptor& adaptor, const Classifier& teacher_head,
                           Mode mode) {
    if (adaptor.out_dim() != teacher_head.feature_dim()) {
        throw DimensionError("cross_network_logit: adaptor emits " + std::to_string(adaptor.out_dim()) +
                             " features but the teacher classifier expects " +
                             std::to_string(teacher_head.feature_dim()));
    }
    if (teacher_head.weight.requires_grad()) {
        throw std::logic_error("cross_network_logit: teacher classifier must be frozen");
    }
    return teacher_head.logits(adaptor.adapt(student_features, mode));
}

Tensor srd_kl(const Tensor& teacher_logits, const Tensor& cross_logits) {
    require_finite(teacher_logits, "srd_kl");
    return kl_alignment(softmax(teacher_logits.detach()), softmax(cross_logits));
}

Tensor srd_mse(const Tensor& teacher_logits, const Tensor& cross_logits) {
    return mse(teacher_logits.detach(), cross_logits);
}

Tensor srd_pmse(const Tensor& teacher_logits, const Tensor& cross_logits) {
    return mse(softmax(teacher_logits.detach()), softmax(cross_logits));
}

Tensor srd_loss(SrdVariant variant, const Tensor& teacher_logits, const Tensor& cross_logits) {
    switch (variant) {
        case SrdVariant::kl: return srd_kl(teacher_logits, cross_logits);
        case SrdVariant::mse: return srd_mse(teacher_logits, cross_logits);
        case SrdVariant::pmse: return srd_pmse(teacher_logits, cross_logits);
    }
    throw std::logic_error("unreachable SRD variant");
}

Tensor feature_reg(const Tensor& teacher_features, const Tensor& adapted_features) {
    if (teacher_features.shape() != adapted_features.shape()) {
        throw DimensionError("feature_reg: shape mismatch " + shape_to_string(teacher_features.shape()) + " vs " +
                             shape_to_string(adapted_features.shape()));
    }
    return mean(row_norm(sub(adapted_features, teacher_features.detach())));
}

namespace {

ObjectiveTerms objective(const StepBatch& batch, DistillModels m, const SrdConfig& cfg, bool use_unlabeled) {
    if (batch.labels.empty() || batch.labeled_inputs.rows() != batch.labels.size()) {
        throw std::invalid_argument("objective: labeled sub-batch is empty or does not match its labels");
    }
    if (!m.teacher.frozen()) throw std::logic_error("objective: teacher must be frozen during distillation");
    const std::size_t n_labeled = batch.labels.size();
    Tensor inputs = batch.labeled_inputs;
    if (use_unlabeled && batch.unlabeled_inputs) inputs = concat_rows(inputs, *batch.unlabeled_inputs);

    ForwardResult student = m.student.forward(inputs, Mode::train);
    ForwardResult teacher = m.teacher.forward(inputs, Mode::eval);

    Tensor labeled_logits =
        inputs.rows() == n_labeled ? student.logits : slice_rows(student.logits, 0, n_labeled);
    Tensor ce = cross_entropy(softmax(labeled_logits), one_hot(batch.labels, m.student.num_classes()));

    Tensor adapted = m.adaptor.adapt(student.features, Mode::train);
    Tensor cross = m.teacher.classifier().logits(adapted);
    Tensor distill = srd_loss(cfg.variant, teacher.logits, cross);
    Tensor reg = feature_reg(teacher.features, adapted);

    Tensor total = add(add(ce, scale(distill, cfg.alpha)), scale(reg, cfg.beta));
    return {total, ce.item(), distill.item(), reg.item()};
}

}  // namespace

ObjectiveTerms labeled_objective(const StepBatch& batch, DistillModels models, const SrdConfig& cfg) {
    return objective(batch, models, cfg, false);
}

ObjectiveTerms semi_objective(const StepBatch& batch, DistillModels models, const SrdConfig& cfg) {
    return objective(batch, models, cfg, true);
}

StepMetrics train_step(const StepBatch& batch, DistillModels models, Sgd& optimizer, const SrdConfig& cfg,
                       std::size_t iteration) {
    try {
        ObjectiveTerms terms = semi_objective(batch, models, cfg);
        const double total = terms.total.item();
        if (!std::isfinite(total)) throw NumericError("objective is not finite");
        backward(terms.total);
        optimizer.step();
        return {iteration, terms.ce, terms.srd, terms.reg, total};
    } catch (const NumericError& e) {
        throw NumericError("iteration " + std::to_string(iteration) + ": " + e.what());
    }
}

AccuracyFloorError::AccuracyFloorError(double accuracy, double floor)
    : std::runtime_error([&] {
          std::ostringstream msg;
          msg << "teacher held-out accuracy " << accuracy << " is below the floor " << floor;
          return msg.str();
      }()),
      accuracy_(accuracy),
      floor_(floor) {}

double evaluate_accuracy(Network& net, const LabeledPool& pool) {
    if (pool.size() == 0) throw std::invalid_argument("evaluate_accuracy: empty pool");
    Tensor logits = net.forward(pool.inputs.to_tensor(), Mode::eval).logits;
    return top_k_accuracy(logits, pool.labels, 1);
}

Network& pretrain_teacher(const LabeledPool& train, const LabeledPool& held_out, Network& net,
                          const PretrainOptions& options) {
    if (train.size() == 0) throw std::invalid_argument("pretrain_teacher: empty labeled pool");
    if (options.epochs > 0) {
        Sgd optimizer(net.parameters(), options.sgd);
        BatchSampler sampler(train.size(), 0, {options.batch_size, 0, make_rng(options.seed, stream::kTeacherSampler)()});
        Rng jitter_rng = make_rng(options.seed, stream::kAugment);
        std::size_t iteration = 0;
        for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
            optimizer.set_learning_rate(
                step_decay_lr(options.sgd.learning_rate, options.lr_decay, options.milestones, epoch));
            for (const auto& batch : sampler.epoch(epoch)) {
                Matrix x = train.inputs.subset(batch.labeled);
                if (options.train_jitter > 0.0) x = jitter_rows(x, options.train_jitter, jitter_rng);
                std::vector<int> labels;
                for (std::size_t i : batch.labeled) labels.push_back(train.labels[i]);
                ForwardResult out = net.forward(x.to_tensor(), Mode::train);
                Tensor loss = cross_entropy(softmax(out.logits), one_hot(labels, net.num_classes()));
                if (!std::isfinite(loss.item())) {
                    throw NumericError("pretrain iteration " + std::to_string(iteration) + ": loss is not finite");
                }
                backward(loss);
                optimizer.step();
                ++iteration;
            }
        }
    }
    net.freeze();
    if (options.accuracy_floor && options.epochs > 0) {
        const double acc = evaluate_accuracy(net, held_out);
        if (acc < *options.accuracy_floor) throw AccuracyFloorError(acc, *options.accuracy_floor);
    }
    return net;
}

}  // namespace srd
