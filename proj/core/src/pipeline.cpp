#include "srd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "srd/baselines.hpp"
#include "srd/ops.hpp"
#include "srd/optim.hpp"

namespace srd {

PairSpec pair_spec(const ExperimentConfig& cfg, std::uint64_t seed) {
    PairSpec spec;
    spec.input_dim = cfg.dataset.input_dim;
    spec.num_classes = cfg.dataset.num_classes;
    spec.teacher_depth = cfg.model.teacher_depth;
    spec.teacher_width = cfg.model.teacher_width;
    spec.student_depth = cfg.model.student_depth;
    spec.student_width = cfg.model.student_width;
    spec.extractor_norm = cfg.model.batch_norm;
    spec.adaptor_norm = cfg.model.adaptor_norm;
    spec.seed = seed;
    return spec;
}

PretrainOptions pretrain_options(const ExperimentConfig& cfg, std::uint64_t seed) {
    PretrainOptions opt;
    opt.epochs = cfg.teacher.epochs;
    opt.batch_size = cfg.teacher.batch_size;
    opt.sgd = {cfg.teacher.lr, cfg.teacher.momentum, cfg.teacher.weight_decay};
    opt.milestones = cfg.teacher.milestones;
    opt.lr_decay = cfg.teacher.lr_decay;
    opt.train_jitter = cfg.teacher.jitter;
    if (cfg.teacher.accuracy_floor > 0.0) opt.accuracy_floor = cfg.teacher.accuracy_floor;
    opt.seed = seed;
    return opt;
}

Network pretrain_for_seed(const ExperimentConfig& cfg, const OpenSetDataset& data, std::uint64_t seed) {
    ModelPair pair = build_pair(pair_spec(cfg, seed));
    pretrain_teacher(data.labeled, data.test, pair.teacher, pretrain_options(cfg, seed));
    return std::move(pair.teacher);
}

bool mode_uses_srd(TrainMode m) {
    return m == TrainMode::srd || m == TrainMode::srd_kd || m == TrainMode::srd_ood || m == TrainMode::srd_dac;
}
bool mode_uses_kd(TrainMode m) {
    return m == TrainMode::kd || m == TrainMode::srd_kd || m == TrainMode::kd_ood || m == TrainMode::kd_dac;
}
bool mode_uses_ood(TrainMode m) { return m == TrainMode::kd_ood || m == TrainMode::srd_ood; }
bool mode_uses_dac(TrainMode m) { return m == TrainMode::kd_dac || m == TrainMode::srd_dac; }

bool mode_uses_unlabeled(const ExperimentConfig& cfg, const OpenSetDataset& data) {
    return cfg.run.mode != TrainMode::supervised && cfg.run.use_unlabeled && !data.unlabeled.empty();
}

namespace {

struct EpochSums {
    double ce = 0.0, srd = 0.0, reg = 0.0, total = 0.0;
    std::size_t steps = 0;
};

std::vector<std::size_t> iota_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

std::vector<std::size_t> labeled_positions_plus(std::size_t n_labeled, std::span<const std::size_t> kept) {
    std::vector<std::size_t> rows(n_labeled);
    std::iota(rows.begin(), rows.end(), 0);
    for (std::size_t k : kept) rows.push_back(n_labeled + k);
    return rows;
}

}  // namespace

SeedResult train_with_mode(const ExperimentConfig& cfg, const OpenSetDataset& data, Network& teacher,
                           std::uint64_t seed, const EpochHook& hook) {
    if (!teacher.frozen()) throw std::logic_error("train_with_mode: teacher must be frozen");
    const TrainMode mode = cfg.run.mode;
    const bool use_unlabeled = mode_uses_unlabeled(cfg, data);
    if ((mode_uses_ood(mode) || mode == TrainMode::pseudo_label) && !use_unlabeled) {
        throw ConfigError(0, "mode " + to_string(mode) +
                                 " needs a non-empty unlabeled pool and run.use_unlabeled = true");
    }
    const bool with_srd = mode_uses_srd(mode), with_kd = mode_uses_kd(mode), with_ood = mode_uses_ood(mode),
               with_dac = mode_uses_dac(mode), with_pl = mode == TrainMode::pseudo_label;

    UnlabeledPool pool;
    if (use_unlabeled) pool = select_unlabeled(data.unlabeled, cfg.run.fraction, cfg.run.policy, &teacher, seed);
    const std::vector<int> pool_pseudo = with_pl ? pseudo_labels(teacher, pool.inputs()) : std::vector<int>{};

    ModelPair pair = build_pair(pair_spec(cfg, seed));
    Network& student = pair.student;
    Adaptor& adaptor = pair.adaptor;
    if (adaptor.out_dim() != teacher.feature_dim()) {
        throw DimensionError("train_with_mode: teacher feature dim does not match the configured model");
    }
    std::optional<OodDetector> detector;
    if (with_ood) {
        Rng det_rng = make_rng(seed, stream::kDetectorInit);
        detector.emplace(teacher.feature_dim(), cfg.baselines.ood_threshold, det_rng);
    }

    std::vector<Tensor> params = student.parameters();
    if (with_srd) {
        for (auto& p : adaptor.parameters()) params.push_back(p);
    }
    if (detector) {
        for (auto& p : detector->parameters()) params.push_back(p);
    }
    const auto& sc = cfg.student;
    Sgd optimizer(params, {sc.lr, sc.momentum, sc.weight_decay});
    BatchSampler sampler(data.labeled.size(), pool.size(),
                         {sc.labeled_batch, sc.unlabeled_batch, make_rng(seed, stream::kStudentSampler)()});
    Rng jitter_rng = make_rng(seed, stream::kAugment);
    Rng negatives_rng = make_rng(seed, stream::kDetectorNegatives);
    Rng dac_rng = make_rng(seed, stream::kDacViews);

    // The frozen teacher is a fixed function of its input, so pool outputs are computed once.
    ForwardResult pool_teacher;
    if (!pool.empty()) pool_teacher = teacher.forward(pool.inputs().to_tensor(), Mode::eval);

    const Tensor test_inputs = data.test.inputs.to_tensor();
    const Tensor labeled_inputs = data.labeled.inputs.to_tensor();
    const Tensor teacher_test_logits = teacher.forward(test_inputs, Mode::eval).logits;
    const std::size_t K = student.num_classes();
    const std::size_t topk = std::min<std::size_t>(5, K);

    SeedResult result;
    result.seed = seed;
    result.unlabeled_used = pool.size();
    result.teacher_acc = top_k_accuracy(teacher_test_logits, data.test.labels, 1);
    std::size_t iteration = 0;

    for (std::size_t epoch = 0; epoch < sc.epochs; ++epoch) {
        optimizer.set_learning_rate(step_decay_lr(sc.lr, sc.lr_decay, sc.milestones, epoch));
        EpochSums sums;
        UsageStats usage;
        usage.epoch = epoch;
        for (const auto& batch : sampler.epoch(epoch)) {
            Matrix rows = data.labeled.inputs.subset(batch.labeled);
            if (sc.jitter > 0.0) rows = jitter_rows(rows, sc.jitter, jitter_rng);
            std::vector<int> labels;
            labels.reserve(batch.labeled.size());
            for (std::size_t i : batch.labeled) labels.push_back(data.labeled.labels[i]);
            const std::size_t n_l = labels.size();

            std::vector<std::size_t> pool_rows = batch.unlabeled;
            for (std::size_t i : pool_rows) rows.append_row(pool.inputs().row(i));
            // Labeled rows are jittered and need a fresh teacher pass; pool rows reuse the cache.
            ForwardResult t_out = teacher.forward(rows.subset(iota_rows(n_l)).to_tensor(), Mode::eval);
            if (!pool_rows.empty()) {
                t_out = {concat_rows(t_out.features, gather_rows(pool_teacher.features, pool_rows)),
                         concat_rows(t_out.logits, gather_rows(pool_teacher.logits, pool_rows))};
            }

            std::optional<Tensor> detector_loss;
            if (detector && !pool_rows.empty()) {
                const Tensor t_feats_u = slice_rows(t_out.features, n_l, pool_rows.size());
                OodFilterResult filt = ood_filter(*detector, t_feats_u, pool_rows, pool, epoch);
                usage += filt.stats;

                std::vector<std::size_t> negatives(pool_rows.size());
                std::iota(negatives.begin(), negatives.end(), 0);
                std::shuffle(negatives.begin(), negatives.end(), negatives_rng);
                negatives.resize(std::min(cfg.baselines.ood_negatives, negatives.size()));
                std::sort(negatives.begin(), negatives.end());
                detector_loss = detector->loss(slice_rows(t_out.features, 0, n_l), gather_rows(t_feats_u, negatives));

                if (filt.kept.size() != pool_rows.size()) {
                    const auto keep = labeled_positions_plus(n_l, filt.kept);
                    rows = rows.subset(keep);
                    t_out = {gather_rows(t_out.features, keep), gather_rows(t_out.logits, keep)};
                    std::vector<std::size_t> kept_rows;
                    for (std::size_t k : filt.kept) kept_rows.push_back(pool_rows[k]);
                    pool_rows = std::move(kept_rows);
                }
            }
            const std::size_t n_u = pool_rows.size();

            const Tensor inputs = rows.to_tensor();
            ForwardResult s_out = student.forward(inputs, Mode::train);
            const Tensor labeled_logits = n_u == 0 ? s_out.logits : slice_rows(s_out.logits, 0, n_l);
            Tensor ce = cross_entropy(softmax(labeled_logits), one_hot(labels, K));
            Tensor total = ce;
            double srd_value = 0.0, reg_value = 0.0;

            if (with_pl && n_u > 0) {
                std::vector<int> targets;
                for (std::size_t i : pool_rows) targets.push_back(pool_pseudo[i]);
                Tensor pl = cross_entropy(softmax(slice_rows(s_out.logits, n_l, n_u)), one_hot(targets, K));
                // Pseudo-labeled rows are treated as labeled: one mean over the union.
                const double share = static_cast<double>(n_u) / static_cast<double>(n_l + n_u);
                total = add(scale(ce, 1.0 - share), scale(pl, cfg.baselines.pseudo_weight * share));
            }
            if (with_srd) {
                Tensor adapted = adaptor.adapt(s_out.features, Mode::train);
                Tensor cross = teacher.classifier().logits(adapted);
                Tensor distill = srd_loss(cfg.srd.variant, t_out.logits, cross);
                Tensor reg = feature_reg(t_out.features, adapted);
                srd_value = distill.item();
                reg_value = reg.item();
                total = add(total, add(scale(distill, cfg.srd.alpha), scale(reg, cfg.srd.beta)));
            }
            if (with_kd) {
                Tensor kd = kd_loss(t_out.logits, s_out.logits, cfg.srd.kd_temperature);
                if (!with_srd) srd_value = kd.item();
                total = add(total, scale(kd, cfg.baselines.kd_weight));
            }
            if (with_dac) {
                total = add(total, scale(dac_loss(student, teacher, rows, cfg.baselines.dac_strength, dac_rng),
                                         cfg.baselines.dac_weight));
            }
            if (detector_loss) total = add(total, scale(*detector_loss, cfg.baselines.ood_weight));

            const double total_value = total.item();
            if (!std::isfinite(total_value)) {
                throw NumericError("iteration " + std::to_string(iteration) + ": objective is not finite");
            }
            backward(total);
            optimizer.step();
            sums.ce += ce.item();
            sums.srd += srd_value;
            sums.reg += reg_value;
            sums.total += total_value;
            ++sums.steps;
            ++iteration;
        }

        MetricsRecord rec;
        rec.run_id = cfg.run.run_id;
        rec.mode = to_string(mode);
        rec.seed = seed;
        rec.epoch = epoch;
        const double steps = static_cast<double>(std::max<std::size_t>(1, sums.steps));
        rec.ce = sums.ce / steps;
        rec.srd = sums.srd / steps;
        rec.reg = sums.reg / steps;
        rec.total = sums.total / steps;
        rec.train_acc = top_k_accuracy(student.forward(labeled_inputs, Mode::eval).logits, data.labeled.labels, 1);
        const Tensor test_logits = student.forward(test_inputs, Mode::eval).logits;
        rec.test_acc = top_k_accuracy(test_logits, data.test.labels, 1);
        rec.test_topk = top_k_accuracy(test_logits, data.test.labels, topk);
        rec.mimicry_kl = mimicry_kl_from_logits(teacher_test_logits, test_logits);
        result.records.push_back(rec);
        if (with_ood) result.usage.push_back(usage);
        if (hook) hook(rec);
    }

    const std::size_t window = std::min(sc.report_last, result.records.size());
    for (std::size_t i = result.records.size() - window; i < result.records.size(); ++i) {
        result.final_acc += result.records[i].test_acc;
        result.final_mimicry += result.records[i].mimicry_kl;
    }
    result.final_acc /= static_cast<double>(window);
    result.final_mimicry /= static_cast<double>(window);

    if (detector) {
        const Tensor feats = teacher.forward(pool.inputs().to_tensor(), Mode::eval).features;
        const Tensor scores = detector->score(feats);
        const auto truth = evaluation::reveal(pool);
        const bool has_ind = std::find(truth.is_ind.begin(), truth.is_ind.end(), 1) != truth.is_ind.end();
        const bool has_ood = std::find(truth.is_ind.begin(), truth.is_ind.end(), 0) != truth.is_ind.end();
        if (has_ind && has_ood) result.detector_auc = roc_auc(scores.values(), truth.is_ind);
    }
    result.student_state = student.state();
    if (with_srd) result.adaptor_state = adaptor.state();
    return result;
}

}  // namespace srd
