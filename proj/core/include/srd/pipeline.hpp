#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "srd/config.hpp"
#include "srd/data.hpp"
#include "srd/distill.hpp"
#include "srd/metrics.hpp"
#include "srd/nn.hpp"

namespace srd {

PairSpec pair_spec(const ExperimentConfig& cfg, std::uint64_t seed);
PretrainOptions pretrain_options(const ExperimentConfig& cfg, std::uint64_t seed);

/// Builds the teacher for `seed` and pretrains it on the labeled pool. The
/// accuracy floor is checked against the test split.
Network pretrain_for_seed(const ExperimentConfig& cfg, const OpenSetDataset& data, std::uint64_t seed);

struct SeedResult {
    std::uint64_t seed = 0;
    std::vector<MetricsRecord> records;  // one per epoch
    std::vector<UsageStats> usage;       // one per epoch, OOD modes only
    double final_acc = 0.0;              // mean test top-1 over the last report_last epochs
    double final_mimicry = 0.0;          // same window for mimicry KL
    double teacher_acc = 0.0;
    std::optional<double> detector_auc;  // OOD modes, against hidden IND flags
    std::size_t unlabeled_used = 0;      // pool rows available to training after selection
    std::vector<NamedTensor> student_state;
    std::vector<NamedTensor> adaptor_state;
};

/// Optional per-epoch observer, called after each MetricsRecord is complete.
using EpochHook = std::function<void(const MetricsRecord&)>;

/// Stage 2 for one seed with the configured mode. `teacher` must be frozen.
/// Throws ConfigError when the mode needs unlabeled data that is unavailable.
SeedResult train_with_mode(const ExperimentConfig& cfg, const OpenSetDataset& data, Network& teacher,
                           std::uint64_t seed, const EpochHook& hook = {});

bool mode_uses_srd(TrainMode mode);
bool mode_uses_kd(TrainMode mode);
bool mode_uses_ood(TrainMode mode);
bool mode_uses_dac(TrainMode mode);
/// Whether the mode reads the unlabeled pool under this config.
bool mode_uses_unlabeled(const ExperimentConfig& cfg, const OpenSetDataset& data);

}  // namespace srd
