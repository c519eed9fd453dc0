#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "srd/config.hpp"
#include "srd/data.hpp"
#include "srd/nn.hpp"
#include "srd/pipeline.hpp"

namespace srd {

struct SeedSummary {
    std::uint64_t seed = 0;
    double teacher_acc = 0.0;
    double final_acc = 0.0;
    double final_mimicry = 0.0;
    std::optional<double> detector_auc;
};

struct RunSummary {
    std::filesystem::path dir;
    std::string run_id;
    TrainMode mode = TrainMode::srd;
    std::uint64_t dataset_seed = 0;
    bool use_unlabeled = true;
    double fraction = 1.0;
    SelectionPolicy policy = SelectionPolicy::random;
    std::vector<SeedSummary> seeds;
    double acc_mean = 0.0;
    double acc_std = 0.0;
    double mimicry_mean = 0.0;
    double mimicry_std = 0.0;
};

inline constexpr const char* kSummaryHeader =
    "run_id,mode,dataset_seed,use_unlabeled,fraction,policy,seeds,acc_mean,acc_std,mimicry_mean,mimicry_std";
inline constexpr const char* kSeedsHeader = "seed,teacher_acc,final_acc,final_mimicry_kl,detector_auc";

/// Sample mean and standard deviation (n-1 denominator; 0 for a single value).
std::pair<double, double> mean_std(const std::vector<double>& values);

std::filesystem::path teacher_cache_dir(const ExperimentConfig& cfg);
/// Stable hash of everything that determines the pretrained teacher.
std::string teacher_cache_key(const ExperimentConfig& cfg, std::uint64_t seed);

/// Loads the cached teacher for `seed`, or pretrains and caches it. The result is frozen.
Network obtain_teacher(const ExperimentConfig& cfg, const OpenSetDataset& data, std::uint64_t seed,
                       bool* loaded_from_cache = nullptr);

/// Both stages for every configured seed. Writes into cfg.run.output_dir:
///   config.resolved.ini, metrics.csv, seeds.csv, summary.csv,
///   usage_seed<N>.csv and usage_curve_seed<N>.csv (OOD modes),
///   checkpoints/student_seed<N>.ckpt (+ adaptor_seed<N>.ckpt).
RunSummary run(const ExperimentConfig& cfg);
RunSummary run(const ExperimentConfig& cfg, const OpenSetDataset& data);

struct SweepPoint {
    SelectionPolicy policy = SelectionPolicy::random;
    double fraction = 1.0;
    RunSummary summary;
};

struct SweepReport {
    std::vector<SweepPoint> points;  // config order: policies outer, fractions inner
    std::vector<std::pair<SelectionPolicy, bool>> nondecreasing;
    std::string markdown;
};

/// Accuracy slack allowed between adjacent sweep points (0.2 points).
inline constexpr double kSweepSlack = 0.002;
bool nondecreasing_with_slack(const std::vector<double>& values, double slack);

/// Runs cfg.run.mode with unlabeled data at every (policy, fraction) of the sweep
/// section. Entries run on up to cfg.run.jobs threads; output is merged in config order.
SweepReport sweep(const ExperimentConfig& cfg);

struct ComparisonRow {
    std::filesystem::path dir;
    std::string run_id;
    std::string mode;
    std::uint64_t dataset_seed = 0;
    std::size_t seeds = 0;
    double acc_mean = 0.0;
    double acc_std = 0.0;
    double mimicry_mean = 0.0;
    double mimicry_std = 0.0;
};

struct Comparison {
    std::vector<ComparisonRow> rows;
    std::string markdown() const;
    std::string csv() const;
};

/// Reads summary.csv from each completed run directory. Refuses runs whose
/// dataset seeds differ.
Comparison compare(const std::vector<std::filesystem::path>& dirs);

}  // namespace srd
