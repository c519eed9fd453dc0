#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "srd/data.hpp"
#include "srd/nn.hpp"
#include "srd/tensor.hpp"

namespace srd {

/// Fraction of rows whose label is among the k largest logits. A class ranks
/// ahead of the label if its logit is larger, or equal with a lower index.
double top_k_accuracy(const Tensor& logits, std::span<const int> labels, std::size_t k);

/// Mean over rows of KL(softmax(teacher) || softmax(student)).
double mimicry_kl_from_logits(const Tensor& teacher_logits, const Tensor& student_logits);
double mimicry_kl(Network& teacher, Network& student, const Matrix& inputs);

/// Area under the ROC curve of `scores` against binary `positive` flags; tied
/// scores count half. Throws unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> positive);

/// Argmax per row; ties go to the lowest class index.
std::vector<int> argmax_rows(const Tensor& t);

/// One row per (run, epoch).
struct MetricsRecord {
    std::string run_id;
    std::string mode;
    std::uint64_t seed = 0;
    std::size_t epoch = 0;
    double ce = 0.0;
    double srd = 0.0;
    double reg = 0.0;
    double total = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    double test_topk = 0.0;
    double mimicry_kl = 0.0;
};

/// Unlabeled usage after OOD filtering for one epoch, split by hidden IND/OOD tags.
struct UsageStats {
    std::size_t epoch = 0;
    std::size_t kept_ind = 0;
    std::size_t kept_ood = 0;
    std::size_t dropped_ind = 0;
    std::size_t dropped_ood = 0;

    std::size_t total() const { return kept_ind + kept_ood + dropped_ind + dropped_ood; }
    UsageStats& operator+=(const UsageStats& other);
};

struct UsageProportion {
    std::size_t epoch = 0;
    double kept = 0.0;      // kept / seen
    double kept_ind = 0.0;  // kept IND / all IND
    double kept_ood = 0.0;  // kept OOD / all OOD
};

std::vector<UsageProportion> usage_curve(std::span<const UsageStats> stats);

/// 6 significant digits, the format of every metrics CSV.
std::string format_metric(double value);

inline constexpr const char* kMetricsHeader =
    "run_id,mode,seed,epoch,ce,srd,reg,total,train_acc,test_acc,test_topk,mimicry_kl";
inline constexpr const char* kUsageHeader = "epoch,kept_ind,kept_ood,dropped_ind,dropped_ood";
inline constexpr const char* kUsageCurveHeader = "epoch,kept,kept_ind,kept_ood";

std::string to_csv_row(const MetricsRecord& record);
std::string to_csv_row(const UsageStats& stats);
std::string to_csv_row(const UsageProportion& p);

/// Append-only CSV sink that writes its header when it creates the file.
class CsvLog {
public:
    CsvLog(const std::filesystem::path& path, const std::string& header);
    void append(const std::string& row);

private:
    std::ofstream out_;
};

void write_usage_curve(const std::filesystem::path& path, std::span<const UsageStats> stats);

/// CSV with columns f0..f{d-1},label; values written with 17 significant digits.
void feature_dump(Network& net, const LabeledPool& data, const std::filesystem::path& path);

struct FeatureRow {
    std::vector<double> features;
    int label = 0;
};
std::vector<FeatureRow> read_feature_dump(const std::filesystem::path& path);

}  // namespace srd
