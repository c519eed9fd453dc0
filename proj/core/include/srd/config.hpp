#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "srd/data.hpp"
#include "srd/distill.hpp"

namespace srd {

/// Parse or validation failure. line() is 0 for errors not tied to a line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, const std::string& message);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

enum class TrainMode { supervised, kd, srd, srd_kd, kd_ood, srd_ood, kd_dac, srd_dac, pseudo_label };

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& text);
const std::vector<TrainMode>& all_train_modes();

struct ModelSection {
    std::size_t teacher_depth = 2;
    std::size_t teacher_width = 256;
    std::size_t student_depth = 2;
    std::size_t student_width = 32;
    bool batch_norm = false;
    bool adaptor_norm = true;

    bool operator==(const ModelSection&) const = default;
};

struct TeacherSection {
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    double lr = 0.05;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::vector<std::size_t> milestones{50, 75};
    double lr_decay = 0.1;
    double jitter = 0.1;
    double accuracy_floor = 0.0;

    bool operator==(const TeacherSection&) const = default;
};

struct StudentSection {
    std::size_t epochs = 100;
    std::size_t labeled_batch = 64;
    std::size_t unlabeled_batch = 128;
    double lr = 0.05;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::vector<std::size_t> milestones{50, 75};
    double lr_decay = 0.1;
    double jitter = 0.1;
    std::size_t report_last = 10;  // final accuracy = mean over this many last epochs

    bool operator==(const StudentSection&) const = default;
};

struct BaselineSection {
    double kd_weight = 0.9;
    double ood_threshold = 0.5;
    double ood_weight = 1.0;
    std::size_t ood_negatives = 64;
    double dac_weight = 1.0;
    double dac_strength = 1.0;
    double pseudo_weight = 1.0;

    bool operator==(const BaselineSection&) const = default;
};

struct RunSection {
    TrainMode mode = TrainMode::srd;
    std::vector<std::uint64_t> seeds{0};
    bool use_unlabeled = true;
    double fraction = 1.0;
    SelectionPolicy policy = SelectionPolicy::random;
    std::string output_dir = "runs/default";
    std::string teacher_cache;  // empty: <output_dir>/teacher_cache
    std::string run_id = "run";
    std::size_t jobs = 1;

    bool operator==(const RunSection&) const = default;
};

struct SweepSection {
    std::vector<double> fractions{0.25, 0.5, 0.75, 1.0};
    std::vector<SelectionPolicy> policies{SelectionPolicy::random, SelectionPolicy::teacher_score};

    bool operator==(const SweepSection&) const = default;
};

struct ExperimentConfig {
    DatasetParams dataset{};
    ModelSection model{};
    TeacherSection teacher{};
    StudentSection student{};
    SrdConfig srd{};
    BaselineSection baselines{};
    RunSection run{};
    SweepSection sweep{};

    bool operator==(const ExperimentConfig& other) const;
};

/// Parses `[section]` headers and `key = value` lines; `#` starts a comment.
/// Unknown keys, malformed values and out-of-range values throw ConfigError
/// carrying the offending line number.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Every field, fully resolved; parse_config(emit_config(c)) == c.
std::string emit_config(const ExperimentConfig& cfg);

/// Cross-field checks (also run by parse_config).
void validate(const ExperimentConfig& cfg);

}  // namespace srd
