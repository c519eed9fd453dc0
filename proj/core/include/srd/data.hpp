#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srd/random.hpp"
#include "srd/tensor.hpp"

namespace srd {

class Network;

class DatasetError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Row-major sample matrix. May have zero rows.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    void append_row(std::span<const double> values);

    Tensor to_tensor() const;
    Tensor gather(std::span<const std::size_t> indices) const;
    Matrix subset(std::span<const std::size_t> indices) const;
};

/// Generator knobs. Seen classes are unions of Gaussian modes living in a
/// latent_dim-dimensional subspace of R^input_dim. Unseen classes are either
/// "near" (modes interpolated between two seen classes, overlapping their
/// support) or "far" (modes in a separate subspace).
struct DatasetParams {
    std::size_t num_classes = 8;
    std::size_t unseen_classes = 16;
    double overlap = 0.1;  // fraction of seen classes also present in the unlabeled pool
    std::size_t labeled_per_class = 50;
    std::size_t unlabeled_per_class = 100;
    std::size_t test_per_class = 500;
    std::size_t input_dim = 32;
    std::size_t latent_dim = 8;
    std::size_t modes_per_class = 8;
    double class_spread = 1.0;
    double noise = 0.15;
    double ambient_noise = 0.1;
    double near_fraction = 1.0;  // share of unseen classes placed near seen support
    // A near class mixes modes of two seen classes a, b as w*a + (1-w)*b with
    // w ~ U(near_mix_low, near_mix_high).
    double near_mix_low = 0.25;
    double near_mix_high = 0.75;
    std::uint64_t seed = 0;

    bool operator==(const DatasetParams&) const = default;
};

/// Unseen classes interpolate seen ones (hard OOD).
DatasetParams preset_near();
/// Unseen classes sit in an unrelated subspace (easy OOD).
DatasetParams preset_far();

struct LabeledPool {
    Matrix inputs;
    std::vector<int> labels;

    std::size_t size() const { return inputs.rows; }
};

/// Unlabeled samples. Training code sees inputs only; ground truth is reachable
/// solely through evaluation::reveal().
class UnlabeledPool {
public:
    UnlabeledPool() = default;
    UnlabeledPool(Matrix inputs, std::vector<int> hidden_class, std::vector<std::uint8_t> hidden_ind);

    const Matrix& inputs() const { return inputs_; }
    std::size_t size() const { return inputs_.rows; }
    bool empty() const { return inputs_.rows == 0; }
    UnlabeledPool subset(std::span<const std::size_t> indices) const;

private:
    friend struct HiddenTruthAccess;
    Matrix inputs_;
    std::vector<int> hidden_class_;
    std::vector<std::uint8_t> hidden_ind_;
};

struct OpenSetDataset {
    DatasetParams params;
    LabeledPool labeled;
    UnlabeledPool unlabeled;
    LabeledPool test;
    std::vector<int> seen_in_unlabeled;  // seen classes that also appear unlabeled
};

OpenSetDataset generate(const DatasetParams& params);

namespace evaluation {

/// Ground truth for unlabeled samples. Class tags >= num_classes are unseen.
struct HiddenTruth {
    std::span<const int> class_tags;
    std::span<const std::uint8_t> is_ind;
};

HiddenTruth reveal(const UnlabeledPool& pool);

}  // namespace evaluation

/// Gaussian jitter of standard deviation `strength`, then each coordinate's
/// sign is flipped with probability min(0.5, kAugmentFlipRate * strength).
inline constexpr double kAugmentFlipRate = 0.2;
std::vector<double> augment(std::span<const double> x, double strength, Rng& rng);
Matrix augment_rows(const Matrix& x, double strength, Rng& rng);
/// Gaussian jitter only; used as the ordinary train-time input perturbation.
Matrix jitter_rows(const Matrix& x, double sigma, Rng& rng);

enum class SelectionPolicy { random, teacher_score };

std::string to_string(SelectionPolicy policy);
SelectionPolicy parse_selection_policy(const std::string& text);

/// Indices kept by select_unlabeled, ascending.
std::vector<std::size_t> select_unlabeled_indices(const UnlabeledPool& pool, double fraction, SelectionPolicy policy,
                                                  Network* teacher, std::uint64_t seed);
UnlabeledPool select_unlabeled(const UnlabeledPool& pool, double fraction, SelectionPolicy policy, Network* teacher,
                               std::uint64_t seed);

/// Max softmax probability of the teacher for every row, evaluated in eval mode.
std::vector<double> teacher_confidence(Network& teacher, const Matrix& inputs);

struct SamplerOptions {
    std::size_t labeled_batch = 64;
    std::size_t unlabeled_batch = 128;
    std::uint64_t seed = 0;
};

struct IndexBatch {
    std::vector<std::size_t> labeled;
    std::vector<std::size_t> unlabeled;
};

/// Mixed-batch sampler. Every epoch visits each labeled sample once in a
/// shuffled order; unlabeled samples cycle through successive shuffles without
/// replacement. The batches of an epoch depend only on (seed, epoch index).
class BatchSampler {
public:
    BatchSampler(std::size_t labeled_count, std::size_t unlabeled_count, SamplerOptions options);

    std::size_t steps_per_epoch() const;
    std::vector<IndexBatch> epoch(std::size_t epoch_index) const;

private:
    std::size_t unlabeled_for(std::size_t labeled_in_batch) const;
    std::vector<std::size_t> unlabeled_cycle(std::size_t cycle) const;

    std::size_t labeled_count_;
    std::size_t unlabeled_count_;
    SamplerOptions options_;
    std::size_t unlabeled_per_epoch_ = 0;
};

// Binary file: text header with the generator params, then little-endian
// double blocks (labels and flags stored as doubles).
void save_dataset(const std::filesystem::path& path, const OpenSetDataset& dataset);
OpenSetDataset load_dataset(const std::filesystem::path& path);
/// One row per sample: split,label,hidden_class,is_ind,x0..x{d-1}.
void export_dataset_csv(const std::filesystem::path& path, const OpenSetDataset& dataset);

std::string describe(const DatasetParams& params);

}  // namespace srd
