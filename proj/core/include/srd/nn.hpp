#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "srd/ops.hpp"
#include "srd/random.hpp"
#include "srd/tensor.hpp"

namespace srd {

enum class Mode { train, eval };

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

/// y = x W + b with W stored [in × out]. Weight and bias start uniform in
/// [-bound, bound]; callers pass 1/sqrt(fan_in).
class Affine {
public:
    Affine(std::size_t in, std::size_t out, bool with_bias, double bound, Rng& rng);

    Tensor forward(const Tensor& x) const;
    std::size_t in_dim() const { return weight.shape()[0]; }
    std::size_t out_dim() const { return weight.shape()[1]; }

    Tensor weight;
    std::optional<Tensor> bias;
};

class BatchNorm {
public:
    explicit BatchNorm(std::size_t width, double momentum = 0.9, double eps = 1e-5);

    Tensor forward(const Tensor& x, Mode mode);

    Tensor gamma;
    Tensor beta;
    Tensor running_mean;  // never requires grad
    Tensor running_var;
    double momentum;
    double eps;
};

struct ExtractorSpec {
    std::size_t input_dim = 32;
    std::vector<std::size_t> hidden{256, 256};
    bool batch_norm = false;
};

/// Stack of affine → [batch norm] → ReLU blocks. The last block's output is the
/// representation handed to the classifier.
class FeatureExtractor {
public:
    FeatureExtractor(const ExtractorSpec& spec, Rng& rng);

    Tensor forward(const Tensor& x, Mode mode);
    std::size_t input_dim() const { return input_dim_; }
    std::size_t feature_dim() const { return layers_.back().out_dim(); }

    std::vector<Tensor> parameters() const;
    void append_state(std::vector<NamedTensor>& out, const std::string& prefix) const;

    std::vector<Affine>& layers() { return layers_; }

private:
    friend class Network;
    std::size_t input_dim_;
    std::vector<Affine> layers_;
    std::vector<std::optional<BatchNorm>> norms_;
};

/// Bias-free linear classifier: logits = x W, W is [d × K].
class Classifier {
public:
    Classifier(std::size_t feature_dim, std::size_t num_classes, Rng& rng);

    Tensor logits(const Tensor& features) const;
    std::size_t feature_dim() const { return weight.shape()[0]; }
    std::size_t num_classes() const { return weight.shape()[1]; }

    Tensor weight;
};

struct ForwardResult {
    Tensor features;
    Tensor logits;
};

class Network {
public:
    Network(FeatureExtractor extractor, Classifier classifier);

    /// Frozen networks always run with eval statistics and build no graph.
    ForwardResult forward(const Tensor& batch, Mode mode);
    ForwardResult forward_eval(const Tensor& batch) { return forward(batch, Mode::eval); }

    void freeze();
    bool frozen() const { return frozen_; }

    std::vector<Tensor> parameters() const;
    /// Trainable parameters plus normalization statistics, in checkpoint order.
    std::vector<NamedTensor> state() const;
    std::size_t parameter_count() const;
    /// Deep copy with independent storage.
    Network clone() const;

    FeatureExtractor& extractor() { return extractor_; }
    const Classifier& classifier() const { return classifier_; }
    Classifier& classifier() { return classifier_; }
    std::size_t input_dim() const { return extractor_.input_dim(); }
    std::size_t feature_dim() const { return extractor_.feature_dim(); }
    std::size_t num_classes() const { return classifier_.num_classes(); }

private:
    FeatureExtractor extractor_;
    Classifier classifier_;
    bool frozen_ = false;
};

/// Student-to-teacher feature map: affine d_s → d_t, optional batch norm, ReLU.
class Adaptor {
public:
    Adaptor(std::size_t student_dim, std::size_t teacher_dim, bool normalize, Rng& rng);

    Tensor adapt(const Tensor& student_features, Mode mode);
    std::size_t in_dim() const { return linear.in_dim(); }
    std::size_t out_dim() const { return linear.out_dim(); }

    std::vector<Tensor> parameters() const;
    std::vector<NamedTensor> state() const;

    Affine linear;
    std::optional<BatchNorm> norm;
};

struct PairSpec {
    std::size_t input_dim = 32;
    std::size_t num_classes = 8;
    std::size_t teacher_depth = 2;
    std::size_t teacher_width = 256;
    std::size_t student_depth = 2;
    std::size_t student_width = 32;
    bool extractor_norm = false;
    bool adaptor_norm = true;
    std::uint64_t seed = 0;
};

struct ModelPair {
    Network teacher;
    Network student;
    Adaptor adaptor;
};

/// Teacher, student and adaptor with independent seeded initialization.
/// The teacher comes back trainable; freeze it after pretraining.
ModelPair build_pair(const PairSpec& spec);

Network build_network(std::size_t input_dim, std::size_t depth, std::size_t width, std::size_t num_classes,
                      bool batch_norm, Rng& rng);

}  // namespace srd
