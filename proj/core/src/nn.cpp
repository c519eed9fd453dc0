#include "srd/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace srd {
namespace {

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> values(shape_numel(shape));
    for (double& v : values) v = dist(rng);
    return Tensor(std::move(shape), std::move(values), true);
}

Tensor deep_copy(const Tensor& t) {
    return Tensor(t.shape(), std::vector<double>(t.values().begin(), t.values().end()), t.requires_grad());
}

Affine deep_copy(const Affine& a) {
    Affine out = a;
    out.weight = deep_copy(a.weight);
    if (a.bias) out.bias = deep_copy(*a.bias);
    return out;
}

BatchNorm deep_copy(const BatchNorm& n) {
    BatchNorm out = n;
    out.gamma = deep_copy(n.gamma);
    out.beta = deep_copy(n.beta);
    out.running_mean = deep_copy(n.running_mean);
    out.running_var = deep_copy(n.running_var);
    return out;
}

void append_norm_state(const BatchNorm& norm, std::vector<NamedTensor>& out, const std::string& prefix) {
    out.push_back({prefix + "gamma", norm.gamma});
    out.push_back({prefix + "beta", norm.beta});
    out.push_back({prefix + "running_mean", norm.running_mean});
    out.push_back({prefix + "running_var", norm.running_var});
}

}  // namespace

Affine::Affine(std::size_t in, std::size_t out, bool with_bias, double bound, Rng& rng)
    : weight(uniform_tensor({in, out}, bound, rng)) {
    if (with_bias) bias = uniform_tensor({out}, bound, rng);
}

Tensor Affine::forward(const Tensor& x) const {
    if (x.rank() != 2 || x.cols() != in_dim()) {
        throw DimensionError("affine: input " + shape_to_string(x.shape()) + " does not match weight " +
                             shape_to_string(weight.shape()));
    }
    Tensor y = matmul(x, weight);
    return bias ? add_bias(y, *bias) : y;
}

BatchNorm::BatchNorm(std::size_t width, double momentum_, double eps_)
    : gamma(Tensor::full({width}, 1.0, true)),
      beta(Tensor::zeros({width}, true)),
      running_mean(Tensor::zeros({width})),
      running_var(Tensor::full({width}, 1.0)),
      momentum(momentum_),
      eps(eps_) {}

Tensor BatchNorm::forward(const Tensor& x, Mode mode) {
    BatchNormState state{running_mean.mutable_values(), running_var.mutable_values(), momentum, eps};
    return batch_norm(x, gamma, beta, state, mode == Mode::train);
}

FeatureExtractor::FeatureExtractor(const ExtractorSpec& spec, Rng& rng) : input_dim_(spec.input_dim) {
    if (spec.hidden.empty()) throw std::invalid_argument("feature extractor needs at least one layer");
    std::size_t in = spec.input_dim;
    for (std::size_t width : spec.hidden) {
        if (width == 0) throw std::invalid_argument("feature extractor layer width must be positive");
        layers_.emplace_back(in, width, true, 1.0 / std::sqrt(static_cast<double>(in)), rng);
        if (spec.batch_norm) {
            norms_.emplace_back(BatchNorm(width));
        } else {
            norms_.emplace_back(std::nullopt);
        }
        in = width;
    }
}

Tensor FeatureExtractor::forward(const Tensor& x, Mode mode) {
    if (x.rank() != 2 || x.cols() != input_dim_) {
        throw DimensionError("feature extractor: batch " + shape_to_string(x.shape()) + " does not match input width " +
                             std::to_string(input_dim_));
    }
    Tensor h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        h = layers_[i].forward(h);
        if (norms_[i]) h = norms_[i]->forward(h, mode);
        h = relu(h);
    }
    return h;
}

std::vector<Tensor> FeatureExtractor::parameters() const {
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        out.push_back(layers_[i].weight);
        if (layers_[i].bias) out.push_back(*layers_[i].bias);
        if (norms_[i]) {
            out.push_back(norms_[i]->gamma);
            out.push_back(norms_[i]->beta);
        }
    }
    return out;
}

void FeatureExtractor::append_state(std::vector<NamedTensor>& out, const std::string& prefix) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const std::string p = prefix + std::to_string(i) + ".";
        out.push_back({p + "weight", layers_[i].weight});
        if (layers_[i].bias) out.push_back({p + "bias", *layers_[i].bias});
        if (norms_[i]) append_norm_state(*norms_[i], out, p + "norm.");
    }
}

Classifier::Classifier(std::size_t feature_dim, std::size_t num_classes, Rng& rng)
    : weight(uniform_tensor({feature_dim, num_classes}, 1.0 / std::sqrt(static_cast<double>(feature_dim)), rng)) {}

Tensor Classifier::logits(const Tensor& features) const {
    if (features.rank() != 2 || features.cols() != feature_dim()) {
        throw DimensionError("classifier: features " + shape_to_string(features.shape()) +
                             " do not match weight " + shape_to_string(weight.shape()));
    }
    return matmul(features, weight);
}

Network::Network(FeatureExtractor extractor, Classifier classifier)
    : extractor_(std::move(extractor)), classifier_(std::move(classifier)) {
    if (extractor_.feature_dim() != classifier_.feature_dim()) {
        throw DimensionError("network: extractor width " + std::to_string(extractor_.feature_dim()) +
                             " does not match classifier input " + std::to_string(classifier_.feature_dim()));
    }
}

ForwardResult Network::forward(const Tensor& batch, Mode mode) {
    if (frozen_) mode = Mode::eval;
    Tensor features = extractor_.forward(batch, mode);
    Tensor logits = classifier_.logits(features);
    return {std::move(features), std::move(logits)};
}

void Network::freeze() {
    for (auto& p : parameters()) p.set_requires_grad(false);
    frozen_ = true;
}

std::vector<Tensor> Network::parameters() const {
    auto out = extractor_.parameters();
    out.push_back(classifier_.weight);
    return out;
}

std::vector<NamedTensor> Network::state() const {
    std::vector<NamedTensor> out;
    extractor_.append_state(out, "extractor.");
    out.push_back({"classifier.weight", classifier_.weight});
    return out;
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.numel();
    return n;
}

Network Network::clone() const {
    Network out = *this;
    for (auto& layer : out.extractor_.layers_) layer = deep_copy(layer);
    for (auto& norm : out.extractor_.norms_) {
        if (norm) norm = deep_copy(*norm);
    }
    out.classifier_.weight = deep_copy(classifier_.weight);
    return out;
}

Adaptor::Adaptor(std::size_t student_dim, std::size_t teacher_dim, bool normalize, Rng& rng)
    : linear(student_dim, teacher_dim, true, 1.0 / std::sqrt(static_cast<double>(student_dim)), rng) {
    if (normalize) norm.emplace(teacher_dim);
}

Tensor Adaptor::adapt(const Tensor& student_features, Mode mode) {
    if (student_features.rank() != 2 || student_features.cols() != in_dim()) {
        throw DimensionError("adaptor: features " + shape_to_string(student_features.shape()) +
                             " do not match input width " + std::to_string(in_dim()));
    }
    Tensor h = linear.forward(student_features);
    if (norm) h = norm->forward(h, mode);
    return relu(h);
}

std::vector<Tensor> Adaptor::parameters() const {
    std::vector<Tensor> out{linear.weight};
    if (linear.bias) out.push_back(*linear.bias);
    if (norm) {
        out.push_back(norm->gamma);
        out.push_back(norm->beta);
    }
    return out;
}

std::vector<NamedTensor> Adaptor::state() const {
    std::vector<NamedTensor> out{{"adaptor.weight", linear.weight}};
    if (linear.bias) out.push_back({"adaptor.bias", *linear.bias});
    if (norm) append_norm_state(*norm, out, "adaptor.norm.");
    return out;
}

Network build_network(std::size_t input_dim, std::size_t depth, std::size_t width, std::size_t num_classes,
                      bool batch_norm, Rng& rng) {
    if (depth == 0 || width == 0) throw std::invalid_argument("network depth and width must be positive");
    ExtractorSpec spec{input_dim, std::vector<std::size_t>(depth, width), batch_norm};
    FeatureExtractor extractor(spec, rng);
    Classifier classifier(width, num_classes, rng);
    return Network(std::move(extractor), std::move(classifier));
}

ModelPair build_pair(const PairSpec& spec) {
    if (spec.num_classes < 2) throw std::invalid_argument("build_pair: need at least 2 classes");
    if (spec.teacher_width < 1 || spec.teacher_depth < 1) {
        throw std::invalid_argument("build_pair: teacher feature dimension must be at least 1");
    }
    if (spec.student_width < 1 || spec.student_depth < 1) {
        throw std::invalid_argument("build_pair: student feature dimension must be at least 1");
    }
    Rng teacher_rng = make_rng(spec.seed, stream::kTeacherInit);
    Rng student_rng = make_rng(spec.seed, stream::kStudentInit);
    Rng adaptor_rng = make_rng(spec.seed, stream::kAdaptorInit);
    Network teacher = build_network(spec.input_dim, spec.teacher_depth, spec.teacher_width, spec.num_classes,
                                    spec.extractor_norm, teacher_rng);
    Network student = build_network(spec.input_dim, spec.student_depth, spec.student_width, spec.num_classes,
                                    spec.extractor_norm, student_rng);
    if (teacher.parameter_count() < student.parameter_count()) {
        throw std::invalid_argument("build_pair: teacher has fewer parameters (" +
                                    std::to_string(teacher.parameter_count()) + ") than the student (" +
                                    std::to_string(student.parameter_count()) + ")");
    }
    Adaptor adaptor(spec.student_width, spec.teacher_width, spec.adaptor_norm, adaptor_rng);
    return {std::move(teacher), std::move(student), std::move(adaptor)};
}

}  // namespace srd
