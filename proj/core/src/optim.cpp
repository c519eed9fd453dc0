#include "srd/optim.hpp"

#include <stdexcept>
#include <string>

namespace srd {

Sgd::Sgd(std::vector<Tensor> params, SgdOptions options) : params_(std::move(params)), options_(options) {
    if (!(options_.learning_rate >= 0.0)) throw std::invalid_argument("sgd: learning rate must be nonnegative");
    if (!(options_.momentum >= 0.0 && options_.momentum < 1.0)) {
        throw std::invalid_argument("sgd: momentum must lie in [0, 1)");
    }
    if (!(options_.weight_decay >= 0.0)) throw std::invalid_argument("sgd: weight decay must be nonnegative");
    velocity_.reserve(params_.size());
    for (const auto& p : params_) velocity_.emplace_back(p.numel(), 0.0);
}

void Sgd::set_learning_rate(double lr) {
    if (!(lr >= 0.0)) throw std::invalid_argument("sgd: learning rate must be nonnegative");
    options_.learning_rate = lr;
}

void Sgd::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (!params_[i].has_grad()) {
            throw std::logic_error("sgd: parameter " + std::to_string(i) + " " +
                                   shape_to_string(params_[i].shape()) + " has no gradient buffer");
        }
    }
    const double mu = options_.momentum, wd = options_.weight_decay, lr = options_.learning_rate;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto theta = params_[i].mutable_values();
        auto grad = params_[i].grad();
        auto& v = velocity_[i];
        for (std::size_t j = 0; j < theta.size(); ++j) {
            v[j] = mu * v[j] + (grad[j] + wd * theta[j]);
            theta[j] -= lr * v[j];
        }
        params_[i].zero_grad();
    }
}

double step_decay_lr(double base_lr, double decay, const std::vector<std::size_t>& milestones, std::size_t epoch) {
    double lr = base_lr;
    for (std::size_t m : milestones) {
        if (epoch >= m) lr *= decay;
    }
    return lr;
}

}  // namespace srd
