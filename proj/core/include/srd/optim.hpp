#pragma once

#include <cstddef>
#include <vector>

#include "srd/tensor.hpp"

namespace srd {

struct SgdOptions {
    double learning_rate = 0.05;
    double momentum = 0.9;
    double weight_decay = 5e-4;
};

/// SGD with heavy-ball momentum and L2 weight decay:
///   v <- momentum * v + (g + weight_decay * theta)
///   theta <- theta - learning_rate * v
/// Grads are zeroed after every step.
class Sgd {
public:
    Sgd(std::vector<Tensor> params, SgdOptions options);

    void step();
    void set_learning_rate(double lr);
    double learning_rate() const { return options_.learning_rate; }
    const SgdOptions& options() const { return options_; }
    const std::vector<Tensor>& params() const { return params_; }
    const std::vector<double>& velocity(std::size_t i) const { return velocity_[i]; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> velocity_;
    SgdOptions options_;
};

/// Step decay: lr = base * decay^(number of milestones <= epoch).
double step_decay_lr(double base_lr, double decay, const std::vector<std::size_t>& milestones, std::size_t epoch);

}  // namespace srd
