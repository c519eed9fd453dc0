#pragma once
// Central finite-difference checks for every differentiable operation. Shared by
// the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "srd/baselines.hpp"
#include "srd/distill.hpp"
#include "srd/nn.hpp"
#include "srd/ops.hpp"
#include "srd/random.hpp"
#include "srd/tensor.hpp"

namespace srd::testing {

inline constexpr double kFdStep = 1e-5;

struct GradCase {
    std::vector<Tensor> leaves;       // perturbed coordinates
    std::function<Tensor()> forward;  // any output shape
};

struct GradCheckResult {
    std::string op;
    std::size_t instances = 0;
    std::size_t failures = 0;
    double max_rel_err = 0.0;
};

inline Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = true, double sd = 1.0) {
    std::normal_distribution<double> n(0.0, sd);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = n(rng);
    return Tensor(std::move(shape), std::move(v), requires_grad);
}

/// Entries bounded away from zero so ReLU kinks stay out of the FD stencil.
inline Tensor away_from_zero(Shape shape, Rng& rng, double gap = 1e-2) {
    Tensor t = random_tensor(std::move(shape), rng);
    for (double& x : t.mutable_values()) {
        if (std::abs(x) < gap) x = x < 0 ? x - gap : x + gap;
    }
    return t;
}

inline Tensor positive_probs(Shape shape, Rng& rng, double lo = 0.05, double hi = 0.95) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = u(rng);
    return Tensor(std::move(shape), std::move(v), true);
}

inline Tensor random_one_hot(std::size_t rows, std::size_t k, Rng& rng) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(k) - 1);
    std::vector<int> labels(rows);
    for (int& y : labels) y = pick(rng);
    return one_hot(labels, k);
}

inline std::size_t draw(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Norm-wise relative error between analytic and central-difference gradients
/// of sum(forward() * R) for a fixed random R.
inline double check_case(GradCase& c, Rng& rng) {
    Tensor probe = c.forward();
    const Tensor weights = random_tensor(probe.shape(), rng, false);
    auto objective = [&] {
        Tensor out = c.forward();
        return out.numel() == 1 ? scale(out, weights.values()[0]) : sum(mul(out, weights));
    };
    for (auto& leaf : c.leaves) leaf.zero_grad();
    backward(objective());

    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (auto& leaf : c.leaves) {
        std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());
        auto values = leaf.mutable_values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + kFdStep;
            const double up = objective().item();
            values[i] = saved - kFdStep;
            const double down = objective().item();
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * kFdStep);
            diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
            a2 += analytic[i] * analytic[i];
            n2 += numeric * numeric;
        }
        leaf.zero_grad();
    }
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-8});
    return std::sqrt(diff2) / denom;
}

using CaseFactory = std::function<GradCase(Rng&)>;

struct OpSpec {
    std::string name;
    CaseFactory make;
};

inline std::vector<OpSpec> differentiable_ops() {
    std::vector<OpSpec> ops;
    auto B = [](Rng& r) { return draw(r, 1, 4); };
    auto N = [](Rng& r) { return draw(r, 1, 5); };

    ops.push_back({"matmul", [=](Rng& r) {
                       const auto b = B(r), n = N(r), m = N(r);
                       Tensor x = random_tensor({b, n}, r), w = random_tensor({n, m}, r);
                       return GradCase{{x, w}, [=] { return matmul(x, w); }};
                   }});
    ops.push_back({"add", [=](Rng& r) {
                       const Shape s{B(r), N(r)};
                       Tensor x = random_tensor(s, r), y = random_tensor(s, r);
                       return GradCase{{x, y}, [=] { return add(x, y); }};
                   }});
    ops.push_back({"sub", [=](Rng& r) {
                       const Shape s{B(r), N(r)};
                       Tensor x = random_tensor(s, r), y = random_tensor(s, r);
                       return GradCase{{x, y}, [=] { return sub(x, y); }};
                   }});
    ops.push_back({"mul", [=](Rng& r) {
                       const Shape s{B(r), N(r)};
                       Tensor x = random_tensor(s, r), y = random_tensor(s, r);
                       return GradCase{{x, y}, [=] { return mul(x, y); }};
                   }});
    ops.push_back({"mul_shared_operand", [=](Rng& r) {
                       Tensor x = random_tensor({B(r), N(r)}, r);
                       return GradCase{{x}, [=] { return mul(x, x); }};
                   }});
    ops.push_back({"scale", [=](Rng& r) {
                       Tensor x = random_tensor({B(r), N(r)}, r);
                       const double f = std::normal_distribution<double>(0.0, 2.0)(r);
                       return GradCase{{x}, [=] { return scale(x, f); }};
                   }});
    ops.push_back({"add_bias", [=](Rng& r) {
                       const auto b = B(r), n = N(r);
                       Tensor x = random_tensor({b, n}, r), bias = random_tensor({n}, r);
                       return GradCase{{x, bias}, [=] { return add_bias(x, bias); }};
                   }});
    ops.push_back({"relu", [=](Rng& r) {
                       Tensor x = away_from_zero({B(r), N(r)}, r);
                       return GradCase{{x}, [=] { return relu(x); }};
                   }});
    ops.push_back({"sigmoid", [=](Rng& r) {
                       Tensor x = random_tensor({B(r), N(r)}, r, true, 2.0);
                       return GradCase{{x}, [=] { return sigmoid(x); }};
                   }});
    ops.push_back({"sum", [=](Rng& r) {
                       Tensor x = random_tensor({B(r), N(r)}, r);
                       return GradCase{{x}, [=] { return sum(x); }};
                   }});
    ops.push_back({"mean", [=](Rng& r) {
                       Tensor x = random_tensor({B(r), N(r)}, r);
                       return GradCase{{x}, [=] { return mean(x); }};
                   }});
    ops.push_back({"softmax", [=](Rng& r) {
                       Tensor x = random_tensor({B(r), draw(r, 2, 6)}, r, true, 2.0);
                       return GradCase{{x}, [=] { return softmax(x); }};
                   }});
    ops.push_back({"log_softmax", [=](Rng& r) {
                       Tensor x = random_tensor({B(r), draw(r, 2, 6)}, r, true, 2.0);
                       return GradCase{{x}, [=] { return log_softmax(x); }};
                   }});
    ops.push_back({"row_norm", [=](Rng& r) {
                       Tensor x = random_tensor({B(r), draw(r, 2, 5)}, r);
                       return GradCase{{x}, [=] { return row_norm(x); }};
                   }});
    ops.push_back({"row_cosine", [=](Rng& r) {
                       const Shape s{B(r), draw(r, 2, 5)};
                       Tensor x = random_tensor(s, r), y = random_tensor(s, r);
                       return GradCase{{x, y}, [=] { return row_cosine(x, y); }};
                   }});
    ops.push_back({"concat_rows", [=](Rng& r) {
                       const auto n = N(r);
                       Tensor x = random_tensor({B(r), n}, r), y = random_tensor({B(r), n}, r);
                       return GradCase{{x, y}, [=] { return concat_rows(x, y); }};
                   }});
    ops.push_back({"slice_rows", [=](Rng& r) {
                       const auto b = draw(r, 2, 5);
                       Tensor x = random_tensor({b, N(r)}, r);
                       const auto begin = draw(r, 0, b - 1);
                       const auto count = draw(r, 1, b - begin);
                       return GradCase{{x}, [=] { return slice_rows(x, begin, count); }};
                   }});
    ops.push_back({"gather_rows", [=](Rng& r) {
                       const auto b = draw(r, 1, 4);
                       Tensor x = random_tensor({b, N(r)}, r);
                       std::vector<std::size_t> rows(draw(r, 1, 6));
                       for (auto& i : rows) i = draw(r, 0, b - 1);  // repeats allowed
                       return GradCase{{x}, [=] { return gather_rows(x, rows); }};
                   }});
    ops.push_back({"cross_entropy", [=](Rng& r) {
                       const auto b = B(r), k = draw(r, 2, 6);
                       Tensor p = positive_probs({b, k}, r);
                       Tensor y = random_one_hot(b, k, r);
                       return GradCase{{p}, [=] { return cross_entropy(p, y); }};
                   }});
    ops.push_back({"kl_alignment", [=](Rng& r) {
                       const Shape s{B(r), draw(r, 2, 6)};
                       Tensor target = softmax(random_tensor(s, r, false));
                       Tensor pred = positive_probs(s, r);
                       return GradCase{{pred}, [=] { return kl_alignment(target, pred); }};
                   }});
    ops.push_back({"mse", [=](Rng& r) {
                       const Shape s{B(r), N(r)};
                       Tensor x = random_tensor(s, r), y = random_tensor(s, r);
                       return GradCase{{x, y}, [=] { return mse(x, y); }};
                   }});
    ops.push_back({"binary_cross_entropy", [=](Rng& r) {
                       const auto b = B(r);
                       Tensor p = positive_probs({b, 1}, r);
                       std::vector<double> t(b);
                       for (double& v : t) v = static_cast<double>(draw(r, 0, 1));
                       Tensor y({b, 1}, t);
                       return GradCase{{p}, [=] { return binary_cross_entropy(p, y); }};
                   }});
    ops.push_back({"batch_norm_train", [=](Rng& r) {
                       const auto b = draw(r, 2, 5), n = N(r);
                       Tensor x = random_tensor({b, n}, r), g = random_tensor({n}, r), be = random_tensor({n}, r);
                       auto stats = std::make_shared<std::vector<double>>(2 * n, 0.0);
                       for (std::size_t j = 0; j < n; ++j) (*stats)[n + j] = 1.0;
                       return GradCase{{x, g, be},
                                       [=] {
                                           BatchNormState st{{stats->data(), n}, {stats->data() + n, n}, 0.9, 1e-5};
                                           return batch_norm(x, g, be, st, true);
                                       }};
                   }});
    ops.push_back({"batch_norm_eval", [=](Rng& r) {
                       const auto b = B(r), n = N(r);
                       Tensor x = random_tensor({b, n}, r), g = random_tensor({n}, r), be = random_tensor({n}, r);
                       std::vector<double> stats(2 * n);
                       std::uniform_real_distribution<double> u(0.5, 2.0);
                       for (std::size_t j = 0; j < n; ++j) {
                           stats[j] = u(r) - 1.0;
                           stats[n + j] = u(r);
                       }
                       auto held = std::make_shared<std::vector<double>>(std::move(stats));
                       return GradCase{{x, g, be},
                                       [=] {
                                           BatchNormState st{{held->data(), n}, {held->data() + n, n}, 0.9, 1e-5};
                                           return batch_norm(x, g, be, st, false);
                                       }};
                   }});

    // Library losses composed from the primitives above.
    for (auto variant : {SrdVariant::kl, SrdVariant::mse, SrdVariant::pmse}) {
        ops.push_back({"srd_" + to_string(variant), [=](Rng& r) {
                           const Shape s{B(r), draw(r, 2, 6)};
                           Tensor zt = random_tensor(s, r, false, 2.0), zc = random_tensor(s, r, true, 2.0);
                           return GradCase{{zc}, [=] { return srd_loss(variant, zt, zc); }};
                       }});
    }
    ops.push_back({"feature_reg", [=](Rng& r) {
                       const Shape s{B(r), draw(r, 2, 5)};
                       Tensor xt = random_tensor(s, r, false), xa = random_tensor(s, r);
                       return GradCase{{xa}, [=] { return feature_reg(xt, xa); }};
                   }});
    ops.push_back({"kd_loss", [=](Rng& r) {
                       const Shape s{B(r), draw(r, 2, 6)};
                       const double temp = std::uniform_real_distribution<double>(0.5, 8.0)(r);
                       Tensor zt = random_tensor(s, r, false, 2.0), zs = random_tensor(s, r, true, 2.0);
                       return GradCase{{zs}, [=] { return kd_loss(zt, zs, temp); }};
                   }});
    ops.push_back({"dac_loss", [=](Rng& r) {
                       const Shape s{B(r), draw(r, 2, 6)};
                       Tensor zt = random_tensor(s, r, false), zs = random_tensor(s, r);
                       return GradCase{{zs}, [=] { return dac_loss(zs, zt); }};
                   }});
    ops.push_back({"cross_network_logit", [=](Rng& r) {
                       const auto ds = draw(r, 2, 5), dt = draw(r, 2, 5), k = draw(r, 2, 5), b = draw(r, 2, 4);
                       auto adaptor = std::make_shared<Adaptor>(ds, dt, true, r);
                       auto head = std::make_shared<Classifier>(dt, k, r);
                       head->weight.set_requires_grad(false);
                       Tensor xs = random_tensor({b, ds}, r);
                       std::vector<Tensor> leaves = adaptor->parameters();
                       leaves.push_back(xs);
                       return GradCase{leaves,
                                       [=] { return cross_network_logit(xs, *adaptor, *head, Mode::train); }};
                   }});
    ops.push_back({"network_cross_entropy", [=](Rng& r) {
                       const auto d = draw(r, 2, 5), k = draw(r, 2, 4), b = draw(r, 1, 4);
                       std::shared_ptr<Network> net;
                       Tensor x;
                       // Redraw until no hidden unit sits within reach of the ReLU kink.
                       for (bool near_kink = true; near_kink;) {
                           net = std::make_shared<Network>(build_network(d, 2, draw(r, 2, 5), k, false, r));
                           x = random_tensor({b, d}, r, false);
                           near_kink = false;
                           Tensor h = x;
                           for (const auto& layer : net->extractor().layers()) {
                               Tensor pre = layer.forward(h);
                               for (double v : pre.values()) near_kink = near_kink || std::abs(v) < 1e-3;
                               h = relu(pre);
                           }
                       }
                       Tensor y = random_one_hot(b, k, r);
                       return GradCase{net->parameters(),
                                       [=] { return cross_entropy(softmax(net->forward(x, Mode::train).logits), y); }};
                   }});
    return ops;
}

/// Runs `instances` random cases per op. A case fails when its relative error
/// reaches `tolerance`.
inline std::vector<GradCheckResult> run_gradient_suite(std::uint64_t seed, std::size_t instances,
                                                       double tolerance = 1e-4) {
    std::vector<GradCheckResult> results;
    std::uint64_t op_index = 0;
    for (const auto& op : differentiable_ops()) {
        Rng rng = make_rng(seed, 1000 + op_index++);
        GradCheckResult res{op.name, 0, 0, 0.0};
        for (std::size_t i = 0; i < instances; ++i) {
            GradCase c = op.make(rng);
            const double err = check_case(c, rng);
            res.max_rel_err = std::max(res.max_rel_err, err);
            if (!(err < tolerance)) ++res.failures;
            ++res.instances;
        }
        results.push_back(res);
    }
    return results;
}

}  // namespace srd::testing
