#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gradcheck.hpp"
#include "srd/ops.hpp"
#include "srd/optim.hpp"
#include "srd/tensor.hpp"

using namespace srd;
using srd::testing::random_tensor;

namespace {

Tensor row(std::vector<double> v, bool grad = false) {
    const std::size_t n = v.size();
    return Tensor({1, n}, std::move(v), grad);
}

}  // namespace

TEST_CASE("matmul matches a triple loop") {
    Rng rng = make_rng(11, 0);
    for (int t = 0; t < 50; ++t) {
        const std::size_t b = 1 + t % 4, n = 1 + t % 5, m = 1 + t % 3;
        Tensor a = random_tensor({b, n}, rng, false), w = random_tensor({n, m}, rng, false);
        Tensor c = matmul(a, w);
        REQUIRE(c.shape() == Shape{b, m});
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                double ref = 0.0;
                for (std::size_t k = 0; k < n; ++k) ref += a.at(i, k) * w.at(k, j);
                CHECK(std::abs(c.at(i, j) - ref) < 1e-12);
            }
    }
}

TEST_CASE("matmul with identity and zeros") {
    Tensor a({2, 2}, {1, 2, 3, 4});
    Tensor eye({2, 2}, {1, 0, 0, 1});
    Tensor c = matmul(a, eye);
    CHECK(std::vector<double>(c.values().begin(), c.values().end()) == std::vector<double>{1, 2, 3, 4});
    Tensor z = matmul(a, Tensor::zeros({2, 3}));
    for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("shape mismatch names both shapes") {
    Tensor a = Tensor::zeros({2, 3}), b = Tensor::zeros({4, 5});
    try {
        matmul(a, b);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2x3") != std::string::npos);
        CHECK(msg.find("4x5") != std::string::npos);
    }
    CHECK_THROWS_AS(add(a, b), DimensionError);
    CHECK_THROWS_AS(mse(a, b), DimensionError);
}

TEST_CASE("softmax values") {
    Tensor p = softmax(row({0, 0, 0}));
    for (double v : p.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    // Reference computed at 40 digits.
    Tensor q = softmax(row({1, 2, 3}));
    CHECK(std::abs(q.values()[0] - 0.090030573170380457998) < 1e-15);
    CHECK(std::abs(q.values()[1] - 0.24472847105479765247) < 1e-15);
    CHECK(std::abs(q.values()[2] - 0.66524095577482188953) < 1e-15);

    Tensor shifted = softmax(row({1001, 1002, 1003}));
    for (int i = 0; i < 3; ++i) CHECK(std::abs(shifted.values()[i] - q.values()[i]) < 1e-12);
}

TEST_CASE("softmax rows sum to one and reject non-finite input") {
    Rng rng = make_rng(12, 0);
    Tensor p = softmax(random_tensor({6, 5}, rng, false, 10.0));
    for (std::size_t i = 0; i < 6; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 5; ++j) s += p.at(i, j);
        CHECK(std::abs(s - 1.0) < 1e-12);
    }
    CHECK_THROWS_AS(softmax(row({1.0, NAN})), NumericError);
    CHECK_THROWS_AS(softmax(row({INFINITY, 0.0})), NumericError);
}

TEST_CASE("cross_entropy examples") {
    CHECK(cross_entropy(row({1, 0, 0}), row({1, 0, 0})).item() == doctest::Approx(0.0));
    CHECK(cross_entropy(row({0.25, 0.25, 0.25, 0.25}), row({0, 0, 1, 0})).item() ==
          doctest::Approx(std::log(4.0)).epsilon(1e-14));
    // A zero probability at the target hits the floor instead of producing inf.
    const double floored = cross_entropy(row({0, 1}), row({1, 0})).item();
    CHECK(std::isfinite(floored));
    CHECK(floored == doctest::Approx(-std::log(kLogFloor)));
}

TEST_CASE("cross_entropy matches direct summation") {
    Rng rng = make_rng(13, 0);
    Tensor p = softmax(random_tensor({7, 4}, rng, false));
    std::vector<int> labels{0, 1, 2, 3, 0, 1, 2};
    double ref = 0.0;
    for (std::size_t i = 0; i < 7; ++i) ref -= std::log(p.at(i, labels[i]));
    CHECK(std::abs(cross_entropy(p, one_hot(labels, 4)).item() - ref / 7.0) < 1e-12);
}

TEST_CASE("kl_alignment examples") {
    Tensor u = row({0.2, 0.2, 0.2, 0.2, 0.2});
    CHECK(kl_alignment(u, u).item() == doctest::Approx(std::log(5.0)).epsilon(1e-14));
    Tensor e = row({0, 1, 0});
    CHECK(kl_alignment(e, e).item() == doctest::Approx(0.0));

    Rng rng = make_rng(14, 0);
    for (int t = 0; t < 20; ++t) {
        Tensor p = softmax(random_tensor({3, 6}, rng, false));
        Tensor q = softmax(random_tensor({3, 6}, rng, false));
        double ref = 0.0;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 6; ++j) ref -= p.at(i, j) * std::log(q.at(i, j));
        CHECK(std::abs(kl_alignment(p, q).item() - ref / 3.0) < 1e-12);
        // Against itself the alignment is the entropy.
        CHECK(std::abs(kl_alignment(p, p).item() - mean_entropy(p)) < 1e-10);
    }
}

TEST_CASE("kl_alignment sends no gradient to its target") {
    Tensor pred_logits = row({1.0, 0.0, -1.0}, true);
    Tensor t_logits = row({0.3, -1.0, 2.0}, true);
    backward(kl_alignment(softmax(t_logits), softmax(pred_logits)));
    for (double g : t_logits.grad()) CHECK(g == 0.0);
    double gsum = 0.0;
    for (double g : pred_logits.grad()) gsum += std::abs(g);
    CHECK(gsum > 0.0);
}

TEST_CASE("mse examples") {
    Tensor a = row({1, 2});
    CHECK(mse(a, a).item() == 0.0);
    CHECK(mse(a, row({0, 0})).item() == doctest::Approx(5.0));
    Rng rng = make_rng(15, 0);
    Tensor x = random_tensor({4, 3}, rng, false), y = random_tensor({4, 3}, rng, false);
    double ref = 0.0;
    for (std::size_t i = 0; i < 12; ++i) ref += std::pow(x.values()[i] - y.values()[i], 2);
    CHECK(std::abs(mse(x, y).item() - ref / 4.0) < 1e-12);
}

TEST_CASE("backward through sum gives ones") {
    Tensor x({3}, {1.0, -2.0, 5.0}, true);
    backward(sum(x));
    for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("backward on mse(Wx, y) matches finite differences") {
    Rng rng = make_rng(16, 0);
    Tensor x = random_tensor({5, 3}, rng, false), y = random_tensor({5, 2}, rng, false);
    Tensor w = random_tensor({3, 2}, rng);
    backward(mse(matmul(x, w), y));
    std::vector<double> analytic(w.grad().begin(), w.grad().end());
    for (std::size_t i = 0; i < w.numel(); ++i) {
        const double saved = w.values()[i];
        w.mutable_values()[i] = saved + 1e-6;
        const double up = mse(matmul(x, w), y).item();
        w.mutable_values()[i] = saved - 1e-6;
        const double down = mse(matmul(x, w), y).item();
        w.mutable_values()[i] = saved;
        CHECK(std::abs(analytic[i] - (up - down) / 2e-6) < 1e-6);
    }
}

TEST_CASE("backward leaves disconnected parameters at zero and needs a scalar") {
    Tensor used({2}, {1.0, 2.0}, true), unused({2}, {3.0, 4.0}, true);
    backward(sum(mul(used, used)));
    for (double g : unused.grad()) CHECK(g == 0.0);
    CHECK_THROWS_AS(backward(mul(used, used)), DimensionError);
}

TEST_CASE("leaf grads accumulate across backward calls") {
    Tensor x({2}, {1.0, 3.0}, true);
    backward(sum(scale(x, 2.0)));
    backward(sum(scale(x, 2.0)));
    for (double g : x.grad()) CHECK(g == 4.0);
    x.zero_grad();
    for (double g : x.grad()) CHECK(g == 0.0);
}

TEST_CASE("backward visits each reachable node once") {
    Tensor x({2}, {1.0, 2.0}, true);
    Tensor s = mul(x, x);         // 1
    Tensor d = add(s, s);         // 2, shares s
    Tensor loss = sum(add(d, s)); // 3, 4
    CHECK(backward(loss) == 4);
    // d(sum(3 x^2)) = 6x
    CHECK(x.grad()[0] == doctest::Approx(6.0));
    CHECK(x.grad()[1] == doctest::Approx(12.0));

    Tensor frozen({2}, {1.0, 2.0}, false);
    CHECK(backward(sum(frozen)) == 0);
}

TEST_CASE("ops on frozen tensors build no graph") {
    Tensor a({2, 2}, {1, 2, 3, 4}), b({2, 2}, {1, 0, 0, 1});
    Tensor c = relu(matmul(a, b));
    CHECK(c.is_leaf());
    CHECK_FALSE(c.requires_grad());
}

TEST_CASE("sgd update rules") {
    SUBCASE("plain gradient step") {
        Tensor p({2}, {1.0, -1.0}, true);
        Sgd opt({p}, {0.1, 0.0, 0.0});
        p.mutable_grad()[0] = 2.0;
        p.mutable_grad()[1] = -4.0;
        opt.step();
        CHECK(p.values()[0] == doctest::Approx(0.8));
        CHECK(p.values()[1] == doctest::Approx(-0.6));
        for (double g : p.grad()) CHECK(g == 0.0);
    }
    SUBCASE("zero gradient without decay leaves the parameter") {
        Tensor p({1}, {3.0}, true);
        Sgd opt({p}, {0.5, 0.9, 0.0});
        opt.step();
        CHECK(p.values()[0] == 3.0);
    }
    SUBCASE("two momentum steps follow the recurrence") {
        const double lr = 0.1, mu = 0.9, wd = 0.01;
        Tensor p({1}, {1.0}, true);
        Sgd opt({p}, {lr, mu, wd});
        double theta = 1.0, v = 0.0;
        for (double g : {0.5, -0.25}) {
            p.mutable_grad()[0] = g;
            opt.step();
            v = mu * v + (g + wd * theta);
            theta -= lr * v;
            CHECK(p.values()[0] == doctest::Approx(theta).epsilon(1e-15));
        }
    }
    SUBCASE("a parameter without a grad buffer is an error") {
        Tensor p({1}, {1.0}, false);
        Sgd opt({p}, {});
        CHECK_THROWS_AS(opt.step(), std::logic_error);
    }
}

TEST_CASE("step decay schedule") {
    const std::vector<std::size_t> ms{50, 75};
    CHECK(step_decay_lr(0.1, 0.1, ms, 0) == doctest::Approx(0.1));
    CHECK(step_decay_lr(0.1, 0.1, ms, 49) == doctest::Approx(0.1));
    CHECK(step_decay_lr(0.1, 0.1, ms, 50) == doctest::Approx(0.01));
    CHECK(step_decay_lr(0.1, 0.1, ms, 99) == doctest::Approx(0.001));
}

TEST_CASE("finite-difference suite over every differentiable op") {
    const auto results = srd::testing::run_gradient_suite(2024, 100);
    for (const auto& r : results) {
        INFO(r.op << " max rel err " << r.max_rel_err);
        CHECK(r.instances >= 100);
        CHECK(r.failures == 0);
    }
}
