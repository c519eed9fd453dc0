#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gradcheck.hpp"
#include "srd/baselines.hpp"
#include "srd/distill.hpp"
#include "srd/metrics.hpp"
#include "srd/ops.hpp"
#include "srd/optim.hpp"

using namespace srd;
using srd::testing::random_tensor;

TEST_CASE("kd loss") {
    Rng rng = make_rng(1, 0);
    Tensor z = random_tensor({4, 5}, rng, false, 2.0);
    SUBCASE("matched logits give T^2 times the softened entropy") {
        for (double t : {0.5, 1.0, 4.0}) {
            const double h = mean_entropy(softmax(scale(z, 1.0 / t)));
            CHECK(std::abs(kd_loss(z, z, t).item() - t * t * h) < 1e-10);
        }
    }
    SUBCASE("higher temperature softens the target") {
        double prev = 2.0;
        for (double t : {1.0, 2.0, 4.0, 8.0}) {
            Tensor p = softmax(scale(z, 1.0 / t));
            double top = 0.0;
            for (std::size_t i = 0; i < 4; ++i) {
                double m = 0.0;
                for (std::size_t j = 0; j < 5; ++j) m = std::max(m, p.at(i, j));
                top += m / 4.0;
            }
            CHECK(top < prev);
            prev = top;
        }
    }
    SUBCASE("random case at T=4 equals the composition") {
        Tensor zs = random_tensor({4, 5}, rng, false, 2.0);
        Tensor pt = softmax(scale(z, 0.25)), ps = softmax(scale(zs, 0.25));
        double ref = 0.0;
        for (std::size_t i = 0; i < 20; ++i) ref -= pt.values()[i] * std::log(ps.values()[i]);
        CHECK(std::abs(kd_loss(z, zs, 4.0).item() - 16.0 * ref / 4.0) < 1e-10);
    }
    SUBCASE("invalid input") {
        CHECK_THROWS_AS(kd_loss(z, z, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(kd_loss(z, z, -1.0), std::invalid_argument);
        Tensor bad({1, 2}, {NAN, 0.0});
        CHECK_THROWS_AS(kd_loss(bad, bad, 1.0), NumericError);
        CHECK_THROWS_AS(kd_loss(z, Tensor::zeros({4, 4}), 1.0), DimensionError);
    }
}

namespace {

LabeledPool blobs(std::size_t per_class, std::uint64_t seed) {
    const double centers[3][2] = {{-3.0, 0.0}, {3.0, 0.0}, {0.0, 3.0}};
    Rng rng = make_rng(seed, 0);
    std::normal_distribution<double> g(0.0, 0.4);
    LabeledPool pool;
    pool.inputs = Matrix(0, 2);
    for (std::size_t i = 0; i < per_class; ++i)
        for (int c = 0; c < 3; ++c) {
            const double row[2] = {centers[c][0] + g(rng), centers[c][1] + g(rng)};
            pool.inputs.append_row(row);
            pool.labels.push_back(c);
        }
    return pool;
}

}  // namespace

TEST_CASE("pseudo labels") {
    SUBCASE("cluster centers get their class from a trained teacher") {
        const auto train = blobs(40, 1), test = blobs(40, 2);
        Rng rng = make_rng(2, 0);
        Network teacher = build_network(2, 1, 16, 3, false, rng);
        PretrainOptions opt;
        opt.epochs = 40;
        opt.batch_size = 16;
        opt.sgd = {0.05, 0.9, 0.0};
        pretrain_teacher(train, test, teacher, opt);
        Matrix centers(3, 2);
        centers.data = {-3.0, 0.0, 3.0, 0.0, 0.0, 3.0};
        CHECK(pseudo_labels(teacher, centers) == std::vector<int>{0, 1, 2});
        const auto a = pseudo_labels(teacher, test.inputs), b = pseudo_labels(teacher, test.inputs);
        CHECK(a == b);
    }
    SUBCASE("ties go to the lowest class") {
        Rng rng = make_rng(3, 0);
        Network teacher = build_network(2, 1, 4, 3, false, rng);
        for (double& w : teacher.classifier().weight.mutable_values()) w = 0.0;
        teacher.freeze();
        Matrix x(4, 2);
        x.data = {1, 2, 3, 4, 5, 6, 7, 8};
        UnlabeledPool pool(x, {3, 3, 4, 0}, {0, 0, 0, 1});
        const auto labeled = pseudo_label(teacher, pool);
        CHECK(labeled.labels == std::vector<int>{0, 0, 0, 0});
        CHECK(labeled.inputs.data == x.data);
    }
    SUBCASE("empty input") {
        Rng rng = make_rng(4, 0);
        Network teacher = build_network(2, 1, 4, 3, false, rng);
        CHECK(pseudo_labels(teacher, Matrix(0, 2)).empty());
    }
}

namespace {

struct OodFixture {
    Matrix features;
    UnlabeledPool pool;
    std::vector<std::size_t> rows;
};

// IND rows centered at +1, OOD rows at -1 in every coordinate.
OodFixture ood_fixture(std::size_t n, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0);
    std::normal_distribution<double> g(0.0, 0.5);
    OodFixture f;
    f.features = Matrix(0, 4);
    std::vector<int> cls;
    std::vector<std::uint8_t> ind;
    for (std::size_t i = 0; i < n; ++i) {
        const bool is_ind = i % 3 == 0;
        double row[4];
        for (double& v : row) v = (is_ind ? 1.0 : -1.0) + g(rng);
        f.features.append_row(row);
        cls.push_back(is_ind ? 0 : 9);
        ind.push_back(is_ind ? 1 : 0);
        f.rows.push_back(i);
    }
    f.pool = UnlabeledPool(f.features, cls, ind);
    return f;
}

}  // namespace

TEST_CASE("OOD filter") {
    const auto f = ood_fixture(60, 1);
    Rng rng = make_rng(5, 0);
    OodDetector det(4, 0.5, rng);
    const Tensor feats = f.features.to_tensor();

    SUBCASE("threshold 0 keeps everything and 1 drops everything") {
        det.set_threshold(0.0);
        auto all = ood_filter(det, feats, f.rows, f.pool, 3);
        CHECK(all.kept.size() == 60);
        CHECK(all.dropped.empty());
        CHECK(all.stats.epoch == 3);
        det.set_threshold(1.0);
        auto none = ood_filter(det, feats, f.rows, f.pool, 3);
        CHECK(none.kept.empty());
        CHECK(none.stats.dropped_ind == 20);
        CHECK(none.stats.dropped_ood == 40);
    }
    SUBCASE("kept and dropped partition the batch and the tallies match hidden tags") {
        auto r = ood_filter(det, feats, f.rows, f.pool, 0);
        std::vector<std::size_t> merged = r.kept;
        merged.insert(merged.end(), r.dropped.begin(), r.dropped.end());
        std::sort(merged.begin(), merged.end());
        CHECK(merged == f.rows);
        const auto truth = evaluation::reveal(f.pool);
        std::size_t kept_ind = 0;
        for (auto i : r.kept) kept_ind += truth.is_ind[i];
        CHECK(r.stats.kept_ind == kept_ind);
        CHECK(r.stats.kept_ind + r.stats.kept_ood == r.kept.size());
        CHECK(r.stats.total() == 60);
    }
    SUBCASE("a trained detector separates the clusters") {
        std::vector<std::size_t> pos, neg;
        const auto truth = evaluation::reveal(f.pool);
        for (std::size_t i = 0; i < 60; ++i) (truth.is_ind[i] ? pos : neg).push_back(i);
        Sgd opt(det.parameters(), {0.5, 0.9, 0.0});
        for (int it = 0; it < 100; ++it) {
            backward(det.loss(f.features.gather(pos), f.features.gather(neg)));
            opt.step();
        }
        const auto test = ood_fixture(300, 2);
        const Tensor s = det.score(test.features.to_tensor());
        const auto t = evaluation::reveal(test.pool);
        CHECK(roc_auc(s.values(), t.is_ind) > 0.95);
    }
    CHECK_THROWS_AS(OodDetector(4, 1.5, rng), std::invalid_argument);
}

TEST_CASE("DAC loss") {
    SUBCASE("identical networks on identical views give -1") {
        Rng rng = make_rng(6, 0);
        Network teacher = build_network(3, 1, 5, 4, false, rng);
        teacher.freeze();
        Network student = teacher.clone();
        Matrix x(3, 3);
        x.data = {0.1, 0.2, 0.3, -1.0, 0.5, 2.0, 0.7, 0.7, -0.7};
        CHECK(dac_loss(student, teacher, x, 0.0, rng).item() == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("orthogonal logits give 0") {
        Tensor a({2, 2}, {1, 0, 0, 2}), b({2, 2}, {0, 3, -1, 0});
        CHECK(std::abs(dac_loss(a, b).item()) < 1e-15);
    }
    SUBCASE("random case equals the cosine oracle") {
        Rng rng = make_rng(7, 0);
        Tensor a = random_tensor({5, 4}, rng, false), b = random_tensor({5, 4}, rng, false);
        double ref = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
            double dot = 0.0, na = 0.0, nb = 0.0;
            for (std::size_t j = 0; j < 4; ++j) {
                dot += a.at(i, j) * b.at(i, j);
                na += a.at(i, j) * a.at(i, j);
                nb += b.at(i, j) * b.at(i, j);
            }
            ref += dot / std::sqrt(na * nb);
        }
        CHECK(std::abs(dac_loss(a, b).item() + ref / 5.0) < 1e-12);
    }
    SUBCASE("zero logits stay finite") {
        Tensor z = Tensor::zeros({2, 3}, true);
        Tensor loss = dac_loss(z, Tensor::zeros({2, 3}));
        CHECK(std::isfinite(loss.item()));
        backward(loss);
        for (double g : z.grad()) CHECK(std::isfinite(g));
    }
    SUBCASE("views are reproducible and differ from each other") {
        Matrix x(2, 3);
        x.data = {1, 2, 3, 4, 5, 6};
        Rng a = make_rng(8, 0), b = make_rng(8, 0);
        const auto v = make_views(x, 0.5, a), w = make_views(x, 0.5, b);
        CHECK(v.view1.data == w.view1.data);
        CHECK(v.view1.data != v.view2.data);
    }
}
