#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "srd/data.hpp"
#include "srd/nn.hpp"

using namespace srd;
namespace fs = std::filesystem;

namespace {

DatasetParams small(double overlap, std::size_t unseen) {
    DatasetParams p;
    p.num_classes = 4;
    p.unseen_classes = unseen;
    p.overlap = overlap;
    p.labeled_per_class = 10;
    p.unlabeled_per_class = 12;
    p.test_per_class = 15;
    p.input_dim = 8;
    p.latent_dim = 3;
    p.modes_per_class = 2;
    p.seed = 5;
    return p;
}

fs::path scratch(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "srdlab_unit_data";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("closed set without unlabeled classes has an empty pool") {
    const auto ds = generate(small(0.0, 0));
    CHECK(ds.unlabeled.empty());
    CHECK(ds.seen_in_unlabeled.empty());
    CHECK(ds.labeled.size() == 40);
    CHECK(ds.test.size() == 60);
}

TEST_CASE("full overlap without unseen classes is all in-distribution") {
    const auto ds = generate(small(1.0, 0));
    CHECK(ds.seen_in_unlabeled == std::vector<int>{0, 1, 2, 3});
    const auto truth = evaluation::reveal(ds.unlabeled);
    CHECK(ds.unlabeled.size() == 48);
    for (auto f : truth.is_ind) CHECK(f == 1);
}

TEST_CASE("standard counts: K=8, 16 unseen, overlap 0.1") {
    DatasetParams p;
    p.test_per_class = 20;
    const auto ds = generate(p);
    // round(0.1 * 8) = 1 seen class shares the pool with the 16 unseen ones.
    REQUIRE(ds.seen_in_unlabeled.size() == 1);
    const auto truth = evaluation::reveal(ds.unlabeled);
    std::size_t ind = 0, ood = 0;
    std::set<int> unseen_tags;
    for (std::size_t i = 0; i < ds.unlabeled.size(); ++i) {
        if (truth.is_ind[i]) {
            ++ind;
            CHECK(truth.class_tags[i] == ds.seen_in_unlabeled[0]);
        } else {
            ++ood;
            CHECK(truth.class_tags[i] >= 8);
            unseen_tags.insert(truth.class_tags[i]);
        }
    }
    CHECK(ind == 100);
    CHECK(ood == 1600);
    CHECK(unseen_tags.size() == 16);
    CHECK(ds.labeled.size() == 400);
    for (int y : ds.labeled.labels) CHECK((y >= 0 && y < 8));
}

TEST_CASE("hidden tags agree with the IND flag") {
    const auto ds = generate(small(0.5, 3));
    const auto truth = evaluation::reveal(ds.unlabeled);
    std::set<int> seen(ds.seen_in_unlabeled.begin(), ds.seen_in_unlabeled.end());
    for (std::size_t i = 0; i < ds.unlabeled.size(); ++i) {
        const bool ind = truth.class_tags[i] < 4;
        CHECK(static_cast<bool>(truth.is_ind[i]) == ind);
        if (ind) CHECK(seen.count(truth.class_tags[i]) == 1);
    }
}

TEST_CASE("test split shares no row with the training pools") {
    const auto ds = generate(small(0.5, 3));
    auto key = [](std::span<const double> r) { return std::vector<double>(r.begin(), r.end()); };
    std::set<std::vector<double>> train;
    for (std::size_t i = 0; i < ds.labeled.size(); ++i) train.insert(key(ds.labeled.inputs.row(i)));
    for (std::size_t i = 0; i < ds.unlabeled.size(); ++i) train.insert(key(ds.unlabeled.inputs().row(i)));
    for (std::size_t i = 0; i < ds.test.size(); ++i) CHECK(train.count(key(ds.test.inputs.row(i))) == 0);
}

TEST_CASE("infeasible overlap is rejected") {
    auto p = small(0.1, 2);  // 0.1 * 4 rounds to zero classes
    CHECK_THROWS_AS(generate(p), DatasetError);
    p = small(1.5, 2);
    CHECK_THROWS_AS(generate(p), DatasetError);
}

TEST_CASE("generation is a pure function of the parameters") {
    const auto a = generate(small(0.5, 3)), b = generate(small(0.5, 3));
    CHECK(a.labeled.inputs.data == b.labeled.inputs.data);
    CHECK(a.unlabeled.inputs().data == b.unlabeled.inputs().data);
    CHECK(a.test.inputs.data == b.test.inputs.data);
    auto p = small(0.5, 3);
    p.seed = 6;
    CHECK(generate(p).labeled.inputs.data != a.labeled.inputs.data);
}

TEST_CASE("near and far presets") {
    const auto near = preset_near(), far = preset_far();
    CHECK(near.near_fraction == 1.0);
    CHECK(far.near_fraction == 0.0);
    CHECK_NOTHROW(generate(far));
}

TEST_CASE("augment") {
    const std::vector<double> x{0.5, -1.0, 2.0};
    SUBCASE("zero strength is the identity") {
        Rng rng = make_rng(1, 0);
        CHECK(augment(x, 0.0, rng) == x);
    }
    SUBCASE("fixed stream is reproducible") {
        Rng a = make_rng(1, 0), b = make_rng(1, 0);
        CHECK(augment(x, 0.7, a) == augment(x, 0.7, b));
    }
    SUBCASE("mean displacement of the origin is zero") {
        const double sigma = 0.5;
        const std::vector<double> origin(4, 0.0);
        Rng rng = make_rng(2, 0);
        constexpr int n = 10000;
        std::vector<double> total(4, 0.0);
        for (int i = 0; i < n; ++i) {
            const auto y = augment(origin, sigma, rng);
            for (int j = 0; j < 4; ++j) total[j] += y[j];
        }
        for (double t : total) CHECK(std::abs(t / n) < 3.0 * sigma / std::sqrt(double(n)));
    }
    SUBCASE("sign flips shrink a nonzero input by 1 - 2p on average") {
        const double sigma = 0.5, p = kAugmentFlipRate * sigma;
        const std::vector<double> one{1.0};
        Rng rng = make_rng(3, 0);
        constexpr int n = 20000;
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += augment(one, sigma, rng)[0];
        const double sd = std::sqrt(1.0 + sigma * sigma);
        CHECK(std::abs(total / n - (1.0 - 2.0 * p)) < 4.0 * sd / std::sqrt(double(n)));
    }
}

TEST_CASE("selection") {
    const auto ds = generate(small(0.5, 3));
    const auto& pool = ds.unlabeled;
    std::vector<std::size_t> all(pool.size());
    std::iota(all.begin(), all.end(), 0);

    CHECK(select_unlabeled_indices(pool, 1.0, SelectionPolicy::random, nullptr, 3) == all);
    const auto a = select_unlabeled_indices(pool, 0.5, SelectionPolicy::random, nullptr, 3);
    const auto b = select_unlabeled_indices(pool, 0.5, SelectionPolicy::random, nullptr, 3);
    CHECK(a == b);
    CHECK(a.size() == pool.size() / 2);
    CHECK(std::is_sorted(a.begin(), a.end()));

    Rng rng = make_rng(4, 0);
    Network teacher = build_network(8, 1, 6, 4, false, rng);
    teacher.freeze();
    const auto top = select_unlabeled_indices(pool, 0.5, SelectionPolicy::teacher_score, &teacher, 3);
    const auto conf = teacher_confidence(teacher, pool.inputs());
    std::vector<std::size_t> oracle = all;
    std::sort(oracle.begin(), oracle.end(), [&](std::size_t i, std::size_t j) {
        return conf[i] != conf[j] ? conf[i] > conf[j] : i < j;
    });
    oracle.resize(top.size());
    std::sort(oracle.begin(), oracle.end());
    CHECK(top == oracle);

    CHECK(select_unlabeled(pool, 0.25, SelectionPolicy::random, nullptr, 3).size() ==
          static_cast<std::size_t>(std::lround(0.25 * pool.size())));
    CHECK_THROWS_AS(select_unlabeled_indices(UnlabeledPool{}, 0.5, SelectionPolicy::random, nullptr, 3),
                    DatasetError);
    CHECK_THROWS_AS(select_unlabeled_indices(pool, 0.5, SelectionPolicy::teacher_score, nullptr, 3),
                    DatasetError);
    CHECK_THROWS_AS(select_unlabeled_indices(pool, 0.0, SelectionPolicy::random, nullptr, 3), DatasetError);
    CHECK(parse_selection_policy("teacher_score") == SelectionPolicy::teacher_score);
    CHECK_THROWS(parse_selection_policy("oracle"));
}

TEST_CASE("batch sampler") {
    BatchSampler s(10, 7, {4, 6, 11});
    CHECK(s.steps_per_epoch() == 3);

    SUBCASE("every labeled index once per epoch") {
        for (std::size_t e = 0; e < 3; ++e) {
            std::vector<std::size_t> seen;
            for (const auto& b : s.epoch(e)) seen.insert(seen.end(), b.labeled.begin(), b.labeled.end());
            std::sort(seen.begin(), seen.end());
            std::vector<std::size_t> all(10);
            std::iota(all.begin(), all.end(), 0);
            CHECK(seen == all);
        }
    }
    SUBCASE("unlabeled indices cycle without replacement") {
        std::vector<std::size_t> stream;
        for (std::size_t e = 0; e < 4; ++e)
            for (const auto& b : s.epoch(e)) stream.insert(stream.end(), b.unlabeled.begin(), b.unlabeled.end());
        for (std::size_t start = 0; start + 7 <= stream.size(); start += 7) {
            std::set<std::size_t> window(stream.begin() + start, stream.begin() + start + 7);
            CHECK(window.size() == 7);
        }
    }
    SUBCASE("ratio is kept, including the short last batch") {
        const auto batches = s.epoch(0);
        CHECK(batches[0].unlabeled.size() == 6);
        CHECK(batches[2].labeled.size() == 2);
        CHECK(batches[2].unlabeled.size() == 3);
    }
    SUBCASE("an epoch depends only on seed and index") {
        BatchSampler t(10, 7, {4, 6, 11});
        const auto x = s.epoch(2), y = t.epoch(2);
        for (std::size_t i = 0; i < x.size(); ++i) {
            CHECK(x[i].labeled == y[i].labeled);
            CHECK(x[i].unlabeled == y[i].unlabeled);
        }
    }
    SUBCASE("no unlabeled pool means labeled-only batches") {
        BatchSampler l(5, 0, {2, 8, 1});
        for (const auto& b : l.epoch(0)) CHECK(b.unlabeled.empty());
    }
}

TEST_CASE("dataset file round trip") {
    const auto ds = generate(small(0.5, 3));
    const auto path = scratch("ds.bin");
    save_dataset(path, ds);
    const auto back = load_dataset(path);
    CHECK(back.params == ds.params);
    CHECK(back.labeled.inputs.data == ds.labeled.inputs.data);
    CHECK(back.labeled.labels == ds.labeled.labels);
    CHECK(back.unlabeled.inputs().data == ds.unlabeled.inputs().data);
    const auto t0 = evaluation::reveal(ds.unlabeled), t1 = evaluation::reveal(back.unlabeled);
    CHECK(std::equal(t0.class_tags.begin(), t0.class_tags.end(), t1.class_tags.begin(), t1.class_tags.end()));
    CHECK(back.test.inputs.data == ds.test.inputs.data);
    CHECK(back.seen_in_unlabeled == ds.seen_in_unlabeled);

    const auto csv = scratch("ds.csv");
    export_dataset_csv(csv, ds);
    std::ifstream in(csv);
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == 1 + ds.labeled.size() + ds.unlabeled.size() + ds.test.size());
}
