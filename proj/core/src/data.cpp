#include "srd/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "srd/binary_io.hpp"
#include "srd/nn.hpp"
#include "srd/ops.hpp"

namespace srd {

struct HiddenTruthAccess {
    static evaluation::HiddenTruth reveal(const UnlabeledPool& pool) {
        return {pool.hidden_class_, pool.hidden_ind_};
    }
    static const std::vector<int>& classes(const UnlabeledPool& pool) { return pool.hidden_class_; }
    static const std::vector<std::uint8_t>& flags(const UnlabeledPool& pool) { return pool.hidden_ind_; }
};

namespace {

// Columns of a (dim × count) matrix with orthonormal columns, row-major.
std::vector<double> orthonormal_basis(std::size_t dim, std::size_t count, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> cols;
    while (cols.size() < count) {
        std::vector<double> v(dim);
        for (double& x : v) x = normal(rng);
        for (const auto& c : cols) {
            double dot = 0.0;
            for (std::size_t i = 0; i < dim; ++i) dot += v[i] * c[i];
            for (std::size_t i = 0; i < dim; ++i) v[i] -= dot * c[i];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-8) continue;
        for (double& x : v) x /= norm;
        cols.push_back(std::move(v));
    }
    std::vector<double> out(dim * count);
    for (std::size_t j = 0; j < count; ++j) {
        for (std::size_t i = 0; i < dim; ++i) out[i * count + j] = cols[j][i];
    }
    return out;
}

struct ClassModel {
    std::vector<std::vector<double>> modes;  // latent coordinates
    std::size_t basis_offset = 0;            // which latent block of the basis to embed with
};

struct Geometry {
    std::size_t input_dim;
    std::size_t latent_dim;
    std::size_t basis_cols;
    std::vector<double> basis;  // input_dim × basis_cols
    double noise;
    double ambient_noise;

    void sample(const ClassModel& cls, Rng& rng, std::vector<double>& out) const {
        std::uniform_int_distribution<std::size_t> pick(0, cls.modes.size() - 1);
        std::normal_distribution<double> normal(0.0, 1.0);
        const auto& mode = cls.modes[pick(rng)];
        std::vector<double> latent(latent_dim);
        for (std::size_t j = 0; j < latent_dim; ++j) latent[j] = mode[j] + noise * normal(rng);
        out.assign(input_dim, 0.0);
        for (std::size_t i = 0; i < input_dim; ++i) {
            double v = 0.0;
            for (std::size_t j = 0; j < latent_dim; ++j) v += basis[i * basis_cols + cls.basis_offset + j] * latent[j];
            out[i] = v + ambient_noise * normal(rng);
        }
    }
};

void validate(const DatasetParams& p) {
    if (p.num_classes < 2) throw DatasetError("dataset: need at least 2 seen classes");
    if (!(p.overlap >= 0.0 && p.overlap <= 1.0)) throw DatasetError("dataset: overlap must lie in [0, 1]");
    if (!(p.near_fraction >= 0.0 && p.near_fraction <= 1.0)) {
        throw DatasetError("dataset: near_fraction must lie in [0, 1]");
    }
    if (!(p.near_mix_low >= 0.0 && p.near_mix_low <= p.near_mix_high && p.near_mix_high <= 1.0)) {
        throw DatasetError("dataset: need 0 <= near_mix_low <= near_mix_high <= 1");
    }
    if (p.input_dim == 0 || p.latent_dim == 0 || p.latent_dim > p.input_dim) {
        throw DatasetError("dataset: need 0 < latent_dim <= input_dim");
    }
    if (p.modes_per_class == 0) throw DatasetError("dataset: modes_per_class must be positive");
    if (p.labeled_per_class == 0 || p.test_per_class == 0) {
        throw DatasetError("dataset: labeled and test pools must be non-empty");
    }
    if (!(p.noise >= 0.0) || !(p.ambient_noise >= 0.0) || !(p.class_spread > 0.0)) {
        throw DatasetError("dataset: noise must be nonnegative and class_spread positive");
    }
    const auto shared = static_cast<std::size_t>(std::lround(p.overlap * static_cast<double>(p.num_classes)));
    if (p.overlap > 0.0 && shared == 0) {
        throw DatasetError("dataset: overlap " + std::to_string(p.overlap) + " rounds to zero of " +
                           std::to_string(p.num_classes) + " seen classes");
    }
    if ((shared > 0 || p.unseen_classes > 0) && p.unlabeled_per_class == 0) {
        throw DatasetError("dataset: unlabeled classes requested but unlabeled_per_class is 0");
    }
    const auto near = static_cast<std::size_t>(std::lround(p.near_fraction * static_cast<double>(p.unseen_classes)));
    if (near < p.unseen_classes && 2 * p.latent_dim > p.input_dim) {
        throw DatasetError("dataset: far unseen classes need 2 * latent_dim <= input_dim");
    }
}

}  // namespace

void Matrix::append_row(std::span<const double> values) {
    if (rows == 0 && cols == 0) cols = values.size();
    if (values.size() != cols) throw DimensionError("matrix: row width mismatch");
    data.insert(data.end(), values.begin(), values.end());
    ++rows;
}

Tensor Matrix::to_tensor() const {
    if (rows == 0) throw DimensionError("matrix: cannot convert an empty matrix to a tensor");
    return Tensor({rows, cols}, data);
}

Tensor Matrix::gather(std::span<const std::size_t> indices) const {
    if (indices.empty()) throw DimensionError("matrix: empty row selection");
    std::vector<double> out;
    out.reserve(indices.size() * cols);
    for (std::size_t i : indices) {
        if (i >= rows) throw DimensionError("matrix: row index out of range");
        auto r = row(i);
        out.insert(out.end(), r.begin(), r.end());
    }
    return Tensor({indices.size(), cols}, std::move(out));
}

Matrix Matrix::subset(std::span<const std::size_t> indices) const {
    Matrix out(0, cols);
    out.data.reserve(indices.size() * cols);
    for (std::size_t i : indices) out.append_row(row(i));
    return out;
}

UnlabeledPool::UnlabeledPool(Matrix inputs, std::vector<int> hidden_class, std::vector<std::uint8_t> hidden_ind)
    : inputs_(std::move(inputs)), hidden_class_(std::move(hidden_class)), hidden_ind_(std::move(hidden_ind)) {
    if (hidden_class_.size() != inputs_.rows || hidden_ind_.size() != inputs_.rows) {
        throw DatasetError("unlabeled pool: ground truth does not match sample count");
    }
}

UnlabeledPool UnlabeledPool::subset(std::span<const std::size_t> indices) const {
    std::vector<int> cls;
    std::vector<std::uint8_t> ind;
    for (std::size_t i : indices) {
        cls.push_back(hidden_class_.at(i));
        ind.push_back(hidden_ind_.at(i));
    }
    return UnlabeledPool(inputs_.subset(indices), std::move(cls), std::move(ind));
}

namespace evaluation {
HiddenTruth reveal(const UnlabeledPool& pool) { return HiddenTruthAccess::reveal(pool); }
}  // namespace evaluation

DatasetParams preset_near() {
    DatasetParams p;
    p.near_fraction = 1.0;
    return p;
}

DatasetParams preset_far() {
    DatasetParams p;
    p.near_fraction = 0.0;
    return p;
}

OpenSetDataset generate(const DatasetParams& params) {
    validate(params);
    const std::size_t K = params.num_classes, U = params.unseen_classes, L = params.latent_dim;
    Rng rng = make_rng(params.seed, 0);

    const std::size_t n_near = static_cast<std::size_t>(std::lround(params.near_fraction * static_cast<double>(U)));
    const bool any_far = n_near < U;
    Geometry geo{params.input_dim, L, any_far ? 2 * L : L, {}, params.noise, params.ambient_noise};
    geo.basis = orthonormal_basis(params.input_dim, geo.basis_cols, rng);

    std::uniform_real_distribution<double> coord(-params.class_spread, params.class_spread);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto random_modes = [&] {
        std::vector<std::vector<double>> modes(params.modes_per_class, std::vector<double>(L));
        for (auto& m : modes) {
            for (double& x : m) x = coord(rng);
        }
        return modes;
    };

    std::vector<ClassModel> classes(K + U);
    for (std::size_t k = 0; k < K; ++k) classes[k].modes = random_modes();
    std::uniform_int_distribution<std::size_t> pick_class(0, K - 1);
    std::uniform_real_distribution<double> mix(params.near_mix_low, params.near_mix_high);
    for (std::size_t u = 0; u < U; ++u) {
        ClassModel& cls = classes[K + u];
        if (u < n_near) {
            const std::size_t a = pick_class(rng);
            std::size_t b = pick_class(rng);
            while (b == a) b = pick_class(rng);
            std::vector<std::size_t> order(params.modes_per_class);
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), rng);
            const double w = mix(rng);
            cls.modes.assign(params.modes_per_class, std::vector<double>(L));
            for (std::size_t m = 0; m < params.modes_per_class; ++m) {
                for (std::size_t j = 0; j < L; ++j) {
                    cls.modes[m][j] = w * classes[a].modes[m][j] + (1.0 - w) * classes[b].modes[order[m]][j] +
                                      0.5 * params.noise * normal(rng);
                }
            }
        } else {
            cls.modes = random_modes();
            cls.basis_offset = L;
        }
    }

    OpenSetDataset ds;
    ds.params = params;
    std::vector<double> x;
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < params.labeled_per_class; ++i) {
            geo.sample(classes[k], rng, x);
            ds.labeled.inputs.append_row(x);
            ds.labeled.labels.push_back(static_cast<int>(k));
        }
    }

    std::vector<std::size_t> seen_order(K);
    std::iota(seen_order.begin(), seen_order.end(), 0);
    std::shuffle(seen_order.begin(), seen_order.end(), rng);
    const auto shared = static_cast<std::size_t>(std::lround(params.overlap * static_cast<double>(K)));
    for (std::size_t i = 0; i < shared; ++i) ds.seen_in_unlabeled.push_back(static_cast<int>(seen_order[i]));
    std::sort(ds.seen_in_unlabeled.begin(), ds.seen_in_unlabeled.end());

    std::vector<std::size_t> unlabeled_classes(ds.seen_in_unlabeled.begin(), ds.seen_in_unlabeled.end());
    for (std::size_t u = 0; u < U; ++u) unlabeled_classes.push_back(K + u);
    Matrix u_inputs(0, params.input_dim);
    std::vector<int> u_class;
    std::vector<std::uint8_t> u_ind;
    for (std::size_t c : unlabeled_classes) {
        for (std::size_t i = 0; i < params.unlabeled_per_class; ++i) {
            geo.sample(classes[c], rng, x);
            u_inputs.append_row(x);
            u_class.push_back(static_cast<int>(c));
            u_ind.push_back(c < K ? 1 : 0);
        }
    }
    std::vector<std::size_t> order(u_inputs.rows);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    ds.unlabeled = UnlabeledPool(std::move(u_inputs), std::move(u_class), std::move(u_ind)).subset(order);

    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < params.test_per_class; ++i) {
            geo.sample(classes[k], rng, x);
            ds.test.inputs.append_row(x);
            ds.test.labels.push_back(static_cast<int>(k));
        }
    }
    return ds;
}

std::vector<double> augment(std::span<const double> x, double strength, Rng& rng) {
    std::vector<double> out(x.begin(), x.end());
    if (!(strength > 0.0)) return out;
    std::normal_distribution<double> normal(0.0, strength);
    std::bernoulli_distribution flip(std::min(0.5, kAugmentFlipRate * strength));
    for (double& v : out) {
        v += normal(rng);
        if (flip(rng)) v = -v;
    }
    return out;
}

Matrix augment_rows(const Matrix& x, double strength, Rng& rng) {
    Matrix out(0, x.cols);
    out.data.reserve(x.data.size());
    for (std::size_t i = 0; i < x.rows; ++i) out.append_row(augment(x.row(i), strength, rng));
    return out;
}

Matrix jitter_rows(const Matrix& x, double sigma, Rng& rng) {
    Matrix out = x;
    if (!(sigma > 0.0)) return out;
    std::normal_distribution<double> normal(0.0, sigma);
    for (double& v : out.data) v += normal(rng);
    return out;
}

std::string to_string(SelectionPolicy policy) {
    return policy == SelectionPolicy::random ? "random" : "teacher_score";
}

SelectionPolicy parse_selection_policy(const std::string& text) {
    if (text == "random") return SelectionPolicy::random;
    if (text == "teacher_score") return SelectionPolicy::teacher_score;
    throw std::invalid_argument("unknown selection policy '" + text + "' (expected random or teacher_score)");
}

std::vector<double> teacher_confidence(Network& teacher, const Matrix& inputs) {
    std::vector<double> out;
    out.reserve(inputs.rows);
    constexpr std::size_t kChunk = 512;
    for (std::size_t begin = 0; begin < inputs.rows; begin += kChunk) {
        const std::size_t end = std::min(inputs.rows, begin + kChunk);
        std::vector<std::size_t> idx(end - begin);
        std::iota(idx.begin(), idx.end(), begin);
        Tensor probs = softmax(teacher.forward(inputs.gather(idx), Mode::eval).logits.detach());
        for (std::size_t r = 0; r < probs.rows(); ++r) {
            auto row = probs.values().subspan(r * probs.cols(), probs.cols());
            out.push_back(*std::max_element(row.begin(), row.end()));
        }
    }
    return out;
}

std::vector<std::size_t> select_unlabeled_indices(const UnlabeledPool& pool, double fraction, SelectionPolicy policy,
                                                  Network* teacher, std::uint64_t seed) {
    if (pool.empty()) throw DatasetError("select_unlabeled: empty pool");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw DatasetError("select_unlabeled: fraction must lie in (0, 1]");
    const std::size_t n = pool.size();
    const std::size_t keep =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n))), 1, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (policy == SelectionPolicy::random) {
        Rng rng = make_rng(seed, stream::kSelection);
        std::shuffle(order.begin(), order.end(), rng);
    } else {
        if (!teacher) throw DatasetError("select_unlabeled: teacher_score policy needs a teacher");
        const auto score = teacher_confidence(*teacher, pool.inputs());
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    }
    order.resize(keep);
    std::sort(order.begin(), order.end());
    return order;
}

UnlabeledPool select_unlabeled(const UnlabeledPool& pool, double fraction, SelectionPolicy policy, Network* teacher,
                               std::uint64_t seed) {
    const auto idx = select_unlabeled_indices(pool, fraction, policy, teacher, seed);
    return pool.subset(idx);
}

BatchSampler::BatchSampler(std::size_t labeled_count, std::size_t unlabeled_count, SamplerOptions options)
    : labeled_count_(labeled_count), unlabeled_count_(unlabeled_count), options_(options) {
    if (labeled_count_ == 0) throw DatasetError("sampler: labeled pool is empty");
    if (options_.labeled_batch == 0) throw DatasetError("sampler: labeled batch size must be positive");
    if (unlabeled_count_ == 0) options_.unlabeled_batch = 0;
    for (std::size_t begin = 0; begin < labeled_count_; begin += options_.labeled_batch) {
        unlabeled_per_epoch_ += unlabeled_for(std::min(options_.labeled_batch, labeled_count_ - begin));
    }
}

std::size_t BatchSampler::steps_per_epoch() const {
    return (labeled_count_ + options_.labeled_batch - 1) / options_.labeled_batch;
}

std::size_t BatchSampler::unlabeled_for(std::size_t labeled_in_batch) const {
    if (options_.unlabeled_batch == 0) return 0;
    // Keep the configured labeled:unlabeled ratio for a short final batch.
    return (labeled_in_batch * options_.unlabeled_batch + options_.labeled_batch - 1) / options_.labeled_batch;
}

std::vector<std::size_t> BatchSampler::unlabeled_cycle(std::size_t cycle) const {
    std::vector<std::size_t> order(unlabeled_count_);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(options_.seed, 2 * cycle + 1);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

std::vector<IndexBatch> BatchSampler::epoch(std::size_t epoch_index) const {
    std::vector<std::size_t> order(labeled_count_);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(options_.seed, 2 * epoch_index);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<IndexBatch> batches;
    std::size_t cursor = epoch_index * unlabeled_per_epoch_;
    std::size_t cached_cycle = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> cycle_order;
    for (std::size_t begin = 0; begin < labeled_count_; begin += options_.labeled_batch) {
        const std::size_t end = std::min(labeled_count_, begin + options_.labeled_batch);
        IndexBatch batch;
        batch.labeled.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
        const std::size_t want = unlabeled_for(end - begin);
        for (std::size_t i = 0; i < want; ++i, ++cursor) {
            const std::size_t cycle = cursor / unlabeled_count_;
            if (cycle != cached_cycle) {
                cycle_order = unlabeled_cycle(cycle);
                cached_cycle = cycle;
            }
            batch.unlabeled.push_back(cycle_order[cursor % unlabeled_count_]);
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

std::string describe(const DatasetParams& p) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "num_classes = " << p.num_classes << '\n'
        << "unseen_classes = " << p.unseen_classes << '\n'
        << "overlap = " << p.overlap << '\n'
        << "labeled_per_class = " << p.labeled_per_class << '\n'
        << "unlabeled_per_class = " << p.unlabeled_per_class << '\n'
        << "test_per_class = " << p.test_per_class << '\n'
        << "input_dim = " << p.input_dim << '\n'
        << "latent_dim = " << p.latent_dim << '\n'
        << "modes_per_class = " << p.modes_per_class << '\n'
        << "class_spread = " << p.class_spread << '\n'
        << "noise = " << p.noise << '\n'
        << "ambient_noise = " << p.ambient_noise << '\n'
        << "near_fraction = " << p.near_fraction << '\n'
        << "near_mix_low = " << p.near_mix_low << '\n'
        << "near_mix_high = " << p.near_mix_high << '\n'
        << "seed = " << p.seed << '\n';
    return out.str();
}

namespace {

constexpr const char* kDatasetMagic = "srdlab-dataset 1";

struct Block {
    std::string name;
    std::size_t rows;
    std::size_t cols;
    std::vector<double> values;
};

std::vector<double> as_doubles(const std::vector<int>& v) { return {v.begin(), v.end()}; }

DatasetParams parse_params(const std::map<std::string, std::string>& kv) {
    DatasetParams p;
    auto get = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw DatasetError(std::string("dataset file: missing parameter ") + key);
        return it->second;
    };
    p.num_classes = std::stoull(get("num_classes"));
    p.unseen_classes = std::stoull(get("unseen_classes"));
    p.overlap = std::stod(get("overlap"));
    p.labeled_per_class = std::stoull(get("labeled_per_class"));
    p.unlabeled_per_class = std::stoull(get("unlabeled_per_class"));
    p.test_per_class = std::stoull(get("test_per_class"));
    p.input_dim = std::stoull(get("input_dim"));
    p.latent_dim = std::stoull(get("latent_dim"));
    p.modes_per_class = std::stoull(get("modes_per_class"));
    p.class_spread = std::stod(get("class_spread"));
    p.noise = std::stod(get("noise"));
    p.ambient_noise = std::stod(get("ambient_noise"));
    p.near_fraction = std::stod(get("near_fraction"));
    p.near_mix_low = std::stod(get("near_mix_low"));
    p.near_mix_high = std::stod(get("near_mix_high"));
    p.seed = std::stoull(get("seed"));
    return p;
}

std::vector<int> as_ints(const std::vector<double>& v) { return {v.begin(), v.end()}; }

}  // namespace

void save_dataset(const std::filesystem::path& path, const OpenSetDataset& ds) {
    const auto truth = evaluation::reveal(ds.unlabeled);
    const std::size_t d = ds.params.input_dim;
    std::vector<Block> blocks{
        {"labeled_inputs", ds.labeled.size(), d, ds.labeled.inputs.data},
        {"labeled_labels", ds.labeled.size(), 1, as_doubles(ds.labeled.labels)},
        {"unlabeled_inputs", ds.unlabeled.size(), d, ds.unlabeled.inputs().data},
        {"unlabeled_class", ds.unlabeled.size(), 1, {truth.class_tags.begin(), truth.class_tags.end()}},
        {"unlabeled_ind", ds.unlabeled.size(), 1, {truth.is_ind.begin(), truth.is_ind.end()}},
        {"test_inputs", ds.test.size(), d, ds.test.inputs.data},
        {"test_labels", ds.test.size(), 1, as_doubles(ds.test.labels)},
        {"seen_in_unlabeled", ds.seen_in_unlabeled.size(), 1, as_doubles(ds.seen_in_unlabeled)},
    };
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError("cannot open " + path.string() + " for writing");
    out << kDatasetMagic << '\n' << describe(ds.params) << "blocks " << blocks.size() << '\n';
    for (const auto& b : blocks) out << b.name << ' ' << b.rows << ' ' << b.cols << '\n';
    out << "data\n";
    for (const auto& b : blocks) write_le_doubles(out, b.values);
    if (!out) throw DatasetError("write failed for " + path.string());
}

OpenSetDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open dataset " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != kDatasetMagic) throw DatasetError(path.string() + ": not a dataset file");
    std::map<std::string, std::string> kv;
    std::size_t block_count = 0;
    while (std::getline(in, line)) {
        if (line.rfind("blocks ", 0) == 0) {
            block_count = std::stoull(line.substr(7));
            break;
        }
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) throw DatasetError("dataset file: bad header line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    std::vector<Block> blocks;
    for (std::size_t i = 0; i < block_count; ++i) {
        Block b;
        if (!(in >> b.name >> b.rows >> b.cols)) throw DatasetError("dataset file: truncated block table");
        blocks.push_back(std::move(b));
    }
    std::getline(in, line);
    std::getline(in, line);
    if (line != "data") throw DatasetError("dataset file: missing data marker");
    std::map<std::string, Block> by_name;
    for (auto& b : blocks) {
        b.values.resize(b.rows * b.cols);
        if (!read_le_doubles(in, b.values)) throw DatasetError("dataset file: truncated block " + b.name);
        by_name[b.name] = std::move(b);
    }
    auto take = [&](const char* name) -> Block& {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw DatasetError(std::string("dataset file: missing block ") + name);
        return it->second;
    };
    auto matrix = [](Block& b) {
        Matrix m;
        m.rows = b.rows;
        m.cols = b.cols;
        m.data = std::move(b.values);
        return m;
    };

    OpenSetDataset ds;
    ds.params = parse_params(kv);
    ds.labeled.inputs = matrix(take("labeled_inputs"));
    ds.labeled.labels = as_ints(take("labeled_labels").values);
    Matrix u = matrix(take("unlabeled_inputs"));
    u.cols = ds.params.input_dim;
    auto u_class = as_ints(take("unlabeled_class").values);
    const auto& ind = take("unlabeled_ind").values;
    ds.unlabeled = UnlabeledPool(std::move(u), std::move(u_class), std::vector<std::uint8_t>(ind.begin(), ind.end()));
    ds.test.inputs = matrix(take("test_inputs"));
    ds.test.labels = as_ints(take("test_labels").values);
    ds.seen_in_unlabeled = as_ints(take("seen_in_unlabeled").values);
    return ds;
}

void export_dataset_csv(const std::filesystem::path& path, const OpenSetDataset& ds) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DatasetError("cannot open " + path.string() + " for writing");
    const std::size_t d = ds.params.input_dim;
    out << "split,label,hidden_class,is_ind";
    for (std::size_t j = 0; j < d; ++j) out << ",x" << j;
    out << '\n' << std::setprecision(17);
    auto write_row = [&](const char* split, int label, int cls, int ind, std::span<const double> x) {
        out << split << ',' << label << ',' << cls << ',' << ind;
        for (double v : x) out << ',' << v;
        out << '\n';
    };
    for (std::size_t i = 0; i < ds.labeled.size(); ++i) {
        const int y = ds.labeled.labels[i];
        write_row("labeled", y, y, 1, ds.labeled.inputs.row(i));
    }
    const auto truth = evaluation::reveal(ds.unlabeled);
    for (std::size_t i = 0; i < ds.unlabeled.size(); ++i) {
        write_row("unlabeled", -1, truth.class_tags[i], truth.is_ind[i], ds.unlabeled.inputs().row(i));
    }
    for (std::size_t i = 0; i < ds.test.size(); ++i) {
        const int y = ds.test.labels[i];
        write_row("test", y, y, 1, ds.test.inputs.row(i));
    }
}

}  // namespace srd
