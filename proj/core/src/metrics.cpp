#include "srd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "srd/ops.hpp"

namespace srd {

double top_k_accuracy(const Tensor& logits, std::span<const int> labels, std::size_t k) {
    const std::size_t rows = logits.rows(), cols = logits.cols();
    if (labels.empty() || rows == 0) throw std::invalid_argument("top_k_accuracy: empty batch");
    if (labels.size() != rows) throw DimensionError("top_k_accuracy: label count does not match logits");
    if (k < 1 || k > cols) throw std::invalid_argument("top_k_accuracy: k must lie in [1, K]");
    std::size_t hits = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        const auto y = static_cast<std::size_t>(labels[r]);
        if (y >= cols) throw std::invalid_argument("top_k_accuracy: label out of range");
        const double zy = logits.at(r, y);
        std::size_t ahead = 0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double zc = logits.at(r, c);
            if (zc > zy || (zc == zy && c < y)) ++ahead;
        }
        if (ahead < k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(rows);
}

double mimicry_kl_from_logits(const Tensor& teacher_logits, const Tensor& student_logits) {
    if (teacher_logits.shape() != student_logits.shape()) {
        throw DimensionError("mimicry_kl: logit shapes differ");
    }
    const Tensor lt = log_softmax(teacher_logits.detach());
    const Tensor ls = log_softmax(student_logits.detach());
    double total = 0.0;
    for (std::size_t i = 0; i < lt.numel(); ++i) {
        const double p = std::exp(lt.values()[i]);
        if (p > 0.0) total += p * (lt.values()[i] - ls.values()[i]);
    }
    return std::max(0.0, total / static_cast<double>(lt.rows()));
}

double mimicry_kl(Network& teacher, Network& student, const Matrix& inputs) {
    const Tensor x = inputs.to_tensor();
    return mimicry_kl_from_logits(teacher.forward(x, Mode::eval).logits, student.forward(x, Mode::eval).logits);
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
    if (scores.size() != positive.size()) throw std::invalid_argument("roc_auc: size mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Mann-Whitney U with midranks for ties.
    double rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + j + 1);
        for (std::size_t t = i; t < j; ++t) {
            if (positive[order[t]]) {
                rank_sum += midrank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("roc_auc: needs both positive and negative samples");
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<int> argmax_rows(const Tensor& t) {
    std::vector<int> out(t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < t.cols(); ++c) {
            if (t.at(r, c) > t.at(r, best)) best = c;
        }
        out[r] = static_cast<int>(best);
    }
    return out;
}

UsageStats& UsageStats::operator+=(const UsageStats& other) {
    kept_ind += other.kept_ind;
    kept_ood += other.kept_ood;
    dropped_ind += other.dropped_ind;
    dropped_ood += other.dropped_ood;
    return *this;
}

std::vector<UsageProportion> usage_curve(std::span<const UsageStats> stats) {
    if (stats.empty()) throw std::invalid_argument("usage_curve: no usage statistics recorded");
    auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    std::vector<UsageProportion> out;
    for (const auto& s : stats) {
        out.push_back({s.epoch, ratio(s.kept_ind + s.kept_ood, s.total()),
                       ratio(s.kept_ind, s.kept_ind + s.dropped_ind), ratio(s.kept_ood, s.kept_ood + s.dropped_ood)});
    }
    return out;
}

std::string format_metric(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

std::string to_csv_row(const MetricsRecord& r) {
    std::ostringstream out;
    out << r.run_id << ',' << r.mode << ',' << r.seed << ',' << r.epoch << ',' << format_metric(r.ce) << ','
        << format_metric(r.srd) << ',' << format_metric(r.reg) << ',' << format_metric(r.total) << ','
        << format_metric(r.train_acc) << ',' << format_metric(r.test_acc) << ',' << format_metric(r.test_topk) << ','
        << format_metric(r.mimicry_kl);
    return out.str();
}

std::string to_csv_row(const UsageStats& s) {
    std::ostringstream out;
    out << s.epoch << ',' << s.kept_ind << ',' << s.kept_ood << ',' << s.dropped_ind << ',' << s.dropped_ood;
    return out.str();
}

std::string to_csv_row(const UsageProportion& p) {
    return std::to_string(p.epoch) + ',' + format_metric(p.kept) + ',' + format_metric(p.kept_ind) + ',' +
           format_metric(p.kept_ood);
}

CsvLog::CsvLog(const std::filesystem::path& path, const std::string& header) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    out_.open(path, std::ios::app);
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for appending");
    if (fresh) out_ << header << '\n';
}

void CsvLog::append(const std::string& row) {
    out_ << row << '\n';
    out_.flush();
    if (!out_) throw std::runtime_error("CSV write failed");
}

void write_usage_curve(const std::filesystem::path& path, std::span<const UsageStats> stats) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << kUsageCurveHeader << '\n';
    for (const auto& p : usage_curve(stats)) out << to_csv_row(p) << '\n';
}

void feature_dump(Network& net, const LabeledPool& data, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const std::size_t d = net.feature_dim();
    for (std::size_t j = 0; j < d; ++j) out << 'f' << j << ',';
    out << "label\n";
    if (data.size() > 0) {
        const Tensor features = net.forward(data.inputs.to_tensor(), Mode::eval).features;
        char buf[64];
        for (std::size_t r = 0; r < features.rows(); ++r) {
            for (std::size_t j = 0; j < d; ++j) {
                std::snprintf(buf, sizeof buf, "%.17g,", features.at(r, j));
                out << buf;
            }
            out << data.labels[r] << '\n';
        }
    }
    if (!out) throw std::runtime_error("feature dump write failed for " + path.string());
}

std::vector<FeatureRow> read_feature_dump(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<FeatureRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        FeatureRow row;
        std::stringstream cells(line);
        std::string cell;
        std::vector<std::string> parts;
        while (std::getline(cells, cell, ',')) parts.push_back(cell);
        if (parts.empty()) continue;
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) row.features.push_back(std::stod(parts[i]));
        row.label = std::stoi(parts.back());
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace srd
