#include "srd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace srd {
namespace {

using detail::TensorImpl;

// Grad buffer of the i-th operand, or nullptr if it does not need one.
double* input_grad(TensorImpl& out, std::size_t i) {
    auto& in = *out.node->inputs[i];
    return in.requires_grad ? in.grad.data() : nullptr;
}

const std::vector<double>& input_values(TensorImpl& out, std::size_t i) {
    return out.node->inputs[i]->values;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                             shape_to_string(b.shape()));
    }
}

void require_matrix(const Tensor& a, const char* op) {
    if (a.rank() != 2) {
        throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_to_string(a.shape()));
    }
}

// Rank-0 and rank-1 inputs reduce to a scalar; [B×n] reductions keep [B].
Shape row_shape(const Tensor& a) {
    return a.rank() >= 2 ? Shape{a.rows()} : Shape{};
}

double floored_log(double p) {
    return std::log(std::max(p, kLogFloor));
}

}  // namespace

void require_finite(const Tensor& t, const char* what) {
    for (double v : t.values()) {
        if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite value");
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    if (b.shape()[0] != k) {
        throw DimensionError("matmul: inner dimensions differ, " + shape_to_string(a.shape()) + " x " +
                             shape_to_string(b.shape()));
    }
    std::vector<double> out(m * n, 0.0);
    const double* A = a.values().data();
    const double* B = b.values().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* row = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = A[i * k + p];
            const double* brow = B + p * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
        }
    }
    return Tensor::from_op({m, n}, std::move(out), {a, b}, "matmul", [m, k, n](TensorImpl& o) {
        const double* G = o.grad.data();
        const double* A = input_values(o, 0).data();
        const double* B = input_values(o, 1).data();
        if (double* dA = input_grad(o, 0)) {
            // dA = G · Bᵀ
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = G + i * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const double* brow = B + p * n;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                    dA[i * k + p] += acc;
                }
            }
        }
        if (double* dB = input_grad(o, 1)) {
            // dB = Aᵀ · G
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = G + i * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const double aip = A[i * k + p];
                    double* drow = dB + p * n;
                    for (std::size_t j = 0; j < n; ++j) drow[j] += aip * grow[j];
                }
            }
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
    return Tensor::from_op(a.shape(), std::move(out), {a, b}, "add", [](TensorImpl& o) {
        for (std::size_t s = 0; s < 2; ++s) {
            if (double* d = input_grad(o, s)) {
                for (std::size_t i = 0; i < o.grad.size(); ++i) d[i] += o.grad[i];
            }
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
    return Tensor::from_op(a.shape(), std::move(out), {a, b}, "sub", [](TensorImpl& o) {
        if (double* d = input_grad(o, 0)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) d[i] += o.grad[i];
        }
        if (double* d = input_grad(o, 1)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) d[i] -= o.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
    return Tensor::from_op(a.shape(), std::move(out), {a, b}, "mul", [](TensorImpl& o) {
        const auto& av = input_values(o, 0);
        const auto& bv = input_values(o, 1);
        if (double* d = input_grad(o, 0)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) d[i] += o.grad[i] * bv[i];
        }
        if (double* d = input_grad(o, 1)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) d[i] += o.grad[i] * av[i];
        }
    });
}

Tensor scale(const Tensor& a, double factor) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * factor;
    return Tensor::from_op(a.shape(), std::move(out), {a}, "scale", [factor](TensorImpl& o) {
        if (double* d = input_grad(o, 0)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) d[i] += o.grad[i] * factor;
        }
    });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
    require_matrix(a, "add_bias");
    const std::size_t rows = a.rows(), cols = a.cols();
    if (bias.numel() != cols || bias.rank() != 1) {
        throw DimensionError("add_bias: bias " + shape_to_string(bias.shape()) + " does not fit " +
                             shape_to_string(a.shape()));
    }
    std::vector<double> out(a.values().begin(), a.values().end());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bias.values()[c];
    }
    return Tensor::from_op(a.shape(), std::move(out), {a, bias}, "add_bias", [rows, cols](TensorImpl& o) {
        if (double* d = input_grad(o, 0)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) d[i] += o.grad[i];
        }
        if (double* d = input_grad(o, 1)) {
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) d[c] += o.grad[r * cols + c];
            }
        }
    });
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(a.values()[i], 0.0);
    return Tensor::from_op(a.shape(), std::move(out), {a}, "relu", [](TensorImpl& o) {
        if (double* d = input_grad(o, 0)) {
            const auto& x = input_values(o, 0);
            for (std::size_t i = 0; i < o.grad.size(); ++i) {
                if (x[i] > 0.0) d[i] += o.grad[i];
            }
        }
    });
}

Tensor sigmoid(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = a.values()[i];
        out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    return Tensor::from_op(a.shape(), std::move(out), {a}, "sigmoid", [](TensorImpl& o) {
        if (double* d = input_grad(o, 0)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) {
                const double s = o.values[i];
                d[i] += o.grad[i] * s * (1.0 - s);
            }
        }
    });
}

Tensor sum(const Tensor& a) {
    double total = 0.0;
    for (double v : a.values()) total += v;
    return Tensor::from_op({}, {total}, {a}, "sum", [](TensorImpl& o) {
        if (double* d = input_grad(o, 0)) {
            const std::size_t n = o.node->inputs[0]->values.size();
            for (std::size_t i = 0; i < n; ++i) d[i] += o.grad[0];
        }
    });
}

Tensor mean(const Tensor& a) {
    double total = 0.0;
    for (double v : a.values()) total += v;
    const double n = static_cast<double>(a.numel());
    return Tensor::from_op({}, {total / n}, {a}, "mean", [n](TensorImpl& o) {
        if (double* d = input_grad(o, 0)) {
            const double g = o.grad[0] / n;
            const std::size_t count = o.node->inputs[0]->values.size();
            for (std::size_t i = 0; i < count; ++i) d[i] += g;
        }
    });
}

Tensor softmax(const Tensor& logits) {
    require_finite(logits, "softmax");
    const std::size_t rows = logits.rows(), cols = logits.cols();
    std::vector<double> out(logits.numel());
    const double* z = logits.values().data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* zr = z + r * cols;
        double* pr = out.data() + r * cols;
        const double peak = *std::max_element(zr, zr + cols);
        double total = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            pr[c] = std::exp(zr[c] - peak);
            total += pr[c];
        }
        for (std::size_t c = 0; c < cols; ++c) pr[c] /= total;
    }
    return Tensor::from_op(logits.shape(), std::move(out), {logits}, "softmax", [rows, cols](TensorImpl& o) {
        if (double* d = input_grad(o, 0)) {
            for (std::size_t r = 0; r < rows; ++r) {
                const double* p = o.values.data() + r * cols;
                const double* g = o.grad.data() + r * cols;
                double dot = 0.0;
                for (std::size_t c = 0; c < cols; ++c) dot += g[c] * p[c];
                for (std::size_t c = 0; c < cols; ++c) d[r * cols + c] += p[c] * (g[c] - dot);
            }
        }
    });
}

Tensor log_softmax(const Tensor& logits) {
    require_finite(logits, "log_softmax");
    const std::size_t rows = logits.rows(), cols = logits.cols();
    std::vector<double> out(logits.numel());
    const double* z = logits.values().data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* zr = z + r * cols;
        const double peak = *std::max_element(zr, zr + cols);
        double total = 0.0;
        for (std::size_t c = 0; c < cols; ++c) total += std::exp(zr[c] - peak);
        const double lse = peak + std::log(total);
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = zr[c] - lse;
    }
    return Tensor::from_op(logits.shape(), std::move(out), {logits}, "log_softmax", [rows, cols](TensorImpl& o) {
        if (double* d = input_grad(o, 0)) {
            for (std::size_t r = 0; r < rows; ++r) {
                const double* lp = o.values.data() + r * cols;
                const double* g = o.grad.data() + r * cols;
                double gsum = 0.0;
                for (std::size_t c = 0; c < cols; ++c) gsum += g[c];
                for (std::size_t c = 0; c < cols; ++c) d[r * cols + c] += g[c] - std::exp(lp[c]) * gsum;
            }
        }
    });
}

Tensor row_norm(const Tensor& a) {
    const std::size_t rows = a.rows(), cols = a.cols();
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double sq = 0.0;
        for (std::size_t c = 0; c < cols; ++c) sq += a.values()[r * cols + c] * a.values()[r * cols + c];
        out[r] = std::sqrt(sq);
    }
    return Tensor::from_op(row_shape(a), std::move(out), {a}, "row_norm", [rows, cols](TensorImpl& o) {
        if (double* d = input_grad(o, 0)) {
            const auto& x = input_values(o, 0);
            for (std::size_t r = 0; r < rows; ++r) {
                const double norm = o.values[r];
                if (norm <= 0.0) continue;  // subgradient 0 at the origin
                const double g = o.grad[r] / norm;
                for (std::size_t c = 0; c < cols; ++c) d[r * cols + c] += g * x[r * cols + c];
            }
        }
    });
}

Tensor row_cosine(const Tensor& a, const Tensor& b, double eps) {
    require_same_shape(a, b, "row_cosine");
    const std::size_t rows = a.rows(), cols = a.cols();
    std::vector<double> out(rows), dots(rows), na(rows), nb(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0, sa = 0.0, sb = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double x = a.values()[r * cols + c], y = b.values()[r * cols + c];
            dot += x * y;
            sa += x * x;
            sb += y * y;
        }
        dots[r] = dot;
        na[r] = std::sqrt(sa);
        nb[r] = std::sqrt(sb);
        out[r] = dot / std::max(na[r] * nb[r], eps);
    }
    return Tensor::from_op(row_shape(a), std::move(out), {a, b}, "row_cosine",
                           [rows, cols, eps, dots, na, nb](TensorImpl& o) {
        const auto& av = input_values(o, 0);
        const auto& bv = input_values(o, 1);
        double* da = input_grad(o, 0);
        double* db = input_grad(o, 1);
        for (std::size_t r = 0; r < rows; ++r) {
            const double denom = na[r] * nb[r];
            const double g = o.grad[r];
            if (denom < eps) {
                // Constant denominator: d(dot/eps).
                for (std::size_t c = 0; c < cols; ++c) {
                    if (da) da[r * cols + c] += g * bv[r * cols + c] / eps;
                    if (db) db[r * cols + c] += g * av[r * cols + c] / eps;
                }
                continue;
            }
            const double cosv = dots[r] / denom;
            for (std::size_t c = 0; c < cols; ++c) {
                const double x = av[r * cols + c], y = bv[r * cols + c];
                if (da) da[r * cols + c] += g * (y / denom - cosv * x / (na[r] * na[r]));
                if (db) db[r * cols + c] += g * (x / denom - cosv * y / (nb[r] * nb[r]));
            }
        }
    });
}

Tensor concat_rows(const Tensor& top, const Tensor& bottom) {
    require_matrix(top, "concat_rows");
    require_matrix(bottom, "concat_rows");
    if (top.cols() != bottom.cols()) {
        throw DimensionError("concat_rows: column mismatch " + shape_to_string(top.shape()) + " vs " +
                             shape_to_string(bottom.shape()));
    }
    std::vector<double> out(top.values().begin(), top.values().end());
    out.insert(out.end(), bottom.values().begin(), bottom.values().end());
    const std::size_t split = top.numel();
    return Tensor::from_op({top.rows() + bottom.rows(), top.cols()}, std::move(out), {top, bottom}, "concat_rows",
                           [split](TensorImpl& o) {
        if (double* d = input_grad(o, 0)) {
            for (std::size_t i = 0; i < split; ++i) d[i] += o.grad[i];
        }
        if (double* d = input_grad(o, 1)) {
            for (std::size_t i = split; i < o.grad.size(); ++i) d[i - split] += o.grad[i];
        }
    });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
    require_matrix(a, "slice_rows");
    if (count == 0 || begin + count > a.rows()) {
        throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                             ") out of range for " + shape_to_string(a.shape()));
    }
    const std::size_t cols = a.cols();
    std::vector<double> out(a.values().begin() + begin * cols, a.values().begin() + (begin + count) * cols);
    return Tensor::from_op({count, cols}, std::move(out), {a}, "slice_rows", [begin, cols](TensorImpl& o) {
        if (double* d = input_grad(o, 0)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) d[begin * cols + i] += o.grad[i];
        }
    });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
    require_matrix(a, "gather_rows");
    if (rows.empty()) throw DimensionError("gather_rows: empty row selection");
    const std::size_t cols = a.cols();
    std::vector<double> out;
    out.reserve(rows.size() * cols);
    for (std::size_t r : rows) {
        if (r >= a.rows()) throw DimensionError("gather_rows: row " + std::to_string(r) + " out of range");
        out.insert(out.end(), a.values().begin() + r * cols, a.values().begin() + (r + 1) * cols);
    }
    std::vector<std::size_t> index(rows.begin(), rows.end());
    return Tensor::from_op({rows.size(), cols}, std::move(out), {a}, "gather_rows",
                           [index = std::move(index), cols](TensorImpl& o) {
        if (double* d = input_grad(o, 0)) {
            for (std::size_t i = 0; i < index.size(); ++i) {
                for (std::size_t c = 0; c < cols; ++c) d[index[i] * cols + c] += o.grad[i * cols + c];
            }
        }
    });
}

Tensor cross_entropy(const Tensor& probs, const Tensor& targets) {
    return kl_alignment(targets, probs);
}

Tensor kl_alignment(const Tensor& p_target, const Tensor& p_pred) {
    require_same_shape(p_target, p_pred, "kl_alignment");
    require_finite(p_pred, "kl_alignment");
    const std::size_t rows = p_pred.rows(), cols = p_pred.cols();
    const auto& t = p_target.values();
    const auto& p = p_pred.values();
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (t[i] != 0.0) total -= t[i] * floored_log(p[i]);
    }
    const double n = static_cast<double>(rows);
    std::vector<double> target(t.begin(), t.end());
    return Tensor::from_op({}, {total / n}, {p_pred}, "kl_alignment",
                           [target = std::move(target), n, cols](TensorImpl& o) {
        (void)cols;
        if (double* d = input_grad(o, 0)) {
            const auto& pv = input_values(o, 0);
            const double g = o.grad[0] / n;
            for (std::size_t i = 0; i < pv.size(); ++i) {
                if (target[i] != 0.0 && pv[i] > kLogFloor) d[i] -= g * target[i] / pv[i];
            }
        }
    });
}

Tensor mse(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mse");
    const double n = static_cast<double>(a.rows());
    double total = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double diff = a.values()[i] - b.values()[i];
        total += diff * diff;
    }
    return Tensor::from_op({}, {total / n}, {a, b}, "mse", [n](TensorImpl& o) {
        const auto& av = input_values(o, 0);
        const auto& bv = input_values(o, 1);
        const double g = 2.0 * o.grad[0] / n;
        double* da = input_grad(o, 0);
        double* db = input_grad(o, 1);
        for (std::size_t i = 0; i < av.size(); ++i) {
            const double diff = av[i] - bv[i];
            if (da) da[i] += g * diff;
            if (db) db[i] -= g * diff;
        }
    });
}

Tensor binary_cross_entropy(const Tensor& probs, const Tensor& targets) {
    if (probs.numel() != targets.numel()) {
        throw DimensionError("binary_cross_entropy: " + shape_to_string(probs.shape()) + " vs " +
                             shape_to_string(targets.shape()));
    }
    require_finite(probs, "binary_cross_entropy");
    const double n = static_cast<double>(probs.numel());
    const auto& p = probs.values();
    std::vector<double> y(targets.values().begin(), targets.values().end());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        total -= y[i] * floored_log(p[i]) + (1.0 - y[i]) * floored_log(1.0 - p[i]);
    }
    return Tensor::from_op({}, {total / n}, {probs}, "binary_cross_entropy", [y = std::move(y), n](TensorImpl& o) {
        if (double* d = input_grad(o, 0)) {
            const auto& pv = input_values(o, 0);
            const double g = o.grad[0] / n;
            for (std::size_t i = 0; i < pv.size(); ++i) {
                if (y[i] != 0.0 && pv[i] > kLogFloor) d[i] -= g * y[i] / pv[i];
                if (y[i] != 1.0 && 1.0 - pv[i] > kLogFloor) d[i] += g * (1.0 - y[i]) / (1.0 - pv[i]);
            }
        }
    });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, const BatchNormState& state,
                  bool training) {
    require_matrix(x, "batch_norm");
    const std::size_t rows = x.rows(), cols = x.cols();
    if (gamma.numel() != cols || beta.numel() != cols || state.running_mean.size() != cols ||
        state.running_var.size() != cols) {
        throw DimensionError("batch_norm: parameters do not match " + shape_to_string(x.shape()));
    }
    const auto& xv = x.values();
    std::vector<double> mu(cols, 0.0), var(cols, 0.0);
    if (training) {
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) mu[c] += xv[r * cols + c];
        }
        for (double& m : mu) m /= static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                const double dv = xv[r * cols + c] - mu[c];
                var[c] += dv * dv;
            }
        }
        for (double& v : var) v /= static_cast<double>(rows);
        const double unbias = rows > 1 ? static_cast<double>(rows) / static_cast<double>(rows - 1) : 1.0;
        for (std::size_t c = 0; c < cols; ++c) {
            state.running_mean[c] = state.momentum * state.running_mean[c] + (1.0 - state.momentum) * mu[c];
            state.running_var[c] = state.momentum * state.running_var[c] + (1.0 - state.momentum) * var[c] * unbias;
        }
    } else {
        std::copy(state.running_mean.begin(), state.running_mean.end(), mu.begin());
        std::copy(state.running_var.begin(), state.running_var.end(), var.begin());
    }
    std::vector<double> inv_std(cols), xhat(x.numel()), out(x.numel());
    for (std::size_t c = 0; c < cols; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + state.eps);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            xhat[i] = (xv[i] - mu[c]) * inv_std[c];
            out[i] = gamma.values()[c] * xhat[i] + beta.values()[c];
        }
    }
    return Tensor::from_op(x.shape(), std::move(out), {x, gamma, beta}, "batch_norm",
                           [rows, cols, training, inv_std = std::move(inv_std), xhat = std::move(xhat)](TensorImpl& o) {
        const auto& gm = input_values(o, 1);
        const double* g = o.grad.data();
        if (double* d = input_grad(o, 1)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) d[i % cols] += g[i] * xhat[i];
        }
        if (double* d = input_grad(o, 2)) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) d[i % cols] += g[i];
        }
        double* dx = input_grad(o, 0);
        if (!dx) return;
        if (!training) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) dx[i] += g[i] * gm[i % cols] * inv_std[i % cols];
            return;
        }
        const double n = static_cast<double>(rows);
        std::vector<double> sum_dxhat(cols, 0.0), sum_dxhat_xhat(cols, 0.0);
        for (std::size_t i = 0; i < o.grad.size(); ++i) {
            const double dxh = g[i] * gm[i % cols];
            sum_dxhat[i % cols] += dxh;
            sum_dxhat_xhat[i % cols] += dxh * xhat[i];
        }
        for (std::size_t i = 0; i < o.grad.size(); ++i) {
            const std::size_t c = i % cols;
            const double dxh = g[i] * gm[c];
            dx[i] += inv_std[c] / n * (n * dxh - sum_dxhat[c] - xhat[i] * sum_dxhat_xhat[c]);
        }
    });
}

Tensor one_hot(std::span<const int> labels, std::size_t num_classes) {
    if (labels.empty()) throw DimensionError("one_hot: empty label list");
    std::vector<double> out(labels.size() * num_classes, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
            throw DimensionError("one_hot: label " + std::to_string(y) + " outside [0, " +
                                 std::to_string(num_classes) + ")");
        }
        out[i * num_classes + static_cast<std::size_t>(y)] = 1.0;
    }
    return Tensor({labels.size(), num_classes}, std::move(out));
}

double mean_entropy(const Tensor& probs) {
    double total = 0.0;
    for (double p : probs.values()) {
        if (p != 0.0) total -= p * floored_log(p);
    }
    return total / static_cast<double>(probs.rows());
}

}  // namespace srd
