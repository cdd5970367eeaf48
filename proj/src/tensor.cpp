#include "slim/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "slim/kernels.hpp"

namespace slim {

namespace {

std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

std::size_t shape_product(const std::vector<std::size_t>& s) {
    std::size_t p = 1;
    for (auto d : s) p *= d;
    return p;
}

constexpr real kInvSqrt2 = 0.70710678118654752440;
constexpr real kInvSqrt2Pi = 0.39894228040143267794;

} // namespace

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    Tensor t;
    t.d_->values.assign(shape_product(shape), 0.0);
    t.d_->shape = std::move(shape);
    t.set_requires_grad(requires_grad);
    return t;
}

Tensor Tensor::from_values(std::vector<std::size_t> shape, std::vector<real> values,
                           bool requires_grad) {
    if (shape_product(shape) != values.size())
        throw DimensionError("from_values: shape " + shape_str(shape) + " does not hold " +
                             std::to_string(values.size()) + " values");
    Tensor t;
    t.d_->shape = std::move(shape);
    t.d_->values = std::move(values);
    t.set_requires_grad(requires_grad);
    return t;
}

Tensor Tensor::scalar(real v, bool requires_grad) {
    return from_values({1}, {v}, requires_grad);
}

Tensor Tensor::vector(std::vector<real> v, bool requires_grad) {
    std::size_t n = v.size();
    return from_values({n}, std::move(v), requires_grad);
}

std::size_t Tensor::rows() const {
    if (ndim() != 2) throw DimensionError("rows(): tensor is not a matrix, shape " + shape_str(shape()));
    return d_->shape[0];
}

std::size_t Tensor::cols() const {
    if (ndim() != 2) throw DimensionError("cols(): tensor is not a matrix, shape " + shape_str(shape()));
    return d_->shape[1];
}

real Tensor::item() const {
    if (size() != 1) throw ContractError("item(): tensor has " + std::to_string(size()) + " elements");
    return d_->values[0];
}

void Tensor::set_requires_grad(bool rg) {
    d_->requires_grad = rg;
    if (rg)
        ensure_grad();
    else
        d_->grad.clear();
}

void Tensor::ensure_grad() {
    if (d_->grad.size() != d_->values.size()) d_->grad.assign(d_->values.size(), 0.0);
}

std::vector<real>& Tensor::grad() {
    if (!d_->requires_grad) throw StateError("grad(): tensor does not track gradients");
    ensure_grad();
    return d_->grad;
}

const std::vector<real>& Tensor::grad() const {
    if (!d_->requires_grad || d_->grad.size() != d_->values.size())
        throw StateError("grad(): tensor does not track gradients");
    return d_->grad;
}

void Tensor::zero_grad() {
    if (!d_->grad.empty()) std::fill(d_->grad.begin(), d_->grad.end(), 0.0);
}

bool Tensor::all_finite() const {
    for (real v : d_->values)
        if (!std::isfinite(v)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

void Tape::record(Tensor& out, std::function<void()> backward_fn) {
    out.set_requires_grad(true);
    ops_.push_back(std::move(backward_fn));
}

void Tape::backward(const Tensor& loss, real seed) {
    if (!grad_enabled_) throw StateError("backward(): tape was created with gradients disabled");
    if (backward_done_) throw StateError("backward(): called twice without reset()");
    if (loss.size() != 1)
        throw ContractError("backward(): loss must be scalar, got shape with " +
                            std::to_string(loss.size()) + " elements");
    if (!loss.requires_grad())
        throw StateError("backward(): loss does not depend on any gradient-tracked tensor");
    Tensor seed_target = loss;
    seed_target.grad()[0] += seed;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    backward_done_ = true;
}

void Tape::reset() {
    ops_.clear();
    backward_done_ = false;
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.rows())
        throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()));
    std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = Tensor::zeros({m, n});
    kernels::gemm(kernels::Transpose::no, kernels::Transpose::no, m, n, k, 1.0, a.data(), k,
                  b.data(), n, 0.0, out.data(), n);
    if (tape.tracking(a, b)) {
        tape.record(out, [a = a, b = b, out = out, m = m, k = k, n = n]() mutable {
            if (a.requires_grad())
                kernels::gemm(kernels::Transpose::no, kernels::Transpose::yes, m, k, n, 1.0,
                              out.grad().data(), n, b.data(), n, 1.0, a.grad().data(), k);
            if (b.requires_grad())
                kernels::gemm(kernels::Transpose::yes, kernels::Transpose::no, k, n, m, 1.0,
                              a.data(), k, out.grad().data(), n, 1.0, b.grad().data(), n);
        });
    }
    return out;
}

Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.cols())
        throw DimensionError("matmul_nt: incompatible shapes " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()));
    std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    Tensor out = Tensor::zeros({m, n});
    kernels::gemm(kernels::Transpose::no, kernels::Transpose::yes, m, n, k, 1.0, a.data(), k,
                  b.data(), k, 0.0, out.data(), n);
    if (tape.tracking(a, b)) {
        tape.record(out, [a = a, b = b, out = out, m = m, k = k, n = n]() mutable {
            if (a.requires_grad())
                kernels::gemm(kernels::Transpose::no, kernels::Transpose::no, m, k, n, 1.0,
                              out.grad().data(), n, b.data(), k, 1.0, a.grad().data(), k);
            if (b.requires_grad())
                kernels::gemm(kernels::Transpose::yes, kernels::Transpose::no, n, k, m, 1.0,
                              out.grad().data(), n, a.data(), k, 1.0, b.grad().data(), k);
        });
    }
    return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw DimensionError("add: shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = a.at(i) + b.at(i);
    if (tape.tracking(a, b)) {
        tape.record(out, [a = a, b = b, out = out]() mutable {
            const auto& g = out.grad();
            if (a.requires_grad()) {
                auto& ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
            }
        });
    }
    return out;
}

Tensor add_row_broadcast(Tape& tape, const Tensor& m, const Tensor& v) {
    if (m.ndim() != 2 || v.ndim() != 1 || m.cols() != v.size())
        throw DimensionError("add_row_broadcast: shapes " + shape_str(m.shape()) + " and " +
                             shape_str(v.shape()));
    std::size_t r = m.rows(), c = m.cols();
    Tensor out = Tensor::zeros({r, c});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.values()[i * c + j] = m.at(i, j) + v.at(j);
    if (tape.tracking(m, v)) {
        tape.record(out, [m = m, v = v, out = out, r = r, c = c]() mutable {
            const auto& g = out.grad();
            if (m.requires_grad()) {
                auto& gm = m.grad();
                for (std::size_t i = 0; i < r * c; ++i) gm[i] += g[i];
            }
            if (v.requires_grad()) {
                auto& gv = v.grad();
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) gv[j] += g[i * c + j];
            }
        });
    }
    return out;
}

Tensor add_row_const(Tape& tape, const Tensor& m, const std::vector<real>& v) {
    if (m.ndim() != 2 || m.cols() != v.size())
        throw DimensionError("add_row_const: matrix " + shape_str(m.shape()) + " vs vector of " +
                             std::to_string(v.size()));
    std::size_t r = m.rows(), c = m.cols();
    Tensor out = Tensor::zeros({r, c});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.values()[i * c + j] = m.at(i, j) + v[j];
    if (tape.tracking(m)) {
        tape.record(out, [m = m, out = out]() mutable {
            const auto& g = out.grad();
            auto& gm = m.grad();
            for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
        });
    }
    return out;
}

Tensor scale(Tape& tape, const Tensor& x, real s) {
    Tensor out = Tensor::zeros(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out.values()[i] = s * x.at(i);
    if (tape.tracking(x)) {
        tape.record(out, [x = x, out = out, s = s]() mutable {
            const auto& g = out.grad();
            auto& gx = x.grad();
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += s * g[i];
        });
    }
    return out;
}

Tensor hadamard(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw DimensionError("hadamard: shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = a.at(i) * b.at(i);
    if (tape.tracking(a, b)) {
        tape.record(out, [a = a, b = b, out = out]() mutable {
            const auto& g = out.grad();
            if (a.requires_grad()) {
                auto& ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += b.at(i) * g[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += a.at(i) * g[i];
            }
        });
    }
    return out;
}

Tensor concat(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.ndim() != 1 || b.ndim() != 1)
        throw DimensionError("concat: expects vectors, got " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()));
    std::size_t na = a.size(), nb = b.size();
    Tensor out = Tensor::zeros({na + nb});
    std::copy(a.values().begin(), a.values().end(), out.values().begin());
    std::copy(b.values().begin(), b.values().end(), out.values().begin() + static_cast<long>(na));
    if (tape.tracking(a, b)) {
        tape.record(out, [a = a, b = b, out = out, na = na, nb = nb]() mutable {
            const auto& g = out.grad();
            if (a.requires_grad()) {
                auto& ga = a.grad();
                for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad();
                for (std::size_t i = 0; i < nb; ++i) gb[i] += g[na + i];
            }
        });
    }
    return out;
}

namespace {

std::size_t block_width(const Tensor& t) {
    if (t.ndim() == 1) return t.size();
    if (t.ndim() == 2) return t.cols();
    throw DimensionError("concat_rows: operands must be vectors or matrices");
}

std::size_t block_rows(const Tensor& t) { return t.ndim() == 1 ? 1 : t.rows(); }

} // namespace

Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_rows: no operands");
    std::size_t c = block_width(parts.front());
    std::size_t total = 0;
    bool track = false;
    for (const auto& p : parts) {
        if (block_width(p) != c)
            throw DimensionError("concat_rows: width mismatch, expected " + std::to_string(c));
        total += block_rows(p);
        track = track || p.requires_grad();
    }
    Tensor out = Tensor::zeros({total, c});
    std::size_t r0 = 0;
    for (const auto& p : parts) {
        std::copy(p.values().begin(), p.values().end(), out.values().begin() + static_cast<long>(r0 * c));
        r0 += block_rows(p);
    }
    if (tape.grad_enabled() && track) {
        tape.record(out, [parts = parts, out = out, c = c]() mutable {
            const auto& g = out.grad();
            std::size_t r0 = 0;
            for (auto& p : parts) {
                std::size_t n = block_rows(p) * c;
                if (p.requires_grad()) {
                    auto& gp = p.grad();
                    for (std::size_t i = 0; i < n; ++i) gp[i] += g[r0 * c + i];
                }
                r0 += block_rows(p);
            }
        });
    }
    return out;
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: no operands");
    std::size_t r = parts.front().rows();
    std::size_t total = 0;
    bool track = false;
    for (const auto& p : parts) {
        if (p.ndim() != 2 || p.rows() != r)
            throw DimensionError("concat_cols: row-count mismatch");
        total += p.cols();
        track = track || p.requires_grad();
    }
    Tensor out = Tensor::zeros({r, total});
    std::size_t c0 = 0;
    for (const auto& p : parts) {
        std::size_t pc = p.cols();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < pc; ++j) out.values()[i * total + c0 + j] = p.at(i, j);
        c0 += pc;
    }
    if (tape.grad_enabled() && track) {
        tape.record(out, [parts = parts, out = out, r = r, total = total]() mutable {
            const auto& g = out.grad();
            std::size_t c0 = 0;
            for (auto& p : parts) {
                std::size_t pc = p.cols();
                if (p.requires_grad()) {
                    auto& gp = p.grad();
                    for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < pc; ++j) gp[i * pc + j] += g[i * total + c0 + j];
                }
                c0 += pc;
            }
        });
    }
    return out;
}

Tensor slice_rows(Tape& tape, const Tensor& x, std::size_t start, std::size_t count) {
    if (x.ndim() != 2) throw DimensionError("slice_rows: expects a matrix");
    if (start + count > x.rows())
        throw IndexError("slice_rows: range [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") exceeds " + std::to_string(x.rows()) +
                         " rows");
    std::size_t c = x.cols();
    Tensor out = Tensor::zeros({count, c});
    std::copy(x.values().begin() + static_cast<long>(start * c),
              x.values().begin() + static_cast<long>((start + count) * c), out.values().begin());
    if (tape.tracking(x)) {
        tape.record(out, [x = x, out = out, start = start, count = count, c = c]() mutable {
            const auto& g = out.grad();
            auto& gx = x.grad();
            for (std::size_t i = 0; i < count * c; ++i) gx[start * c + i] += g[i];
        });
    }
    return out;
}

Tensor slice_cols(Tape& tape, const Tensor& x, std::size_t start, std::size_t count) {
    if (x.ndim() != 2) throw DimensionError("slice_cols: expects a matrix");
    if (start + count > x.cols())
        throw IndexError("slice_cols: range exceeds " + std::to_string(x.cols()) + " columns");
    std::size_t r = x.rows(), c = x.cols();
    Tensor out = Tensor::zeros({r, count});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < count; ++j) out.values()[i * count + j] = x.at(i, start + j);
    if (tape.tracking(x)) {
        tape.record(out, [x = x, out = out, start = start, count = count, r = r, c = c]() mutable {
            const auto& g = out.grad();
            auto& gx = x.grad();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < count; ++j) gx[i * c + start + j] += g[i * count + j];
        });
    }
    return out;
}

Tensor reshape(Tape& tape, const Tensor& x, std::vector<std::size_t> shape) {
    if (shape_product(shape) != x.size())
        throw DimensionError("reshape: " + shape_str(x.shape()) + " cannot become " +
                             shape_str(shape));
    Tensor out = Tensor::from_values(std::move(shape), x.values());
    if (tape.tracking(x)) {
        tape.record(out, [x = x, out = out]() mutable {
            const auto& g = out.grad();
            auto& gx = x.grad();
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        });
    }
    return out;
}

Tensor embedding_lookup(Tape& tape, const Tensor& table, const std::vector<int>& ids) {
    if (table.ndim() != 2) throw DimensionError("embedding_lookup: table must be [V x d]");
    std::size_t v = table.rows(), d = table.cols();
    for (int id : ids)
        if (id < 0 || static_cast<std::size_t>(id) >= v)
            throw IndexError("embedding_lookup: id " + std::to_string(id) + " outside vocabulary of " +
                             std::to_string(v));
    Tensor out = Tensor::zeros({ids.size(), d});
    for (std::size_t i = 0; i < ids.size(); ++i)
        std::copy(table.values().begin() + static_cast<long>(ids[i] * d),
                  table.values().begin() + static_cast<long>((ids[i] + 1) * d),
                  out.values().begin() + static_cast<long>(i * d));
    if (tape.tracking(table)) {
        tape.record(out, [table = table, out = out, ids = ids, d = d]() mutable {
            const auto& g = out.grad();
            auto& gt = table.grad();
            for (std::size_t i = 0; i < ids.size(); ++i)
                for (std::size_t j = 0; j < d; ++j)
                    gt[static_cast<std::size_t>(ids[i]) * d + j] += g[i * d + j];
        });
    }
    return out;
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        real v = x.at(i);
        if (v >= 0) {
            out.values()[i] = 1.0 / (1.0 + std::exp(-v));
        } else {
            real e = std::exp(v);
            out.values()[i] = e / (1.0 + e);
        }
    }
    if (tape.tracking(x)) {
        tape.record(out, [x = x, out = out]() mutable {
            const auto& g = out.grad();
            auto& gx = x.grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                real y = out.at(i);
                gx[i] += y * (1.0 - y) * g[i];
            }
        });
    }
    return out;
}

Tensor gelu(Tape& tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        real v = x.at(i);
        out.values()[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    }
    if (tape.tracking(x)) {
        tape.record(out, [x = x, out = out]() mutable {
            const auto& g = out.grad();
            auto& gx = x.grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                real v = x.at(i);
                real phi = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
                real dens = kInvSqrt2Pi * std::exp(-0.5 * v * v);
                gx[i] += (phi + v * dens) * g[i];
            }
        });
    }
    return out;
}

Tensor softmax_rows(Tape& tape, const Tensor& x) {
    if (x.ndim() != 2) throw DimensionError("softmax_rows: expects a matrix");
    std::size_t r = x.rows(), c = x.cols();
    Tensor out = Tensor::zeros({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        real mx = x.at(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, x.at(i, j));
        real s = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            real e = std::exp(x.at(i, j) - mx);
            out.values()[i * c + j] = e;
            s += e;
        }
        for (std::size_t j = 0; j < c; ++j) out.values()[i * c + j] /= s;
    }
    if (tape.tracking(x)) {
        tape.record(out, [x = x, out = out, r = r, c = c]() mutable {
            const auto& g = out.grad();
            auto& gx = x.grad();
            for (std::size_t i = 0; i < r; ++i) {
                real dot = 0.0;
                for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * out.at(i, j);
                for (std::size_t j = 0; j < c; ++j)
                    gx[i * c + j] += out.at(i, j) * (g[i * c + j] - dot);
            }
        });
    }
    return out;
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias, real eps) {
    if (x.ndim() != 2 || gain.ndim() != 1 || bias.ndim() != 1 || gain.size() != x.cols() ||
        bias.size() != x.cols())
        throw DimensionError("layer_norm: x " + shape_str(x.shape()) + ", gain " +
                             shape_str(gain.shape()) + ", bias " + shape_str(bias.shape()));
    std::size_t r = x.rows(), c = x.cols();
    Tensor out = Tensor::zeros({r, c});
    // cached per-row normalized values and 1/sqrt(var+eps) for the backward pass
    auto xhat = std::make_shared<std::vector<real>>(r * c);
    auto inv_std = std::make_shared<std::vector<real>>(r);
    for (std::size_t i = 0; i < r; ++i) {
        real mu = 0.0;
        for (std::size_t j = 0; j < c; ++j) mu += x.at(i, j);
        mu /= static_cast<real>(c);
        real var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            real d = x.at(i, j) - mu;
            var += d * d;
        }
        var /= static_cast<real>(c);
        real inv = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = inv;
        for (std::size_t j = 0; j < c; ++j) {
            real xc = (x.at(i, j) - mu) * inv;
            (*xhat)[i * c + j] = xc;
            out.values()[i * c + j] = gain.at(j) * xc + bias.at(j);
        }
    }
    if (tape.grad_enabled() && (x.requires_grad() || gain.requires_grad() || bias.requires_grad())) {
        tape.record(out, [x = x, gain = gain, bias = bias, out = out, xhat = xhat, inv_std = inv_std, r = r, c = c]() mutable {
            const auto& g = out.grad();
            for (std::size_t i = 0; i < r; ++i) {
                if (x.requires_grad()) {
                    real mean_gy = 0.0, mean_gyx = 0.0;
                    for (std::size_t j = 0; j < c; ++j) {
                        real gy = g[i * c + j] * gain.at(j);
                        mean_gy += gy;
                        mean_gyx += gy * (*xhat)[i * c + j];
                    }
                    mean_gy /= static_cast<real>(c);
                    mean_gyx /= static_cast<real>(c);
                    auto& gx = x.grad();
                    for (std::size_t j = 0; j < c; ++j) {
                        real gy = g[i * c + j] * gain.at(j);
                        gx[i * c + j] +=
                            (*inv_std)[i] * (gy - mean_gy - (*xhat)[i * c + j] * mean_gyx);
                    }
                }
                if (gain.requires_grad()) {
                    auto& gg = gain.grad();
                    for (std::size_t j = 0; j < c; ++j)
                        gg[j] += g[i * c + j] * (*xhat)[i * c + j];
                }
                if (bias.requires_grad()) {
                    auto& gb = bias.grad();
                    for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
                }
            }
        });
    }
    return out;
}

Tensor masked_mean(Tape& tape, const Tensor& h, const std::vector<real>& mask) {
    if (h.ndim() != 2 || mask.size() != h.rows())
        throw DimensionError("masked_mean: matrix " + shape_str(h.shape()) + " vs mask of " +
                             std::to_string(mask.size()));
    std::size_t r = h.rows(), c = h.cols();
    std::size_t count = 0;
    for (real m : mask)
        if (m > 0.5) ++count;
    Tensor out = Tensor::zeros({c});
    if (count == 0) return out; // padding slot: constant zero vector
    real inv = 1.0 / static_cast<real>(count);
    for (std::size_t i = 0; i < r; ++i) {
        if (mask[i] <= 0.5) continue;
        for (std::size_t j = 0; j < c; ++j) out.values()[j] += h.at(i, j) * inv;
    }
    if (tape.tracking(h)) {
        tape.record(out, [h = h, out = out, mask = mask, inv = inv, r = r, c = c]() mutable {
            const auto& g = out.grad();
            auto& gh = h.grad();
            for (std::size_t i = 0; i < r; ++i) {
                if (mask[i] <= 0.5) continue;
                for (std::size_t j = 0; j < c; ++j) gh[i * c + j] += g[j] * inv;
            }
        });
    }
    return out;
}

Tensor dropout(Tape& tape, const Tensor& x, real rate, Rng& rng, bool training) {
    if (rate < 0.0 || rate >= 1.0)
        throw ContractError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
    if (!training || rate == 0.0) return x;
    real keep = 1.0 - rate;
    auto mask = std::make_shared<std::vector<real>>(x.size());
    Tensor out = Tensor::zeros(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        real m = (rng.uniform() >= rate) ? 1.0 / keep : 0.0;
        (*mask)[i] = m;
        out.values()[i] = x.at(i) * m;
    }
    if (tape.tracking(x)) {
        tape.record(out, [x = x, out = out, mask = mask]() mutable {
            const auto& g = out.grad();
            auto& gx = x.grad();
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += (*mask)[i] * g[i];
        });
    }
    return out;
}

Tensor normalize_rows(Tape& tape, const Tensor& x) {
    if (x.ndim() != 2) throw DimensionError("normalize_rows: expects a matrix");
    std::size_t r = x.rows(), c = x.cols();
    Tensor out = Tensor::zeros({r, c});
    auto sums = std::make_shared<std::vector<real>>(r);
    for (std::size_t i = 0; i < r; ++i) {
        real s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += x.at(i, j);
        if (s <= 0.0) throw ContractError("normalize_rows: row " + std::to_string(i) + " sums to " +
                                          std::to_string(s));
        (*sums)[i] = s;
        for (std::size_t j = 0; j < c; ++j) out.values()[i * c + j] = x.at(i, j) / s;
    }
    if (tape.tracking(x)) {
        tape.record(out, [x = x, out = out, sums = sums, r = r, c = c]() mutable {
            const auto& g = out.grad();
            auto& gx = x.grad();
            for (std::size_t i = 0; i < r; ++i) {
                real dot = 0.0;
                for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * out.at(i, j);
                for (std::size_t j = 0; j < c; ++j)
                    gx[i * c + j] += (g[i * c + j] - dot) / (*sums)[i];
            }
        });
    }
    return out;
}

Tensor sum(Tape& tape, const Tensor& x) {
    real s = std::accumulate(x.values().begin(), x.values().end(), real{0});
    Tensor out = Tensor::scalar(s);
    if (tape.tracking(x)) {
        tape.record(out, [x = x, out = out]() mutable {
            real g = out.grad()[0];
            auto& gx = x.grad();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
        });
    }
    return out;
}

Tensor mean_scalars(Tape& tape, const std::vector<Tensor>& scalars) {
    if (scalars.empty()) throw ContractError("mean_scalars: no operands");
    std::vector<real> coeffs(scalars.size(), 1.0 / static_cast<real>(scalars.size()));
    return weighted_sum_scalars(tape, scalars, coeffs);
}

Tensor weighted_sum_scalars(Tape& tape, const std::vector<Tensor>& scalars,
                            const std::vector<real>& coeffs) {
    if (scalars.size() != coeffs.size() || scalars.empty())
        throw ContractError("weighted_sum_scalars: need matching non-empty operand/coeff lists");
    real total = 0.0;
    bool track = false;
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        if (scalars[i].size() != 1) throw ContractError("weighted_sum_scalars: operand not scalar");
        total += coeffs[i] * scalars[i].at(0);
        track = track || scalars[i].requires_grad();
    }
    Tensor out = Tensor::scalar(total);
    if (tape.grad_enabled() && track) {
        tape.record(out, [scalars = scalars, coeffs = coeffs, out = out]() mutable {
            real g = out.grad()[0];
            for (std::size_t i = 0; i < scalars.size(); ++i)
                if (scalars[i].requires_grad()) scalars[i].grad()[0] += coeffs[i] * g;
        });
    }
    return out;
}

Tensor bce_loss(Tape& tape, const Tensor& probs, const std::vector<real>& targets) {
    if (probs.size() != targets.size())
        throw DimensionError("bce_loss: " + std::to_string(probs.size()) + " probabilities vs " +
                             std::to_string(targets.size()) + " targets");
    std::size_t n = probs.size();
    if (n == 0) throw DimensionError("bce_loss: empty inputs");
    real loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        real p = std::clamp(probs.at(i), kLossEps, 1.0 - kLossEps);
        loss -= targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p);
    }
    loss /= static_cast<real>(n);
    Tensor out = Tensor::scalar(loss);
    if (tape.tracking(probs)) {
        tape.record(out, [probs = probs, targets = targets, out = out, n = n]() mutable {
            real g = out.grad()[0] / static_cast<real>(n);
            auto& gp = probs.grad();
            for (std::size_t i = 0; i < n; ++i) {
                real p = probs.at(i);
                if (p <= kLossEps || p >= 1.0 - kLossEps) continue; // clamp region is flat
                gp[i] += g * (-targets[i] / p + (1.0 - targets[i]) / (1.0 - p));
            }
        });
    }
    return out;
}

Tensor ce_loss(Tape& tape, const Tensor& probs, const std::vector<int>& gold,
               const std::vector<real>& row_mask) {
    if (probs.ndim() != 2) throw DimensionError("ce_loss: probs must be [m x c]");
    std::size_t m = probs.rows(), c = probs.cols();
    if (gold.size() != m || row_mask.size() != m)
        throw DimensionError("ce_loss: gold/mask length must equal " + std::to_string(m) + " rows");
    std::size_t n_eff = 0;
    for (std::size_t r = 0; r < m; ++r) {
        if (row_mask[r] <= 0.5) continue;
        if (gold[r] < 0 || static_cast<std::size_t>(gold[r]) >= c)
            throw IndexError("ce_loss: gold index " + std::to_string(gold[r]) + " at row " +
                             std::to_string(r) + " outside " + std::to_string(c) + " classes");
        ++n_eff;
    }
    if (n_eff == 0) return Tensor::scalar(0.0); // empty mean defined as 0
    real loss = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        if (row_mask[r] <= 0.5) continue;
        loss -= std::log(probs.at(r, static_cast<std::size_t>(gold[r])) + kLossEps);
    }
    loss /= static_cast<real>(n_eff);
    Tensor out = Tensor::scalar(loss);
    if (tape.tracking(probs)) {
        tape.record(out, [probs = probs, gold = gold, row_mask = row_mask, out = out, m = m, c = c, n_eff = n_eff]() mutable {
            real g = out.grad()[0] / static_cast<real>(n_eff);
            auto& gp = probs.grad();
            for (std::size_t r = 0; r < m; ++r) {
                if (row_mask[r] <= 0.5) continue;
                std::size_t idx = r * c + static_cast<std::size_t>(gold[r]);
                gp[idx] += g * (-1.0 / (probs.at(r, static_cast<std::size_t>(gold[r])) + kLossEps));
            }
        });
    }
    return out;
}

} // namespace slim
