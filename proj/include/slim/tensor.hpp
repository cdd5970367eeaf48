#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "slim/errors.hpp"
#include "slim/rng.hpp"

namespace slim {

/// Computation scalar. Checkpoints store 32-bit floats; everything in memory
/// runs at 64-bit so gradient checks have headroom.
using real = double;

/// Dense row-major array with optional gradient buffer. Copying a Tensor
/// copies the handle, not the storage; parameters and tape nodes share it.
class Tensor {
public:
    Tensor() : d_(std::make_shared<Data>()) {}

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor from_values(std::vector<std::size_t> shape, std::vector<real> values,
                              bool requires_grad = false);
    static Tensor scalar(real v, bool requires_grad = false);
    static Tensor vector(std::vector<real> v, bool requires_grad = false);

    const std::vector<std::size_t>& shape() const { return d_->shape; }
    std::size_t ndim() const { return d_->shape.size(); }
    std::size_t size() const { return d_->values.size(); }
    bool is_scalar() const { return d_->shape.empty() || (ndim() == 1 && size() == 1); }
    bool is_vector() const { return ndim() == 1; }
    bool is_matrix() const { return ndim() == 2; }
    std::size_t rows() const;
    std::size_t cols() const;

    std::vector<real>& values() { return d_->values; }
    const std::vector<real>& values() const { return d_->values; }
    real* data() { return d_->values.data(); }
    const real* data() const { return d_->values.data(); }
    real at(std::size_t i) const { return d_->values[i]; }
    real at(std::size_t r, std::size_t c) const { return d_->values[r * cols() + c]; }

    /// Value of a scalar tensor.
    real item() const;

    bool requires_grad() const { return d_->requires_grad; }
    void set_requires_grad(bool rg);
    bool has_grad() const { return !d_->grad.empty(); }
    std::vector<real>& grad();
    const std::vector<real>& grad() const;
    void zero_grad();

    bool all_finite() const;
    bool same_storage(const Tensor& other) const { return d_ == other.d_; }

private:
    struct Data {
        std::vector<std::size_t> shape;
        std::vector<real> values;
        std::vector<real> grad; // empty unless requires_grad
        bool requires_grad = false;
    };
    std::shared_ptr<Data> d_;

    void ensure_grad();
    friend class Tape;
};

/// Reverse-mode tape. Operations append their backward closure as they
/// execute, so the record is already in topological order; backward() replays
/// it once, in reverse. A tape belongs to one worker for the duration of a
/// forward/backward pass.
class Tape {
public:
    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool grad_enabled() const { return grad_enabled_; }
    std::size_t num_ops() const { return ops_.size(); }

    /// Seed d(loss)/d(loss) = seed and propagate to every requires_grad
    /// tensor reachable from loss. Throws ContractError on non-scalar loss
    /// and StateError on a second call without reset().
    void backward(const Tensor& loss, real seed = 1.0);

    /// Forget recorded operations and allow another backward pass.
    void reset();

    /// Internal: register an output and its backward closure.
    void record(Tensor& out, std::function<void()> backward_fn);

    /// Internal: true when outputs of inputs-requiring-grad should track grad.
    bool tracking(const Tensor& a) const { return grad_enabled_ && a.requires_grad(); }
    bool tracking(const Tensor& a, const Tensor& b) const {
        return grad_enabled_ && (a.requires_grad() || b.requires_grad());
    }

private:
    std::vector<std::function<void()>> ops_;
    bool grad_enabled_ = true;
    bool backward_done_ = false;
};

// ---------------------------------------------------------------------------
// Differentiable operations. Each takes the recording tape first; inputs are
// untouched, the result is a fresh tensor. Plain std::vector arguments
// (masks, targets, ids) are constants as far as the tape is concerned.
// ---------------------------------------------------------------------------

/// [m x k] @ [k x n] -> [m x n].
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

/// a @ b^T: [m x k] @ [n x k] -> [m x n]. The natural form for logits with
/// weight matrices stored [out x in].
Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b);

/// Elementwise sum, identical shapes.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);

/// [r x c] matrix plus a length-c vector added to every row (bias add).
Tensor add_row_broadcast(Tape& tape, const Tensor& m, const Tensor& v);

/// Matrix plus a constant length-c vector (not differentiated w.r.t. v).
Tensor add_row_const(Tape& tape, const Tensor& m, const std::vector<real>& v);

Tensor scale(Tape& tape, const Tensor& x, real s);

/// Elementwise product, identical shapes.
Tensor hadamard(Tape& tape, const Tensor& a, const Tensor& b);

/// Vector concatenation [d1] ++ [d2] -> [d1+d2]. Either operand may be empty.
Tensor concat(Tape& tape, const Tensor& a, const Tensor& b);

/// Stack equal-width rows (vectors or 1 x c matrices) into [n x c].
Tensor concat_rows(Tape& tape, const std::vector<Tensor>& rows);

/// Column-wise concatenation of matrices with equal row counts.
Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);

Tensor slice_rows(Tape& tape, const Tensor& x, std::size_t start, std::size_t count);
Tensor slice_cols(Tape& tape, const Tensor& x, std::size_t start, std::size_t count);

/// Same data, new shape (sizes must agree).
Tensor reshape(Tape& tape, const Tensor& x, std::vector<std::size_t> shape);

/// Gather rows of table [V x d] by id -> [ids.size() x d]; backward
/// scatter-adds into the table gradient.
Tensor embedding_lookup(Tape& tape, const Tensor& table, const std::vector<int>& ids);

Tensor sigmoid(Tape& tape, const Tensor& x);

/// Exact GELU, x * Phi(x).
Tensor gelu(Tape& tape, const Tensor& x);

/// Row-wise softmax with max subtraction; rows of the result sum to 1.
Tensor softmax_rows(Tape& tape, const Tensor& x);

/// Per-row layer normalization with learned gain/bias vectors of length c.
Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias,
                  real eps = 1e-5);

/// Mean of rows selected by a binary mask; the all-zero mask yields the zero
/// vector (padding-slot convention).
Tensor masked_mean(Tape& tape, const Tensor& h, const std::vector<real>& mask);

/// Inverted dropout. Identity when !training or rate == 0.
Tensor dropout(Tape& tape, const Tensor& x, real rate, Rng& rng, bool training);

/// Divide each row by its sum (rows must have positive sums).
Tensor normalize_rows(Tape& tape, const Tensor& x);

/// Sum of all elements -> scalar.
Tensor sum(Tape& tape, const Tensor& x);

/// Arithmetic mean of scalar tensors -> scalar.
Tensor mean_scalars(Tape& tape, const std::vector<Tensor>& scalars);

/// sum_i coeffs[i] * scalars[i] -> scalar.
Tensor weighted_sum_scalars(Tape& tape, const std::vector<Tensor>& scalars,
                            const std::vector<real>& coeffs);

/// Multi-label binary cross entropy, mean over classes. Probabilities are
/// clamped to [eps, 1-eps], eps = 1e-7.
Tensor bce_loss(Tape& tape, const Tensor& probs, const std::vector<real>& targets);

/// Mean over unmasked rows of -log(probs[row, gold[row]] + eps), eps = 1e-7.
/// Masked rows contribute nothing; all rows masked gives 0.
Tensor ce_loss(Tape& tape, const Tensor& probs, const std::vector<int>& gold,
               const std::vector<real>& row_mask);

/// Clamping epsilon shared by both losses.
inline constexpr real kLossEps = 1e-7;

} // namespace slim
