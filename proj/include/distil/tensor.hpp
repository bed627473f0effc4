#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "distil/error.hpp"
#include "distil/rng.hpp"

namespace distil {

// Dense integer matrix for token ids, attention masks and label grids.
struct IntMat {
    int rows = 0;
    int cols = 0;
    std::vector<int> v;

    IntMat() = default;
    IntMat(int r, int c, int fill = 0)
        : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

    int& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    int at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
};

namespace detail {
struct TensorImpl {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
};
}  // namespace detail

// Value-like handle onto shared dense storage. Copies alias the same
// buffer; deep copies are explicit via clone().
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value,
                       bool requires_grad = false);
    static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                            bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor randn(std::vector<int> shape, Rng& rng, double stddev,
                        bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<int>& shape() const { return impl_->shape; }
    int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    int64_t size() const { return static_cast<int64_t>(impl_->data.size()); }

    std::vector<double>& data() { return impl_->data; }
    const std::vector<double>& data() const { return impl_->data; }

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool rg) { impl_->requires_grad = rg; }

    bool has_grad() const { return !impl_->grad.empty(); }
    // Allocates a zero gradient buffer on first use.
    std::vector<double>& grad();
    const std::vector<double>& grad() const { return impl_->grad; }
    void zero_grad();

    // Scalar read; throws unless size() == 1.
    double value() const;

    Tensor clone() const;

    std::shared_ptr<detail::TensorImpl> impl() const { return impl_; }

private:
    std::shared_ptr<detail::TensorImpl> impl_;
};

std::string shape_str(const std::vector<int>& shape);

// Tape of executed differentiable operations. Ops append themselves in
// execution order, which is a topological order of the data flow, and
// backward() replays the adjoints in reverse. A non-recording graph turns
// every op into plain evaluation.
class Graph {
public:
    explicit Graph(bool recording = true) : recording_(recording) {}

    bool recording() const { return recording_; }
    void set_recording(bool r) { recording_ = r; }
    size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

    // Registers the vjp closure for an op whose output requires grad.
    void record(std::function<void()> vjp) { nodes_.push_back(std::move(vjp)); }

    // Seeds d(loss)/d(loss) = 1 and accumulates gradients into every
    // requires_grad tensor reachable backwards from loss.
    void backward(Tensor& loss);

private:
    std::vector<std::function<void()>> nodes_;
    bool recording_;
};

void backward(Graph& g, Tensor& loss);

// ---- differentiable ops --------------------------------------------------
// Every op evaluates eagerly and, when the graph records and an input
// requires grad, registers its vjp on the tape.

// Elementwise sum. Shapes must match, or b is a vector broadcast over the
// last axis of a (bias add).
Tensor add(Graph& g, const Tensor& a, const Tensor& b);
// Elementwise product, equal shapes.
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);
// Multiplication by a plain constant.
Tensor scale(Graph& g, const Tensor& a, double c);
// Matrix product. 2-D x 2-D, batched with equal leading dims, or batched a
// against a shared 2-D b.
Tensor matmul(Graph& g, const Tensor& a, const Tensor& b);
Tensor reshape(Graph& g, const Tensor& a, std::vector<int> shape);
Tensor permute(Graph& g, const Tensor& a, const std::vector<int>& axes);
// Numerically stabilized softmax along the last axis.
Tensor softmax(Graph& g, const Tensor& a);
// Per-slice normalization over the last axis, then affine gain/bias.
Tensor layer_norm(Graph& g, const Tensor& a, const Tensor& gain,
                  const Tensor& bias, double eps);
// Exact erf-form Gaussian error linear unit.
Tensor gelu(Graph& g, const Tensor& a);
// Elementwise natural log, clamped below at min_log; clamped entries get
// zero gradient.
Tensor log_clamped(Graph& g, const Tensor& a, double min_log = -100.0);
// Row gather from an embedding table: ids [r x c] -> [r, c, width].
Tensor embedding(Graph& g, const Tensor& table, const IntMat& ids);
// Row gather from a tensor viewed as [rows x width]; rows may repeat.
Tensor gather_rows(Graph& g, const Tensor& a, const std::vector<int>& rows);
Tensor sum(Graph& g, const Tensor& a);
Tensor mean(Graph& g, const Tensor& a);

// ---- gradient checking ----------------------------------------------------

struct GradCheckReport {
    double max_rel_err = 0.0;
    bool pass = false;
    int64_t components = 0;
};

// Compares the analytic gradient of f at x against central finite
// differences, component by component. Relative error uses denominator
// max(|analytic|, |numeric|, 1e-8).
GradCheckReport grad_check(
    const std::function<Tensor(Graph&, Tensor&)>& f, Tensor x, double step,
    double tol);

}  // namespace distil
