#include "distil/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace distil {

namespace {

int64_t shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
        if (d < 1)
            throw ShapeError("non-positive dimension in " + shape_str(shape));
        n *= d;
    }
    return n;
}

std::vector<double>& grad_buf(detail::TensorImpl& t) {
    if (t.grad.empty()) t.grad.assign(t.data.size(), 0.0);
    return t.grad;
}

// C[m,n] += A[m,k] * B[k,n]
void mm_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<size_t>(i) * k;
        double* crow = c + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,k] += A[m,n] * B^T, with B stored [k,n]
void mm_nt_acc(const double* a, const double* b, double* c, int m, int n, int k) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<size_t>(i) * n;
        double* crow = c + static_cast<size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double* brow = b + static_cast<size_t>(p) * n;
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += arow[j] * brow[j];
            crow[p] += acc;
        }
    }
}

// C[k,n] += A^T * B, with A stored [m,k], B stored [m,n]
void mm_tn_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<size_t>(i) * k;
        const double* brow = b + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            double* crow = c + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace

std::string shape_str(const std::vector<int>& shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    Tensor t;
    t.impl_ = std::make_shared<detail::TensorImpl>();
    int64_t n = shape_numel(shape);
    t.impl_->shape = std::move(shape);
    t.impl_->data.assign(static_cast<size_t>(n), 0.0);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.data().begin(), t.data().end(), value);
    return t;
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data,
                         bool requires_grad) {
    int64_t n = shape_numel(shape);
    if (n != static_cast<int64_t>(data.size()))
        throw ShapeError("from_data: " + shape_str(shape) + " holds " +
                         std::to_string(n) + " values, got " +
                         std::to_string(data.size()));
    Tensor t;
    t.impl_ = std::make_shared<detail::TensorImpl>();
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(data);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

Tensor Tensor::randn(std::vector<int> shape, Rng& rng, double stddev,
                     bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (double& x : t.data()) x = rng.normal(0.0, stddev);
    return t;
}

std::vector<double>& Tensor::grad() { return grad_buf(*impl_); }

void Tensor::zero_grad() {
    if (!impl_->grad.empty())
        std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

double Tensor::value() const {
    if (size() != 1)
        throw ContractError("scalar read on tensor of shape " +
                            shape_str(shape()));
    return impl_->data[0];
}

Tensor Tensor::clone() const {
    Tensor t;
    t.impl_ = std::make_shared<detail::TensorImpl>(*impl_);
    return t;
}

// ---- Graph -----------------------------------------------------------------

void Graph::backward(Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
        throw ContractError(
            "backward: loss must be scalar, got shape " +
            (loss.defined() ? shape_str(loss.shape()) : std::string("<none>")));
    loss.grad()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

void backward(Graph& g, Tensor& loss) { g.backward(loss); }

// ---- ops -------------------------------------------------------------------

namespace {
using Impl = std::shared_ptr<detail::TensorImpl>;

bool track(Graph& g, std::initializer_list<const Tensor*> inputs) {
    if (!g.recording()) return false;
    for (const Tensor* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}
}  // namespace

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
    const bool bias_bcast =
        b.rank() == 1 && a.rank() >= 1 &&
        a.shape().back() == b.dim(0) && a.shape() != b.shape();
    if (!bias_bcast && a.shape() != b.shape())
        throw ShapeError("add: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));

    Tensor out = Tensor::zeros(a.shape());
    const auto& av = a.data();
    const auto& bv = b.data();
    auto& ov = out.data();
    if (bias_bcast) {
        const size_t w = static_cast<size_t>(b.dim(0));
        for (size_t i = 0; i < av.size(); ++i) ov[i] = av[i] + bv[i % w];
    } else {
        for (size_t i = 0; i < av.size(); ++i) ov[i] = av[i] + bv[i];
    }

    if (track(g, {&a, &b})) {
        out.set_requires_grad(true);
        Impl ai = a.impl(), bi = b.impl(), oi = out.impl();
        g.record([ai, bi, oi, bias_bcast] {
            if (oi->grad.empty()) return;
            const auto& og = oi->grad;
            if (ai->requires_grad) {
                auto& ag = grad_buf(*ai);
                for (size_t i = 0; i < og.size(); ++i) ag[i] += og[i];
            }
            if (bi->requires_grad) {
                auto& bg = grad_buf(*bi);
                if (bias_bcast) {
                    const size_t w = bg.size();
                    for (size_t i = 0; i < og.size(); ++i) bg[i % w] += og[i];
                } else {
                    for (size_t i = 0; i < og.size(); ++i) bg[i] += og[i];
                }
            }
        });
    }
    return out;
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError("mul: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    Tensor out = Tensor::zeros(a.shape());
    const auto& av = a.data();
    const auto& bv = b.data();
    auto& ov = out.data();
    for (size_t i = 0; i < av.size(); ++i) ov[i] = av[i] * bv[i];

    if (track(g, {&a, &b})) {
        out.set_requires_grad(true);
        Impl ai = a.impl(), bi = b.impl(), oi = out.impl();
        g.record([ai, bi, oi] {
            if (oi->grad.empty()) return;
            const auto& og = oi->grad;
            if (ai->requires_grad) {
                auto& ag = grad_buf(*ai);
                for (size_t i = 0; i < og.size(); ++i)
                    ag[i] += og[i] * bi->data[i];
            }
            if (bi->requires_grad) {
                auto& bg = grad_buf(*bi);
                for (size_t i = 0; i < og.size(); ++i)
                    bg[i] += og[i] * ai->data[i];
            }
        });
    }
    return out;
}

Tensor scale(Graph& g, const Tensor& a, double c) {
    Tensor out = Tensor::zeros(a.shape());
    const auto& av = a.data();
    auto& ov = out.data();
    for (size_t i = 0; i < av.size(); ++i) ov[i] = av[i] * c;

    if (track(g, {&a})) {
        out.set_requires_grad(true);
        Impl ai = a.impl(), oi = out.impl();
        g.record([ai, oi, c] {
            if (oi->grad.empty()) return;
            auto& ag = grad_buf(*ai);
            const auto& og = oi->grad;
            for (size_t i = 0; i < og.size(); ++i) ag[i] += og[i] * c;
        });
    }
    return out;
}

Tensor matmul(Graph& g, const Tensor& a, const Tensor& b) {
    if (a.rank() < 2 || b.rank() < 2)
        throw ShapeError("matmul: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    const int m = a.dim(a.rank() - 2);
    const int k = a.dim(a.rank() - 1);
    const int kb = b.dim(b.rank() - 2);
    const int n = b.dim(b.rank() - 1);

    int64_t batch = 1;
    for (int i = 0; i < a.rank() - 2; ++i) batch *= a.dim(i);
    const bool shared_b = b.rank() == 2 && a.rank() > 2;
    if (!shared_b && a.rank() != b.rank())
        throw ShapeError("matmul: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    if (!shared_b)
        for (int i = 0; i < a.rank() - 2; ++i)
            if (a.dim(i) != b.dim(i))
                throw ShapeError("matmul: batch dims disagree: " +
                                 shape_str(a.shape()) + " vs " +
                                 shape_str(b.shape()));
    if (k != kb)
        throw ShapeError("matmul: inner dimensions disagree: " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));

    std::vector<int> oshape(a.shape().begin(), a.shape().end() - 1);
    oshape.push_back(n);
    Tensor out = Tensor::zeros(oshape);

    const double* ap = a.data().data();
    const double* bp = b.data().data();
    double* op = out.data().data();
    const size_t astride = static_cast<size_t>(m) * k;
    const size_t bstride = shared_b ? 0 : static_cast<size_t>(k) * n;
    const size_t ostride = static_cast<size_t>(m) * n;
    for (int64_t t = 0; t < batch; ++t)
        mm_acc(ap + t * astride, bp + t * bstride, op + t * ostride, m, k, n);

    if (track(g, {&a, &b})) {
        out.set_requires_grad(true);
        Impl ai = a.impl(), bi = b.impl(), oi = out.impl();
        g.record([ai, bi, oi, batch, m, k, n, astride, bstride, ostride] {
            if (oi->grad.empty()) return;
            const double* og = oi->grad.data();
            if (ai->requires_grad) {
                double* ag = grad_buf(*ai).data();
                const double* bp2 = bi->data.data();
                for (int64_t t = 0; t < batch; ++t)
                    mm_nt_acc(og + t * ostride, bp2 + t * bstride,
                              ag + t * astride, m, n, k);
            }
            if (bi->requires_grad) {
                double* bg = grad_buf(*bi).data();
                const double* ap2 = ai->data.data();
                for (int64_t t = 0; t < batch; ++t)
                    mm_tn_acc(ap2 + t * astride, og + t * ostride,
                              bg + t * bstride, m, k, n);
            }
        });
    }
    return out;
}

Tensor reshape(Graph& g, const Tensor& a, std::vector<int> shape) {
    if (shape_numel(shape) != a.size())
        throw ShapeError("reshape: " + shape_str(a.shape()) + " -> " +
                         shape_str(shape));
    Tensor out = Tensor::from_data(std::move(shape), a.data());

    if (track(g, {&a})) {
        out.set_requires_grad(true);
        Impl ai = a.impl(), oi = out.impl();
        g.record([ai, oi] {
            if (oi->grad.empty()) return;
            auto& ag = grad_buf(*ai);
            const auto& og = oi->grad;
            for (size_t i = 0; i < og.size(); ++i) ag[i] += og[i];
        });
    }
    return out;
}

namespace {
std::vector<int64_t> strides_of(const std::vector<int>& shape) {
    std::vector<int64_t> s(shape.size(), 1);
    for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i)
        s[i] = s[i + 1] * shape[i + 1];
    return s;
}
}  // namespace

Tensor permute(Graph& g, const Tensor& a, const std::vector<int>& axes) {
    const int r = a.rank();
    if (static_cast<int>(axes.size()) != r)
        throw ContractError("permute: axes count " +
                            std::to_string(axes.size()) + " vs rank " +
                            std::to_string(r));
    std::vector<bool> seen(static_cast<size_t>(r), false);
    for (int ax : axes) {
        if (ax < 0 || ax >= r || seen[static_cast<size_t>(ax)])
            throw ContractError("permute: invalid axes for rank " +
                                std::to_string(r));
        seen[static_cast<size_t>(ax)] = true;
    }

    std::vector<int> oshape(static_cast<size_t>(r));
    for (int d = 0; d < r; ++d) oshape[d] = a.dim(axes[d]);
    Tensor out = Tensor::zeros(oshape);

    const auto in_strides = strides_of(a.shape());
    // stride in the input for each output axis
    std::vector<int64_t> map(static_cast<size_t>(r));
    for (int d = 0; d < r; ++d) map[d] = in_strides[axes[d]];

    const auto& av = a.data();
    auto& ov = out.data();
    const int64_t total = a.size();
    std::vector<int> coord(static_cast<size_t>(r), 0);
    for (int64_t idx = 0; idx < total; ++idx) {
        int64_t src = 0;
        for (int d = 0; d < r; ++d) src += coord[d] * map[d];
        ov[static_cast<size_t>(idx)] = av[static_cast<size_t>(src)];
        for (int d = r - 1; d >= 0; --d) {
            if (++coord[d] < oshape[d]) break;
            coord[d] = 0;
        }
    }

    if (track(g, {&a})) {
        out.set_requires_grad(true);
        Impl ai = a.impl(), oi = out.impl();
        auto oshape_c = oshape;
        g.record([ai, oi, map, oshape_c, r, total] {
            if (oi->grad.empty()) return;
            auto& ag = grad_buf(*ai);
            const auto& og = oi->grad;
            std::vector<int> coord2(static_cast<size_t>(r), 0);
            for (int64_t idx = 0; idx < total; ++idx) {
                int64_t src = 0;
                for (int d = 0; d < r; ++d) src += coord2[d] * map[d];
                ag[static_cast<size_t>(src)] += og[static_cast<size_t>(idx)];
                for (int d = r - 1; d >= 0; --d) {
                    if (++coord2[d] < oshape_c[d]) break;
                    coord2[d] = 0;
                }
            }
        });
    }
    return out;
}

Tensor softmax(Graph& g, const Tensor& a) {
    const int w = a.shape().back();
    if (w < 1) throw ShapeError("softmax: empty last axis " + shape_str(a.shape()));
    Tensor out = Tensor::zeros(a.shape());
    const auto& av = a.data();
    auto& ov = out.data();
    const int64_t rows = a.size() / w;
    for (int64_t r = 0; r < rows; ++r) {
        const double* x = av.data() + r * w;
        double* y = ov.data() + r * w;
        double mx = x[0];
        for (int j = 1; j < w; ++j) mx = std::max(mx, x[j]);
        double z = 0.0;
        for (int j = 0; j < w; ++j) {
            y[j] = std::exp(x[j] - mx);
            z += y[j];
        }
        for (int j = 0; j < w; ++j) y[j] /= z;
    }

    if (track(g, {&a})) {
        out.set_requires_grad(true);
        Impl ai = a.impl(), oi = out.impl();
        g.record([ai, oi, rows, w] {
            if (oi->grad.empty()) return;
            auto& ag = grad_buf(*ai);
            const auto& og = oi->grad;
            const auto& y = oi->data;
            for (int64_t r = 0; r < rows; ++r) {
                const size_t off = static_cast<size_t>(r) * w;
                double dot = 0.0;
                for (int j = 0; j < w; ++j) dot += og[off + j] * y[off + j];
                for (int j = 0; j < w; ++j)
                    ag[off + j] += y[off + j] * (og[off + j] - dot);
            }
        });
    }
    return out;
}

Tensor layer_norm(Graph& g, const Tensor& a, const Tensor& gain,
                  const Tensor& bias, double eps) {
    const int h = a.shape().back();
    if (gain.rank() != 1 || bias.rank() != 1 || gain.dim(0) != h ||
        bias.dim(0) != h)
        throw ShapeError("layer_norm: " + shape_str(a.shape()) + " with gain " +
                         shape_str(gain.shape()) + ", bias " +
                         shape_str(bias.shape()));
    if (eps <= 0.0) throw ContractError("layer_norm: eps must be > 0");

    Tensor out = Tensor::zeros(a.shape());
    const int64_t rows = a.size() / h;
    std::vector<double> xhat(a.data().size());
    std::vector<double> inv_std(static_cast<size_t>(rows));
    const auto& av = a.data();
    const auto& gv = gain.data();
    const auto& bv = bias.data();
    auto& ov = out.data();
    for (int64_t r = 0; r < rows; ++r) {
        const size_t off = static_cast<size_t>(r) * h;
        double mean = 0.0;
        for (int j = 0; j < h; ++j) mean += av[off + j];
        mean /= h;
        double var = 0.0;
        for (int j = 0; j < h; ++j) {
            const double d = av[off + j] - mean;
            var += d * d;
        }
        var /= h;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[static_cast<size_t>(r)] = is;
        for (int j = 0; j < h; ++j) {
            const double xh = (av[off + j] - mean) * is;
            xhat[off + j] = xh;
            ov[off + j] = gv[j] * xh + bv[j];
        }
    }

    if (track(g, {&a, &gain, &bias})) {
        out.set_requires_grad(true);
        Impl ai = a.impl(), gi = gain.impl(), bi = bias.impl(), oi = out.impl();
        g.record([ai, gi, bi, oi, rows, h, xhat = std::move(xhat),
                  inv_std = std::move(inv_std)] {
            if (oi->grad.empty()) return;
            const auto& og = oi->grad;
            const auto& gv2 = gi->data;
            for (int64_t r = 0; r < rows; ++r) {
                const size_t off = static_cast<size_t>(r) * h;
                if (ai->requires_grad) {
                    double sum_dxh = 0.0, sum_dxh_xh = 0.0;
                    for (int j = 0; j < h; ++j) {
                        const double dxh = og[off + j] * gv2[j];
                        sum_dxh += dxh;
                        sum_dxh_xh += dxh * xhat[off + j];
                    }
                    auto& ag = grad_buf(*ai);
                    const double is = inv_std[static_cast<size_t>(r)];
                    for (int j = 0; j < h; ++j) {
                        const double dxh = og[off + j] * gv2[j];
                        ag[off + j] += is * (dxh - sum_dxh / h -
                                             xhat[off + j] * sum_dxh_xh / h);
                    }
                }
                if (gi->requires_grad) {
                    auto& gg = grad_buf(*gi);
                    for (int j = 0; j < h; ++j)
                        gg[j] += og[off + j] * xhat[off + j];
                }
                if (bi->requires_grad) {
                    auto& bg = grad_buf(*bi);
                    for (int j = 0; j < h; ++j) bg[j] += og[off + j];
                }
            }
        });
    }
    return out;
}

Tensor gelu(Graph& g, const Tensor& a) {
    Tensor out = Tensor::zeros(a.shape());
    const auto& av = a.data();
    auto& ov = out.data();
    constexpr double kInvSqrt2 = 0.7071067811865475244;
    for (size_t i = 0; i < av.size(); ++i) {
        const double x = av[i];
        ov[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
    }

    if (track(g, {&a})) {
        out.set_requires_grad(true);
        Impl ai = a.impl(), oi = out.impl();
        g.record([ai, oi] {
            if (oi->grad.empty()) return;
            auto& ag = grad_buf(*ai);
            const auto& og = oi->grad;
            constexpr double kIs2 = 0.7071067811865475244;
            constexpr double kInvSqrt2Pi = 0.3989422804014326779;
            for (size_t i = 0; i < og.size(); ++i) {
                const double x = ai->data[i];
                const double cdf = 0.5 * (1.0 + std::erf(x * kIs2));
                const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
                ag[i] += og[i] * (cdf + x * pdf);
            }
        });
    }
    return out;
}

Tensor log_clamped(Graph& g, const Tensor& a, double min_log) {
    Tensor out = Tensor::zeros(a.shape());
    const auto& av = a.data();
    auto& ov = out.data();
    for (size_t i = 0; i < av.size(); ++i)
        ov[i] = std::max(std::log(av[i]), min_log);

    if (track(g, {&a})) {
        out.set_requires_grad(true);
        Impl ai = a.impl(), oi = out.impl();
        g.record([ai, oi, min_log] {
            if (oi->grad.empty()) return;
            auto& ag = grad_buf(*ai);
            const auto& og = oi->grad;
            const double floor = std::exp(min_log);
            for (size_t i = 0; i < og.size(); ++i) {
                const double x = ai->data[i];
                if (x > floor) ag[i] += og[i] / x;
            }
        });
    }
    return out;
}

Tensor embedding(Graph& g, const Tensor& table, const IntMat& ids) {
    if (table.rank() != 2)
        throw ShapeError("embedding: table must be 2-D, got " +
                         shape_str(table.shape()));
    const int v = table.dim(0);
    const int w = table.dim(1);
    Tensor out = Tensor::zeros({ids.rows, ids.cols, w});
    const auto& tv = table.data();
    auto& ov = out.data();
    for (int r = 0; r < ids.rows; ++r)
        for (int c = 0; c < ids.cols; ++c) {
            const int id = ids.at(r, c);
            if (id < 0 || id >= v)
                throw DataError("token id " + std::to_string(id) +
                                " out of range [0, " + std::to_string(v) +
                                ") at row " + std::to_string(r) + ", pos " +
                                std::to_string(c));
            const size_t dst =
                (static_cast<size_t>(r) * ids.cols + c) * static_cast<size_t>(w);
            const size_t src = static_cast<size_t>(id) * w;
            std::copy(tv.begin() + src, tv.begin() + src + w, ov.begin() + dst);
        }

    if (track(g, {&table})) {
        out.set_requires_grad(true);
        Impl ti = table.impl(), oi = out.impl();
        g.record([ti, oi, ids, w] {
            if (oi->grad.empty()) return;
            auto& tg = grad_buf(*ti);
            const auto& og = oi->grad;
            for (int r = 0; r < ids.rows; ++r)
                for (int c = 0; c < ids.cols; ++c) {
                    const size_t src = (static_cast<size_t>(r) * ids.cols + c) *
                                       static_cast<size_t>(w);
                    const size_t dst =
                        static_cast<size_t>(ids.at(r, c)) * static_cast<size_t>(w);
                    for (int j = 0; j < w; ++j) tg[dst + j] += og[src + j];
                }
        });
    }
    return out;
}

Tensor gather_rows(Graph& g, const Tensor& a, const std::vector<int>& rows) {
    if (a.rank() < 2)
        throw ShapeError("gather_rows: need rank >= 2, got " +
                         shape_str(a.shape()));
    const int w = a.shape().back();
    const int64_t nrows = a.size() / w;
    for (int r : rows)
        if (r < 0 || r >= nrows)
            throw ContractError("gather_rows: row " + std::to_string(r) +
                                " out of range [0, " + std::to_string(nrows) +
                                ")");
    Tensor out = Tensor::zeros({static_cast<int>(rows.size()), w});
    const auto& av = a.data();
    auto& ov = out.data();
    for (size_t i = 0; i < rows.size(); ++i) {
        const size_t src = static_cast<size_t>(rows[i]) * w;
        std::copy(av.begin() + src, av.begin() + src + w,
                  ov.begin() + i * static_cast<size_t>(w));
    }

    if (track(g, {&a})) {
        out.set_requires_grad(true);
        Impl ai = a.impl(), oi = out.impl();
        g.record([ai, oi, rows, w] {
            if (oi->grad.empty()) return;
            auto& ag = grad_buf(*ai);
            const auto& og = oi->grad;
            for (size_t i = 0; i < rows.size(); ++i) {
                const size_t dst = static_cast<size_t>(rows[i]) * w;
                const size_t src = i * static_cast<size_t>(w);
                for (int j = 0; j < w; ++j) ag[dst + j] += og[src + j];
            }
        });
    }
    return out;
}

Tensor sum(Graph& g, const Tensor& a) {
    double s = 0.0;
    for (double x : a.data()) s += x;
    Tensor out = Tensor::scalar(s);
    if (track(g, {&a})) {
        out.set_requires_grad(true);
        Impl ai = a.impl(), oi = out.impl();
        g.record([ai, oi] {
            if (oi->grad.empty()) return;
            auto& ag = grad_buf(*ai);
            const double og = oi->grad[0];
            for (double& x : ag) x += og;
        });
    }
    return out;
}

Tensor mean(Graph& g, const Tensor& a) {
    if (a.size() == 0) throw ContractError("mean of empty tensor");
    Tensor s = sum(g, a);
    return scale(g, s, 1.0 / static_cast<double>(a.size()));
}

// ---- gradient checking -----------------------------------------------------

GradCheckReport grad_check(const std::function<Tensor(Graph&, Tensor&)>& f,
                           Tensor x, double step, double tol) {
    if (step <= 0.0) throw ContractError("grad_check: step must be > 0");
    x.set_requires_grad(true);
    x.zero_grad();

    Graph g;
    Tensor loss = f(g, x);
    g.backward(loss);
    std::vector<double> analytic(x.data().size(), 0.0);
    if (x.has_grad()) analytic = x.grad();

    GradCheckReport report;
    report.components = x.size();
    for (size_t i = 0; i < x.data().size(); ++i) {
        const double saved = x.data()[i];
        x.data()[i] = saved + step;
        Graph gp(false);
        const double fp = f(gp, x).value();
        x.data()[i] = saved - step;
        Graph gm(false);
        const double fm = f(gm, x).value();
        x.data()[i] = saved;
        const double numeric = (fp - fm) / (2.0 * step);
        const double denom =
            std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-8});
        const double rel = std::fabs(analytic[i] - numeric) / denom;
        report.max_rel_err = std::max(report.max_rel_err, rel);
    }
    report.pass = report.max_rel_err <= tol;
    return report;
}

}  // namespace distil
