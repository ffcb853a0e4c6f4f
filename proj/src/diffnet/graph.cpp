#include "facemimic/diffnet/graph.hpp"

#include "denormals.hpp"

#include "facemimic/errors.hpp"
#include "facemimic/util/hashing.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace facemimic::diffnet {

namespace {

template <class T>
using RowMatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMatT = Eigen::Map<RowMatT<T>>;
template <class T>
using ConstMapMatT = Eigen::Map<const RowMatT<T>>;
using MapMat = MapMatT<float>;
using ConstMapMat = ConstMapMatT<float>;

int out_extent(int in, int stride) { return (in + stride - 1) / stride; }

struct ConvGeom {
    int cin, h, w, k, stride, pad, ho, wo;
    int rows() const { return cin * k * k; }
    int cols() const { return ho * wo; }
    bool pointwise() const { return k == 1 && stride == 1; }
};

ConvGeom conv_geom(Shape in, const LayerSpec& spec) {
    return ConvGeom{in.c, in.h, in.w, spec.kernel, spec.stride, spec.kernel / 2,
                    out_extent(in.h, spec.stride), out_extent(in.w, spec.stride)};
}

// Output columns [lo, hi) read input columns inside [0, w) for kernel offset kx.
void valid_columns(const ConvGeom& g, int kx, int& lo, int& hi) {
    const int off = kx - g.pad;
    lo = off >= 0 ? 0 : (-off + g.stride - 1) / g.stride;
    hi = g.w - off <= 0 ? 0 : std::min(g.wo, (g.w - off + g.stride - 1) / g.stride);
    lo = std::min(lo, hi);
}

// Column matrix for output rows [oy0, oy1): g.rows() x ((oy1 - oy0) * g.wo).
template <class T>
void im2col(const T* x, const ConvGeom& g, int oy0, int oy1, T* col) {
    const int hw = (oy1 - oy0) * g.wo;
    for (int ci = 0; ci < g.cin; ++ci) {
        const T* plane = x + static_cast<std::size_t>(ci) * g.h * g.w;
        for (int ky = 0; ky < g.k; ++ky) {
            for (int kx = 0; kx < g.k; ++kx) {
                T* row = col + static_cast<std::size_t>((ci * g.k + ky) * g.k + kx) * hw;
                int lo, hi;
                valid_columns(g, kx, lo, hi);
                const int off = kx - g.pad;
                for (int oy = oy0; oy < oy1; ++oy) {
                    const int iy = oy * g.stride + ky - g.pad;
                    T* dst = row + static_cast<std::size_t>(oy - oy0) * g.wo;
                    if (iy < 0 || iy >= g.h) {
                        std::fill(dst, dst + g.wo, T(0));
                        continue;
                    }
                    const T* src = plane + static_cast<std::size_t>(iy) * g.w + off;
                    std::fill(dst, dst + lo, T(0));
                    if (g.stride == 1) {
                        std::copy(src + lo, src + hi, dst + lo);
                    } else {
                        for (int ox = lo; ox < hi; ++ox) dst[ox] = src[ox * g.stride];
                    }
                    std::fill(dst + hi, dst + g.wo, T(0));
                }
            }
        }
    }
}

void col2im_add(const float* col, const ConvGeom& g, int oy0, int oy1, float* dx) {
    const int hw = (oy1 - oy0) * g.wo;
    for (int ci = 0; ci < g.cin; ++ci) {
        float* plane = dx + static_cast<std::size_t>(ci) * g.h * g.w;
        for (int ky = 0; ky < g.k; ++ky) {
            for (int kx = 0; kx < g.k; ++kx) {
                const float* row = col + static_cast<std::size_t>((ci * g.k + ky) * g.k + kx) * hw;
                int lo, hi;
                valid_columns(g, kx, lo, hi);
                const int off = kx - g.pad;
                for (int oy = oy0; oy < oy1; ++oy) {
                    const int iy = oy * g.stride + ky - g.pad;
                    if (iy < 0 || iy >= g.h) continue;
                    const float* src = row + static_cast<std::size_t>(oy - oy0) * g.wo;
                    float* dst = plane + static_cast<std::size_t>(iy) * g.w + off;
                    if (g.stride == 1) {
                        for (int ox = lo; ox < hi; ++ox) dst[ox] += src[ox];
                    } else {
                        for (int ox = lo; ox < hi; ++ox) dst[ox * g.stride] += src[ox];
                    }
                }
            }
        }
    }
}

// Output rows per im2col tile, sized so a tile's column matrix stays in L2.
int tile_rows(const ConvGeom& g) {
    constexpr int kTileFloats = 1 << 16;
    return std::clamp(kTileFloats / std::max(1, g.rows() * g.wo), 1, g.ho);
}

template <class T>
using StridedMap = Eigen::Map<RowMatT<T>, 0, Eigen::OuterStride<>>;
template <class T>
using ConstStridedMap = Eigen::Map<const RowMatT<T>, 0, Eigen::OuterStride<>>;

void require_node(int node, int count) {
    if (node < 0 || node >= count) throw ArgumentError("layer input refers to unknown node " + std::to_string(node));
}

}  // namespace

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::Upsample2x: return "upsample2x";
        case LayerKind::Concat: return "concat";
        case LayerKind::Relu: return "relu";
        case LayerKind::Sigmoid: return "sigmoid";
        case LayerKind::Dense: return "dense";
    }
    return "unknown";
}

LayerKind layer_kind_from_string(const std::string& name) {
    for (LayerKind k : {LayerKind::Conv2d, LayerKind::Upsample2x, LayerKind::Concat, LayerKind::Relu,
                        LayerKind::Sigmoid, LayerKind::Dense}) {
        if (to_string(k) == name) return k;
    }
    throw ArgumentError("unknown layer kind '" + name + "'");
}

LayerGraph::LayerGraph(Shape input) {
    if (input.c <= 0 || input.h <= 0 || input.w <= 0) throw DimensionError("graph input shape must be positive");
    shapes_.push_back(input);
}

int LayerGraph::add_layer(const LayerSpec& spec) {
    if (shapes_.empty()) throw StateError("graph has no input shape");
    const int count = node_count();
    for (int in : spec.inputs) require_node(in, count);
    const std::size_t expected_inputs = spec.kind == LayerKind::Concat ? 2 : 1;
    if (spec.inputs.size() != expected_inputs) throw ArgumentError(to_string(spec.kind) + " takes " +
                                                                   std::to_string(expected_inputs) + " input(s)");
    const Shape in = shapes_[static_cast<std::size_t>(spec.inputs[0])];
    Shape out = in;
    ParamSlot slot;
    switch (spec.kind) {
        case LayerKind::Conv2d: {
            if (spec.out_channels <= 0 || spec.kernel <= 0 || spec.kernel % 2 == 0 || spec.stride <= 0) {
                throw ArgumentError("conv2d needs positive channels, odd kernel and positive stride");
            }
            out = Shape{spec.out_channels, out_extent(in.h, spec.stride), out_extent(in.w, spec.stride)};
            slot.weight = static_cast<int>(params_.size());
            params_.emplace_back(1, Shape{spec.out_channels, in.c * spec.kernel * spec.kernel, 1});
            if (spec.bias) {
                slot.bias = static_cast<int>(params_.size());
                params_.emplace_back(1, Shape{spec.out_channels, 1, 1});
            }
            break;
        }
        case LayerKind::Dense: {
            if (spec.out_channels <= 0) throw ArgumentError("dense needs positive output features");
            out = Shape{spec.out_channels, 1, 1};
            slot.weight = static_cast<int>(params_.size());
            params_.emplace_back(1, Shape{spec.out_channels, in.size(), 1});
            if (spec.bias) {
                slot.bias = static_cast<int>(params_.size());
                params_.emplace_back(1, Shape{spec.out_channels, 1, 1});
            }
            break;
        }
        case LayerKind::Upsample2x: out = Shape{in.c, in.h * 2, in.w * 2}; break;
        case LayerKind::Concat: {
            const Shape b = shapes_[static_cast<std::size_t>(spec.inputs[1])];
            if (b.h != in.h || b.w != in.w) {
                throw DimensionError("concat of " + to_string(in) + " and " + to_string(b) + ": spatial dims differ");
            }
            out = Shape{in.c + b.c, in.h, in.w};
            break;
        }
        case LayerKind::Relu:
        case LayerKind::Sigmoid: break;
    }
    layers_.push_back(spec);
    slots_.push_back(slot);
    shapes_.push_back(out);
    cache_.clear();
    return node_count() - 1;
}

int LayerGraph::conv2d(int from, int out_channels, int kernel, int stride, bool bias) {
    return add_layer(LayerSpec{LayerKind::Conv2d, {from}, out_channels, kernel, stride, bias});
}
int LayerGraph::upsample2x(int from) { return add_layer(LayerSpec{LayerKind::Upsample2x, {from}}); }
int LayerGraph::concat(int a, int b) { return add_layer(LayerSpec{LayerKind::Concat, {a, b}}); }
int LayerGraph::relu(int from) { return add_layer(LayerSpec{LayerKind::Relu, {from}}); }
int LayerGraph::sigmoid(int from) { return add_layer(LayerSpec{LayerKind::Sigmoid, {from}}); }
int LayerGraph::dense(int from, int out_features, bool bias) {
    return add_layer(LayerSpec{LayerKind::Dense, {from}, out_features, 1, 1, bias});
}

void LayerGraph::initialize(std::uint64_t seed) {
    seed_ = seed;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const ParamSlot& slot = slots_[l];
        if (slot.weight < 0) continue;
        Tensor& w = params_[static_cast<std::size_t>(slot.weight)];
        const int fan_in = w.h();
        const double bound = std::sqrt(6.0 / fan_in);
        Rng rng(derive_seed(seed, l));
        for (float& v : w.values()) v = static_cast<float>(bound * uniform_symmetric(rng));
        if (slot.bias >= 0) params_[static_cast<std::size_t>(slot.bias)].fill(0.0f);
    }
    adam_ = AdamState{};
    cache_.clear();
}

std::size_t LayerGraph::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
}

long long LayerGraph::macs_per_sample() const {
    long long macs = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const LayerSpec& spec = layers_[l];
        const Shape in = shapes_[static_cast<std::size_t>(spec.inputs[0])];
        const Shape out = shapes_[l + 1];
        if (spec.kind == LayerKind::Conv2d) {
            macs += static_cast<long long>(out.size()) * in.c * spec.kernel * spec.kernel;
        } else if (spec.kind == LayerKind::Dense) {
            macs += static_cast<long long>(out.c) * in.size();
        }
    }
    return macs;
}

template <class T>
void LayerGraph::run(const BasicTensor<T>& input, std::vector<BasicTensor<T>>& acts,
                     const std::vector<BasicTensor<T>>& params, std::vector<bool>* relu_active) const {
    if (shapes_.empty()) throw StateError("graph has no input shape");
    const DenormalsFlushed ftz;
    if (input.shape() != shapes_.front()) {
        throw DimensionError("graph input expects " + to_string(shapes_.front()) + ", got " + to_string(input.shape()));
    }
    const int n = input.n();
    // Buffers from the previous call are reused; every layer overwrites its whole output.
    acts.resize(shapes_.size());
    acts[0] = input;
    input.check_finite("input");
    if (relu_active) relu_active->clear();
    AlignedVector<T> col;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const LayerSpec& spec = layers_[l];
        const BasicTensor<T>& x = acts[static_cast<std::size_t>(spec.inputs[0])];
        BasicTensor<T>& y = acts[l + 1];
        y.reshape_uninitialized(n, shapes_[l + 1]);
        const ParamSlot& slot = slots_[l];
        switch (spec.kind) {
            case LayerKind::Conv2d: {
                const ConvGeom g = conv_geom(x.shape(), spec);
                const BasicTensor<T>& wt = params[static_cast<std::size_t>(slot.weight)];
                ConstMapMatT<T> W(wt.data(), spec.out_channels, g.rows());
                const int rows = tile_rows(g);
                if (!g.pointwise()) col.resize(static_cast<std::size_t>(g.rows()) * rows * g.wo);
                for (int i = 0; i < n; ++i) {
                    MapMatT<T> Y(y.sample(i), spec.out_channels, g.cols());
                    if (g.pointwise()) {
                        Y.noalias() = W * ConstMapMatT<T>(x.sample(i), g.rows(), g.cols());
                    } else {
                        for (int oy0 = 0; oy0 < g.ho; oy0 += rows) {
                            const int oy1 = std::min(g.ho, oy0 + rows);
                            const int ncols = (oy1 - oy0) * g.wo;
                            im2col(x.sample(i), g, oy0, oy1, col.data());
                            StridedMap<T>(y.sample(i) + static_cast<std::size_t>(oy0) * g.wo, spec.out_channels, ncols,
                                          Eigen::OuterStride<>(g.cols()))
                                .noalias() = W * ConstMapMatT<T>(col.data(), g.rows(), ncols);
                        }
                    }
                    if (slot.bias >= 0) {
                        const BasicTensor<T>& b = params[static_cast<std::size_t>(slot.bias)];
                        for (int co = 0; co < spec.out_channels; ++co) Y.row(co).array() += b[static_cast<std::size_t>(co)];
                    }
                }
                break;
            }
            case LayerKind::Dense: {
                const BasicTensor<T>& wt = params[static_cast<std::size_t>(slot.weight)];
                const int f = x.shape().size();
                ConstMapMatT<T> W(wt.data(), spec.out_channels, f);
                ConstMapMatT<T> X(x.data(), n, f);
                MapMatT<T> Y(y.data(), n, spec.out_channels);
                Y.noalias() = X * W.transpose();
                if (slot.bias >= 0) {
                    const BasicTensor<T>& b = params[static_cast<std::size_t>(slot.bias)];
                    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bias(b.data(), spec.out_channels);
                    Y.rowwise() += bias;
                }
                break;
            }
            case LayerKind::Upsample2x: {
                const int planes = n * x.c();
                const int w_in = x.w(), h_in = x.h();
                for (int p = 0; p < planes; ++p) {
                    const T* src = x.data() + static_cast<std::size_t>(p) * h_in * w_in;
                    T* dst = y.data() + static_cast<std::size_t>(p) * 4 * h_in * w_in;
                    for (int yy = 0; yy < h_in; ++yy) {
                        const T* srow = src + static_cast<std::size_t>(yy) * w_in;
                        T* d0 = dst + static_cast<std::size_t>(2 * yy) * 2 * w_in;
                        for (int xx = 0; xx < w_in; ++xx) d0[2 * xx] = d0[2 * xx + 1] = srow[xx];
                        std::copy(d0, d0 + 2 * w_in, d0 + 2 * w_in);
                    }
                }
                break;
            }
            case LayerKind::Concat: {
                const BasicTensor<T>& b = acts[static_cast<std::size_t>(spec.inputs[1])];
                const std::size_t sa = x.shape().size(), sb = b.shape().size();
                for (int i = 0; i < n; ++i) {
                    std::copy(x.sample(i), x.sample(i) + sa, y.sample(i));
                    std::copy(b.sample(i), b.sample(i) + sb, y.sample(i) + sa);
                }
                break;
            }
            case LayerKind::Relu: {
                for (std::size_t k = 0; k < y.size(); ++k) y[k] = std::max(x[k], T(0));
                if (relu_active) {
                    for (std::size_t k = 0; k < x.size(); ++k) relu_active->push_back(x[k] > T(0));
                }
                break;
            }
            case LayerKind::Sigmoid: {
                for (std::size_t k = 0; k < y.size(); ++k) y[k] = T(1) / (T(1) + std::exp(-x[k]));
                break;
            }
        }
        // Given a finite input only sums can overflow; the other kinds cannot create non-finite values.
        if (spec.kind == LayerKind::Conv2d || spec.kind == LayerKind::Dense) y.check_finite(to_string(spec.kind).c_str());
    }
}

const Tensor& LayerGraph::forward(const Tensor& input) {
    run(input, cache_, params_);
    return cache_.back();
}

Tensor LayerGraph::infer(const Tensor& input) const {
    std::vector<Tensor> acts;
    run(input, acts, params_);
    return std::move(acts.back());
}

TensorD LayerGraph::infer_double(const TensorD& input, const std::vector<TensorD>& params,
                                 std::vector<bool>* relu_active) const {
    if (params.size() != params_.size()) throw DimensionError("infer_double: parameter count mismatch");
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (params[p].size() != params_[p].size()) throw DimensionError("infer_double: parameter size mismatch");
    }
    std::vector<TensorD> acts;
    run(input, acts, params, relu_active);
    return std::move(acts.back());
}

Gradients LayerGraph::backward(const Tensor& output_grad, bool want_input_grad) {
    if (cache_.empty()) throw StateError("backward called without a cached forward pass");
    const DenormalsFlushed ftz;
    const Tensor& out = cache_.back();
    if (output_grad.n() != out.n() || output_grad.shape() != out.shape()) {
        throw DimensionError("output gradient shape " + to_string(output_grad.shape()) + " does not match output " +
                             to_string(out.shape()));
    }
    const int n = out.n();
    std::vector<Tensor>& grads = grad_cache_;
    grads.resize(shapes_.size());
    std::vector<char> live(shapes_.size(), 0);
    grads.back() = output_grad;
    live.back() = 1;
    auto node_grad = [&](int node) -> Tensor& {
        Tensor& g = grads[static_cast<std::size_t>(node)];
        if (!live[static_cast<std::size_t>(node)]) {
            g.reshape_uninitialized(n, shapes_[static_cast<std::size_t>(node)]);
            g.fill(0.0f);
            live[static_cast<std::size_t>(node)] = 1;
        }
        return g;
    };

    Gradients result;
    result.params.reserve(params_.size());
    for (const auto& p : params_) result.params.emplace_back(1, p.shape());

    AlignedVector<float> col, dcol;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        if (!live[l + 1]) continue;
        const Tensor& dy = grads[l + 1];
        const LayerSpec& spec = layers_[l];
        const int in_node = spec.inputs[0];
        const bool need_dx = in_node != 0 || want_input_grad;
        const Tensor& x = cache_[static_cast<std::size_t>(in_node)];
        const Tensor& y = cache_[l + 1];
        const ParamSlot& slot = slots_[l];
        switch (spec.kind) {
            case LayerKind::Conv2d: {
                const ConvGeom g = conv_geom(x.shape(), spec);
                const Tensor& wt = params_[static_cast<std::size_t>(slot.weight)];
                ConstMapMat W(wt.data(), spec.out_channels, g.rows());
                MapMat dW(result.params[static_cast<std::size_t>(slot.weight)].data(), spec.out_channels, g.rows());
                const int rows = tile_rows(g);
                if (!g.pointwise()) {
                    col.resize(static_cast<std::size_t>(g.rows()) * rows * g.wo);
                    dcol.resize(col.size());
                }
                for (int i = 0; i < n; ++i) {
                    ConstMapMat dY(dy.sample(i), spec.out_channels, g.cols());
                    if (slot.bias >= 0) {
                        Tensor& db = result.params[static_cast<std::size_t>(slot.bias)];
                        for (int co = 0; co < spec.out_channels; ++co) db[static_cast<std::size_t>(co)] += dY.row(co).sum();
                    }
                    float* dx = need_dx ? node_grad(in_node).sample(i) : nullptr;
                    if (g.pointwise()) {
                        dW.noalias() += dY * ConstMapMat(x.sample(i), g.rows(), g.cols()).transpose();
                        if (dx) MapMat(dx, g.rows(), g.cols()).noalias() += W.transpose() * dY;
                        continue;
                    }
                    for (int oy0 = 0; oy0 < g.ho; oy0 += rows) {
                        const int oy1 = std::min(g.ho, oy0 + rows);
                        const int ncols = (oy1 - oy0) * g.wo;
                        ConstStridedMap<float> dYt(dy.sample(i) + static_cast<std::size_t>(oy0) * g.wo, spec.out_channels,
                                                   ncols, Eigen::OuterStride<>(g.cols()));
                        im2col(x.sample(i), g, oy0, oy1, col.data());
                        dW.noalias() += dYt * ConstMapMat(col.data(), g.rows(), ncols).transpose();
                        if (dx) {
                            MapMat(dcol.data(), g.rows(), ncols).noalias() = W.transpose() * dYt;
                            col2im_add(dcol.data(), g, oy0, oy1, dx);
                        }
                    }
                }
                break;
            }
            case LayerKind::Dense: {
                const int f = x.shape().size();
                ConstMapMat X(x.data(), n, f);
                ConstMapMat dY(dy.data(), n, spec.out_channels);
                MapMat dW(result.params[static_cast<std::size_t>(slot.weight)].data(), spec.out_channels, f);
                dW.noalias() += dY.transpose() * X;
                if (slot.bias >= 0) {
                    Tensor& db = result.params[static_cast<std::size_t>(slot.bias)];
                    Eigen::Map<Eigen::RowVectorXf>(db.data(), spec.out_channels) += dY.colwise().sum();
                }
                if (need_dx) {
                    const Tensor& wt = params_[static_cast<std::size_t>(slot.weight)];
                    MapMat(node_grad(in_node).data(), n, f).noalias() +=
                        dY * ConstMapMat(wt.data(), spec.out_channels, f);
                }
                break;
            }
            case LayerKind::Upsample2x: {
                if (!need_dx) break;
                Tensor& dx = node_grad(in_node);
                const int planes = n * dx.c();
                const int w_in = dx.w(), h_in = dx.h();
                for (int p = 0; p < planes; ++p) {
                    float* dst = dx.data() + static_cast<std::size_t>(p) * h_in * w_in;
                    const float* src = dy.data() + static_cast<std::size_t>(p) * 4 * h_in * w_in;
                    for (int yy = 0; yy < h_in; ++yy) {
                        const float* r0 = src + static_cast<std::size_t>(2 * yy) * 2 * w_in;
                        const float* r1 = r0 + 2 * w_in;
                        float* drow = dst + static_cast<std::size_t>(yy) * w_in;
                        for (int xx = 0; xx < w_in; ++xx) {
                            drow[xx] += (r0[2 * xx] + r0[2 * xx + 1]) + (r1[2 * xx] + r1[2 * xx + 1]);
                        }
                    }
                }
                break;
            }
            case LayerKind::Concat: {
                const int b_node = spec.inputs[1];
                const std::size_t sa = x.shape().size();
                const std::size_t sb = shapes_[static_cast<std::size_t>(b_node)].size();
                const bool need_db = b_node != 0 || want_input_grad;
                for (int i = 0; i < n; ++i) {
                    const float* src = dy.sample(i);
                    if (need_dx) {
                        float* da = node_grad(in_node).sample(i);
                        for (std::size_t k = 0; k < sa; ++k) da[k] += src[k];
                    }
                    if (need_db) {
                        float* db = node_grad(b_node).sample(i);
                        for (std::size_t k = 0; k < sb; ++k) db[k] += src[sa + k];
                    }
                }
                break;
            }
            case LayerKind::Relu: {
                if (!need_dx) break;
                Tensor& dx = node_grad(in_node);
                for (std::size_t k = 0; k < dy.size(); ++k) {
                    if (y[k] > 0.0f) dx[k] += dy[k];
                }
                break;
            }
            case LayerKind::Sigmoid: {
                if (!need_dx) break;
                Tensor& dx = node_grad(in_node);
                for (std::size_t k = 0; k < dy.size(); ++k) dx[k] += dy[k] * y[k] * (1.0f - y[k]);
                break;
            }
        }
        live[l + 1] = 0;
    }
    if (want_input_grad) result.input = live.front() ? grads.front() : Tensor(n, shapes_.front());
    for (std::size_t p = 0; p < result.params.size(); ++p) result.params[p].check_finite("parameter gradient");
    return result;
}

}  // namespace facemimic::diffnet
