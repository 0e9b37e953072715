#include "atransn/nn.hpp"

#include <algorithm>
#include <cmath>

namespace atransn {
namespace {

double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_finite(std::span<const double> g, const char* tensor_name) {
    if (!all_finite(g)) {
        throw TrainingError(std::string("non-finite gradient in ") + tensor_name);
    }
}

LayerGrads make_layer_grads(const Layer& layer) {
    LayerGrads g;
    g.d_weight = Matrix(layer.weight.rows, layer.weight.cols);
    g.d_bias.assign(layer.bias.size(), 0.0);
    if (layer.layer_norm) {
        g.d_gain.assign(layer.ln_gain.size(), 0.0);
        g.d_shift.assign(layer.ln_shift.size(), 0.0);
    }
    return g;
}

}  // namespace

void NetGrads::zero() {
    for (LayerGrads& g : layers) {
        g.d_weight.fill(0.0);
        std::fill(g.d_bias.begin(), g.d_bias.end(), 0.0);
        std::fill(g.d_gain.begin(), g.d_gain.end(), 0.0);
        std::fill(g.d_shift.begin(), g.d_shift.end(), 0.0);
    }
}

void NetGrads::add(const NetGrads& other) {
    for (size_t l = 0; l < layers.size(); ++l) {
        LayerGrads& a = layers[l];
        const LayerGrads& b = other.layers[l];
        axpy(1.0, b.d_weight.data, a.d_weight.data);
        axpy(1.0, b.d_bias, a.d_bias);
        axpy(1.0, b.d_gain, a.d_gain);
        axpy(1.0, b.d_shift, a.d_shift);
    }
}

void NetGrads::scale_all(double s) {
    for (LayerGrads& g : layers) {
        scale(g.d_weight.data, s);
        scale(g.d_bias, s);
        scale(g.d_gain, s);
        scale(g.d_shift, s);
    }
}

NetGrads make_grads_like(const DenseNet& net) {
    NetGrads g;
    g.layers.reserve(net.layers.size());
    for (const Layer& layer : net.layers) g.layers.push_back(make_layer_grads(layer));
    return g;
}

void forward(const DenseNet& net, std::span<const double> x, ForwardCache& cache) {
    check_dim(x.size(), static_cast<size_t>(net.input_dim()), "net input");
    cache.layers.resize(net.layers.size());
    Vec cur(x.begin(), x.end());

    for (size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& layer = net.layers[l];
        LayerCache& lc = cache.layers[l];
        const int out = layer.out_dim();
        const int in = layer.in_dim();
        check_dim(cur.size(), static_cast<size_t>(in), "layer input");

        lc.x = cur;
        lc.z.assign(static_cast<size_t>(out), 0.0);
        for (int i = 0; i < out; ++i) {
            lc.z[static_cast<size_t>(i)] = layer.bias[static_cast<size_t>(i)] + dot(layer.weight.row(i), cur);
        }

        lc.a = lc.z;
        switch (layer.activation) {
            case Activation::None: break;
            case Activation::LeakyRelu:
                for (double& v : lc.a) v = v > 0.0 ? v : layer.slope * v;
                break;
            case Activation::Sigmoid:
                for (double& v : lc.a) v = sigmoid(v);
                break;
        }

        if (layer.layer_norm) {
            const auto n = static_cast<double>(out);
            double mean = 0.0;
            for (double v : lc.a) mean += v;
            mean /= n;
            double var = 0.0;
            for (double v : lc.a) var += (v - mean) * (v - mean);
            var /= n;
            lc.low_variance = var <= kLayerNormEps;
            lc.inv = 1.0 / std::sqrt(std::max(var, kLayerNormEps));
            lc.xhat.assign(static_cast<size_t>(out), 0.0);
            cur.assign(static_cast<size_t>(out), 0.0);
            for (int i = 0; i < out; ++i) {
                const auto k = static_cast<size_t>(i);
                lc.xhat[k] = (lc.a[k] - mean) * lc.inv;
                cur[k] = layer.ln_gain[k] * lc.xhat[k] + layer.ln_shift[k];
            }
        } else {
            cur = lc.a;
        }
    }
    cache.y = cur;
}

void backward(const DenseNet& net, const ForwardCache& cache, std::span<const double> dy,
              NetGrads& grads, Vec& dx) {
    if (cache.layers.size() != net.layers.size()) throw ShapeError("stale forward cache");
    check_dim(dy.size(), cache.y.size(), "output gradient");
    if (grads.layers.size() != net.layers.size()) throw ShapeError("gradient buffer shape");

    Vec upstream(dy.begin(), dy.end());
    for (size_t l = net.layers.size(); l-- > 0;) {
        const Layer& layer = net.layers[l];
        const LayerCache& lc = cache.layers[l];
        LayerGrads& lg = grads.layers[l];
        const int out = layer.out_dim();
        if (lc.x.size() != static_cast<size_t>(layer.in_dim())) throw ShapeError("stale forward cache");

        Vec da(static_cast<size_t>(out), 0.0);
        if (layer.layer_norm) {
            // g = d loss / d xhat; the xhat pathway sees the centered
            // input through inv, which is constant on the low-variance
            // branch (variance clamped at eps).
            Vec g(static_cast<size_t>(out), 0.0);
            double g_mean = 0.0;
            double gx_mean = 0.0;
            for (int i = 0; i < out; ++i) {
                const auto k = static_cast<size_t>(i);
                lg.d_gain[k] += upstream[k] * lc.xhat[k];
                lg.d_shift[k] += upstream[k];
                g[k] = upstream[k] * layer.ln_gain[k];
                g_mean += g[k];
                gx_mean += g[k] * lc.xhat[k];
            }
            g_mean /= static_cast<double>(out);
            gx_mean /= static_cast<double>(out);
            for (int i = 0; i < out; ++i) {
                const auto k = static_cast<size_t>(i);
                // Below the epsilon floor inv is the constant
                // 1/sqrt(eps), so the normalization is linear in a and
                // the variance pathway (the xhat term) drops out.
                da[k] = lc.low_variance ? lc.inv * (g[k] - g_mean)
                                        : lc.inv * (g[k] - g_mean - lc.xhat[k] * gx_mean);
            }
        } else {
            da = upstream;
        }

        Vec dz(static_cast<size_t>(out), 0.0);
        switch (layer.activation) {
            case Activation::None:
                dz = da;
                break;
            case Activation::LeakyRelu:
                for (int i = 0; i < out; ++i) {
                    const auto k = static_cast<size_t>(i);
                    dz[k] = da[k] * (lc.z[k] > 0.0 ? 1.0 : layer.slope);
                }
                break;
            case Activation::Sigmoid:
                for (int i = 0; i < out; ++i) {
                    const auto k = static_cast<size_t>(i);
                    dz[k] = da[k] * lc.a[k] * (1.0 - lc.a[k]);
                }
                break;
        }

        Vec d_in(lc.x.size(), 0.0);
        for (int i = 0; i < out; ++i) {
            const auto k = static_cast<size_t>(i);
            lg.d_bias[k] += dz[k];
            axpy(dz[k], lc.x, lg.d_weight.row(i));
            axpy(dz[k], layer.weight.row(i), d_in);
        }
        upstream = std::move(d_in);
    }
    dx = std::move(upstream);
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamTensor& state,
               int64_t t, double lr, const AdamParams& hp, const char* tensor_name) {
    check_dim(grads.size(), params.size(), tensor_name);
    check_finite(grads, tensor_name);
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(t));
    for (size_t i = 0; i < params.size(); ++i) {
        state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * grads[i];
        state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + hp.eps);
    }
}

NetAdam make_net_adam(const DenseNet& net) {
    NetAdam st;
    st.moments_m.reserve(net.layers.size());
    st.moments_v.reserve(net.layers.size());
    for (const Layer& layer : net.layers) {
        st.moments_m.push_back(make_layer_grads(layer));
        st.moments_v.push_back(make_layer_grads(layer));
    }
    return st;
}

namespace {

void adam_tensor_inplace(std::span<double> params, std::span<const double> grads, std::span<double> m,
                         std::span<double> v, double bc1, double bc2, double lr,
                         const AdamParams& hp, const char* tensor_name) {
    check_dim(grads.size(), params.size(), tensor_name);
    check_finite(grads, tensor_name);
    for (size_t i = 0; i < params.size(); ++i) {
        m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * grads[i];
        v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * grads[i] * grads[i];
        params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + hp.eps);
    }
}

}  // namespace

void adam_step(DenseNet& net, const NetGrads& grads, NetAdam& state, double lr) {
    if (grads.layers.size() != net.layers.size() || state.moments_m.size() != net.layers.size()) {
        throw ShapeError("optimizer/network shape mismatch");
    }
    ++state.step_count;
    const double bc1 = 1.0 - std::pow(state.hp.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.hp.beta2, static_cast<double>(state.step_count));
    for (size_t l = 0; l < net.layers.size(); ++l) {
        Layer& layer = net.layers[l];
        const LayerGrads& g = grads.layers[l];
        LayerGrads& m = state.moments_m[l];
        LayerGrads& v = state.moments_v[l];
        adam_tensor_inplace(layer.weight.data, g.d_weight.data, m.d_weight.data, v.d_weight.data,
                            bc1, bc2, lr, state.hp, "layer.weight");
        adam_tensor_inplace(layer.bias, g.d_bias, m.d_bias, v.d_bias, bc1, bc2, lr, state.hp,
                            "layer.bias");
        if (layer.layer_norm) {
            adam_tensor_inplace(layer.ln_gain, g.d_gain, m.d_gain, v.d_gain, bc1, bc2, lr,
                                state.hp, "layer.ln_gain");
            adam_tensor_inplace(layer.ln_shift, g.d_shift, m.d_shift, v.d_shift, bc1, bc2, lr,
                                state.hp, "layer.ln_shift");
        }
    }
}

SparseRowAdam make_sparse_adam(const Matrix& params) {
    SparseRowAdam st;
    st.m = Matrix(params.rows, params.cols);
    st.v = Matrix(params.rows, params.cols);
    return st;
}

void sparse_adam_step(Matrix& params, const std::vector<std::pair<int32_t, Vec>>& row_grads,
                      SparseRowAdam& state, int64_t t, double lr, const char* tensor_name) {
    const double bc1 = 1.0 - std::pow(state.hp.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(state.hp.beta2, static_cast<double>(t));
    for (const auto& [row, grad] : row_grads) {
        adam_tensor_inplace(params.row(row), grad, state.m.row(row), state.v.row(row), bc1, bc2,
                            lr, state.hp, tensor_name);
    }
}

Matrix init_dense(int rows, int cols, InitScheme scheme, RngStream& rng) {
    Matrix w(rows, cols);
    if (scheme == InitScheme::FanUniform) {
        const double bound = std::sqrt(6.0 / static_cast<double>(cols));
        for (double& v : w.data) v = rng.uniform_range(-bound, bound);
        return w;
    }

    // Orthogonal: modified Gram-Schmidt over Gaussian draws along the
    // short side, so W W^T = I (wide) or W^T W = I (tall). Norms on the
    // R diagonal are positive by construction, which fixes the sign
    // ambiguity and keeps the result a pure function of the stream.
    const bool wide = rows <= cols;
    const int n_vecs = wide ? rows : cols;
    const int dim = wide ? cols : rows;
    std::vector<Vec> basis;
    basis.reserve(static_cast<size_t>(n_vecs));
    while (static_cast<int>(basis.size()) < n_vecs) {
        Vec v(static_cast<size_t>(dim));
        for (double& x : v) x = rng.gaussian();
        for (const Vec& b : basis) axpy(-dot(v, b), b, v);
        const double norm = norm2(v);
        if (norm < 1e-10) continue;  // redraw on (measure-zero) degeneracy
        scale(v, 1.0 / norm);
        basis.push_back(std::move(v));
    }
    for (int i = 0; i < n_vecs; ++i) {
        for (int j = 0; j < dim; ++j) {
            if (wide) {
                w.at(i, j) = basis[static_cast<size_t>(i)][static_cast<size_t>(j)];
            } else {
                w.at(j, i) = basis[static_cast<size_t>(i)][static_cast<size_t>(j)];
            }
        }
    }
    return w;
}

Layer make_layer(int out, int in, Activation act, bool layer_norm, RngStream& rng,
                 InitScheme scheme, double slope) {
    Layer layer;
    layer.weight = init_dense(out, in, scheme, rng);
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    layer.bias.assign(static_cast<size_t>(out), 0.0);
    for (double& b : layer.bias) b = rng.uniform_range(-bound, bound);
    layer.activation = act;
    layer.slope = slope;
    layer.layer_norm = layer_norm;
    if (layer_norm) {
        layer.ln_gain.assign(static_cast<size_t>(out), 1.0);
        layer.ln_shift.assign(static_cast<size_t>(out), 0.0);
    }
    return layer;
}

void RowGradAccumulator::add(int32_t row, std::span<const double> grad) {
    axpy(1.0, grad, slot_(row));
}

void RowGradAccumulator::add_scaled(int32_t row, double s, std::span<const double> grad) {
    axpy(s, grad, slot_(row));
}

Vec& RowGradAccumulator::slot_(int32_t row) {
    auto [it, inserted] = index_.try_emplace(row, rows_.size());
    if (inserted) rows_.emplace_back(row, Vec(static_cast<size_t>(dim_), 0.0));
    return rows_[it->second].second;
}

std::vector<int32_t> RowGradAccumulator::touched_ids() const {
    std::vector<int32_t> ids;
    ids.reserve(rows_.size());
    for (const auto& [row, grad] : rows_) ids.push_back(row);
    return ids;
}

void RowGradAccumulator::clear() {
    rows_.clear();
    index_.clear();
}

}  // namespace atransn
