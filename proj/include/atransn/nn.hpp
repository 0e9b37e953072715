#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "atransn/errors.hpp"
#include "atransn/matrix.hpp"
#include "atransn/rng.hpp"

namespace atransn {

enum class Activation { None, LeakyRelu, Sigmoid };

constexpr double kLeakySlopeDefault = 0.01;
constexpr double kLayerNormEps = 1e-5;

struct Layer {
    Matrix weight;  // out x in
    Vec bias;       // out
    Activation activation = Activation::None;
    double slope = kLeakySlopeDefault;
    bool layer_norm = false;
    Vec ln_gain;   // out, if layer_norm
    Vec ln_shift;  // out, if layer_norm

    int in_dim() const { return weight.cols; }
    int out_dim() const { return weight.rows; }
};

struct DenseNet {
    std::vector<Layer> layers;

    int input_dim() const { return layers.front().in_dim(); }
    int output_dim() const { return layers.back().out_dim(); }
};

struct LayerCache {
    Vec x;     // layer input
    Vec z;     // pre-activation
    Vec a;     // activation output (layer output when no norm)
    Vec xhat;  // normalized activation, if layer_norm
    double inv = 0.0;  // 1/sqrt(max(var, eps))
    bool low_variance = false;
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    Vec y;
};

struct LayerGrads {
    Matrix d_weight;
    Vec d_bias;
    Vec d_gain;
    Vec d_shift;
};

struct NetGrads {
    std::vector<LayerGrads> layers;

    void zero();
    void add(const NetGrads& other);
    void scale_all(double s);
};

NetGrads make_grads_like(const DenseNet& net);

// y = net(x); the cache holds everything backward needs.
void forward(const DenseNet& net, std::span<const double> x, ForwardCache& cache);

// Accumulates parameter gradients into `grads` (caller zeroes) and
// writes the input gradient to dx. dy is the gradient wrt the output.
void backward(const DenseNet& net, const ForwardCache& cache, std::span<const double> dy,
              NetGrads& grads, Vec& dx);

// Bias-corrected Adam over one flat tensor. `t` is the post-increment
// step count owned by the caller.
struct AdamTensor {
    Vec m;
    Vec v;
};

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

void adam_step(std::span<double> params, std::span<const double> grads, AdamTensor& state,
               int64_t t, double lr, const AdamParams& hp, const char* tensor_name);

// Adam over a whole DenseNet; one step count for the net.
struct NetAdam {
    std::vector<LayerGrads> moments_m;  // reuse LayerGrads as a shape-mirror
    std::vector<LayerGrads> moments_v;
    int64_t step_count = 0;
    AdamParams hp;
};

NetAdam make_net_adam(const DenseNet& net);
void adam_step(DenseNet& net, const NetGrads& grads, NetAdam& state, double lr);

// Adam over an embedding matrix where each step touches few rows.
// Moments live per row; one optimizer-level step count drives the bias
// correction so the update cost scales with the touched set only.
struct SparseRowAdam {
    Matrix m;
    Matrix v;
    AdamParams hp;
};

SparseRowAdam make_sparse_adam(const Matrix& params);
void sparse_adam_step(Matrix& params, const std::vector<std::pair<int32_t, Vec>>& row_grads,
                      SparseRowAdam& state, int64_t t, double lr, const char* tensor_name);

enum class InitScheme { Orthogonal, FanUniform };

// Orthogonal: Gram-Schmidt over Gaussian draws, semi-orthogonal for
// rectangular shapes. FanUniform: U(+-sqrt(6/fan_in)), fan_in = cols.
Matrix init_dense(int rows, int cols, InitScheme scheme, RngStream& rng);

// Convenience layer builders used by the three network shapes.
Layer make_layer(int out, int in, Activation act, bool layer_norm, RngStream& rng,
                 InitScheme scheme = InitScheme::FanUniform, double slope = kLeakySlopeDefault);

// Sparse-row gradient accumulator: sums repeated rows, hands back
// (row, grad) pairs in first-touch order so updates are deterministic.
class RowGradAccumulator {
public:
    explicit RowGradAccumulator(int dim) : dim_(dim) {}

    void add(int32_t row, std::span<const double> grad);
    void add_scaled(int32_t row, double s, std::span<const double> grad);

    const std::vector<std::pair<int32_t, Vec>>& rows() const { return rows_; }
    std::vector<int32_t> touched_ids() const;
    bool empty() const { return rows_.empty(); }
    void clear();

private:
    Vec& slot_(int32_t row);

    int dim_;
    std::vector<std::pair<int32_t, Vec>> rows_;
    std::unordered_map<int32_t, size_t> index_;
};

}  // namespace atransn
