#include "atransn/adversarial.hpp"

#include <cmath>

#include "atransn/mathfn.hpp"

namespace atransn {
namespace {

Vec concat(std::span<const double> a, std::span<const double> b) {
    Vec x;
    x.reserve(a.size() + b.size());
    x.insert(x.end(), a.begin(), a.end());
    x.insert(x.end(), b.begin(), b.end());
    return x;
}

}  // namespace

Generator make_generator(int n, RngStream& rng, double slope) {
    Generator g;
    g.net.layers.push_back(
        make_layer(2 * n, 2 * n, Activation::LeakyRelu, false, rng, InitScheme::FanUniform, slope));
    g.net.layers.push_back(
        make_layer(n, 2 * n, Activation::None, false, rng, InitScheme::FanUniform, slope));
    return g;
}

Discriminator make_discriminator(int n, RngStream& rng, double slope) {
    Discriminator d;
    d.net.layers.push_back(
        make_layer(n, 2 * n, Activation::LeakyRelu, true, rng, InitScheme::FanUniform, slope));
    d.net.layers.push_back(
        make_layer(1, n, Activation::Sigmoid, false, rng, InitScheme::FanUniform, slope));
    return d;
}

Vec sample_noise(int n, RngStream& rng) {
    Vec z(static_cast<size_t>(n));
    for (double& v : z) v = rng.uniform_range(-1.0, 1.0);
    return z;
}

Vec generate(const Generator& g, std::span<const double> e, std::span<const double> z) {
    ForwardCache cache;
    forward(g.net, concat(e, z), cache);
    return std::move(cache.y);
}

double discriminate(const Discriminator& d, std::span<const double> e_target,
                    std::span<const double> candidate) {
    check_dim(candidate.size(), e_target.size(), "discriminator candidate");
    ForwardCache cache;
    forward(d.net, concat(e_target, candidate), cache);
    return cache.y[0];
}

DiscriminatorLossResult discriminator_loss(const Discriminator& d, const TransitionNetwork& w,
                                           const Matrix& teacher_entities,
                                           const Matrix& target_entities,
                                           const AlignedPairBatch& real_batch,
                                           const std::vector<FakePair>& fakes) {
    if (real_batch.teacher_rows.size() != real_batch.target_rows.size()) {
        throw ShapeError("aligned pair batch: row lists differ in length");
    }
    DiscriminatorLossResult out;
    out.d_disc = make_grads_like(d.net);
    out.d_w = make_grads_like(w.net);

    const int n = d.embed_dim();
    ForwardCache w_cache, d_cache;
    Vec dx, d_w_out(static_cast<size_t>(n));

    if (!real_batch.teacher_rows.empty()) {
        const double inv = 1.0 / static_cast<double>(real_batch.size());
        for (size_t i = 0; i < real_batch.size(); ++i) {
            const auto e_target = target_entities.row(real_batch.target_rows[i]);
            project_teacher(w, teacher_entities.row(real_batch.teacher_rows[i]), w_cache);
            forward(d.net, concat(e_target, w_cache.y), d_cache);
            const double p = clamp_prob(d_cache.y[0]);
            out.loss += -std::log(p) * inv;
            out.mean_real_score += d_cache.y[0] * inv;
            if (prob_clamped(d_cache.y[0])) continue;
            const Vec dy{-inv / p};
            backward(d.net, d_cache, dy, out.d_disc, dx);
            // Candidate half of the input gradient flows on into W.
            std::copy(dx.begin() + n, dx.end(), d_w_out.begin());
            backward(w.net, w_cache, d_w_out, out.d_w, dx);
        }
    }

    if (!fakes.empty()) {
        const double inv = 1.0 / static_cast<double>(fakes.size());
        for (const FakePair& fake : fakes) {
            forward(d.net, concat(fake.condition, fake.candidate), d_cache);
            const double p = clamp_prob(d_cache.y[0]);
            out.loss += -std::log1p(-p) * inv;
            out.mean_fake_score += d_cache.y[0] * inv;
            if (prob_clamped(d_cache.y[0])) continue;
            const Vec dy{inv / (1.0 - p)};
            backward(d.net, d_cache, dy, out.d_disc, dx);
        }
    }
    return out;
}

GeneratorLossResult generator_loss(const Generator& g, const Discriminator& d,
                                   const std::vector<Vec>& conditions,
                                   const std::vector<Vec>& noises, double lambda_g) {
    check_dim(noises.size(), conditions.size(), "generator noises");
    GeneratorLossResult out;
    out.d_gen = make_grads_like(g.net);
    if (conditions.empty()) return out;

    const int n = g.embed_dim();
    const double inv = 1.0 / static_cast<double>(conditions.size());
    NetGrads disc_sink = make_grads_like(d.net);  // discarded: D is frozen
    ForwardCache g_cache, d_cache;
    Vec dx, d_fake(static_cast<size_t>(n)), du, dv;

    for (size_t i = 0; i < conditions.size(); ++i) {
        const Vec& e = conditions[i];
        forward(g.net, concat(e, noises[i]), g_cache);
        const Vec& fake = g_cache.y;
        forward(d.net, concat(e, fake), d_cache);
        const double p = clamp_prob(d_cache.y[0]);
        out.loss += (-std::log(p) + lambda_g * cosine_distance(e, fake)) * inv;
        out.mean_fake_score += d_cache.y[0] * inv;

        std::fill(d_fake.begin(), d_fake.end(), 0.0);
        if (!prob_clamped(d_cache.y[0])) {
            const Vec dy{-inv / p};
            backward(d.net, d_cache, dy, disc_sink, dx);
            std::copy(dx.begin() + n, dx.end(), d_fake.begin());
        }
        cosine_distance_grad(e, fake, du, dv);
        axpy(lambda_g * inv, dv, d_fake);
        backward(g.net, g_cache, d_fake, out.d_gen, dx);
    }
    return out;
}

Vec consistency_weights(const Discriminator& d, const TransitionNetwork& w,
                        const Matrix& teacher_entities, const Matrix& target_entities,
                        const AlignedPairBatch& pairs) {
    Vec weights(pairs.size(), 0.0);
    for (size_t i = 0; i < pairs.size(); ++i) {
        const Vec proj = project_teacher(w, teacher_entities.row(pairs.teacher_rows[i]));
        weights[i] = discriminate(d, target_entities.row(pairs.target_rows[i]), proj);
    }
    return weights;
}

}  // namespace atransn
