#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "atransn/matrix.hpp"
#include "atransn/nn.hpp"
#include "atransn/rng.hpp"
#include "atransn/transfer.hpp"

namespace atransn {

// Conditional generator: concat(target embedding e, noise z) in R^{2n}
// -> fake candidate in R^n. Hidden width 2n, LeakyReLU after layer 1.
struct Generator {
    DenseNet net;

    int embed_dim() const { return net.output_dim(); }
};

// Consistency discriminator: concat(e_target, candidate) in R^{2n} ->
// score in (0,1). Layer 1: linear + LeakyReLU + layer norm, hidden n;
// layer 2: linear + sigmoid.
struct Discriminator {
    DenseNet net;

    int embed_dim() const { return net.input_dim() / 2; }
};

Generator make_generator(int n, RngStream& rng, double slope = kLeakySlopeDefault);
Discriminator make_discriminator(int n, RngStream& rng, double slope = kLeakySlopeDefault);

// i.i.d. U(-1, 1) noise, one coordinate per embedding dim.
Vec sample_noise(int n, RngStream& rng);

Vec generate(const Generator& g, std::span<const double> e, std::span<const double> z);

double discriminate(const Discriminator& d, std::span<const double> e_target,
                    std::span<const double> candidate);

struct FakePair {
    Vec condition;  // target embedding e
    Vec candidate;  // G(e, z), constant in the discriminator phase
};

struct DiscriminatorLossResult {
    double loss = 0.0;
    NetGrads d_disc;
    NetGrads d_w;
    double mean_real_score = 0.0;
    double mean_fake_score = 0.0;
};

// Binary cross-entropy over real pairs (e_target, W(e_teacher)) and
// fake pairs (e, G(e, z)):
//   loss = mean_real[-log D(real)] + mean_fake[-log(1 - D(fake))]
// Gradients flow to D parameters and, through the real candidates, to
// W. Fake candidates and target embeddings are constants. D outputs
// are clamped to [1e-7, 1-1e-7] inside the logs, with gradients zeroed
// on the clamped region.
DiscriminatorLossResult discriminator_loss(const Discriminator& d, const TransitionNetwork& w,
                                           const Matrix& teacher_entities,
                                           const Matrix& target_entities,
                                           const AlignedPairBatch& real_batch,
                                           const std::vector<FakePair>& fakes);

struct GeneratorLossResult {
    double loss = 0.0;
    NetGrads d_gen;
    double mean_fake_score = 0.0;
};

// Non-saturating conditional-GAN objective with a cosine anchor:
//   loss = mean[-log D(e, G(e, z)) + lambda_g * (1 - cos(e, G(e, z)))]
// Only G's parameters receive gradients; D is frozen in this phase.
GeneratorLossResult generator_loss(const Generator& g, const Discriminator& d,
                                   const std::vector<Vec>& conditions,
                                   const std::vector<Vec>& noises, double lambda_g);

// Eq.-8 weights: w_i = D(e_target_i, W(e_teacher_i)), evaluated with no
// gradient recording; the trainer treats them as constants.
Vec consistency_weights(const Discriminator& d, const TransitionNetwork& w,
                        const Matrix& teacher_entities, const Matrix& target_entities,
                        const AlignedPairBatch& pairs);

}  // namespace atransn
