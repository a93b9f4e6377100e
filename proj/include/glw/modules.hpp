#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glw/nn.hpp"
#include "glw/world.hpp"

namespace glw {

// Independent specialized module: encoder/decoder pair with a private latent
// space. Either a trained tanh autoencoder or a closed-form linear pair
// (exact pseudo-inverse of the rendering map) for oracle comparisons.
struct SpecializedModule {
    enum class Kind { TrainedAutoencoder, OracleLinear };

    std::string id;
    Kind kind = Kind::TrainedAutoencoder;
    std::size_t obs_dim = 0;
    std::size_t latent_dim = 0;

    // Trained kind.
    Mlp encoder, decoder;
    Tensor feature_mean, feature_scale;  // per-observation-dim standardization

    // Oracle kind.
    Tensor enc_map;  // obs_dim x latent_dim, V = X * enc_map
    Tensor dec_map;  // latent_dim x obs_dim, X^ = V * dec_map

    double final_train_loss = 0.0;
    std::vector<double> loss_curve;  // per-epoch full-data reconstruction MSE

    Tensor encode(const Tensor& x) const;  // [n x obs] -> [n x latent]
    Tensor decode(const Tensor& v) const;  // [n x latent] -> [n x obs]
    double reconstruction_mse(const DomainData& data) const;
};

// Raised when the raw end-of-training loss exceeds the pre-training loss;
// carries the per-epoch curve for diagnosis.
struct TrainingDivergence : TrainingError {
    TrainingDivergence(const std::string& msg, std::vector<double> curve_in)
        : TrainingError(msg), curve(std::move(curve_in)) {}
    std::vector<double> curve;
};

struct AutoencoderSchedule {
    std::size_t epochs = 200;
    std::size_t hidden = 64;
    std::size_t batch = 128;
    double lr = 3e-3;
};

// One-hidden-layer tanh encoder/decoder trained on reconstruction MSE with
// best-so-far checkpointing (the reported loss curve is monotone in the
// best-so-far sense and the returned parameters are the best seen).
SpecializedModule fit_autoencoder(const DomainData& data, std::size_t latent_dim,
                                  std::size_t epochs, std::uint64_t seed,
                                  const AutoencoderSchedule& sched = {});

// Exact linear module from the generative map (linear renderings only).
SpecializedModule make_oracle_module(const DomainRenderer& renderer);

struct ClassifierSchedule {
    std::size_t epochs = 200;
    std::size_t batch = 128;
    double lr = 1e-2;
};

// Softmax linear head trained by cross-entropy on a seeded 80/20 split;
// returns the head with held-out and train accuracy filled in.
ClassifierHead fit_classifier(const Tensor& latents, const std::vector<int>& labels,
                              std::size_t epochs, std::uint64_t seed,
                              const ClassifierSchedule& sched = {});

}  // namespace glw
