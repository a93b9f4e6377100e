#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glw/jsonio.hpp"
#include "glw/nn.hpp"

namespace glw {

// Matched latent pairs between two modules, used by the optional supervised
// complement. May be empty (fully unsupervised regime).
struct PairSet {
    std::string module_i, module_j;
    Tensor latents_i, latents_j;  // matched rows

    std::size_t size() const { return latents_i.rank() == 2 ? latents_i.rows() : 0; }
};

struct LossWeights {
    double cycle = 1.0;
    double demi = 1.0;
    double dist = 1.0;
    double sup = 1.0;
};

struct GlwSchedule {
    std::size_t epochs = 150;
    std::size_t batch = 128;
    double lr = 1e-3;
    LossWeights weights;
    std::uint64_t seed = 0;
};

struct EpochLosses {
    double total = 0.0, cycle = 0.0, demi = 0.0, dist = 0.0, sup = 0.0;
};

struct GlwTrainingReport {
    std::vector<EpochLosses> curve;
};

// Shared workspace space plus per-module in/out translators. The workspace
// dimension D is a bottleneck: max_i d_i <= D < sum_i d_i.
class GlwTranslator {
public:
    enum class Mode { Linear, Tanh };

    struct ModuleDim {
        std::string id;
        std::size_t dim;
    };

    GlwTranslator(std::size_t workspace_dim, Mode mode, std::vector<ModuleDim> modules,
                  std::uint64_t seed);

    std::size_t workspace_dim() const { return d_; }
    Mode mode() const { return mode_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t module_count() const { return mods_.size(); }
    std::size_t module_index(const std::string& id) const;  // LookupError when unknown
    const std::string& module_id(std::size_t i) const { return mods_.at(i).id; }
    std::size_t module_dim(std::size_t i) const { return mods_.at(i).dim; }

    Tensor encode(std::size_t i, const Tensor& v) const;   // [n x d_i] -> [n x D]
    Tensor decode(std::size_t i, const Tensor& z) const;   // [n x D] -> [n x d_i]
    Tensor translate(std::size_t i, std::size_t j, const Tensor& v) const;

    // Per-module whitening folded behind the encode/decode contract (raw
    // latents in, raw latents out). The nets operate on whitened coordinates,
    // which keeps tanh layers out of saturation and the training problem
    // well-conditioned whatever the latent covariance. Identity until fitted.
    void fit_standardization(const std::vector<Tensor>& latents);

    // cycle(i, i) is the demi-cycle map by definition, a single round trip.
    double cycle_loss(std::size_t i, std::size_t j, const Tensor& batch) const;
    double demi_cycle_loss(std::size_t i, const Tensor& batch) const;
    double supervised_align_loss(const PairSet& pairs) const;
    // One batch of latents per module, same order as registration.
    double distribution_loss(const std::vector<Tensor>& batches) const;

    // Minimizes w_cycle * sum_{i != j} cycle + w_demi * sum_i demi +
    // w_dist * dist + w_sup * sum sup with Adam. Batches are shuffled
    // independently per module, so training never exploits row alignment.
    // On a non-finite failure the last end-of-epoch parameters are restored
    // before a TrainingError is thrown.
    GlwTrainingReport train(const std::vector<Tensor>& latents,
                            const std::vector<PairSet>& pairs, const GlwSchedule& schedule);

    // Unsupervised initialization from latent geometry: whiten each module's
    // latents, align the whitened clouds by moment axes / cluster
    // constellation / ICP, and set each in/out map to the resulting affine
    // transport into the shared frame. Uses no pairing information.
    void geometric_init(const std::vector<Tensor>& latents, std::size_t n_clusters,
                        std::uint64_t seed);

    // Direct parameter access (tests, identity constructions).
    Mlp& encoder_net(std::size_t i) { return mods_.at(i).enc; }
    Mlp& decoder_net(std::size_t i) { return mods_.at(i).dec; }
    std::vector<std::pair<std::string, Tensor*>> named_params();

    Json to_checkpoint() const;
    static GlwTranslator from_checkpoint(const Json& j);
    void set_schedule_digest(std::string digest) { schedule_digest_ = std::move(digest); }
    const std::string& schedule_digest() const { return schedule_digest_; }

private:
    struct Mod {
        std::string id;
        std::size_t dim;
        Mlp enc, dec;            // operate on whitened latent coordinates
        Tensor in_mean;          // [dim]
        Tensor in_whiten;        // dim x dim, whitened = (v - mean) * in_whiten
        Tensor in_unwhiten;      // dim x dim, v = whitened * in_unwhiten + mean
    };

    Tensor whiten(std::size_t i, const Tensor& v) const;
    Tensor unwhiten(std::size_t i, const Tensor& y) const;
    // Net-level taped passes in whitened coordinates; the whitening wrappers
    // cancel inside cycle chains, so training composes these directly.
    Tape::Var enc_net_taped(Tape& tape, std::size_t i, Tape::Var whitened);
    Tape::Var dec_net_taped(Tape& tape, std::size_t i, Tape::Var z);

    std::size_t d_ = 0;
    Mode mode_ = Mode::Tanh;
    std::vector<Mod> mods_;
    std::uint64_t seed_ = 0;
    std::string schedule_digest_;
};

GlwTranslator::Mode glw_mode_from_string(const std::string& s);
const char* to_string(GlwTranslator::Mode m);

enum class RetrievalMetric { Euclidean, Cosine };

// Translates each probe from module i into module j and scores top-1 nearest
// neighbor retrieval against the gallery; ties break toward the lower gallery
// index. true_index[p] is the gallery row holding probe p's counterpart.
double retrieval_accuracy(const GlwTranslator& t, std::size_t i, std::size_t j,
                          const Tensor& probes_i, const Tensor& gallery_j,
                          const std::vector<std::size_t>& true_index,
                          RetrievalMetric metric = RetrievalMetric::Euclidean);

// Nearest-neighbor retrieval for already-translated probes (oracle and
// baseline paths share this).
double nn_retrieval(const Tensor& translated, const Tensor& gallery,
                    const std::vector<std::size_t>& true_index,
                    RetrievalMetric metric = RetrievalMetric::Euclidean);

}  // namespace glw
