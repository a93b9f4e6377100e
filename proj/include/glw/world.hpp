#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glw/tensor.hpp"

namespace glw {

// Hidden semantic space shared by all domains: a mixture of separated
// anisotropic Gaussian clusters. Anisotropy plus separation is what makes
// unsupervised alignment identifiable; an isotropic single Gaussian would be
// invariant under rotation and impossible to align without pairs.
struct World {
    std::size_t k = 0;
    Tensor samples;            // n x k
    std::vector<int> labels;   // n, cluster id per sample
    Tensor cluster_means;      // c x k
    Tensor cluster_scales;     // c x k, per-dimension std
    double delta_sep = 4.0;
    std::uint64_t seed = 0;

    std::size_t n_samples() const { return labels.size(); }
    std::size_t n_clusters() const { return cluster_means.rows(); }

    // Fresh draws from the same mixture (held-out sets, evaluation galleries).
    Tensor sample_more(std::size_t n, std::uint64_t seed, std::vector<int>* labels_out) const;
};

// Cluster means are rejection-sampled until every pairwise distance reaches
// delta_sep; per-cluster per-dimension scales are uniform in [0.3, 1.0].
World generate_world(std::uint64_t seed, std::size_t k, std::size_t n_clusters,
                     std::size_t n_samples, double delta_sep = 4.0);

enum class Rendering { LinearOrthogonal, LinearGeneral, NonlinearTanh, PureNoise };

Rendering rendering_from_string(const std::string& s);
const char* to_string(Rendering r);

struct DomainSpec {
    std::string id;
    std::size_t obs_dim = 0;
    Rendering rendering = Rendering::LinearOrthogonal;
    double noise_std = 0.0;
    // Target RMS of pre-tanh activations for nonlinear rendering; larger
    // values saturate more and destroy more information.
    double gain = 1.0;
    std::uint64_t seed = 0;
};

// Per-domain observations. Row access is counted so tests can assert that
// training one module never touches another module's data.
struct DomainData {
    std::string domain_id;
    Tensor obs;  // n x obs_dim
    mutable std::uint64_t row_reads = 0;

    std::size_t n() const { return obs.rank() == 2 ? obs.rows() : 0; }
    std::size_t dim() const { return obs.rank() == 2 ? obs.cols() : 0; }
    const double* row(std::size_t i) const {
        ++row_reads;
        return obs.row_ptr(i);
    }
};

// Deterministic generative map g_i for one domain; kept around so evaluation
// can re-render held-out samples or add observation noise.
struct DomainRenderer {
    DomainSpec spec;
    std::size_t k = 0;
    Tensor map;          // k x obs_dim, applied as X = Z * map
    double tanh_alpha = 1.0;

    // noise_seed selects the noise stream; the map itself is fixed by spec.seed.
    DomainData render(const Tensor& z, double noise_std, std::uint64_t noise_seed) const;
};

DomainRenderer make_renderer(const World& world, const DomainSpec& spec);

// Renders the world's own samples with the spec's noise level.
DomainData render_domain(const World& world, const DomainSpec& spec);

}  // namespace glw
