#include "glw/world.hpp"

#include <cmath>

#include "glw/kernels.hpp"
#include "glw/linalg.hpp"
#include "glw/rng.hpp"

namespace glw {

World generate_world(std::uint64_t seed, std::size_t k, std::size_t n_clusters,
                     std::size_t n_samples, double delta_sep) {
    if (k < 2) throw ConfigError("generate_world: k must be >= 2");
    if (n_clusters < 2) throw ConfigError("generate_world: n_clusters must be >= 2");
    World w;
    w.k = k;
    w.seed = seed;
    w.delta_sep = delta_sep;
    Rng rng(Rng::derive(seed, 0x1157));

    // Per-cluster anisotropic scales first, then rejection-sample the means.
    w.cluster_scales = Tensor::zeros({n_clusters, k});
    for (auto& v : w.cluster_scales.data) v = rng.uniform(0.3, 1.0);

    w.cluster_means = Tensor::zeros({n_clusters, k});
    std::size_t attempts = 0;
    for (std::size_t c = 0; c < n_clusters; ++c) {
        while (true) {
            if (++attempts > 10000) {
                throw ConfigError("generate_world: could not place " +
                                  std::to_string(n_clusters) + " cluster means with min "
                                  "separation " + std::to_string(delta_sep) +
                                  " in 10000 attempts");
            }
            for (std::size_t j = 0; j < k; ++j) w.cluster_means.at(c, j) = delta_sep * rng.normal();
            bool ok = true;
            for (std::size_t p = 0; p < c && ok; ++p) {
                double d2 = 0.0;
                for (std::size_t j = 0; j < k; ++j) {
                    const double d = w.cluster_means.at(c, j) - w.cluster_means.at(p, j);
                    d2 += d * d;
                }
                ok = d2 >= delta_sep * delta_sep;
            }
            if (ok) break;
        }
    }

    w.samples = Tensor::zeros({n_samples, k});
    w.labels.resize(n_samples);
    Rng srng(Rng::derive(seed, 0x5A3B));
    for (std::size_t i = 0; i < n_samples; ++i) {
        const std::size_t c = i % n_clusters;  // balanced labels
        w.labels[i] = static_cast<int>(c);
        for (std::size_t j = 0; j < k; ++j) {
            w.samples.at(i, j) = w.cluster_means.at(c, j) +
                                 w.cluster_scales.at(c, j) * srng.normal();
        }
    }
    return w;
}

Tensor World::sample_more(std::size_t n, std::uint64_t extra_seed,
                          std::vector<int>* labels_out) const {
    Tensor z = Tensor::zeros({n, k});
    if (labels_out) labels_out->resize(n);
    Rng rng(Rng::derive(seed, 0xE0 ^ extra_seed));
    const std::size_t c_total = n_clusters();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % c_total;
        if (labels_out) (*labels_out)[i] = static_cast<int>(c);
        for (std::size_t j = 0; j < k; ++j) {
            z.at(i, j) = cluster_means.at(c, j) + cluster_scales.at(c, j) * rng.normal();
        }
    }
    return z;
}

Rendering rendering_from_string(const std::string& s) {
    if (s == "linear-orthogonal") return Rendering::LinearOrthogonal;
    if (s == "linear-general") return Rendering::LinearGeneral;
    if (s == "nonlinear-tanh") return Rendering::NonlinearTanh;
    if (s == "pure-noise") return Rendering::PureNoise;
    throw ConfigError("unknown rendering kind: " + s);
}

const char* to_string(Rendering r) {
    switch (r) {
        case Rendering::LinearOrthogonal: return "linear-orthogonal";
        case Rendering::LinearGeneral: return "linear-general";
        case Rendering::NonlinearTanh: return "nonlinear-tanh";
        case Rendering::PureNoise: return "pure-noise";
    }
    return "?";
}

DomainRenderer make_renderer(const World& world, const DomainSpec& spec) {
    if (spec.obs_dim < world.k && spec.rendering != Rendering::PureNoise) {
        throw ConfigError("domain '" + spec.id + "': obs_dim must be >= k");
    }
    if (spec.noise_std < 0.0) throw ConfigError("domain '" + spec.id + "': noise_std < 0");
    DomainRenderer r;
    r.spec = spec;
    r.k = world.k;

    switch (spec.rendering) {
        case Rendering::LinearOrthogonal: {
            // G is obs_dim x k with orthonormal columns; X = Z G^T.
            const Tensor g = random_orthonormal(spec.obs_dim, world.k, Rng::derive(spec.seed, 1));
            r.map = mat_transpose(g);
            break;
        }
        case Rendering::LinearGeneral:
        case Rendering::NonlinearTanh: {
            Rng rng(Rng::derive(spec.seed, 2));
            r.map = Tensor::zeros({world.k, spec.obs_dim});
            const double s = 1.0 / std::sqrt(static_cast<double>(world.k));
            for (auto& v : r.map.data) v = s * rng.normal();
            if (spec.rendering == Rendering::NonlinearTanh) {
                // Scale so pre-tanh activations have RMS ~= gain, using the
                // mixture's per-dimension second moments (closed form, so an
                // empty world still renders).
                std::vector<double> m2(world.k, 0.0);
                const std::size_t c = world.n_clusters();
                for (std::size_t ci = 0; ci < c; ++ci) {
                    for (std::size_t j = 0; j < world.k; ++j) {
                        const double mu = world.cluster_means.at(ci, j);
                        const double sc = world.cluster_scales.at(ci, j);
                        m2[j] += (mu * mu + sc * sc) / static_cast<double>(c);
                    }
                }
                double pre_ms = 0.0;
                for (std::size_t j = 0; j < spec.obs_dim; ++j) {
                    for (std::size_t p = 0; p < world.k; ++p) {
                        pre_ms += r.map.at(p, j) * r.map.at(p, j) * m2[p];
                    }
                }
                pre_ms /= static_cast<double>(spec.obs_dim);
                r.tanh_alpha = spec.gain / std::max(std::sqrt(pre_ms), 1e-12);
            }
            break;
        }
        case Rendering::PureNoise:
            r.map = Tensor::zeros({world.k, spec.obs_dim});
            break;
    }
    return r;
}

DomainData DomainRenderer::render(const Tensor& z, double noise_std,
                                  std::uint64_t noise_seed) const {
    if (z.rank() != 2 || z.cols() != k) {
        throw ShapeError("render: z " + z.shape_str() + " does not match k=" + std::to_string(k));
    }
    const std::size_t n = z.rows(), d = spec.obs_dim;
    DomainData out;
    out.domain_id = spec.id;
    out.obs = Tensor::zeros({n, d});
    if (spec.rendering != Rendering::PureNoise) {
        kern::active().mm_acc(out.obs.data.data(), z.data.data(), map.data.data(), n, k, d);
    }
    if (spec.rendering == Rendering::NonlinearTanh) {
        for (auto& v : out.obs.data) v = std::tanh(tanh_alpha * v);
    }
    if (noise_std > 0.0) {
        Rng rng(Rng::derive(spec.seed, 0xA01 ^ noise_seed));
        for (auto& v : out.obs.data) v += noise_std * rng.normal();
    }
    return out;
}

DomainData render_domain(const World& world, const DomainSpec& spec) {
    return make_renderer(world, spec).render(world.samples, spec.noise_std, 0);
}

}  // namespace glw
