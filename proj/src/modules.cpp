#include "glw/modules.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "glw/kernels.hpp"
#include "glw/linalg.hpp"
#include "glw/optim.hpp"
#include "glw/rng.hpp"

namespace glw {

namespace {

Tensor standardize(const Tensor& x, const Tensor& mean, const Tensor& scale) {
    Tensor out = x;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double* row = out.row_ptr(i);
        for (std::size_t j = 0; j < out.cols(); ++j) {
            row[j] = (row[j] - mean.data[j]) / scale.data[j];
        }
    }
    return out;
}

Tensor unstandardize(const Tensor& x, const Tensor& mean, const Tensor& scale) {
    Tensor out = x;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double* row = out.row_ptr(i);
        for (std::size_t j = 0; j < out.cols(); ++j) {
            row[j] = row[j] * scale.data[j] + mean.data[j];
        }
    }
    return out;
}

Tensor gather_rows(const DomainData& data, const std::vector<std::size_t>& idx,
                   std::size_t lo, std::size_t hi) {
    Tensor out = Tensor::zeros({hi - lo, data.dim()});
    for (std::size_t i = lo; i < hi; ++i) {
        const double* src = data.row(idx[i]);
        double* dst = out.row_ptr(i - lo);
        for (std::size_t j = 0; j < data.dim(); ++j) dst[j] = src[j];
    }
    return out;
}

}  // namespace

Tensor SpecializedModule::encode(const Tensor& x) const {
    if (x.rank() != 2 || x.cols() != obs_dim) {
        throw ShapeError("module '" + id + "' encode: got " + x.shape_str() + ", obs_dim=" +
                         std::to_string(obs_dim));
    }
    if (kind == Kind::OracleLinear) {
        return mat_mul(x, enc_map);
    }
    return encoder.forward(standardize(x, feature_mean, feature_scale));
}

Tensor SpecializedModule::decode(const Tensor& v) const {
    if (v.rank() != 2 || v.cols() != latent_dim) {
        throw ShapeError("module '" + id + "' decode: got " + v.shape_str() + ", latent_dim=" +
                         std::to_string(latent_dim));
    }
    if (kind == Kind::OracleLinear) {
        return mat_mul(v, dec_map);
    }
    return unstandardize(decoder.forward(v), feature_mean, feature_scale);
}

double SpecializedModule::reconstruction_mse(const DomainData& data) const {
    const Tensor rec = decode(encode(data.obs));
    return kern::sq_diff_sum_seq(rec.data.data(), data.obs.data.data(), rec.size()) /
           static_cast<double>(rec.size());
}

SpecializedModule fit_autoencoder(const DomainData& data, std::size_t latent_dim,
                                  std::size_t epochs, std::uint64_t seed,
                                  const AutoencoderSchedule& sched) {
    if (epochs < 1) throw ConfigError("fit_autoencoder: epochs must be >= 1");
    if (data.n() == 0) throw ConfigError("fit_autoencoder: empty domain data");
    const std::size_t n = data.n(), d = data.dim();

    SpecializedModule mod;
    mod.id = data.domain_id;
    mod.kind = SpecializedModule::Kind::TrainedAutoencoder;
    mod.obs_dim = d;
    mod.latent_dim = latent_dim;

    // Per-feature standardization folded into the module.
    mod.feature_mean = Tensor::zeros({d});
    mod.feature_scale = Tensor::zeros({d});
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = data.row(i);
        for (std::size_t j = 0; j < d; ++j) mod.feature_mean.data[j] += row[j];
    }
    for (auto& v : mod.feature_mean.data) v /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = data.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double c = row[j] - mod.feature_mean.data[j];
            mod.feature_scale.data[j] += c * c;
        }
    }
    for (auto& v : mod.feature_scale.data) {
        v = std::sqrt(v / static_cast<double>(std::max<std::size_t>(n - 1, 1)));
        if (v < 1e-8) v = 1.0;  // constant feature
    }

    mod.encoder = Mlp::make(d, sched.hidden, latent_dim, Nonlinearity::Tanh,
                            Rng::derive(seed, 0xE1));
    mod.decoder = Mlp::make(latent_dim, sched.hidden, d, Nonlinearity::Tanh,
                            Rng::derive(seed, 0xD2));
    for (Tensor* p : mod.encoder.param_tensors()) p->set_requires_grad(true);
    for (Tensor* p : mod.decoder.param_tensors()) p->set_requires_grad(true);

    auto params = mod.encoder.named_params("enc");
    for (auto& pr : mod.decoder.named_params("dec")) params.push_back(pr);
    Optimizer opt(params, {.algo = "adam", .lr = sched.lr});

    // Work entirely in standardized space (rows fetched through the counted
    // accessor so module independence is observable).
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    Tensor xs = standardize(gather_rows(data, all, 0, n), mod.feature_mean, mod.feature_scale);

    auto full_loss = [&]() {
        const Tensor rec = mod.decoder.forward(mod.encoder.forward(xs));
        return kern::sq_diff_sum_seq(rec.data.data(), xs.data.data(), rec.size()) /
               static_cast<double>(rec.size());
    };

    const double initial_loss = full_loss();
    double best_loss = initial_loss;
    std::vector<Tensor> best_params;
    auto snapshot = [&]() {
        best_params.clear();
        for (auto& [name, t] : params) best_params.push_back(*t);
    };
    snapshot();

    Rng shuffle_rng(Rng::derive(seed, 0x5F));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = std::max<std::size_t>(1, std::min(sched.batch, n));

    mod.loss_curve.reserve(epochs);
    std::vector<double> raw_curve;
    raw_curve.reserve(epochs + 1);
    raw_curve.push_back(initial_loss);
    double raw_loss = initial_loss;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t lo = 0; lo < n; lo += batch) {
            const std::size_t hi = std::min(lo + batch, n);
            Tensor xb = Tensor::zeros({hi - lo, d});
            for (std::size_t i = lo; i < hi; ++i) {
                const double* src = xs.row_ptr(order[i]);
                std::copy(src, src + d, xb.row_ptr(i - lo));
            }
            opt.zero_grad();
            Tape tape;
            auto x = tape.input(xb);
            auto rec = mod.decoder.forward(tape, mod.encoder.forward(tape, x));
            tape.backward(tape.mse(rec, x));
            opt.step();
        }
        raw_loss = full_loss();
        raw_curve.push_back(raw_loss);
        if (raw_loss < best_loss) {
            best_loss = raw_loss;
            snapshot();
        }
        mod.loss_curve.push_back(best_loss);
    }

    if (raw_loss > initial_loss) {
        throw TrainingDivergence("fit_autoencoder diverged on '" + data.domain_id +
                                 "': final loss " + std::to_string(raw_loss) + " > initial " +
                                 std::to_string(initial_loss),
                                 raw_curve);
    }

    // Restore the best parameters seen.
    std::size_t i = 0;
    for (auto& [name, t] : params) *t = best_params[i++];
    mod.final_train_loss = best_loss;
    return mod;
}

SpecializedModule make_oracle_module(const DomainRenderer& renderer) {
    if (renderer.spec.rendering != Rendering::LinearOrthogonal &&
        renderer.spec.rendering != Rendering::LinearGeneral) {
        throw ConfigError("oracle-linear module requires a linear rendering, got " +
                          std::string(to_string(renderer.spec.rendering)));
    }
    SpecializedModule mod;
    mod.id = renderer.spec.id;
    mod.kind = SpecializedModule::Kind::OracleLinear;
    mod.obs_dim = renderer.spec.obs_dim;
    mod.latent_dim = renderer.k;
    // map is k x obs (X = Z * map); G = map^T has shape obs x k.
    const Tensor g = mat_transpose(renderer.map);
    if (renderer.spec.rendering == Rendering::LinearOrthogonal) {
        mod.enc_map = g;  // G^T x per column convention == X * G on rows
    } else {
        mod.enc_map = mat_transpose(pinv_tall(g));
    }
    mod.dec_map = renderer.map;
    return mod;
}

ClassifierHead fit_classifier(const Tensor& latents, const std::vector<int>& labels,
                              std::size_t epochs, std::uint64_t seed,
                              const ClassifierSchedule& sched) {
    if (latents.rank() != 2 || latents.rows() != labels.size() || labels.empty()) {
        throw ShapeError("fit_classifier: latents " + latents.shape_str() + " vs " +
                         std::to_string(labels.size()) + " labels");
    }
    int max_label = 0;
    for (int l : labels) max_label = std::max(max_label, l);
    const std::size_t classes = static_cast<std::size_t>(max_label) + 1;
    std::vector<std::size_t> counts(classes, 0);
    for (int l : labels) {
        if (l < 0) throw ConfigError("fit_classifier: negative label");
        ++counts[static_cast<std::size_t>(l)];
    }
    std::size_t present = 0;
    for (auto c : counts) present += (c > 0);
    if (present < 2) throw ConfigError("fit_classifier: degenerate labels, need >= 2 classes");

    const std::size_t n = latents.rows(), f = latents.cols();

    // Seeded 80/20 split.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(Rng::derive(seed, 0xC1A5));
    rng.shuffle(order);
    const std::size_t n_train = std::max<std::size_t>(1, (n * 8) / 10);

    auto subset = [&](std::size_t lo, std::size_t hi, Tensor& x, std::vector<int>& y) {
        x = Tensor::zeros({hi - lo, f});
        y.resize(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            const double* src = latents.row_ptr(order[i]);
            std::copy(src, src + f, x.row_ptr(i - lo));
            y[i - lo] = labels[order[i]];
        }
    };
    Tensor x_train, x_test;
    std::vector<int> y_train, y_test;
    subset(0, n_train, x_train, y_train);
    subset(n_train, n, x_test, y_test);

    ClassifierHead head;
    head.classes = classes;
    Rng wrng(Rng::derive(seed, 0xC2));
    head.w = Tensor::zeros({f, classes});
    const double limit = std::sqrt(6.0 / static_cast<double>(f + classes));
    for (auto& v : head.w.data) v = wrng.uniform(-limit, limit);
    head.b = Tensor::zeros({classes});
    head.w.set_requires_grad(true);
    head.b.set_requires_grad(true);

    Optimizer opt({{"w", &head.w}, {"b", &head.b}}, {.algo = "adam", .lr = sched.lr});
    const std::size_t batch = std::max<std::size_t>(1, std::min(sched.batch, x_train.rows()));
    std::vector<std::size_t> idx(x_train.rows());
    std::iota(idx.begin(), idx.end(), 0);
    Rng srng(Rng::derive(seed, 0xC3));

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        srng.shuffle(idx);
        for (std::size_t lo = 0; lo < idx.size(); lo += batch) {
            const std::size_t hi = std::min(lo + batch, idx.size());
            Tensor xb = Tensor::zeros({hi - lo, f});
            std::vector<int> yb(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) {
                const double* src = x_train.row_ptr(idx[i]);
                std::copy(src, src + f, xb.row_ptr(i - lo));
                yb[i - lo] = y_train[idx[i]];
            }
            opt.zero_grad();
            Tape tape;
            auto logits = tape.affine(tape.input(xb), tape.param(head.w), tape.param(head.b));
            tape.backward(tape.softmax_cross_entropy(logits, yb));
            opt.step();
        }
    }

    head.train_accuracy = head.accuracy(x_train, y_train);
    head.heldout_accuracy = y_test.empty() ? head.train_accuracy : head.accuracy(x_test, y_test);
    return head;
}

}  // namespace glw
