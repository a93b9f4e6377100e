#include "glw/translator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "glw/align.hpp"
#include "glw/common.hpp"
#include "glw/kernels.hpp"
#include "glw/linalg.hpp"
#include "glw/optim.hpp"
#include "glw/rng.hpp"

namespace glw {

GlwTranslator::Mode glw_mode_from_string(const std::string& s) {
    if (s == "linear") return GlwTranslator::Mode::Linear;
    if (s == "tanh") return GlwTranslator::Mode::Tanh;
    throw ConfigError("unknown translator mode: " + s);
}

const char* to_string(GlwTranslator::Mode m) {
    return m == GlwTranslator::Mode::Linear ? "linear" : "tanh";
}

GlwTranslator::GlwTranslator(std::size_t workspace_dim, Mode mode,
                             std::vector<ModuleDim> modules, std::uint64_t seed)
    : d_(workspace_dim), mode_(mode), seed_(seed) {
    if (modules.size() < 2) throw ConfigError("GlwTranslator needs >= 2 modules");
    std::size_t max_dim = 0, sum_dim = 0;
    for (const auto& m : modules) {
        max_dim = std::max(max_dim, m.dim);
        sum_dim += m.dim;
    }
    if (d_ < max_dim || d_ >= sum_dim) {
        throw ConfigError("workspace dimension D=" + std::to_string(d_) +
                          " violates the bottleneck max_i d_i <= D < sum_i d_i (max=" +
                          std::to_string(max_dim) + ", sum=" + std::to_string(sum_dim) + ")");
    }
    const std::size_t hidden = mode_ == Mode::Linear ? 0 : 2 * d_;
    for (std::size_t i = 0; i < modules.size(); ++i) {
        Mod m;
        m.id = modules[i].id;
        m.dim = modules[i].dim;
        m.enc = Mlp::make(m.dim, hidden, d_, Nonlinearity::Tanh, Rng::derive(seed, 2 * i));
        m.dec = Mlp::make(d_, hidden, m.dim, Nonlinearity::Tanh, Rng::derive(seed, 2 * i + 1));
        for (Tensor* p : m.enc.param_tensors()) p->set_requires_grad(true);
        for (Tensor* p : m.dec.param_tensors()) p->set_requires_grad(true);
        m.in_mean = Tensor::zeros({m.dim});
        m.in_whiten = Tensor::zeros({m.dim, m.dim});
        m.in_unwhiten = Tensor::zeros({m.dim, m.dim});
        for (std::size_t a = 0; a < m.dim; ++a) {
            m.in_whiten.at(a, a) = 1.0;
            m.in_unwhiten.at(a, a) = 1.0;
        }
        for (std::size_t p = 0; p < i; ++p) {
            if (mods_[p].id == m.id) throw ConfigError("duplicate module id: " + m.id);
        }
        mods_.push_back(std::move(m));
    }
}

std::size_t GlwTranslator::module_index(const std::string& id) const {
    for (std::size_t i = 0; i < mods_.size(); ++i) {
        if (mods_[i].id == id) return i;
    }
    throw LookupError("unknown module id: " + id);
}

Tensor GlwTranslator::whiten(std::size_t i, const Tensor& v) const {
    const Mod& m = mods_.at(i);
    Tensor centered = v;
    for (std::size_t r = 0; r < v.rows(); ++r) {
        kern::active().sub(centered.row_ptr(r), v.row_ptr(r), m.in_mean.data.data(), m.dim);
    }
    return mat_mul(centered, m.in_whiten);
}

Tensor GlwTranslator::unwhiten(std::size_t i, const Tensor& y) const {
    const Mod& m = mods_.at(i);
    Tensor out = mat_mul(y, m.in_unwhiten);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        kern::active().add(out.row_ptr(r), out.row_ptr(r), m.in_mean.data.data(), m.dim);
    }
    return out;
}

Tensor GlwTranslator::encode(std::size_t i, const Tensor& v) const {
    const Mod& m = mods_.at(i);
    if (v.rank() != 2 || v.cols() != m.dim) {
        throw ShapeError("encode(" + m.id + "): got " + v.shape_str() + ", want [n x " +
                         std::to_string(m.dim) + "]");
    }
    return m.enc.forward(whiten(i, v));
}

Tensor GlwTranslator::decode(std::size_t i, const Tensor& z) const {
    const Mod& m = mods_.at(i);
    if (z.rank() != 2 || z.cols() != d_) {
        throw ShapeError("decode(" + m.id + "): got " + z.shape_str() + ", want [n x " +
                         std::to_string(d_) + "]");
    }
    return unwhiten(i, m.dec.forward(z));
}

void GlwTranslator::fit_standardization(const std::vector<Tensor>& latents) {
    if (latents.size() != mods_.size()) {
        throw ConfigError("fit_standardization: need one latent matrix per module");
    }
    for (std::size_t i = 0; i < mods_.size(); ++i) {
        Mod& m = mods_[i];
        const Tensor& x = latents[i];
        if (x.rank() != 2 || x.rows() < 2 || x.cols() != m.dim) {
            throw ShapeError("fit_standardization: latents for '" + m.id + "' have shape " +
                             x.shape_str());
        }
        const Whitening w = fit_whitening(x);
        m.in_mean = w.mean;
        m.in_whiten = w.forward;
        m.in_unwhiten = w.inverse;
    }
}

Tensor GlwTranslator::translate(std::size_t i, std::size_t j, const Tensor& v) const {
    return decode(j, encode(i, v));
}

double GlwTranslator::cycle_loss(std::size_t i, std::size_t j, const Tensor& batch) const {
    if (batch.rank() != 2 || batch.rows() == 0) {
        throw ShapeError("cycle_loss: empty batch");
    }
    if (i == j) return demi_cycle_loss(i, batch);
    const Tensor there = translate(i, j, batch);
    const Tensor back = translate(j, i, there);
    return kern::sq_diff_sum_seq(back.data.data(), batch.data.data(), batch.size()) /
           static_cast<double>(batch.size());
}

double GlwTranslator::demi_cycle_loss(std::size_t i, const Tensor& batch) const {
    if (batch.rank() != 2 || batch.rows() == 0) {
        throw ShapeError("demi_cycle_loss: empty batch");
    }
    const Tensor round = decode(i, encode(i, batch));
    return kern::sq_diff_sum_seq(round.data.data(), batch.data.data(), batch.size()) /
           static_cast<double>(batch.size());
}

double GlwTranslator::supervised_align_loss(const PairSet& pairs) const {
    if (pairs.size() == 0) throw ShapeError("supervised_align_loss: empty pair set");
    const Tensor zi = encode(module_index(pairs.module_i), pairs.latents_i);
    const Tensor zj = encode(module_index(pairs.module_j), pairs.latents_j);
    return kern::sq_diff_sum_seq(zi.data.data(), zj.data.data(), zi.size()) /
           static_cast<double>(zi.size());
}

namespace {

// Mean and covariance (n-1 denominator) of an encoded batch.
void batch_stats(const Tensor& z, Tensor& mean, Tensor& cov) {
    const std::size_t n = z.rows(), d = z.cols();
    if (n < 2) throw NumericsError("distribution_loss: covariance undefined for batch of " +
                                   std::to_string(n));
    mean = Tensor::zeros({d});
    for (std::size_t i = 0; i < n; ++i) {
        kern::active().add(mean.data.data(), mean.data.data(), z.row_ptr(i), d);
    }
    for (auto& v : mean.data) v /= static_cast<double>(n);
    Tensor centered = z;
    for (std::size_t i = 0; i < n; ++i) {
        kern::active().sub(centered.row_ptr(i), z.row_ptr(i), mean.data.data(), d);
    }
    cov = Tensor::zeros({d, d});
    kern::active().mm_ta_acc(cov.data.data(), centered.data.data(), centered.data.data(),
                             n, d, d);
    for (auto& v : cov.data) v /= static_cast<double>(n - 1);
}

}  // namespace

double GlwTranslator::distribution_loss(const std::vector<Tensor>& batches) const {
    if (batches.size() != mods_.size()) {
        throw ShapeError("distribution_loss: " + std::to_string(batches.size()) +
                         " batches for " + std::to_string(mods_.size()) + " modules");
    }
    std::vector<Tensor> means(mods_.size()), covs(mods_.size());
    for (std::size_t i = 0; i < mods_.size(); ++i) {
        const Tensor z = encode(i, batches[i]);
        batch_stats(z, means[i], covs[i]);
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < mods_.size(); ++i) {
        for (std::size_t j = i + 1; j < mods_.size(); ++j) {
            loss += kern::sq_diff_sum_seq(means[i].data.data(), means[j].data.data(),
                                          means[i].size());
            loss += kern::sq_diff_sum_seq(covs[i].data.data(), covs[j].data.data(),
                                          covs[i].size());
        }
    }
    return loss;
}

Tape::Var GlwTranslator::enc_net_taped(Tape& tape, std::size_t i, Tape::Var whitened) {
    return mods_.at(i).enc.forward(tape, whitened);
}

Tape::Var GlwTranslator::dec_net_taped(Tape& tape, std::size_t i, Tape::Var z) {
    return mods_.at(i).dec.forward(tape, z);
}

std::vector<std::pair<std::string, Tensor*>> GlwTranslator::named_params() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (auto& m : mods_) {
        for (auto& pr : m.enc.named_params(m.id + ".enc")) out.push_back(pr);
        for (auto& pr : m.dec.named_params(m.id + ".dec")) out.push_back(pr);
    }
    return out;
}

GlwTrainingReport GlwTranslator::train(const std::vector<Tensor>& latents,
                                       const std::vector<PairSet>& pairs,
                                       const GlwSchedule& schedule) {
    if (latents.size() != mods_.size()) {
        throw ConfigError("train: need one latent matrix per module");
    }
    for (std::size_t i = 0; i < mods_.size(); ++i) {
        if (latents[i].rank() != 2 || latents[i].cols() != mods_[i].dim) {
            throw ShapeError("train: latents for '" + mods_[i].id + "' have shape " +
                             latents[i].shape_str());
        }
    }
    const LossWeights& w = schedule.weights;
    Optimizer opt(named_params(), {.algo = "adam", .lr = schedule.lr});

    // Precompute pair module indices (also validates ids) and the whitened
    // views used by the training tape.
    struct PairRef {
        std::size_t i, j;
        const PairSet* set;
        Tensor white_i, white_j;
    };
    std::vector<PairRef> pair_refs;
    for (const auto& p : pairs) {
        if (p.size() == 0) continue;
        PairRef r{module_index(p.module_i), module_index(p.module_j), &p, {}, {}};
        r.white_i = whiten(r.i, p.latents_i);
        r.white_j = whiten(r.j, p.latents_j);
        pair_refs.push_back(std::move(r));
    }
    std::vector<Tensor> white_latents(mods_.size());
    for (std::size_t i = 0; i < mods_.size(); ++i) white_latents[i] = whiten(i, latents[i]);

    // Independent per-module shuffles: cycle/demi/dist batches are unpaired.
    std::vector<std::vector<std::size_t>> order(mods_.size());
    std::vector<Rng> shuffle_rngs;
    for (std::size_t i = 0; i < mods_.size(); ++i) {
        order[i].resize(latents[i].rows());
        std::iota(order[i].begin(), order[i].end(), 0);
        shuffle_rngs.emplace_back(Rng::derive(schedule.seed, 0x7000 + i));
    }

    auto eval_components = [&]() {
        EpochLosses e;
        for (std::size_t i = 0; i < mods_.size(); ++i) {
            for (std::size_t j = 0; j < mods_.size(); ++j) {
                if (i != j) e.cycle += cycle_loss(i, j, latents[i]);
            }
            e.demi += demi_cycle_loss(i, latents[i]);
        }
        e.dist = distribution_loss(latents);
        for (const auto& pr : pair_refs) e.sup += supervised_align_loss(*pr.set);
        e.total = w.cycle * e.cycle + w.demi * e.demi + w.dist * e.dist + w.sup * e.sup;
        return e;
    };

    auto snapshot_params = [&]() {
        std::vector<Tensor> snap;
        for (auto& [name, t] : opt.params()) snap.push_back(*t);
        return snap;
    };
    auto restore_params = [&](const std::vector<Tensor>& snap) {
        std::size_t i = 0;
        for (auto& [name, t] : opt.params()) *t = snap[i++];
    };

    GlwTrainingReport report;
    std::vector<Tensor> last_good = snapshot_params();
    const std::size_t n_rows = latents.empty() ? 0 : latents[0].rows();
    const std::size_t batch = std::max<std::size_t>(2, std::min(schedule.batch, n_rows));

    for (std::size_t epoch = 0; epoch < schedule.epochs; ++epoch) {
        try {
            for (auto i = 0u; i < mods_.size(); ++i) shuffle_rngs[i].shuffle(order[i]);
            for (std::size_t lo = 0; lo < n_rows; lo += batch) {
                const std::size_t hi = std::min(lo + batch, n_rows);
                Tape tape;
                // Per-module whitened batch inputs and shared-space encodings.
                // Cycle and demi terms are optimized in whitened coordinates:
                // the whitening wrappers cancel inside the chains, and the
                // fixed invertible metric change keeps the same minimizers
                // while conditioning the problem for Adam.
                std::vector<Tape::Var> vb(mods_.size()), zb(mods_.size());
                for (std::size_t i = 0; i < mods_.size(); ++i) {
                    Tensor b = Tensor::zeros({hi - lo, mods_[i].dim});
                    for (std::size_t r = lo; r < hi; ++r) {
                        const double* src = white_latents[i].row_ptr(order[i][r]);
                        std::copy(src, src + mods_[i].dim, b.row_ptr(r - lo));
                    }
                    vb[i] = tape.input(b);
                    zb[i] = enc_net_taped(tape, i, vb[i]);
                }

                bool have_loss = false;
                Tape::Var total;
                auto accumulate = [&](Tape::Var term, double weight) {
                    if (weight == 0.0) return;
                    Tape::Var scaled = tape.scale(term, weight);
                    total = have_loss ? tape.add(total, scaled) : scaled;
                    have_loss = true;
                };

                for (std::size_t i = 0; i < mods_.size(); ++i) {
                    // Demi-cycle: latent -> shared -> latent.
                    accumulate(tape.mse(dec_net_taped(tape, i, zb[i]), vb[i]), w.demi);
                    // Cycles through every other module.
                    for (std::size_t j = 0; j < mods_.size(); ++j) {
                        if (i == j) continue;
                        Tape::Var there = dec_net_taped(tape, j, zb[i]);
                        Tape::Var back = dec_net_taped(tape, i, enc_net_taped(tape, j, there));
                        accumulate(tape.mse(back, vb[i]), w.cycle);
                    }
                }

                if (w.dist != 0.0 && hi - lo >= 2) {
                    std::vector<Tape::Var> mu(mods_.size()), cov(mods_.size());
                    for (std::size_t i = 0; i < mods_.size(); ++i) {
                        mu[i] = tape.row_mean(zb[i]);
                        Tape::Var centered = tape.sub_rowvec(zb[i], mu[i]);
                        cov[i] = tape.scale(tape.matmul_ta(centered, centered),
                                            1.0 / static_cast<double>(hi - lo - 1));
                    }
                    for (std::size_t i = 0; i < mods_.size(); ++i) {
                        for (std::size_t j = i + 1; j < mods_.size(); ++j) {
                            accumulate(tape.sum_squares(tape.sub(mu[i], mu[j])), w.dist);
                            accumulate(tape.sum_squares(tape.sub(cov[i], cov[j])), w.dist);
                        }
                    }
                }

                if (w.sup != 0.0) {
                    for (const auto& pr : pair_refs) {
                        Tape::Var zi = enc_net_taped(tape, pr.i, tape.input(pr.white_i));
                        Tape::Var zj = enc_net_taped(tape, pr.j, tape.input(pr.white_j));
                        accumulate(tape.mse(zi, zj), w.sup);
                    }
                }

                if (!have_loss) continue;
                opt.zero_grad();
                tape.backward(total);
                opt.step();
            }
        } catch (const NumericsError& e) {
            restore_params(last_good);
            throw TrainingError("train_glw aborted at epoch " + std::to_string(epoch) + " (" +
                                e.what() + "); last good checkpoint restored");
        }
        report.curve.push_back(eval_components());
        last_good = snapshot_params();
    }
    return report;
}

void GlwTranslator::geometric_init(const std::vector<Tensor>& latents,
                                   std::size_t n_clusters, std::uint64_t seed) {
    if (latents.size() != mods_.size()) {
        throw ConfigError("geometric_init: need one latent matrix per module");
    }
    // Whitening wrappers absorb mean and covariance; what remains to find is
    // one orthogonal map per module aligning its whitened cloud to module 0's.
    fit_standardization(latents);
    std::vector<Tensor> clouds(mods_.size());
    for (std::size_t i = 0; i < mods_.size(); ++i) clouds[i] = whiten(i, latents[i]);

    for (std::size_t i = 0; i < mods_.size(); ++i) {
        const std::size_t dim = mods_[i].dim;
        Tensor rot;
        if (i == 0) {
            rot = Tensor::zeros({dim, dim});
            for (std::size_t a = 0; a < dim; ++a) rot.at(a, a) = 1.0;
        } else {
            if (mods_[i].dim != mods_[0].dim) {
                throw ConfigError("geometric_init currently requires equal module dims");
            }
            rot = align_whitened_clouds(clouds[i], clouds[0], n_clusters,
                                        Rng::derive(seed, 0x6A + i));
        }
        // Nets live in whitened coordinates: encoder is the rotation padded
        // into R^D, decoder its transpose truncated back.
        Tensor enc_a = Tensor::zeros({dim, d_});
        Tensor dec_a = Tensor::zeros({d_, dim});
        for (std::size_t a = 0; a < dim; ++a) {
            for (std::size_t b = 0; b < dim; ++b) {
                enc_a.at(a, b) = rot.at(a, b);
                dec_a.at(b, a) = rot.at(a, b);  // transpose
            }
        }
        mods_[i].enc.set_affine(enc_a, std::vector<double>(d_, 0.0));
        mods_[i].dec.set_affine(dec_a, std::vector<double>(dim, 0.0));
    }
}

Json GlwTranslator::to_checkpoint() const {
    Json j;
    j["format_version"] = 1;
    j["D"] = d_;
    j["mode"] = to_string(mode_);
    j["seed"] = seed_;
    j["schedule_digest"] = schedule_digest_;
    Json mods = Json::array();
    for (const auto& m : mods_) {
        Json jm;
        jm["id"] = m.id;
        jm["dim"] = m.dim;
        jm["in_mean"] = m.in_mean.data;
        jm["in_whiten"] = m.in_whiten.data;
        jm["in_unwhiten"] = m.in_unwhiten.data;
        auto dump_net = [](const Mlp& net) {
            Json jn;
            jn["in"] = net.in;
            jn["hidden"] = net.hidden;
            jn["out"] = net.out;
            jn["w1"] = net.w1.data;
            jn["b1"] = net.b1.data;
            if (!net.linear()) {
                jn["w2"] = net.w2.data;
                jn["b2"] = net.b2.data;
            }
            return jn;
        };
        jm["enc"] = dump_net(m.enc);
        jm["dec"] = dump_net(m.dec);
        mods.push_back(std::move(jm));
    }
    j["modules"] = std::move(mods);
    return j;
}

namespace {

std::vector<double> load_array(const Json& j, const std::string& path, std::size_t expect) {
    if (!j.is_array()) throw ConfigError("checkpoint field " + path + " must be an array");
    std::vector<double> v;
    v.reserve(j.size());
    for (const auto& e : j) v.push_back(e.get<double>());
    if (v.size() != expect) {
        throw ConfigError("checkpoint field " + path + " has " + std::to_string(v.size()) +
                          " values, expected " + std::to_string(expect));
    }
    return v;
}

void load_net(const Json& jn, const std::string& path, Mlp& net) {
    const std::size_t in = jn.at("in").get<std::size_t>();
    const std::size_t hidden = jn.at("hidden").get<std::size_t>();
    const std::size_t out = jn.at("out").get<std::size_t>();
    if (in != net.in || hidden != net.hidden || out != net.out) {
        throw ConfigError("checkpoint field " + path + " dims (" + std::to_string(in) + "," +
                          std::to_string(hidden) + "," + std::to_string(out) +
                          ") inconsistent with declared module dims");
    }
    if (net.linear()) {
        net.w1.data = load_array(jn.at("w1"), path + ".w1", in * out);
        net.b1.data = load_array(jn.at("b1"), path + ".b1", out);
    } else {
        net.w1.data = load_array(jn.at("w1"), path + ".w1", in * hidden);
        net.b1.data = load_array(jn.at("b1"), path + ".b1", hidden);
        net.w2.data = load_array(jn.at("w2"), path + ".w2", hidden * out);
        net.b2.data = load_array(jn.at("b2"), path + ".b2", out);
    }
    for (Tensor* t : net.param_tensors()) t->set_requires_grad(true);
}

}  // namespace

GlwTranslator GlwTranslator::from_checkpoint(const Json& j) {
    const int version = j.at("format_version").get<int>();
    if (version != 1) {
        throw ConfigError("unknown checkpoint format_version: " + std::to_string(version));
    }
    const std::size_t d = j.at("D").get<std::size_t>();
    const Mode mode = glw_mode_from_string(j.at("mode").get<std::string>());
    const auto& jmods = j.at("modules");
    std::vector<ModuleDim> dims;
    for (const auto& jm : jmods) {
        dims.push_back({jm.at("id").get<std::string>(), jm.at("dim").get<std::size_t>()});
    }
    GlwTranslator t(d, mode, dims, j.at("seed").get<std::uint64_t>());
    t.schedule_digest_ = j.value("schedule_digest", std::string());
    for (std::size_t i = 0; i < t.mods_.size(); ++i) {
        const std::string path = "modules[" + std::to_string(i) + "]";
        const std::size_t dim = t.mods_[i].dim;
        t.mods_[i].in_mean.data = load_array(jmods.at(i).at("in_mean"), path + ".in_mean", dim);
        t.mods_[i].in_whiten.data =
            load_array(jmods.at(i).at("in_whiten"), path + ".in_whiten", dim * dim);
        t.mods_[i].in_unwhiten.data =
            load_array(jmods.at(i).at("in_unwhiten"), path + ".in_unwhiten", dim * dim);
        load_net(jmods.at(i).at("enc"), path + ".enc", t.mods_[i].enc);
        load_net(jmods.at(i).at("dec"), path + ".dec", t.mods_[i].dec);
    }
    return t;
}

double nn_retrieval(const Tensor& translated, const Tensor& gallery,
                    const std::vector<std::size_t>& true_index, RetrievalMetric metric) {
    if (gallery.rank() != 2 || gallery.rows() == 0) throw EvalError("empty retrieval gallery");
    if (translated.rows() != true_index.size()) {
        throw ShapeError("nn_retrieval: probes vs true_index size mismatch");
    }
    const std::size_t n = translated.rows(), m = gallery.rows(), d = gallery.cols();
    std::vector<std::size_t> nearest(n);

    auto scan = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const double* pp = translated.row_ptr(p);
            double best = std::numeric_limits<double>::max();
            std::size_t arg = 0;
            for (std::size_t g = 0; g < m; ++g) {
                const double* gg = gallery.row_ptr(g);
                double score;
                if (metric == RetrievalMetric::Euclidean) {
                    score = kern::sq_diff_sum_seq(pp, gg, d);
                } else {
                    double dot = 0.0, np = 0.0, ng = 0.0;
                    for (std::size_t a = 0; a < d; ++a) {
                        dot += pp[a] * gg[a];
                        np += pp[a] * pp[a];
                        ng += gg[a] * gg[a];
                    }
                    score = 1.0 - dot / std::max(std::sqrt(np * ng), 1e-300);
                }
                if (score < best) {  // strict: ties keep the lower index
                    best = score;
                    arg = g;
                }
            }
            nearest[p] = arg;
        }
    };

    const std::size_t workers = std::min(worker_threads(), n ? n : 1);
    if (workers <= 1) {
        scan(0, n);
    } else {
        // Each probe writes its own slot; the final count below runs in fixed
        // order, so the result is identical to the sequential scan.
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
            if (lo < hi) pool.emplace_back(scan, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    std::size_t hits = 0;
    for (std::size_t p = 0; p < n; ++p) hits += (nearest[p] == true_index[p]);
    return n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
}

double retrieval_accuracy(const GlwTranslator& t, std::size_t i, std::size_t j,
                          const Tensor& probes_i, const Tensor& gallery_j,
                          const std::vector<std::size_t>& true_index, RetrievalMetric metric) {
    return nn_retrieval(t.translate(i, j, probes_i), gallery_j, true_index, metric);
}

}  // namespace glw
