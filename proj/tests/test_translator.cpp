#include <cmath>
#include <numeric>

#include "doctest.h"
#include "glw/align.hpp"
#include "glw/linalg.hpp"
#include "glw/modules.hpp"
#include "glw/rng.hpp"
#include "glw/translator.hpp"
#include "glw/world.hpp"

using namespace glw;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    Tensor t = Tensor::zeros({r, c});
    for (auto& v : t.data) v = scale * rng.normal();
    return t;
}

Tensor identity(std::size_t n) {
    Tensor t = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

// Linear translator with an exact pad/truncate construction: encode pads the
// latent into R^D with zeros, decode truncates.
GlwTranslator make_pad_truncate(std::size_t d, const std::vector<std::size_t>& dims) {
    std::vector<GlwTranslator::ModuleDim> mods;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        mods.push_back({"m" + std::to_string(i), dims[i]});
    }
    GlwTranslator t(d, GlwTranslator::Mode::Linear, mods, 0);
    for (std::size_t i = 0; i < dims.size(); ++i) {
        Tensor pad = Tensor::zeros({dims[i], d});
        for (std::size_t a = 0; a < dims[i]; ++a) pad.at(a, a) = 1.0;
        t.encoder_net(i).set_affine(pad, std::vector<double>(d, 0.0));
        Tensor trunc = Tensor::zeros({d, dims[i]});
        for (std::size_t a = 0; a < dims[i]; ++a) trunc.at(a, a) = 1.0;
        t.decoder_net(i).set_affine(trunc, std::vector<double>(dims[i], 0.0));
    }
    return t;
}

std::vector<double> flat_params(GlwTranslator& t) {
    std::vector<double> out;
    for (auto& [name, p] : t.named_params()) {
        out.insert(out.end(), p->data.begin(), p->data.end());
    }
    return out;
}

}  // namespace

TEST_CASE("bottleneck invariant: constructor rejects D >= sum d_i and D < max d_i") {
    std::vector<GlwTranslator::ModuleDim> mods{{"a", 8}, {"b", 6}};
    CHECK_THROWS_AS(GlwTranslator(14, GlwTranslator::Mode::Linear, mods, 0), ConfigError);
    CHECK_THROWS_AS(GlwTranslator(20, GlwTranslator::Mode::Linear, mods, 0), ConfigError);
    CHECK_THROWS_AS(GlwTranslator(7, GlwTranslator::Mode::Linear, mods, 0), ConfigError);
    CHECK_NOTHROW(GlwTranslator(8, GlwTranslator::Mode::Linear, mods, 0));
    CHECK_NOTHROW(GlwTranslator(13, GlwTranslator::Mode::Linear, mods, 0));
}

TEST_CASE("pad/truncate construction: decode(encode(v)) = v, translate is hand-checkable") {
    GlwTranslator t = make_pad_truncate(4, {4, 3});
    const Tensor v = random_matrix(5, 4, 1);
    const Tensor round = t.decode(0, t.encode(0, v));
    CHECK(round.data == v.data);

    // m1 -> m0: pad 3-vector with zero, then identity.
    Tensor v3 = Tensor::matrix(1, 3, {1.0, -2.0, 0.5});
    const Tensor out = t.translate(1, 0, v3);
    CHECK(out.data == std::vector<double>{1.0, -2.0, 0.5, 0.0});

    // z = 0 decodes to something finite.
    const Tensor zero_dec = t.decode(1, Tensor::zeros({1, 4}));
    for (double x : zero_dec.data) CHECK(std::isfinite(x));

    // Unknown module ids are lookup errors.
    CHECK_THROWS_AS(t.module_index("nope"), LookupError);
}

TEST_CASE("encode/decode: batch equals per-row loop to 1e-12") {
    std::vector<GlwTranslator::ModuleDim> mods{{"a", 6}, {"b", 6}};
    GlwTranslator t(6, GlwTranslator::Mode::Tanh, mods, 3);
    const Tensor v = random_matrix(9, 6, 2);
    const Tensor batch = t.encode(0, v);
    for (std::size_t i = 0; i < 9; ++i) {
        Tensor row = Tensor::zeros({1, 6});
        std::copy(v.row_ptr(i), v.row_ptr(i) + 6, row.data.begin());
        const Tensor one = t.encode(0, row);
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(batch.at(i, j) == doctest::Approx(one.at(0, j)).epsilon(1e-12));
        }
    }
}

TEST_CASE("cycle loss: identity maps give 0; equals per-sample loop oracle on random maps") {
    GlwTranslator ident = make_pad_truncate(4, {4, 4});
    const Tensor batch = random_matrix(6, 4, 5);
    CHECK(ident.cycle_loss(0, 1, batch) == doctest::Approx(0.0).epsilon(1e-14));

    // Zero-bias linear maps on a single zero vector also give 0.
    const Tensor zero = Tensor::zeros({1, 4});
    CHECK(ident.cycle_loss(0, 1, zero) == 0.0);

    // Random linear maps, checked against an explicit per-sample computation.
    std::vector<GlwTranslator::ModuleDim> mods{{"a", 3}, {"b", 3}};
    GlwTranslator t(3, GlwTranslator::Mode::Linear, mods, 7);
    const Tensor e0 = random_matrix(3, 3, 11, 0.7), d0 = random_matrix(3, 3, 12, 0.7);
    const Tensor e1 = random_matrix(3, 3, 13, 0.7), d1 = random_matrix(3, 3, 14, 0.7);
    t.encoder_net(0).set_affine(e0, {0.1, -0.2, 0.3});
    t.decoder_net(0).set_affine(d0, {0.0, 0.5, -0.5});
    t.encoder_net(1).set_affine(e1, {-1.0, 0.0, 1.0});
    t.decoder_net(1).set_affine(d1, {0.2, 0.2, 0.2});

    const Tensor b = random_matrix(4, 3, 15);
    auto apply = [](const Tensor& m, const std::vector<double>& c, const double* v,
                    double* out) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            double acc = c[j];
            for (std::size_t a = 0; a < m.rows(); ++a) acc += v[a] * m.at(a, j);
            out[j] = acc;
        }
    };
    double total = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        double z[3], u[3], z2[3], back[3];
        apply(e0, {0.1, -0.2, 0.3}, b.row_ptr(i), z);
        apply(d1, {0.2, 0.2, 0.2}, z, u);
        apply(e1, {-1.0, 0.0, 1.0}, u, z2);
        apply(d0, {0.0, 0.5, -0.5}, z2, back);
        for (std::size_t j = 0; j < 3; ++j) {
            const double diff = back[j] - b.at(i, j);
            total += diff * diff;
        }
    }
    total /= 12.0;  // mean over n * d entries
    CHECK(t.cycle_loss(0, 1, b) == doctest::Approx(total).epsilon(1e-12));

    CHECK_THROWS_AS(t.cycle_loss(0, 1, Tensor::zeros({0, 3})), ShapeError);
}

TEST_CASE("demi-cycle loss equals cycle_loss(i, i, batch)") {
    std::vector<GlwTranslator::ModuleDim> mods{{"a", 5}, {"b", 5}};
    GlwTranslator t(5, GlwTranslator::Mode::Tanh, mods, 9);
    const Tensor b = random_matrix(7, 5, 21);
    CHECK(t.demi_cycle_loss(0, b) == doctest::Approx(t.cycle_loss(0, 0, b)).epsilon(1e-12));
    GlwTranslator ident = make_pad_truncate(5, {5, 5});
    CHECK(ident.demi_cycle_loss(1, b) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("supervised align loss: trivial zero, hand arithmetic, loop oracle") {
    std::vector<GlwTranslator::ModuleDim> mods{{"a", 3}, {"b", 3}};
    GlwTranslator t(3, GlwTranslator::Mode::Linear, mods, 1);
    // e_a constant (2,0,0), e_b constant 0: single pair at shared distance 2.
    t.encoder_net(0).set_affine(Tensor::zeros({3, 3}), {2.0, 0.0, 0.0});
    t.encoder_net(1).set_affine(Tensor::zeros({3, 3}), {0.0, 0.0, 0.0});
    PairSet pair{.module_i = "a", .module_j = "b",
                 .latents_i = random_matrix(1, 3, 2), .latents_j = random_matrix(1, 3, 3)};
    CHECK(t.supervised_align_loss(pair) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

    // Same encoders, same inputs: exactly zero.
    GlwTranslator same = make_pad_truncate(3, {3, 3});
    PairSet eq{.module_i = "m0", .module_j = "m1",
               .latents_i = random_matrix(4, 3, 4), .latents_j = Tensor()};
    eq.latents_j = eq.latents_i;
    CHECK(same.supervised_align_loss(eq) == 0.0);

    // Random case against an explicit loop.
    const Tensor ea = random_matrix(3, 3, 31, 0.5), eb = random_matrix(3, 3, 32, 0.5);
    t.encoder_net(0).set_affine(ea, {0.0, 0.0, 0.0});
    t.encoder_net(1).set_affine(eb, {0.0, 0.0, 0.0});
    PairSet rnd{.module_i = "a", .module_j = "b",
                .latents_i = random_matrix(5, 3, 33), .latents_j = random_matrix(5, 3, 34)};
    double total = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            double zi = 0.0, zj = 0.0;
            for (std::size_t a = 0; a < 3; ++a) {
                zi += rnd.latents_i.at(i, a) * ea.at(a, j);
                zj += rnd.latents_j.at(i, a) * eb.at(a, j);
            }
            total += (zi - zj) * (zi - zj);
        }
    }
    total /= 15.0;
    CHECK(t.supervised_align_loss(rnd) == doctest::Approx(total).epsilon(1e-12));

    PairSet empty{.module_i = "a", .module_j = "b"};
    CHECK_THROWS_AS(t.supervised_align_loss(empty), ShapeError);
}

TEST_CASE("distribution loss: zero on identical batches, 1 on unit mean offset, stats oracle") {
    GlwTranslator t = make_pad_truncate(4, {4, 4});
    const Tensor b = random_matrix(32, 4, 41);
    CHECK(t.distribution_loss({b, b}) == doctest::Approx(0.0).epsilon(1e-14));

    // Shift every sample by a unit vector: covariance identical, mean offset 1.
    Tensor shifted = b;
    for (std::size_t i = 0; i < 32; ++i) shifted.at(i, 0) += 1.0;
    CHECK(t.distribution_loss({b, shifted}) == doctest::Approx(1.0).epsilon(1e-10));

    // Random batches against a direct mean/covariance computation.
    const Tensor b2 = random_matrix(32, 4, 42);
    auto stats = [](const Tensor& x, std::vector<double>& mu, Tensor& cov) {
        const std::size_t n = x.rows(), d = x.cols();
        mu.assign(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) mu[j] += x.at(i, j);
        }
        for (auto& v : mu) v /= static_cast<double>(n);
        cov = Tensor::zeros({d, d});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t a = 0; a < d; ++a) {
                for (std::size_t c = 0; c < d; ++c) {
                    cov.at(a, c) += (x.at(i, a) - mu[a]) * (x.at(i, c) - mu[c]);
                }
            }
        }
        for (auto& v : cov.data) v /= static_cast<double>(n - 1);
    };
    std::vector<double> mu1, mu2;
    Tensor c1, c2;
    stats(b, mu1, c1);
    stats(b2, mu2, c2);
    double expect = 0.0;
    for (std::size_t j = 0; j < 4; ++j) expect += (mu1[j] - mu2[j]) * (mu1[j] - mu2[j]);
    for (std::size_t j = 0; j < c1.size(); ++j) {
        expect += (c1.data[j] - c2.data[j]) * (c1.data[j] - c2.data[j]);
    }
    CHECK(t.distribution_loss({b, b2}) == doctest::Approx(expect).epsilon(1e-10));

    CHECK_THROWS_AS(t.distribution_loss({Tensor::zeros({1, 4}), Tensor::zeros({1, 4})}),
                    NumericsError);
}

TEST_CASE("train with all-zero weights leaves parameters unchanged") {
    std::vector<GlwTranslator::ModuleDim> mods{{"a", 4}, {"b", 4}};
    GlwTranslator t(4, GlwTranslator::Mode::Tanh, mods, 5);
    const auto before = flat_params(t);
    GlwSchedule sched;
    sched.epochs = 3;
    sched.weights = {.cycle = 0.0, .demi = 0.0, .dist = 0.0, .sup = 0.0};
    const auto report = t.train({random_matrix(64, 4, 1), random_matrix(64, 4, 2)}, {}, sched);
    CHECK(flat_params(t) == before);
    CHECK(report.curve.size() == 3);
}

TEST_CASE("training is seeded-retrainable: identical schedule + seed, identical parameters") {
    auto run = [](std::uint64_t seed) {
        std::vector<GlwTranslator::ModuleDim> mods{{"a", 4}, {"b", 4}};
        GlwTranslator t(4, GlwTranslator::Mode::Tanh, mods, seed);
        GlwSchedule sched;
        sched.epochs = 4;
        sched.batch = 32;
        sched.seed = seed;
        t.train({random_matrix(96, 4, 10), random_matrix(96, 4, 11)}, {}, sched);
        return flat_params(t);
    };
    CHECK(run(7) == run(7));
}

TEST_CASE("loss decomposition: reported total equals weighted component sum") {
    std::vector<GlwTranslator::ModuleDim> mods{{"a", 4}, {"b", 4}};
    GlwTranslator t(4, GlwTranslator::Mode::Tanh, mods, 5);
    GlwSchedule sched;
    sched.epochs = 3;
    sched.weights = {.cycle = 1.5, .demi = 0.5, .dist = 2.0, .sup = 1.0};
    PairSet pairs{.module_i = "a", .module_j = "b",
                  .latents_i = random_matrix(8, 4, 3), .latents_j = random_matrix(8, 4, 4)};
    const auto report =
        t.train({random_matrix(64, 4, 1), random_matrix(64, 4, 2)}, {pairs}, sched);
    for (const auto& e : report.curve) {
        const double sum = 1.5 * e.cycle + 0.5 * e.demi + 2.0 * e.dist + 1.0 * e.sup;
        CHECK(std::abs(e.total - sum) < 1e-10);
    }
}

TEST_CASE("supervised regime sanity: abundant exact pairs drive retrieval@1 to ~1") {
    // Two noiseless linear-orthogonal domains with oracle modules: both latent
    // spaces recover z exactly, so supervision plus the demi-cycle term (which
    // uses no pairing information) must align them nearly perfectly.
    const World w = generate_world(77, 8, 6, 800, 4.0);
    DomainSpec sa{.id = "a", .obs_dim = 16, .rendering = Rendering::LinearOrthogonal,
                  .noise_std = 0.0, .gain = 1.0, .seed = 1};
    DomainSpec sb{.id = "b", .obs_dim = 16, .rendering = Rendering::LinearOrthogonal,
                  .noise_std = 0.0, .gain = 1.0, .seed = 2};
    const DomainRenderer ra = make_renderer(w, sa), rb = make_renderer(w, sb);
    const SpecializedModule ma = make_oracle_module(ra), mb = make_oracle_module(rb);
    const Tensor la = ma.encode(ra.render(w.samples, 0.0, 0).obs);
    const Tensor lb = mb.encode(rb.render(w.samples, 0.0, 0).obs);

    // Linear mode is the oracle-comparable configuration; the supervised pull
    // outweighs the demi term so the coupled system cannot stall between them.
    GlwTranslator t(8, GlwTranslator::Mode::Linear, {{"a", 8}, {"b", 8}}, 3);
    t.fit_standardization({la, lb});
    PairSet pairs{.module_i = "a", .module_j = "b", .latents_i = la, .latents_j = lb};
    GlwSchedule sched;
    sched.epochs = 120;
    sched.lr = 1e-2;
    sched.seed = 0;
    sched.weights = {.cycle = 0.0, .demi = 1.0, .dist = 0.0, .sup = 10.0};
    t.train({la, lb}, {pairs}, sched);

    // Held-out gallery of 500 fresh samples.
    const Tensor zh = w.sample_more(500, 123, nullptr);
    const Tensor ga = ma.encode(ra.render(zh, 0.0, 1).obs);
    const Tensor gb = mb.encode(rb.render(zh, 0.0, 1).obs);
    std::vector<std::size_t> truth(500);
    std::iota(truth.begin(), truth.end(), 0);
    const double acc = retrieval_accuracy(t, 0, 1, ga, gb, truth);
    CHECK(acc >= 0.99);

    // Procrustes oracle upper bound on the same data.
    const ProcrustesResult pr = procrustes(la, lb);
    const double oracle_acc = nn_retrieval(mat_mul(ga, pr.w), gb, truth);
    CHECK(oracle_acc == doctest::Approx(1.0));
    CHECK(acc <= oracle_acc + 0.02);
}

TEST_CASE("retrieval: exact translator gives 1.0; constant map lands near 1/m") {
    GlwTranslator ident = make_pad_truncate(4, {4, 4});
    const Tensor gallery = random_matrix(100, 4, 51);
    std::vector<std::size_t> truth(100);
    std::iota(truth.begin(), truth.end(), 0);
    CHECK(retrieval_accuracy(ident, 0, 1, gallery, gallery, truth) == doctest::Approx(1.0));

    // Constant map: every probe hits the same gallery neighbor.
    std::vector<GlwTranslator::ModuleDim> mods{{"a", 4}, {"b", 4}};
    GlwTranslator cst(4, GlwTranslator::Mode::Linear, mods, 0);
    cst.encoder_net(0).set_affine(Tensor::zeros({4, 4}), {0.3, 0.3, 0.3, 0.3});
    cst.decoder_net(1).set_affine(identity(4), {0.0, 0.0, 0.0, 0.0});
    double acc_sum = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        Tensor g = random_matrix(100, 4, 60 + s);
        Tensor probes = random_matrix(100, 4, 70 + s);
        acc_sum += retrieval_accuracy(cst, 0, 1, probes, g, truth);
    }
    CHECK(acc_sum / 5.0 <= 0.01 + 0.05);

    CHECK_THROWS_AS(nn_retrieval(gallery, Tensor::zeros({0, 4}), truth), EvalError);
}

TEST_CASE("geometric init aligns two affine views of the same clustered world") {
    const World w = generate_world(5, 6, 6, 900, 4.0);
    // Two private latent spaces: independent invertible affine views of z.
    const Tensor a1 = random_matrix(6, 6, 101, 0.6);
    const Tensor a2 = random_matrix(6, 6, 102, 0.6);
    Tensor l1 = mat_mul(w.samples, a1);
    Tensor l2 = mat_mul(w.samples, a2);
    for (std::size_t i = 0; i < l1.rows(); ++i) {
        l1.at(i, 0) += 3.0;  // offset so biases matter
        l2.at(i, 2) -= 1.5;
    }

    GlwTranslator t(6, GlwTranslator::Mode::Linear, {{"a", 6}, {"b", 6}}, 9);
    t.geometric_init({l1, l2}, w.n_clusters(), 17);

    std::vector<std::size_t> truth(300);
    std::iota(truth.begin(), truth.end(), 0);
    Tensor probes = Tensor::zeros({300, 6});
    Tensor gallery = Tensor::zeros({300, 6});
    for (std::size_t i = 0; i < 300; ++i) {
        std::copy(l1.row_ptr(i), l1.row_ptr(i) + 6, probes.row_ptr(i));
        std::copy(l2.row_ptr(i), l2.row_ptr(i) + 6, gallery.row_ptr(i));
    }
    const double acc = retrieval_accuracy(t, 0, 1, probes, gallery, truth);
    CHECK(acc >= 0.95);
    // Demi-cycle must also be near-exact by construction.
    CHECK(t.demi_cycle_loss(0, probes) < 1e-10);
}

TEST_CASE("checkpoint: round trip reproduces the forward pass bit-exactly") {
    std::vector<GlwTranslator::ModuleDim> mods{{"alpha", 5}, {"beta", 4}};
    GlwTranslator t(5, GlwTranslator::Mode::Tanh, mods, 99);
    t.set_schedule_digest("abc123");
    const Json ck = t.to_checkpoint();

    // Serialize to text and back: 17 significant digits recover each double.
    const Json parsed = Json::parse(dump_json(ck));
    GlwTranslator t2 = GlwTranslator::from_checkpoint(parsed);
    const Tensor v = random_matrix(7, 5, 5);
    const Tensor y1 = t.translate(0, 1, v);
    const Tensor y2 = t2.translate(0, 1, v);
    CHECK(y1.data == y2.data);
    CHECK(t2.schedule_digest() == "abc123");

    Json bad = parsed;
    bad["format_version"] = 2;
    CHECK_THROWS_AS(GlwTranslator::from_checkpoint(bad), ConfigError);

    Json bad_dim = parsed;
    bad_dim["modules"][0]["enc"]["w1"].push_back(0.5);
    CHECK_THROWS_WITH_AS(GlwTranslator::from_checkpoint(bad_dim),
                         doctest::Contains("modules[0].enc.w1"), ConfigError);
}
