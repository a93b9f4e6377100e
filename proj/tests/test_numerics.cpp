#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "glw/nn.hpp"
#include "glw/optim.hpp"
#include "glw/rng.hpp"
#include "glw/tensor.hpp"

using namespace glw;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Tensor t = Tensor::zeros({r, c});
    for (auto& v : t.data) v = rng.normal();
    return t;
}

// Central finite differences over every entry of every parameter tensor.
// Fully independent of the tape's backward pass.
double max_rel_grad_error(std::vector<Tensor*> params,
                          const std::function<double()>& eval_loss,
                          double h = 1e-5) {
    // Analytic gradients first.
    double max_err = 0.0;
    for (Tensor* p : params) {
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double keep = p->data[i];
            p->data[i] = keep + h;
            const double up = eval_loss();
            p->data[i] = keep - h;
            const double dn = eval_loss();
            p->data[i] = keep;
            const double fd = (up - dn) / (2.0 * h);
            const double an = p->grad[i];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-3});
            max_err = std::max(max_err, std::abs(fd - an) / denom);
        }
    }
    return max_err;
}

}  // namespace

TEST_CASE("affine identity and hand-checked cases") {
    Tape tape;
    auto x = tape.input(Tensor::matrix(1, 2, {1, 2}));
    auto w = tape.input(Tensor::matrix(2, 2, {1, 0, 0, 1}));
    auto b = tape.input(Tensor::vec({0, 0}));
    auto y = tape.affine(x, w, b);
    CHECK(tape.value(y).data == std::vector<double>{1, 2});

    auto x2 = tape.input(Tensor::matrix(1, 2, {1, 1}));
    auto w2 = tape.input(Tensor::matrix(2, 1, {1, 1}));
    auto b2 = tape.input(Tensor::vec({1}));
    auto y2 = tape.affine(x2, w2, b2);
    CHECK(tape.value(y2).data[0] == doctest::Approx(3.0));
}

TEST_CASE("affine matches naive triple-loop matmul oracle on random 3x4 * 4x2") {
    Rng rng(3);
    const Tensor xm = random_matrix(3, 4, rng);
    const Tensor wm = random_matrix(4, 2, rng);
    const Tensor bm = Tensor::vec({0.3, -0.7});
    Tape tape;
    auto y = tape.affine(tape.input(xm), tape.input(wm), tape.input(bm));
    const Tensor& yv = tape.value(y);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            double acc = bm.data[j];
            for (std::size_t p = 0; p < 4; ++p) acc += xm.at(i, p) * wm.at(p, j);
            CHECK(yv.at(i, j) == doctest::Approx(acc).epsilon(1e-12));
        }
    }
}

TEST_CASE("affine rejects mismatched shapes with both shapes reported") {
    Tape tape;
    auto x = tape.input(Tensor::matrix(1, 3, {1, 2, 3}));
    auto w = tape.input(Tensor::matrix(2, 2, {1, 0, 0, 1}));
    auto b = tape.input(Tensor::vec({0, 0}));
    CHECK_THROWS_WITH_AS(tape.affine(x, w, b), doctest::Contains("[1x3]"), ShapeError);
}

TEST_CASE("nonlinear basics") {
    Tape tape;
    auto x = tape.input(Tensor::vec({0.0, -3.0}));
    CHECK(tape.value(tape.nonlinear(x, Nonlinearity::Tanh)).data[0] == 0.0);
    CHECK(tape.value(tape.nonlinear(x, Nonlinearity::Logistic)).data[0] == 0.5);
    CHECK(tape.value(tape.nonlinear(x, Nonlinearity::Relu)).data[1] == 0.0);
    CHECK_THROWS_AS(nonlinearity_from_string("swish"), ConfigError);
}

TEST_CASE("mse trivial and loop-oracle cases") {
    Tape tape;
    auto a = tape.input(Tensor::matrix(1, 1, {1}));
    auto b = tape.input(Tensor::matrix(1, 1, {3}));
    CHECK(tape.value(tape.mse(a, a)).data[0] == 0.0);
    CHECK(tape.value(tape.mse(a, b)).data[0] == doctest::Approx(4.0));

    Rng rng(5);
    const Tensor p = random_matrix(5, 3, rng);
    const Tensor t = random_matrix(5, 3, rng);
    auto loss = tape.mse(tape.input(p), tape.input(t));
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p.data[i] - t.data[i];
        acc += d * d;
    }
    acc /= static_cast<double>(p.size());
    CHECK(tape.value(loss).data[0] == doctest::Approx(acc).epsilon(1e-12));

    auto e1 = tape.input(Tensor::zeros({0, 3}));
    CHECK_THROWS_AS(tape.mse(e1, e1), ShapeError);
}

TEST_CASE("backward analytic cases: sum of squares and unused leaf") {
    Tensor x = Tensor::vec({1, 2, 3});
    x.set_requires_grad(true);
    Tensor unused = Tensor::vec({5, 5});
    unused.set_requires_grad(true);
    Tape tape;
    auto xv = tape.param(x);
    tape.param(unused);
    auto loss = tape.sum(tape.hadamard(xv, xv));
    tape.backward(loss);
    CHECK(x.grad == std::vector<double>{2, 4, 6});
    CHECK(unused.grad == std::vector<double>{0, 0});

    // Repeated backward accumulates.
    tape.backward(loss);
    CHECK(x.grad == std::vector<double>{4, 8, 12});

    // Non-scalar root is a contract error.
    CHECK_THROWS_AS(tape.backward(xv), GlwError);
}

TEST_CASE("two-layer tanh net gradients match central finite differences < 1e-4") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        Mlp net = Mlp::make(4, 6, 3, Nonlinearity::Tanh, seed + 100);
        for (Tensor* p : net.param_tensors()) p->set_requires_grad(true);
        const Tensor x = random_matrix(8, 4, rng);
        const Tensor target = random_matrix(8, 3, rng);

        const auto eval_loss = [&]() {
            Tape t;
            return t.value(t.mse(net.forward(t, t.input(x)), t.input(target))).data[0];
        };

        for (Tensor* p : net.param_tensors()) p->zero_grad();
        Tape tape;
        auto loss = tape.mse(net.forward(tape, tape.input(x)), tape.input(target));
        tape.backward(loss);

        const double err = max_rel_grad_error(net.param_tensors(), eval_loss);
        CAPTURE(seed);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("backward is linear: grad(a*L1 + b*L2) = a*grad(L1) + b*grad(L2)") {
    Rng rng(17);
    const Tensor x = random_matrix(6, 4, rng);
    const Tensor t1 = random_matrix(6, 4, rng);
    const Tensor t2 = random_matrix(6, 4, rng);
    const double a = 0.7, b = -2.3;

    Tensor w = random_matrix(4, 4, rng);
    w.set_requires_grad(true);

    auto grad_of = [&](bool combined, bool first) {
        w.zero_grad();
        Tape tape;
        auto wv = tape.param(w);
        auto bias = tape.input(Tensor::zeros({4}));
        auto pred = tape.nonlinear(tape.affine(tape.input(x), wv, bias), Nonlinearity::Tanh);
        auto l1 = tape.mse(pred, tape.input(t1));
        auto l2 = tape.mse(pred, tape.input(t2));
        if (combined) {
            tape.backward(tape.add_scaled(l1, a, l2, b));
        } else {
            tape.backward(first ? l1 : l2);
        }
        return w.grad;
    };

    const auto g1 = grad_of(false, true);
    const auto g2 = grad_of(false, false);
    const auto gc = grad_of(true, true);
    for (std::size_t i = 0; i < gc.size(); ++i) {
        CHECK(gc[i] == doctest::Approx(a * g1[i] + b * g2[i]).epsilon(1e-10));
    }
}

TEST_CASE("sgd basics: zero grad is a no-op, lr=0.1 moves p=1 g=2 to 0.8") {
    Tensor p = Tensor::vec({1.0});
    p.set_requires_grad(true);
    Optimizer opt({{"p", &p}}, {.algo = "sgd", .lr = 0.1});
    opt.step();  // grad currently zero
    CHECK(p.data[0] == 1.0);
    p.grad = {2.0};
    opt.step();
    CHECK(p.data[0] == doctest::Approx(0.8));
}

TEST_CASE("adam steps match the scalar recurrence oracle to 1e-12") {
    const double lr = 1e-2, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    Tensor p = Tensor::vec({0.5, -1.5, 2.0});
    p.set_requires_grad(true);
    Optimizer opt({{"p", &p}}, {.algo = "adam", .lr = lr, .beta1 = b1, .beta2 = b2, .eps = eps});

    // Independent scalar recurrence, g = 1 everywhere.
    double m = 0.0, v = 0.0;
    std::vector<double> expect = {0.5, -1.5, 2.0};
    for (int t = 1; t <= 7; ++t) {
        p.grad = {1.0, 1.0, 1.0};
        opt.step();
        m = b1 * m + (1 - b1) * 1.0;
        v = b2 * v + (1 - b2) * 1.0;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        for (auto& e : expect) e -= lr * mh / (std::sqrt(vh) + eps);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(p.data[i] == doctest::Approx(expect[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("optimizer aborts on non-finite gradient with diagnostics") {
    Tensor p = Tensor::vec({1.0});
    p.set_requires_grad(true);
    Optimizer opt({{"theta", &p}}, {.algo = "sgd", .lr = 0.1});
    p.grad = {std::nan("")};
    CHECK_THROWS_WITH_AS(opt.step(), doctest::Contains("theta"), NumericsError);
}

TEST_CASE("non-finite forward values are an error state naming the op") {
    Tape tape;
    auto big = tape.input(Tensor::vec({1e308}));
    CHECK_THROWS_WITH_AS(tape.add(big, big), doctest::Contains("add"), NumericsError);
}

TEST_CASE("identical seeds give bit-identical parameters after k training steps") {
    auto train = [](std::uint64_t seed) {
        Rng rng(seed);
        Mlp net = Mlp::make(5, 8, 5, Nonlinearity::Tanh, seed);
        for (Tensor* p : net.param_tensors()) p->set_requires_grad(true);
        Tensor x = random_matrix(16, 5, rng);
        Optimizer opt(net.named_params("net"), {.algo = "adam", .lr = 1e-3});
        for (int step = 0; step < 25; ++step) {
            opt.zero_grad();
            Tape tape;
            auto pred = net.forward(tape, tape.input(x));
            tape.backward(tape.mse(pred, tape.input(x)));
            opt.step();
        }
        std::vector<double> flat;
        for (const Tensor* p : std::as_const(net).param_tensors()) {
            flat.insert(flat.end(), p->data.begin(), p->data.end());
        }
        return flat;
    };
    const auto r1 = train(123);
    const auto r2 = train(123);
    CHECK(r1 == r2);  // exact bitwise equality via operator==
}

TEST_CASE("softmax cross entropy gradient matches finite differences") {
    Rng rng(9);
    Tensor w = random_matrix(4, 3, rng);
    w.set_requires_grad(true);
    const Tensor x = random_matrix(10, 4, rng);
    std::vector<int> labels;
    for (int i = 0; i < 10; ++i) labels.push_back(i % 3);

    const auto eval_loss = [&]() {
        Tape t;
        auto logits = t.affine(t.input(x), t.param(w), t.input(Tensor::zeros({3})));
        return t.value(t.softmax_cross_entropy(logits, labels)).data[0];
    };
    w.zero_grad();
    Tape tape;
    auto logits = tape.affine(tape.input(x), tape.param(w), tape.input(Tensor::zeros({3})));
    tape.backward(tape.softmax_cross_entropy(logits, labels));
    CHECK(max_rel_grad_error({&w}, eval_loss) < 1e-4);
}
