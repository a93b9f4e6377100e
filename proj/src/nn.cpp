#include "glw/nn.hpp"

#include <cmath>

#include "glw/kernels.hpp"
#include "glw/rng.hpp"

namespace glw {

namespace {

Tensor xavier(std::size_t in, std::size_t out, Rng& rng) {
    Tensor w = Tensor::zeros({in, out});
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (auto& v : w.data) v = rng.uniform(-limit, limit);
    return w;
}

}  // namespace

Mlp Mlp::make(std::size_t in, std::size_t hidden, std::size_t out,
              Nonlinearity act, std::uint64_t seed) {
    Rng rng(seed);
    Mlp m;
    m.in = in;
    m.hidden = hidden;
    m.out = out;
    m.act = act;
    if (hidden == 0) {
        m.w1 = xavier(in, out, rng);
        m.b1 = Tensor::zeros({out});
    } else {
        m.w1 = xavier(in, hidden, rng);
        m.b1 = Tensor::zeros({hidden});
        m.w2 = xavier(hidden, out, rng);
        m.b2 = Tensor::zeros({out});
    }
    return m;
}

namespace {

Tensor affine_eval(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.rank() != 2 || x.cols() != w.rows()) {
        throw ShapeError("affine: x" + x.shape_str() + " w" + w.shape_str());
    }
    Tensor out = Tensor::zeros({x.rows(), w.cols()});
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double* row = out.row_ptr(i);
        for (std::size_t j = 0; j < out.cols(); ++j) row[j] = b.data[j];
    }
    kern::active().mm_acc(out.data.data(), x.data.data(), w.data.data(),
                          x.rows(), x.cols(), w.cols());
    if (!kern::all_finite(out.data.data(), out.size())) {
        throw NumericsError("non-finite value after op 'affine'");
    }
    return out;
}

}  // namespace

Tensor Mlp::forward(const Tensor& x) const {
    Tensor h = affine_eval(x, w1, b1);
    if (linear()) return h;
    switch (act) {
        case Nonlinearity::Tanh:
            for (auto& v : h.data) v = std::tanh(v);
            break;
        case Nonlinearity::Logistic:
            for (auto& v : h.data) v = 1.0 / (1.0 + std::exp(-v));
            break;
        case Nonlinearity::Relu:
            kern::active().relu(h.data.data(), h.data.data(), h.size());
            break;
    }
    return affine_eval(h, w2, b2);
}

Tape::Var Mlp::forward(Tape& tape, Tape::Var x) {
    Tape::Var w1v = tape.param(w1);
    Tape::Var b1v = tape.param(b1);
    if (linear()) return tape.affine(x, w1v, b1v);
    Tape::Var h = tape.nonlinear(tape.affine(x, w1v, b1v), act);
    return tape.affine(h, tape.param(w2), tape.param(b2));
}

std::vector<std::pair<std::string, Tensor*>> Mlp::named_params(const std::string& prefix) {
    std::vector<std::pair<std::string, Tensor*>> out_params;
    out_params.emplace_back(prefix + ".w1", &w1);
    out_params.emplace_back(prefix + ".b1", &b1);
    if (!linear()) {
        out_params.emplace_back(prefix + ".w2", &w2);
        out_params.emplace_back(prefix + ".b2", &b2);
    }
    return out_params;
}

std::vector<const Tensor*> Mlp::param_tensors() const {
    std::vector<const Tensor*> t{&w1, &b1};
    if (!linear()) {
        t.push_back(&w2);
        t.push_back(&b2);
    }
    return t;
}

std::vector<Tensor*> Mlp::param_tensors() {
    std::vector<Tensor*> t{&w1, &b1};
    if (!linear()) {
        t.push_back(&w2);
        t.push_back(&b2);
    }
    return t;
}

void Mlp::set_affine(const Tensor& a, const std::vector<double>& c) {
    if (a.rank() != 2 || a.rows() != in || a.cols() != out || c.size() != out) {
        throw ShapeError("set_affine: map " + a.shape_str() + " does not fit net " +
                         std::to_string(in) + "->" + std::to_string(out));
    }
    if (linear()) {
        w1 = a;
        w1.set_requires_grad(true);
        b1 = Tensor::vec(c);
        b1.set_requires_grad(true);
        return;
    }
    if (act != Nonlinearity::Tanh || hidden < 2 * out) {
        throw ConfigError("set_affine on a nonlinear net needs tanh and hidden >= 2*out");
    }
    // (1/2a)[tanh(a(Ax+c)) - tanh(-a(Ax+c))] = (1/a)tanh(a(Ax+c)) ~ Ax + c.
    const double alpha = 0.05;
    w1 = Tensor::zeros({in, hidden});
    b1 = Tensor::zeros({hidden});
    w2 = Tensor::zeros({hidden, out});
    b2 = Tensor::zeros({out});
    for (std::size_t j = 0; j < out; ++j) {
        for (std::size_t i = 0; i < in; ++i) {
            w1.at(i, 2 * j) = alpha * a.at(i, j);
            w1.at(i, 2 * j + 1) = -alpha * a.at(i, j);
        }
        b1.data[2 * j] = alpha * c[j];
        b1.data[2 * j + 1] = -alpha * c[j];
        w2.at(2 * j, j) = 1.0 / (2.0 * alpha);
        w2.at(2 * j + 1, j) = -1.0 / (2.0 * alpha);
    }
    for (Tensor* t : param_tensors()) t->set_requires_grad(true);
}

std::vector<int> ClassifierHead::predict(const Tensor& x) const {
    const Tensor lv = affine_eval(x, w, b);
    std::vector<int> out(lv.rows());
    for (std::size_t i = 0; i < lv.rows(); ++i) {
        const double* row = lv.row_ptr(i);
        int best = 0;
        for (std::size_t j = 1; j < lv.cols(); ++j) {
            if (row[j] > row[best]) best = static_cast<int>(j);
        }
        out[i] = best;
    }
    return out;
}

double ClassifierHead::accuracy(const Tensor& x, const std::vector<int>& labels) const {
    const std::vector<int> pred = predict(x);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == labels[i]) ++hits;
    }
    return pred.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace glw
