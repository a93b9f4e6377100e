#include "glw/tensor.hpp"

#include <cmath>

#include "glw/kernels.hpp"

namespace glw {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    return n;
}

void check_finite_or_throw(const Tensor& t, const char* opname) {
    if (!kern::all_finite(t.data.data(), t.data.size())) {
        throw NumericsError(std::string("non-finite value after op '") + opname + "'");
    }
}

}  // namespace

Tensor Tensor::scalar(double v) {
    Tensor t;
    t.data = {v};
    return t;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t;
    t.shape = std::move(shape);
    t.data.assign(shape_product(t.shape), 0.0);
    return t;
}

Tensor Tensor::vec(std::vector<double> v) {
    Tensor t;
    t.shape = {v.size()};
    t.data = std::move(v);
    return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
    if (v.size() != rows * cols) {
        throw ShapeError("matrix init: " + std::to_string(v.size()) + " values for " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
    Tensor t;
    t.shape = {rows, cols};
    t.data = std::move(v);
    return t;
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw ShapeError("rows() on tensor of shape " + shape_str());
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw ShapeError("cols() on tensor of shape " + shape_str());
    return shape[1];
}

double& Tensor::at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
double Tensor::at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
double* Tensor::row_ptr(std::size_t r) { return data.data() + r * cols(); }
const double* Tensor::row_ptr(std::size_t r) const { return data.data() + r * cols(); }

void Tensor::set_requires_grad(bool on) {
    requires_grad = on;
    if (on) {
        grad.assign(data.size(), 0.0);
    } else {
        grad.clear();
    }
}

void Tensor::zero_grad() {
    if (requires_grad) grad.assign(data.size(), 0.0);
}

std::string Tensor::shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Nonlinearity nonlinearity_from_string(const std::string& name) {
    if (name == "tanh") return Nonlinearity::Tanh;
    if (name == "logistic") return Nonlinearity::Logistic;
    if (name == "relu") return Nonlinearity::Relu;
    throw ConfigError("unknown nonlinearity kind: " + name);
}

const char* to_string(Nonlinearity k) {
    switch (k) {
        case Nonlinearity::Tanh: return "tanh";
        case Nonlinearity::Logistic: return "logistic";
        case Nonlinearity::Relu: return "relu";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

Tape::Var Tape::push(Node n, const char* opname) {
    check_finite_or_throw(n.value, opname);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Tape::Node& Tape::node(Var v) { return nodes_.at(v.id); }
const Tape::Node& Tape::node(Var v) const { return nodes_.at(v.id); }

const Tensor& Tape::value(Var v) const { return node(v).value; }

Tape::Var Tape::input(const Tensor& value) {
    Node n;
    n.op = Op::Input;
    n.value = value;
    n.value.requires_grad = false;
    n.value.grad.clear();
    return push(std::move(n), "input");
}

Tape::Var Tape::param(Tensor& external) {
    Node n;
    n.op = Op::Param;
    n.value = external;  // copy of current values
    n.external = &external;
    return push(std::move(n), "param");
}

Tape::Var Tape::affine(Var x, Var w, Var b) {
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    const Tensor& bv = value(b);
    if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1 ||
        xv.cols() != wv.rows() || wv.cols() != bv.shape[0]) {
        throw ShapeError("affine: x" + xv.shape_str() + " w" + wv.shape_str() + " b" +
                         bv.shape_str());
    }
    const std::size_t n = xv.rows(), m = wv.cols();
    Node out;
    out.op = Op::Affine;
    out.a = x.id;
    out.b = w.id;
    out.c = b.id;
    out.value = Tensor::zeros({n, m});
    for (std::size_t i = 0; i < n; ++i) {
        double* row = out.value.row_ptr(i);
        for (std::size_t j = 0; j < m; ++j) row[j] = bv.data[j];
    }
    kern::active().mm_acc(out.value.data.data(), xv.data.data(), wv.data.data(),
                          n, xv.cols(), m);
    return push(std::move(out), "affine");
}

Tape::Var Tape::matmul(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
        throw ShapeError("matmul: " + av.shape_str() + " * " + bv.shape_str());
    }
    Node out;
    out.op = Op::Matmul;
    out.a = a.id;
    out.b = b.id;
    out.value = Tensor::zeros({av.rows(), bv.cols()});
    kern::active().mm_acc(out.value.data.data(), av.data.data(), bv.data.data(),
                          av.rows(), av.cols(), bv.cols());
    return push(std::move(out), "matmul");
}

Tape::Var Tape::matmul_ta(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.rows() != bv.rows()) {
        throw ShapeError("matmul_ta: " + av.shape_str() + "^T * " + bv.shape_str());
    }
    Node out;
    out.op = Op::MatmulTa;
    out.a = a.id;
    out.b = b.id;
    out.value = Tensor::zeros({av.cols(), bv.cols()});
    kern::active().mm_ta_acc(out.value.data.data(), av.data.data(), bv.data.data(),
                             av.rows(), av.cols(), bv.cols());
    return push(std::move(out), "matmul_ta");
}

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* opname) {
    if (a.shape != b.shape) {
        throw ShapeError(std::string(opname) + ": " + a.shape_str() + " vs " + b.shape_str());
    }
}
}  // namespace

Tape::Var Tape::add(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_same_shape(av, bv, "add");
    Node out;
    out.op = Op::Add;
    out.a = a.id;
    out.b = b.id;
    out.value = av;
    kern::active().add(out.value.data.data(), av.data.data(), bv.data.data(), av.size());
    return push(std::move(out), "add");
}

Tape::Var Tape::sub(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_same_shape(av, bv, "sub");
    Node out;
    out.op = Op::Sub;
    out.a = a.id;
    out.b = b.id;
    out.value = av;
    kern::active().sub(out.value.data.data(), av.data.data(), bv.data.data(), av.size());
    return push(std::move(out), "sub");
}

Tape::Var Tape::hadamard(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_same_shape(av, bv, "hadamard");
    Node out;
    out.op = Op::Hadamard;
    out.a = a.id;
    out.b = b.id;
    out.value = av;
    kern::active().mul(out.value.data.data(), av.data.data(), bv.data.data(), av.size());
    return push(std::move(out), "hadamard");
}

Tape::Var Tape::scale(Var a, double s) {
    const Tensor& av = value(a);
    Node out;
    out.op = Op::Scale;
    out.a = a.id;
    out.s1 = s;
    out.value = av;
    kern::active().scale(out.value.data.data(), av.data.data(), s, av.size());
    return push(std::move(out), "scale");
}

Tape::Var Tape::add_scaled(Var a, double sa, Var b, double sb) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_same_shape(av, bv, "add_scaled");
    Node out;
    out.op = Op::AddScaled;
    out.a = a.id;
    out.b = b.id;
    out.s1 = sa;
    out.s2 = sb;
    out.value = av;
    for (std::size_t i = 0; i < av.size(); ++i) {
        out.value.data[i] = sa * av.data[i] + sb * bv.data[i];
    }
    return push(std::move(out), "add_scaled");
}

Tape::Var Tape::nonlinear(Var x, Nonlinearity kind) {
    const Tensor& xv = value(x);
    Node out;
    out.op = Op::Nonlinear;
    out.a = x.id;
    out.nl = kind;
    out.value = xv;
    switch (kind) {
        case Nonlinearity::Tanh:
            for (auto& v : out.value.data) v = std::tanh(v);
            break;
        case Nonlinearity::Logistic:
            for (auto& v : out.value.data) v = 1.0 / (1.0 + std::exp(-v));
            break;
        case Nonlinearity::Relu:
            kern::active().relu(out.value.data.data(), xv.data.data(), xv.size());
            break;
    }
    return push(std::move(out), "nonlinear");
}

Tape::Var Tape::row_mean(Var x) {
    const Tensor& xv = value(x);
    if (xv.rank() != 2 || xv.rows() == 0) {
        throw ShapeError("row_mean needs a nonempty matrix, got " + xv.shape_str());
    }
    const std::size_t n = xv.rows(), k = xv.cols();
    Node out;
    out.op = Op::RowMean;
    out.a = x.id;
    out.value = Tensor::zeros({k});
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = xv.row_ptr(i);
        for (std::size_t j = 0; j < k; ++j) out.value.data[j] += row[j];
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& v : out.value.data) v *= inv;
    return push(std::move(out), "row_mean");
}

Tape::Var Tape::sub_rowvec(Var x, Var mu) {
    const Tensor& xv = value(x);
    const Tensor& mv = value(mu);
    if (xv.rank() != 2 || mv.rank() != 1 || xv.cols() != mv.shape[0]) {
        throw ShapeError("sub_rowvec: " + xv.shape_str() + " - " + mv.shape_str());
    }
    Node out;
    out.op = Op::SubRowvec;
    out.a = x.id;
    out.b = mu.id;
    out.value = xv;
    for (std::size_t i = 0; i < xv.rows(); ++i) {
        kern::active().sub(out.value.row_ptr(i), xv.row_ptr(i), mv.data.data(), xv.cols());
    }
    return push(std::move(out), "sub_rowvec");
}

Tape::Var Tape::add_rowvec(Var x, Var v) {
    const Tensor& xv = value(x);
    const Tensor& vv = value(v);
    if (xv.rank() != 2 || vv.rank() != 1 || xv.cols() != vv.shape[0]) {
        throw ShapeError("add_rowvec: " + xv.shape_str() + " + " + vv.shape_str());
    }
    Node out;
    out.op = Op::AddRowvec;
    out.a = x.id;
    out.b = v.id;
    out.value = xv;
    for (std::size_t i = 0; i < xv.rows(); ++i) {
        kern::active().add(out.value.row_ptr(i), xv.row_ptr(i), vv.data.data(), xv.cols());
    }
    return push(std::move(out), "add_rowvec");
}

Tape::Var Tape::mul_rowvec(Var x, Var v) {
    const Tensor& xv = value(x);
    const Tensor& vv = value(v);
    if (xv.rank() != 2 || vv.rank() != 1 || xv.cols() != vv.shape[0]) {
        throw ShapeError("mul_rowvec: " + xv.shape_str() + " * " + vv.shape_str());
    }
    Node out;
    out.op = Op::MulRowvec;
    out.a = x.id;
    out.b = v.id;
    out.value = xv;
    for (std::size_t i = 0; i < xv.rows(); ++i) {
        kern::active().mul(out.value.row_ptr(i), xv.row_ptr(i), vv.data.data(), xv.cols());
    }
    return push(std::move(out), "mul_rowvec");
}

Tape::Var Tape::mse(Var pred, Var target) {
    const Tensor& pv = value(pred);
    const Tensor& tv = value(target);
    require_same_shape(pv, tv, "mse");
    if (pv.size() == 0) throw ShapeError("mse on empty batch");
    Node out;
    out.op = Op::Mse;
    out.a = pred.id;
    out.b = target.id;
    out.value = Tensor::scalar(
        kern::sq_diff_sum_seq(pv.data.data(), tv.data.data(), pv.size()) /
        static_cast<double>(pv.size()));
    return push(std::move(out), "mse");
}

Tape::Var Tape::softmax_cross_entropy(Var logits, const std::vector<int>& labels) {
    const Tensor& lv = value(logits);
    if (lv.rank() != 2 || lv.rows() != labels.size() || lv.rows() == 0) {
        throw ShapeError("softmax_cross_entropy: logits " + lv.shape_str() + " vs " +
                         std::to_string(labels.size()) + " labels");
    }
    const std::size_t n = lv.rows(), c = lv.cols();
    Node out;
    out.op = Op::SoftmaxXent;
    out.a = logits.id;
    out.labels = labels;
    out.saved = Tensor::zeros({n, c});  // probabilities, reused in backward
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = lv.row_ptr(i);
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
        const double logz = std::log(z) + mx;
        double* probs = out.saved.row_ptr(i);
        for (std::size_t j = 0; j < c; ++j) probs[j] = std::exp(row[j] - logz);
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= c) {
            throw ShapeError("label out of range in softmax_cross_entropy");
        }
        total += logz - row[y];
    }
    out.value = Tensor::scalar(total / static_cast<double>(n));
    return push(std::move(out), "softmax_cross_entropy");
}

Tape::Var Tape::sum(Var x) {
    const Tensor& xv = value(x);
    Node out;
    out.op = Op::Sum;
    out.a = x.id;
    out.value = Tensor::scalar(kern::sum_seq(xv.data.data(), xv.size()));
    return push(std::move(out), "sum");
}

Tape::Var Tape::sum_squares(Var x) {
    const Tensor& xv = value(x);
    Node out;
    out.op = Op::SumSquares;
    out.a = x.id;
    double acc = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) acc += xv.data[i] * xv.data[i];
    out.value = Tensor::scalar(acc);
    return push(std::move(out), "sum_squares");
}

std::vector<double>& Tape::grad_buf(NodeId id) {
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
    return n.grad;
}

void Tape::backward(Var loss) {
    const Node& root = node(loss);
    if (!root.value.is_scalar()) {
        throw GlwError("backward requires a scalar root, got shape " + root.value.shape_str());
    }
    for (auto& n : nodes_) n.grad.clear();
    grad_buf(loss.id)[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (nodes_[i].grad.empty()) continue;  // not on any path to the root
        backward_node(i);
    }
    // Flush leaf gradients into bound external tensors.
    for (auto& n : nodes_) {
        if (n.op == Op::Param && n.external && n.external->requires_grad && !n.grad.empty()) {
            if (n.external->grad.size() != n.external->data.size()) {
                n.external->grad.assign(n.external->data.size(), 0.0);
            }
            kern::active().axpy(n.external->grad.data(), 1.0, n.grad.data(), n.grad.size());
        }
    }
}

void Tape::backward_node(NodeId id) {
    Node& n = nodes_[id];
    const std::vector<double>& g = n.grad;
    const auto& K = kern::active();
    switch (n.op) {
        case Op::Input:
        case Op::Param:
            break;
        case Op::Affine: {
            const Tensor& xv = nodes_[n.a].value;
            const Tensor& wv = nodes_[n.b].value;
            const std::size_t rows = xv.rows(), inner = xv.cols(), m = wv.cols();
            // dx += g * w^T : transpose w once (pure data movement, exact).
            std::vector<double> wt(inner * m);
            for (std::size_t p = 0; p < inner; ++p) {
                for (std::size_t j = 0; j < m; ++j) wt[j * inner + p] = wv.data[p * m + j];
            }
            K.mm_acc(grad_buf(n.a).data(), g.data(), wt.data(), rows, m, inner);
            // dw += x^T * g
            K.mm_ta_acc(grad_buf(n.b).data(), xv.data.data(), g.data(), rows, inner, m);
            // db += column sums of g
            std::vector<double>& db = grad_buf(n.c);
            for (std::size_t i = 0; i < rows; ++i) {
                K.add(db.data(), db.data(), g.data() + i * m, m);
            }
            break;
        }
        case Op::Matmul: {
            const Tensor& av = nodes_[n.a].value;
            const Tensor& bv = nodes_[n.b].value;
            const std::size_t rows = av.rows(), inner = av.cols(), m = bv.cols();
            std::vector<double> bt(inner * m);
            for (std::size_t p = 0; p < inner; ++p) {
                for (std::size_t j = 0; j < m; ++j) bt[j * inner + p] = bv.data[p * m + j];
            }
            K.mm_acc(grad_buf(n.a).data(), g.data(), bt.data(), rows, m, inner);
            K.mm_ta_acc(grad_buf(n.b).data(), av.data.data(), g.data(), rows, inner, m);
            break;
        }
        case Op::MatmulTa: {
            // out[k x m] = a^T b with a[n x k], b[n x m]
            const Tensor& av = nodes_[n.a].value;
            const Tensor& bv = nodes_[n.b].value;
            const std::size_t rows = av.rows(), k = av.cols(), m = bv.cols();
            // da += b * g^T : da[n x k], row i: sum_j b[i,j] g[., j] -> b * g^T
            std::vector<double> gt(m * k);
            for (std::size_t p = 0; p < k; ++p) {
                for (std::size_t j = 0; j < m; ++j) gt[j * k + p] = g[p * m + j];
            }
            K.mm_acc(grad_buf(n.a).data(), bv.data.data(), gt.data(), rows, m, k);
            // db += a * g
            K.mm_acc(grad_buf(n.b).data(), av.data.data(), g.data(), rows, k, m);
            break;
        }
        case Op::Add:
            K.axpy(grad_buf(n.a).data(), 1.0, g.data(), g.size());
            K.axpy(grad_buf(n.b).data(), 1.0, g.data(), g.size());
            break;
        case Op::Sub:
            K.axpy(grad_buf(n.a).data(), 1.0, g.data(), g.size());
            K.axpy(grad_buf(n.b).data(), -1.0, g.data(), g.size());
            break;
        case Op::Hadamard: {
            const Tensor& av = nodes_[n.a].value;
            const Tensor& bv = nodes_[n.b].value;
            std::vector<double> tmp(g.size());
            K.mul(tmp.data(), g.data(), bv.data.data(), g.size());
            K.add(grad_buf(n.a).data(), grad_buf(n.a).data(), tmp.data(), g.size());
            K.mul(tmp.data(), g.data(), av.data.data(), g.size());
            K.add(grad_buf(n.b).data(), grad_buf(n.b).data(), tmp.data(), g.size());
            break;
        }
        case Op::Scale:
            K.axpy(grad_buf(n.a).data(), n.s1, g.data(), g.size());
            break;
        case Op::AddScaled:
            K.axpy(grad_buf(n.a).data(), n.s1, g.data(), g.size());
            K.axpy(grad_buf(n.b).data(), n.s2, g.data(), g.size());
            break;
        case Op::Nonlinear: {
            std::vector<double>& dx = grad_buf(n.a);
            switch (n.nl) {
                case Nonlinearity::Tanh:
                    K.tanh_bwd(dx.data(), n.value.data.data(), g.data(), g.size());
                    break;
                case Nonlinearity::Logistic:
                    K.logistic_bwd(dx.data(), n.value.data.data(), g.data(), g.size());
                    break;
                case Nonlinearity::Relu:
                    K.relu_bwd(dx.data(), nodes_[n.a].value.data.data(), g.data(), g.size());
                    break;
            }
            break;
        }
        case Op::RowMean: {
            const Tensor& xv = nodes_[n.a].value;
            const std::size_t rows = xv.rows(), k = xv.cols();
            const double inv = 1.0 / static_cast<double>(rows);
            std::vector<double>& dx = grad_buf(n.a);
            for (std::size_t i = 0; i < rows; ++i) {
                K.axpy(dx.data() + i * k, inv, g.data(), k);
            }
            break;
        }
        case Op::SubRowvec: {
            const Tensor& xv = nodes_[n.a].value;
            const std::size_t rows = xv.rows(), k = xv.cols();
            K.axpy(grad_buf(n.a).data(), 1.0, g.data(), g.size());
            std::vector<double>& dmu = grad_buf(n.b);
            for (std::size_t i = 0; i < rows; ++i) {
                K.axpy(dmu.data(), -1.0, g.data() + i * k, k);
            }
            break;
        }
        case Op::AddRowvec: {
            const Tensor& xv = nodes_[n.a].value;
            const std::size_t rows = xv.rows(), k = xv.cols();
            K.axpy(grad_buf(n.a).data(), 1.0, g.data(), g.size());
            std::vector<double>& dv = grad_buf(n.b);
            for (std::size_t i = 0; i < rows; ++i) {
                K.axpy(dv.data(), 1.0, g.data() + i * k, k);
            }
            break;
        }
        case Op::MulRowvec: {
            const Tensor& xv = nodes_[n.a].value;
            const Tensor& vv = nodes_[n.b].value;
            const std::size_t rows = xv.rows(), k = xv.cols();
            std::vector<double>& dx = grad_buf(n.a);
            std::vector<double>& dv = grad_buf(n.b);
            std::vector<double> tmp(k);
            for (std::size_t i = 0; i < rows; ++i) {
                K.mul(tmp.data(), g.data() + i * k, vv.data.data(), k);
                K.add(dx.data() + i * k, dx.data() + i * k, tmp.data(), k);
                K.mul(tmp.data(), g.data() + i * k, xv.row_ptr(i), k);
                K.add(dv.data(), dv.data(), tmp.data(), k);
            }
            break;
        }
        case Op::Mse: {
            const Tensor& pv = nodes_[n.a].value;
            const Tensor& tv = nodes_[n.b].value;
            const double c = 2.0 * g[0] / static_cast<double>(pv.size());
            std::vector<double> diff(pv.size());
            K.sub(diff.data(), pv.data.data(), tv.data.data(), pv.size());
            K.axpy(grad_buf(n.a).data(), c, diff.data(), diff.size());
            K.axpy(grad_buf(n.b).data(), -c, diff.data(), diff.size());
            break;
        }
        case Op::SoftmaxXent: {
            const std::size_t rows = n.saved.rows(), c = n.saved.cols();
            const double s = g[0] / static_cast<double>(rows);
            std::vector<double>& dx = grad_buf(n.a);
            for (std::size_t i = 0; i < rows; ++i) {
                const double* probs = n.saved.row_ptr(i);
                double* drow = dx.data() + i * c;
                for (std::size_t j = 0; j < c; ++j) drow[j] += s * probs[j];
                drow[n.labels[i]] -= s;
            }
            break;
        }
        case Op::Sum: {
            std::vector<double>& dx = grad_buf(n.a);
            const double gv = g[0];
            for (auto& v : dx) v += gv;
            break;
        }
        case Op::SumSquares: {
            K.axpy(grad_buf(n.a).data(), 2.0 * g[0], nodes_[n.a].value.data.data(),
                   nodes_[n.a].value.size());
            break;
        }
    }
}

}  // namespace glw
