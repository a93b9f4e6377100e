#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "glw/common.hpp"

namespace glw {

// Dense row-major f64 array, rank 0 (scalar), 1 (vector) or 2 (matrix).
// grad, when tracked, always has the same extent as data.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;

    Tensor() = default;

    static Tensor scalar(double v);
    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor vec(std::vector<double> v);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    bool is_scalar() const { return shape.empty(); }
    std::size_t rows() const;
    std::size_t cols() const;

    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;
    double* row_ptr(std::size_t r);
    const double* row_ptr(std::size_t r) const;

    void set_requires_grad(bool on);
    void zero_grad();
    std::string shape_str() const;
};

enum class Nonlinearity { Tanh, Logistic, Relu };

Nonlinearity nonlinearity_from_string(const std::string& name);
const char* to_string(Nonlinearity k);

// Reverse-mode tape. Nodes are appended in execution order, so parents always
// precede children; backward walks the list once in reverse.
class Tape {
public:
    using NodeId = std::size_t;

    struct Var {
        NodeId id = static_cast<NodeId>(-1);
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Constant leaf (copies the value, never receives gradient).
    Var input(const Tensor& value);
    // Differentiable leaf bound to an external tensor; backward() accumulates
    // into external.grad.
    Var param(Tensor& external);

    Var affine(Var x, Var w, Var b);          // x[n x a] * w[a x b] + row-broadcast b
    Var matmul(Var a, Var b);                 // [n x k] * [k x m]
    Var matmul_ta(Var a, Var b);              // a^T * b, a[n x k], b[n x m] -> [k x m]
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var scale(Var a, double s);
    Var add_scaled(Var a, double sa, Var b, double sb);
    Var nonlinear(Var x, Nonlinearity kind);
    Var row_mean(Var x);                      // [n x k] -> [k]
    Var sub_rowvec(Var x, Var mu);            // subtract vector mu from each row
    Var add_rowvec(Var x, Var v);             // add vector v to each row
    Var mul_rowvec(Var x, Var v);             // scale each column j by v[j]
    Var mse(Var pred, Var target);            // mean over all entries of squared diff
    Var softmax_cross_entropy(Var logits, const std::vector<int>& labels);
    Var sum(Var x);                           // scalar, strict left-to-right
    Var sum_squares(Var x);                   // scalar, strict left-to-right

    // Populates d(loss)/d(leaf) for every requires-grad leaf. loss must be a
    // scalar on this tape. Repeated calls accumulate.
    void backward(Var loss);

    const Tensor& value(Var v) const;
    std::size_t node_count() const { return nodes_.size(); }

private:
    enum class Op {
        Input, Param, Affine, Matmul, MatmulTa, Add, Sub, Hadamard, Scale,
        AddScaled, Nonlinear, RowMean, SubRowvec, AddRowvec, MulRowvec, Mse,
        SoftmaxXent, Sum, SumSquares,
    };

    struct Node {
        Op op;
        Tensor value;
        std::vector<double> grad;  // allocated on demand during backward
        NodeId a = kNone, b = kNone, c = kNone;
        Tensor* external = nullptr;
        double s1 = 0.0, s2 = 0.0;
        Nonlinearity nl = Nonlinearity::Tanh;
        std::vector<int> labels;
        Tensor saved;  // op-specific stash (e.g. softmax probabilities)
    };

    static constexpr NodeId kNone = static_cast<NodeId>(-1);

    Var push(Node n, const char* opname);
    Node& node(Var v);
    const Node& node(Var v) const;
    std::vector<double>& grad_buf(NodeId id);
    void backward_node(NodeId id);

    std::vector<Node> nodes_;
};

}  // namespace glw
