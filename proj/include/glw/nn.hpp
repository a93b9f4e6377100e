#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glw/tensor.hpp"

namespace glw {

// One-hidden-layer MLP: out = W2 * act(W1 x + b1) + b2. hidden == 0 makes it
// a plain affine map (out = W1 x + b1), which keeps a single parameter layout
// for the translator's `linear` mode.
struct Mlp {
    std::size_t in = 0, hidden = 0, out = 0;
    Nonlinearity act = Nonlinearity::Tanh;
    Tensor w1, b1, w2, b2;  // w2/b2 empty when hidden == 0

    static Mlp make(std::size_t in, std::size_t hidden, std::size_t out,
                    Nonlinearity act, std::uint64_t seed);

    bool linear() const { return hidden == 0; }

    // Fast forward pass outside any tape. x is [n x in].
    Tensor forward(const Tensor& x) const;

    // Tape-recorded forward pass for training (binds parameters, so non-const).
    Tape::Var forward(Tape& tape, Tape::Var x);

    // Mutable parameter list for the optimizer; names are prefixed.
    std::vector<std::pair<std::string, Tensor*>> named_params(const std::string& prefix);

    std::vector<const Tensor*> param_tensors() const;
    std::vector<Tensor*> param_tensors();

    // Overwrite parameters so the net computes approximately t(x) = A x + c on
    // inputs with entries up to ~|range|. Exact for linear mode; for tanh mode
    // uses the odd-symmetry construction (1/a)tanh(a(Ax+c)) with small a.
    void set_affine(const Tensor& a, const std::vector<double>& c);
};

// Softmax linear classifier head trained with cross-entropy.
struct ClassifierHead {
    Tensor w, b;  // [features x classes], [classes]
    std::size_t classes = 0;
    double heldout_accuracy = 0.0;
    double train_accuracy = 0.0;

    std::vector<int> predict(const Tensor& x) const;
    double accuracy(const Tensor& x, const std::vector<int>& labels) const;
};

}  // namespace glw
