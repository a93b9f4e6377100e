#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "glw/tensor.hpp"

namespace glw {

struct OptimConfig {
    std::string algo = "adam";  // "sgd" | "adam"
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First-order optimizer over a fixed list of named parameter tensors.
// Deterministic given inputs; throws on non-finite gradients naming the
// offending parameter and the step index.
class Optimizer {
public:
    Optimizer(std::vector<std::pair<std::string, Tensor*>> params, OptimConfig cfg);

    void step();
    void zero_grad();
    std::int64_t step_count() const { return step_; }
    const std::vector<std::pair<std::string, Tensor*>>& params() const { return params_; }

private:
    std::vector<std::pair<std::string, Tensor*>> params_;
    OptimConfig cfg_;
    bool is_adam_;
    std::int64_t step_ = 0;
    std::vector<std::vector<double>> m_, v_;  // adam moments per param
};

}  // namespace glw
