#include "glw/optim.hpp"

#include <cmath>

#include "glw/kernels.hpp"

namespace glw {

Optimizer::Optimizer(std::vector<std::pair<std::string, Tensor*>> params, OptimConfig cfg)
    : params_(std::move(params)), cfg_(std::move(cfg)) {
    if (cfg_.algo == "adam") {
        is_adam_ = true;
    } else if (cfg_.algo == "sgd") {
        is_adam_ = false;
    } else {
        throw ConfigError("unknown optimizer algo: " + cfg_.algo);
    }
    if (!(cfg_.lr > 0.0)) throw ConfigError("learning rate must be > 0");
    for (auto& [name, t] : params_) {
        if (!t->requires_grad) t->set_requires_grad(true);
        m_.emplace_back(t->size(), 0.0);
        v_.emplace_back(t->size(), 0.0);
    }
}

void Optimizer::step() {
    ++step_;
    const auto& K = kern::active();
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor* t = params_[i].second;
        if (t->grad.size() != t->data.size()) t->grad.assign(t->data.size(), 0.0);
        if (!kern::all_finite(t->grad.data(), t->grad.size())) {
            throw NumericsError("non-finite gradient for '" + params_[i].first +
                                "' at step " + std::to_string(step_));
        }
        if (is_adam_) {
            const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
            const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
            K.adam_step(t->data.data(), m_[i].data(), v_[i].data(), t->grad.data(),
                        t->size(), cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.eps, bc1, bc2);
        } else {
            K.axpy(t->data.data(), -cfg_.lr, t->grad.data(), t->size());
        }
        if (!kern::all_finite(t->data.data(), t->data.size())) {
            throw NumericsError("non-finite parameter '" + params_[i].first +
                                "' after step " + std::to_string(step_));
        }
    }
}

void Optimizer::zero_grad() {
    for (auto& [name, t] : params_) t->zero_grad();
}

}  // namespace glw
