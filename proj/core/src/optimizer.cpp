#include "fakerair/optimizer.hpp"

#include <cmath>

#include "fakerair/errors.hpp"

namespace fakerair {

Adam::Adam(int64_t n_params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.assign(static_cast<size_t>(n_params), 0.0);
    v_.assign(static_cast<size_t>(n_params), 0.0);
}

void Adam::step(std::vector<double>& params, std::vector<double>& grad, double lr) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw UsageError("Adam buffers sized for " + std::to_string(m_.size()) +
                         " parameters, got " + std::to_string(params.size()) + "/" +
                         std::to_string(grad.size()));
    for (size_t i = 0; i < grad.size(); ++i)
        if (!std::isfinite(grad[i]))
            throw NumericError("non-finite gradient at parameter index " + std::to_string(i));

    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
        grad[i] = 0.0;
    }
}

}  // namespace fakerair
