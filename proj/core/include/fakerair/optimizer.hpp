#pragma once

#include <cstdint>
#include <vector>

namespace fakerair {

// Bias-corrected Adam over a flat parameter vector. Gradients live in a
// caller-visible buffer that step() consumes and zeroes.
class Adam {
public:
    explicit Adam(int64_t n_params, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);

    // Applies one update with the given learning rate, then zeroes grad.
    // A non-finite gradient entry throws NumericError naming its index;
    // parameters are left untouched in that case.
    void step(std::vector<double>& params, std::vector<double>& grad, double lr);

    int64_t steps_taken() const { return t_; }

private:
    double beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::vector<double> m_, v_;
};

}  // namespace fakerair
