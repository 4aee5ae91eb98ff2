#ifndef MISSA_NNET_ADAM_HPP_
#define MISSA_NNET_ADAM_HPP_

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

#include "missa/error.hpp"
#include "missa/nnet/tensor.hpp"

namespace missa::nnet {

struct OptimizerConfig {
  double learning_rate = 6.25e-5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(learning_rate > 0)) throw ValidationError("learning rate must be > 0");
    if (weight_decay < 0) throw ValidationError("weight decay must be >= 0");
    if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) {
      throw ValidationError("moment decay rates must lie in [0, 1)");
    }
    if (!(epsilon > 0)) throw ValidationError("epsilon must be > 0");
  }
};

class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(const std::string& parameter)
      : std::runtime_error("non-finite gradient in parameter '" + parameter + "'"),
        parameter_(parameter) {}
  const std::string& parameter() const { return parameter_; }

 private:
  std::string parameter_;
};

/// Bias-corrected Adam with decoupled weight decay. `step` counts from 1.
///
/// All gradients are checked before any parameter is touched, so a
/// NonFiniteGradient leaves every parameter unchanged.
template <typename Scalar>
void adam_step(std::span<Parameter<Scalar>* const> params, const OptimizerConfig& config,
               long step) {
  config.validate();
  if (step < 1) throw std::invalid_argument("adam step index starts at 1");
  for (const auto* p : params) {
    if (!p->grad.allFinite()) throw NonFiniteGradient(p->name);
  }
  const auto lr = static_cast<Scalar>(config.learning_rate);
  const auto decay = static_cast<Scalar>(config.weight_decay);
  const auto b1 = static_cast<Scalar>(config.beta1);
  const auto b2 = static_cast<Scalar>(config.beta2);
  const auto eps = static_cast<Scalar>(config.epsilon);
  const Scalar correction1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(step));
  const Scalar correction2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(step));
  for (auto* p : params) {
    if (decay != Scalar(0)) p->value -= (lr * decay) * p->value;
    p->first_moment = b1 * p->first_moment + (Scalar(1) - b1) * p->grad;
    p->second_moment =
        b2 * p->second_moment + (Scalar(1) - b2) * p->grad.cwiseProduct(p->grad);
    p->value.array() -= lr * (p->first_moment.array() / correction1) /
                        ((p->second_moment.array() / correction2).sqrt() + eps);
  }
}

}  // namespace missa::nnet

#endif  // MISSA_NNET_ADAM_HPP_
