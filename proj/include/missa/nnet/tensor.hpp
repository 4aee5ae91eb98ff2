#ifndef MISSA_NNET_TENSOR_HPP_
#define MISSA_NNET_TENSOR_HPP_

#include <string>

#include <Eigen/Dense>

namespace missa::nnet {

// Dense row-major matrix; vectors are 1 x n rows and scalars 1 x 1.
template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
std::string shape_string(const Tensor<Scalar>& t) {
  return "[" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + "]";
}

/// A trainable tensor with its gradient and Adam moment estimates.
template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  Tensor<Scalar> first_moment;
  Tensor<Scalar> second_moment;

  Parameter() = default;
  Parameter(std::string param_name, Tensor<Scalar> initial)
      : name(std::move(param_name)), value(std::move(initial)) {
    reset_state();
  }

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  void reset_state() {
    grad.setZero(value.rows(), value.cols());
    first_moment.setZero(value.rows(), value.cols());
    second_moment.setZero(value.rows(), value.cols());
  }
};

}  // namespace missa::nnet

#endif  // MISSA_NNET_TENSOR_HPP_
