#ifndef MISSA_NNET_GRAPH_HPP_
#define MISSA_NNET_GRAPH_HPP_

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "missa/error.hpp"
#include "missa/nnet/tensor.hpp"

namespace missa::nnet {

template <typename Scalar>
class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Graph<Scalar>* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph<Scalar>& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  const Tensor<Scalar>& value() const { return graph_->value(id_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Scalar item() const { return value()(0, 0); }

 private:
  Graph<Scalar>* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Tape of tensor operations for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so the reverse of creation order is
/// a valid topological order for the backward sweep. A graph built with
/// `record = false` evaluates values only.
template <typename Scalar>
class Graph {
 public:
  using Matrix = Tensor<Scalar>;
  using Backward = std::function<void(Graph&, std::size_t)>;

  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var<Scalar> constant(Matrix value) { return push(std::move(value), nullptr); }

  // One node per parameter per graph; its gradient is flushed into
  // `param.grad` (accumulating) at the end of backward().
  Var<Scalar> parameter(Parameter<Scalar>& param) {
    if (auto it = param_nodes_.find(&param); it != param_nodes_.end()) {
      return {this, it->second};
    }
    Var<Scalar> v = push(param.value, nullptr);
    nodes_.back().param = &param;
    param_nodes_.emplace(&param, v.id());
    return v;
  }

  Var<Scalar> push(Matrix value, Backward backward) {
    nodes_.push_back(Node{std::move(value), Matrix(), record_ ? std::move(backward) : Backward()});
    return {this, nodes_.size() - 1};
  }

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }

  // Gradient buffer of a node, zero-initialized on first access.
  Matrix& grad(std::size_t id) {
    Node& node = nodes_[id];
    if (node.grad.size() == 0) node.grad.setZero(node.value.rows(), node.value.cols());
    return node.grad;
  }
  bool has_grad(std::size_t id) const { return nodes_[id].grad.size() != 0; }

  void backward(const Var<Scalar>& loss) {
    if (!record_) throw std::logic_error("backward on a graph built without recording");
    if (loss.rows() != 1 || loss.cols() != 1) {
      throw ShapeError("backward: loss must be a scalar, got " + shape_string(loss.value()));
    }
    grad(loss.id()).setOnes();
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (node.grad.size() == 0) continue;
      if (node.backward) node.backward(*this, i);
      if (node.param != nullptr) node.param->grad += node.grad;
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter<Scalar>* param = nullptr;
  };

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<Scalar>*, std::size_t> param_nodes_;
};

namespace detail {

template <typename Scalar>
void require(bool ok, const char* op, const Var<Scalar>& a, const Var<Scalar>& b) {
  if (!ok) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a.value()) +
                     " and " + shape_string(b.value()));
  }
}

template <typename Scalar>
Graph<Scalar>& same_graph(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (&a.graph() != &b.graph()) throw std::logic_error("operands belong to different graphs");
  return a.graph();
}

}  // namespace detail

// a * b
template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.cols() == b.rows(), "matmul", a, b);
  auto& g = detail::same_graph(a, b);
  Tensor<Scalar> out = a.value() * b.value();
  const auto ia = a.id(), ib = b.id();
  return g.push(std::move(out), [ia, ib](Graph<Scalar>& g, std::size_t self) {
    const auto& grad = g.grad(self);
    g.grad(ia).noalias() += grad * g.value(ib).transpose();
    g.grad(ib).noalias() += g.value(ia).transpose() * grad;
  });
}

// a * b^T
template <typename Scalar>
Var<Scalar> matmul_nt(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.cols() == b.cols(), "matmul_nt", a, b);
  auto& g = detail::same_graph(a, b);
  Tensor<Scalar> out = a.value() * b.value().transpose();
  const auto ia = a.id(), ib = b.id();
  return g.push(std::move(out), [ia, ib](Graph<Scalar>& g, std::size_t self) {
    const auto& grad = g.grad(self);
    g.grad(ia).noalias() += grad * g.value(ib);
    g.grad(ib).noalias() += grad.transpose() * g.value(ia);
  });
}

// Elementwise sum; `b` may also be a single row broadcast over the rows of `a`.
template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& g = detail::same_graph(a, b);
  const auto ia = a.id(), ib = b.id();
  if (a.rows() == b.rows() && a.cols() == b.cols()) {
    Tensor<Scalar> out = a.value() + b.value();
    return g.push(std::move(out), [ia, ib](Graph<Scalar>& g, std::size_t self) {
      const auto& grad = g.grad(self);
      g.grad(ia) += grad;
      g.grad(ib) += grad;
    });
  }
  detail::require(b.rows() == 1 && a.cols() == b.cols(), "add", a, b);
  Tensor<Scalar> out = a.value().rowwise() + b.value().row(0);
  return g.push(std::move(out), [ia, ib](Graph<Scalar>& g, std::size_t self) {
    const auto& grad = g.grad(self);
    g.grad(ia) += grad;
    g.grad(ib) += grad.colwise().sum();
  });
}

// Elementwise product.
template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "mul", a, b);
  auto& g = detail::same_graph(a, b);
  Tensor<Scalar> out = a.value().cwiseProduct(b.value());
  const auto ia = a.id(), ib = b.id();
  return g.push(std::move(out), [ia, ib](Graph<Scalar>& g, std::size_t self) {
    const auto& grad = g.grad(self);
    g.grad(ia) += grad.cwiseProduct(g.value(ib));
    g.grad(ib) += grad.cwiseProduct(g.value(ia));
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar factor) {
  Tensor<Scalar> out = a.value() * factor;
  const auto ia = a.id();
  return a.graph().push(std::move(out), [ia, factor](Graph<Scalar>& g, std::size_t self) {
    g.grad(ia) += g.grad(self) * factor;
  });
}

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) {
  return add(a, b);
}
template <typename Scalar>
Var<Scalar> operator*(const Var<Scalar>& a, Scalar factor) {
  return scale(a, factor);
}
template <typename Scalar>
Var<Scalar> operator*(Scalar factor, const Var<Scalar>& a) {
  return scale(a, factor);
}

// Sum of all elements, as a 1x1 tensor.
template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a) {
  Tensor<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  const auto ia = a.id();
  return a.graph().push(std::move(out), [ia](Graph<Scalar>& g, std::size_t self) {
    g.grad(ia).array() += g.grad(self)(0, 0);
  });
}

// tanh-approximated GELU.
template <typename Scalar>
Var<Scalar> gelu(const Var<Scalar>& a) {
  constexpr Scalar kC = static_cast<Scalar>(0.7978845608028654);  // sqrt(2/pi)
  constexpr Scalar kK = static_cast<Scalar>(0.044715);
  const auto& x = a.value().array();
  Tensor<Scalar> out = (Scalar(0.5) * x * (Scalar(1) + (kC * (x + kK * x.cube())).tanh())).matrix();
  const auto ia = a.id();
  return a.graph().push(std::move(out), [ia, kC, kK](Graph<Scalar>& g, std::size_t self) {
    const auto x = g.value(ia).array();
    const auto t = (kC * (x + kK * x.cube())).tanh().eval();
    const auto dt = (Scalar(1) - t.square()) * kC * (Scalar(1) + Scalar(3) * kK * x.square());
    const auto local = Scalar(0.5) * (Scalar(1) + t) + Scalar(0.5) * x * dt;
    g.grad(ia).array() += g.grad(self).array() * local;
  });
}

// Row-wise normalization to zero mean / unit variance, then x * gamma + beta.
template <typename Scalar>
Var<Scalar> layer_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta,
                       Scalar eps = Scalar(1e-5)) {
  detail::require(gamma.rows() == 1 && gamma.cols() == x.cols(), "layer_norm", x, gamma);
  detail::require(beta.rows() == 1 && beta.cols() == x.cols(), "layer_norm", x, beta);
  auto& g = x.graph();
  const auto n = static_cast<Scalar>(x.cols());
  const auto& in = x.value();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean = in.rowwise().mean();
  Tensor<Scalar> centered = in.colwise() - mean;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std =
      ((centered.array().square().rowwise().sum() / n) + eps).rsqrt().matrix();
  Tensor<Scalar> normalized = centered.array().colwise() * inv_std.array();
  Tensor<Scalar> out =
      (normalized.array().rowwise() * gamma.value().row(0).array()).rowwise() +
      beta.value().row(0).array();
  const auto ix = x.id(), ig = gamma.id(), ib = beta.id();
  return g.push(std::move(out), [ix, ig, ib, normalized = std::move(normalized),
                                 inv_std = std::move(inv_std), n](Graph<Scalar>& g,
                                                                  std::size_t self) {
    const auto& grad = g.grad(self);
    g.grad(ig) += grad.cwiseProduct(normalized).colwise().sum();
    g.grad(ib) += grad.colwise().sum();
    Tensor<Scalar> dnorm = grad.array().rowwise() * g.value(ig).row(0).array();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean_d = dnorm.rowwise().sum() / n;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean_dn =
        dnorm.cwiseProduct(normalized).rowwise().sum() / n;
    Tensor<Scalar> dx = dnorm.colwise() - mean_d;
    dx -= (normalized.array().colwise() * mean_dn.array()).matrix();
    g.grad(ix) += (dx.array().colwise() * inv_std.array()).matrix();
  });
}

namespace detail {

// Row softmax restricted to columns [0, limit(row)).
template <typename Scalar, typename Limit>
Tensor<Scalar> masked_softmax(const Tensor<Scalar>& in, Limit limit) {
  Tensor<Scalar> out = Tensor<Scalar>::Zero(in.rows(), in.cols());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const Eigen::Index n = limit(r);
    auto row = in.row(r).head(n);
    const Scalar max = row.maxCoeff();
    out.row(r).head(n) = (row.array() - max).exp().matrix();
    out.row(r).head(n) /= out.row(r).head(n).sum();
  }
  return out;
}

template <typename Scalar>
typename Graph<Scalar>::Backward softmax_backward(std::size_t input) {
  return [input](Graph<Scalar>& g, std::size_t self) {
    const auto& y = g.value(self);
    const auto& grad = g.grad(self);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dot = grad.cwiseProduct(y).rowwise().sum();
    g.grad(input) += ((grad.colwise() - dot).array() * y.array()).matrix();
  };
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> softmax_rows(const Var<Scalar>& a) {
  const auto cols = a.cols();
  auto out = detail::masked_softmax<Scalar>(a.value(), [cols](Eigen::Index) { return cols; });
  return a.graph().push(std::move(out), detail::softmax_backward<Scalar>(a.id()));
}

// Softmax of a square score matrix where row i attends to columns 0..i only.
template <typename Scalar>
Var<Scalar> causal_softmax(const Var<Scalar>& a) {
  detail::require(a.rows() == a.cols(), "causal_softmax", a, a);
  auto out = detail::masked_softmax<Scalar>(a.value(), [](Eigen::Index r) { return r + 1; });
  return a.graph().push(std::move(out), detail::softmax_backward<Scalar>(a.id()));
}

// out[i] = table[ids[i]]; serves both as embedding lookup and row selection.
template <typename Scalar>
Var<Scalar> gather_rows(const Var<Scalar>& table, std::span<const int> ids) {
  Tensor<Scalar> out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(ids[i]) + " outside " +
                       shape_string(table.value()));
    }
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  const auto it = table.id();
  return table.graph().push(
      std::move(out), [it, ids = std::vector<int>(ids.begin(), ids.end())](Graph<Scalar>& g,
                                                                          std::size_t self) {
        const auto& grad = g.grad(self);
        auto& dt = g.grad(it);
        for (std::size_t i = 0; i < ids.size(); ++i) {
          dt.row(ids[i]) += grad.row(static_cast<Eigen::Index>(i));
        }
      });
}

template <typename Scalar>
Var<Scalar> slice_cols(const Var<Scalar>& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " + shape_string(a.value()));
  }
  Tensor<Scalar> out = a.value().middleCols(start, count);
  const auto ia = a.id();
  return a.graph().push(std::move(out), [ia, start, count](Graph<Scalar>& g, std::size_t self) {
    g.grad(ia).middleCols(start, count) += g.grad(self);
  });
}

template <typename Scalar>
Var<Scalar> concat_cols(std::span<const Var<Scalar>> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    detail::require(p.rows() == parts[0].rows(), "concat_cols", parts[0], p);
    cols += p.cols();
  }
  Tensor<Scalar> out(parts[0].rows(), cols);
  std::vector<std::size_t> ids;
  std::vector<Eigen::Index> widths;
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  return parts[0].graph().push(std::move(out), [ids = std::move(ids), widths = std::move(widths)](
                                                   Graph<Scalar>& g, std::size_t self) {
    Eigen::Index offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      g.grad(ids[k]) += g.grad(self).middleCols(offset, widths[k]);
      offset += widths[k];
    }
  });
}

template <typename Scalar>
Var<Scalar> concat_cols(std::initializer_list<Var<Scalar>> parts) {
  return concat_cols(std::span<const Var<Scalar>>(parts.begin(), parts.size()));
}

// Inverted dropout; identity when rate == 0.
template <typename Scalar, typename Rng>
Var<Scalar> dropout(const Var<Scalar>& a, Scalar rate, Rng& rng) {
  if (rate <= Scalar(0)) return a;
  if (rate >= Scalar(1)) throw std::invalid_argument("dropout rate must be < 1");
  std::bernoulli_distribution keep(1.0 - static_cast<double>(rate));
  const Scalar factor = Scalar(1) / (Scalar(1) - rate);
  Tensor<Scalar> mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? factor : Scalar(0);
  Tensor<Scalar> out = a.value().cwiseProduct(mask);
  const auto ia = a.id();
  return a.graph().push(std::move(out), [ia, mask = std::move(mask)](Graph<Scalar>& g,
                                                                     std::size_t self) {
    g.grad(ia) += g.grad(self).cwiseProduct(mask);
  });
}

enum class Reduction { kSum, kMean };

inline constexpr int kIgnoreIndex = -1;

// Softmax cross-entropy of each logits row against an integer target.
// Rows whose target equals `ignore_index` contribute nothing; a mean over
// zero rows is 0.
template <typename Scalar>
Var<Scalar> cross_entropy(const Var<Scalar>& logits, std::span<const int> targets,
                          Reduction reduction = Reduction::kMean,
                          int ignore_index = kIgnoreIndex) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                     shape_string(logits.value()));
  }
  const auto& z = logits.value();
  Tensor<Scalar> probs(z.rows(), z.cols());
  Scalar total = 0;
  int count = 0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const Scalar max = z.row(r).maxCoeff();
    probs.row(r) = (z.row(r).array() - max).exp().matrix();
    const Scalar norm = probs.row(r).sum();
    probs.row(r) /= norm;
    const int t = targets[static_cast<std::size_t>(r)];
    if (t == ignore_index) continue;
    if (t < 0 || t >= z.cols()) {
      throw ShapeError("cross_entropy: target " + std::to_string(t) + " outside " +
                       std::to_string(z.cols()) + " classes");
    }
    total += std::log(norm) + max - z(r, t);
    ++count;
  }
  const Scalar weight =
      reduction == Reduction::kMean ? (count > 0 ? Scalar(1) / count : Scalar(0)) : Scalar(1);
  Tensor<Scalar> out(1, 1);
  out(0, 0) = total * weight;
  const auto il = logits.id();
  return logits.graph().push(
      std::move(out), [il, weight, ignore_index, probs = std::move(probs),
                       targets = std::vector<int>(targets.begin(), targets.end())](
                          Graph<Scalar>& g, std::size_t self) {
        const Scalar upstream = g.grad(self)(0, 0) * weight;
        auto& dz = g.grad(il);
        for (std::size_t r = 0; r < targets.size(); ++r) {
          const int t = targets[r];
          if (t == ignore_index) continue;
          const auto row = static_cast<Eigen::Index>(r);
          dz.row(row) += probs.row(row) * upstream;
          dz(row, t) -= upstream;
        }
      });
}

}  // namespace missa::nnet

#endif  // MISSA_NNET_GRAPH_HPP_
