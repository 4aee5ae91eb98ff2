#ifndef MISSA_ERROR_HPP_
#define MISSA_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace missa {

// Malformed input: bad labels, bad ratings, empty messages, bad flags.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shape mismatch inside the nnet primitives.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Request conflicts with current resource state (e.g. a post already in flight).
class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace missa

#endif  // MISSA_ERROR_HPP_
