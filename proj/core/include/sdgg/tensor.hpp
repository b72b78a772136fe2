#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace sdgg {

// All tensors in this project are rank <= 2; vectors are 1 x d and scalars 1 x 1.
struct Shape {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t size() const { return rows * cols; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct TensorDomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// A trainable parameter. Lives outside any tape; leaves created from it
// accumulate into `grad` when the tape runs backward.
struct Param {
    std::string name;
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;

    Param() = default;
    Param(std::string name_, std::size_t rows, std::size_t cols)
        : name(std::move(name_)), shape{rows, cols},
          value(rows * cols, 0.0), grad(rows * cols, 0.0) {}

    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

class Tape;

class Tensor {
  public:
    Tensor() = default;
    Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}

    bool valid() const { return tape_ != nullptr; }
    Tape* tape() const { return tape_; }
    int id() const { return id_; }

    const Shape& shape() const;
    const std::vector<double>& value() const;
    const std::vector<double>& grad() const;
    double scalar() const;  // value of a 1x1 tensor

  private:
    Tape* tape_ = nullptr;
    int id_ = -1;
};

// Reverse-mode gradient tape. Records operations in topological order as a
// side effect of forward evaluation; backward() sweeps the list in reverse.
// One tape and its tensors belong to a single thread of control.
class Tape {
  public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaf backed by a parameter; repeated calls for the same parameter
    // return the same node so gradients accumulate across uses.
    Tensor leaf(Param& p);
    // Leaf with no parameter backing (inputs, noise, masks).
    Tensor constant(Shape shape, std::vector<double> values);
    Tensor constant_scalar(double v) { return constant({1, 1}, {v}); }

    // Backpropagates from a scalar loss. Leaves backed by a Param have their
    // gradient added into Param::grad. Calling twice on one tape is an error.
    void backward(const Tensor& loss);

    void reset();
    std::size_t node_count() const { return nodes_.size(); }

  private:
    friend class Tensor;
    friend struct TapeAccess;

    struct Node {
        Shape shape;
        std::vector<double> val;
        std::vector<double> grad;
        std::vector<int> inputs;
        std::function<void(Tape&)> backprop;  // adds into input grads
        Param* src = nullptr;
    };

    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

    std::vector<Node> nodes_;
    std::unordered_map<Param*, int> leaf_ids_;
    bool backward_done_ = false;
};

// --- forward operations -----------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// add supports equal shapes and the (r x c) + (1 x c) row broadcast.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scalar_mul(const Tensor& a, double c);
Tensor scalar_add(const Tensor& a, double c);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);  // domain error on non-positive entries
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor colwise_max(const Tensor& a);  // n x d -> 1 x d
Tensor frobenius_sq(const Tensor& a);
// clamp passes gradient through inside [lo, hi] and blocks it outside
Tensor clamp(const Tensor& a, double lo, double hi);

// --- gradient checking ------------------------------------------------------

struct GradCheckReport {
    double max_rel_error = 0.0;
    bool pass = false;
};

// Checks the analytic gradient of f at `point` against central differences.
// f receives a fresh tape and a leaf holding the point.
using ScalarFn = std::function<Tensor(Tape&, const Tensor&)>;
GradCheckReport grad_check(const ScalarFn& f, Shape shape,
                           const std::vector<double>& point,
                           double step, double tol);

// Same check over a set of model parameters: the loss closure reads the
// current parameter values through tape.leaf() internally.
GradCheckReport grad_check_params(const std::function<Tensor(Tape&)>& loss_fn,
                                  std::span<Param* const> params,
                                  double step, double tol);

}  // namespace sdgg
