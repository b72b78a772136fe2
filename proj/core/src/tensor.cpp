#include "sdgg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace sdgg {

std::string Shape::str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

const Shape& Tensor::shape() const { return tape_->node(id_).shape; }
const std::vector<double>& Tensor::value() const { return tape_->node(id_).val; }
const std::vector<double>& Tensor::grad() const { return tape_->node(id_).grad; }

double Tensor::scalar() const {
    if (shape().size() != 1)
        throw ShapeError("scalar() on tensor of shape " + shape().str());
    return value()[0];
}

struct TapeAccess {
    static Tensor add_node(Tape& t, Shape shape, std::vector<double> values,
                           std::vector<int> inputs) {
        int id = static_cast<int>(t.nodes_.size());
        Tape::Node n;
        n.shape = shape;
        n.val = std::move(values);
        n.grad.assign(shape.size(), 0.0);
        n.inputs = std::move(inputs);
        t.nodes_.push_back(std::move(n));
        return Tensor(&t, id);
    }
    static void set_backprop(const Tensor& t, std::function<void(Tape&)> f) {
        t.tape()->node(t.id()).backprop = std::move(f);
    }
    static std::vector<double>& grad(Tape& t, int id) { return t.node(id).grad; }
    static const std::vector<double>& val(Tape& t, int id) { return t.node(id).val; }
    static Shape shape(Tape& t, int id) { return t.node(id).shape; }
};

namespace {

using TA = TapeAccess;

Tape& same_tape(const Tensor& a, const Tensor& b) {
    if (a.tape() != b.tape())
        throw std::logic_error("operands recorded on different tapes");
    return *a.tape();
}

}  // namespace

Tensor Tape::leaf(Param& p) {
    if (auto it = leaf_ids_.find(&p); it != leaf_ids_.end())
        return Tensor(this, it->second);
    int id = static_cast<int>(nodes_.size());
    Node n;
    n.shape = p.shape;
    n.val = p.value;
    n.grad.assign(p.shape.size(), 0.0);
    n.src = &p;
    nodes_.push_back(std::move(n));
    leaf_ids_.emplace(&p, id);
    return Tensor(this, id);
}

Tensor Tape::constant(Shape shape, std::vector<double> values) {
    if (shape.size() != values.size())
        throw ShapeError("constant: shape " + shape.str() + " does not match " +
                         std::to_string(values.size()) + " values");
    return TA::add_node(*this, shape, std::move(values), {});
}

void Tape::backward(const Tensor& loss) {
    if (loss.tape() != this)
        throw std::logic_error("backward: loss belongs to a different tape");
    if (backward_done_)
        throw std::logic_error("backward called twice on one tape; reset first");
    const Node& ln = node(loss.id());
    if (ln.shape.size() != 1)
        throw ShapeError("backward: loss must be scalar, got " + ln.shape.str());
    backward_done_ = true;
    node(loss.id()).grad[0] = 1.0;
    for (int i = loss.id(); i >= 0; --i) {
        Node& n = node(i);
        if (n.backprop)
            n.backprop(*this);
        if (n.src) {
            for (std::size_t k = 0; k < n.grad.size(); ++k)
                n.src->grad[k] += n.grad[k];
        }
    }
}

void Tape::reset() {
    nodes_.clear();
    leaf_ids_.clear();
    backward_done_ = false;
}

// --- ops --------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    Tape& t = same_tape(a, b);
    Shape sa = a.shape(), sb = b.shape();
    if (sa.cols != sb.rows)
        throw ShapeError("matmul: " + sa.str() + " * " + sb.str());
    const auto& av = a.value();
    const auto& bv = b.value();
    std::vector<double> out(sa.rows * sb.cols, 0.0);
    for (std::size_t i = 0; i < sa.rows; ++i)
        for (std::size_t k = 0; k < sa.cols; ++k) {
            double aik = av[i * sa.cols + k];
            for (std::size_t j = 0; j < sb.cols; ++j)
                out[i * sb.cols + j] += aik * bv[k * sb.cols + j];
        }
    Tensor r = TA::add_node(t, {sa.rows, sb.cols}, std::move(out), {a.id(), b.id()});
    int ia = a.id(), ib = b.id(), ir = r.id();
    TA::set_backprop(r, [ia, ib, ir, sa, sb](Tape& tp) {
        const auto& go = TA::grad(tp, ir);
        const auto& av2 = TA::val(tp, ia);
        const auto& bv2 = TA::val(tp, ib);
        auto& ga = TA::grad(tp, ia);
        auto& gb = TA::grad(tp, ib);
        // dA = dC * B^T ; dB = A^T * dC
        for (std::size_t i = 0; i < sa.rows; ++i)
            for (std::size_t k = 0; k < sa.cols; ++k) {
                double acc = 0.0;
                for (std::size_t j = 0; j < sb.cols; ++j)
                    acc += go[i * sb.cols + j] * bv2[k * sb.cols + j];
                ga[i * sa.cols + k] += acc;
            }
        for (std::size_t k = 0; k < sa.cols; ++k)
            for (std::size_t j = 0; j < sb.cols; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < sa.rows; ++i)
                    acc += av2[i * sa.cols + k] * go[i * sb.cols + j];
                gb[k * sb.cols + j] += acc;
            }
    });
    return r;
}

Tensor transpose(const Tensor& a) {
    Tape& t = *a.tape();
    Shape s = a.shape();
    const auto& av = a.value();
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.rows; ++i)
        for (std::size_t j = 0; j < s.cols; ++j)
            out[j * s.rows + i] = av[i * s.cols + j];
    Tensor r = TA::add_node(t, {s.cols, s.rows}, std::move(out), {a.id()});
    int ia = a.id(), ir = r.id();
    TA::set_backprop(r, [ia, ir, s](Tape& tp) {
        const auto& go = TA::grad(tp, ir);
        auto& ga = TA::grad(tp, ia);
        for (std::size_t i = 0; i < s.rows; ++i)
            for (std::size_t j = 0; j < s.cols; ++j)
                ga[i * s.cols + j] += go[j * s.rows + i];
    });
    return r;
}

Tensor add(const Tensor& a, const Tensor& b) {
    Tape& t = same_tape(a, b);
    Shape sa = a.shape(), sb = b.shape();
    bool broadcast = (sb.rows == 1 && sb.cols == sa.cols && sa.rows > 1);
    if (!(sa == sb) && !broadcast)
        throw ShapeError("add: " + sa.str() + " + " + sb.str());
    const auto& av = a.value();
    const auto& bv = b.value();
    std::vector<double> out(sa.size());
    for (std::size_t i = 0; i < sa.rows; ++i)
        for (std::size_t j = 0; j < sa.cols; ++j)
            out[i * sa.cols + j] =
                av[i * sa.cols + j] + (broadcast ? bv[j] : bv[i * sa.cols + j]);
    Tensor r = TA::add_node(t, sa, std::move(out), {a.id(), b.id()});
    int ia = a.id(), ib = b.id(), ir = r.id();
    TA::set_backprop(r, [ia, ib, ir, sa, broadcast](Tape& tp) {
        const auto& go = TA::grad(tp, ir);
        auto& ga = TA::grad(tp, ia);
        auto& gb = TA::grad(tp, ib);
        for (std::size_t k = 0; k < go.size(); ++k) ga[k] += go[k];
        if (broadcast) {
            for (std::size_t i = 0; i < sa.rows; ++i)
                for (std::size_t j = 0; j < sa.cols; ++j)
                    gb[j] += go[i * sa.cols + j];
        } else {
            for (std::size_t k = 0; k < go.size(); ++k) gb[k] += go[k];
        }
    });
    return r;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    Tape& t = same_tape(a, b);
    if (!(a.shape() == b.shape()))
        throw ShapeError("sub: " + a.shape().str() + " - " + b.shape().str());
    const auto& av = a.value();
    const auto& bv = b.value();
    std::vector<double> out(av.size());
    for (std::size_t k = 0; k < av.size(); ++k) out[k] = av[k] - bv[k];
    Tensor r = TA::add_node(t, a.shape(), std::move(out), {a.id(), b.id()});
    int ia = a.id(), ib = b.id(), ir = r.id();
    TA::set_backprop(r, [ia, ib, ir](Tape& tp) {
        const auto& go = TA::grad(tp, ir);
        auto& ga = TA::grad(tp, ia);
        auto& gb = TA::grad(tp, ib);
        for (std::size_t k = 0; k < go.size(); ++k) {
            ga[k] += go[k];
            gb[k] -= go[k];
        }
    });
    return r;
}

Tensor neg(const Tensor& a) { return scalar_mul(a, -1.0); }

Tensor scalar_mul(const Tensor& a, double c) {
    Tape& t = *a.tape();
    const auto& av = a.value();
    std::vector<double> out(av.size());
    for (std::size_t k = 0; k < av.size(); ++k) out[k] = av[k] * c;
    Tensor r = TA::add_node(t, a.shape(), std::move(out), {a.id()});
    int ia = a.id(), ir = r.id();
    TA::set_backprop(r, [ia, ir, c](Tape& tp) {
        const auto& go = TA::grad(tp, ir);
        auto& ga = TA::grad(tp, ia);
        for (std::size_t k = 0; k < go.size(); ++k) ga[k] += c * go[k];
    });
    return r;
}

Tensor scalar_add(const Tensor& a, double c) {
    Tape& t = *a.tape();
    const auto& av = a.value();
    std::vector<double> out(av.size());
    for (std::size_t k = 0; k < av.size(); ++k) out[k] = av[k] + c;
    Tensor r = TA::add_node(t, a.shape(), std::move(out), {a.id()});
    int ia = a.id(), ir = r.id();
    TA::set_backprop(r, [ia, ir](Tape& tp) {
        const auto& go = TA::grad(tp, ir);
        auto& ga = TA::grad(tp, ia);
        for (std::size_t k = 0; k < go.size(); ++k) ga[k] += go[k];
    });
    return r;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    Tape& t = same_tape(a, b);
    if (!(a.shape() == b.shape()))
        throw ShapeError("mul: " + a.shape().str() + " * " + b.shape().str());
    const auto& av = a.value();
    const auto& bv = b.value();
    std::vector<double> out(av.size());
    for (std::size_t k = 0; k < av.size(); ++k) out[k] = av[k] * bv[k];
    Tensor r = TA::add_node(t, a.shape(), std::move(out), {a.id(), b.id()});
    int ia = a.id(), ib = b.id(), ir = r.id();
    TA::set_backprop(r, [ia, ib, ir](Tape& tp) {
        const auto& go = TA::grad(tp, ir);
        const auto& av2 = TA::val(tp, ia);
        const auto& bv2 = TA::val(tp, ib);
        auto& ga = TA::grad(tp, ia);
        auto& gb = TA::grad(tp, ib);
        for (std::size_t k = 0; k < go.size(); ++k) {
            ga[k] += bv2[k] * go[k];
            gb[k] += av2[k] * go[k];
        }
    });
    return r;
}

Tensor relu(const Tensor& a) {
    Tape& t = *a.tape();
    const auto& av = a.value();
    std::vector<double> out(av.size());
    for (std::size_t k = 0; k < av.size(); ++k) out[k] = av[k] > 0.0 ? av[k] : 0.0;
    Tensor r = TA::add_node(t, a.shape(), std::move(out), {a.id()});
    int ia = a.id(), ir = r.id();
    TA::set_backprop(r, [ia, ir](Tape& tp) {
        const auto& go = TA::grad(tp, ir);
        const auto& av2 = TA::val(tp, ia);
        auto& ga = TA::grad(tp, ia);
        for (std::size_t k = 0; k < go.size(); ++k)
            if (av2[k] > 0.0) ga[k] += go[k];
    });
    return r;
}

Tensor sigmoid(const Tensor& a) {
    Tape& t = *a.tape();
    const auto& av = a.value();
    std::vector<double> out(av.size());
    for (std::size_t k = 0; k < av.size(); ++k)
        out[k] = 1.0 / (1.0 + std::exp(-av[k]));
    Tensor r = TA::add_node(t, a.shape(), std::move(out), {a.id()});
    int ia = a.id(), ir = r.id();
    TA::set_backprop(r, [ia, ir](Tape& tp) {
        const auto& go = TA::grad(tp, ir);
        const auto& ov = TA::val(tp, ir);
        auto& ga = TA::grad(tp, ia);
        for (std::size_t k = 0; k < go.size(); ++k)
            ga[k] += ov[k] * (1.0 - ov[k]) * go[k];
    });
    return r;
}

Tensor exp(const Tensor& a) {
    Tape& t = *a.tape();
    const auto& av = a.value();
    std::vector<double> out(av.size());
    for (std::size_t k = 0; k < av.size(); ++k) out[k] = std::exp(av[k]);
    Tensor r = TA::add_node(t, a.shape(), std::move(out), {a.id()});
    int ia = a.id(), ir = r.id();
    TA::set_backprop(r, [ia, ir](Tape& tp) {
        const auto& go = TA::grad(tp, ir);
        const auto& ov = TA::val(tp, ir);
        auto& ga = TA::grad(tp, ia);
        for (std::size_t k = 0; k < go.size(); ++k) ga[k] += ov[k] * go[k];
    });
    return r;
}

Tensor log(const Tensor& a) {
    Tape& t = *a.tape();
    const auto& av = a.value();
    std::vector<double> out(av.size());
    for (std::size_t k = 0; k < av.size(); ++k) {
        if (!(av[k] > 0.0))
            throw TensorDomainError("log: non-positive input " +
                                    std::to_string(av[k]));
        out[k] = std::log(av[k]);
    }
    Tensor r = TA::add_node(t, a.shape(), std::move(out), {a.id()});
    int ia = a.id(), ir = r.id();
    TA::set_backprop(r, [ia, ir](Tape& tp) {
        const auto& go = TA::grad(tp, ir);
        const auto& av2 = TA::val(tp, ia);
        auto& ga = TA::grad(tp, ia);
        for (std::size_t k = 0; k < go.size(); ++k) ga[k] += go[k] / av2[k];
    });
    return r;
}

Tensor sum(const Tensor& a) {
    Tape& t = *a.tape();
    const auto& av = a.value();
    double s = 0.0;
    for (double x : av) s += x;
    Tensor r = TA::add_node(t, {1, 1}, {s}, {a.id()});
    int ia = a.id(), ir = r.id();
    TA::set_backprop(r, [ia, ir](Tape& tp) {
        double go = TA::grad(tp, ir)[0];
        auto& ga = TA::grad(tp, ia);
        for (double& g : ga) g += go;
    });
    return r;
}

Tensor mean(const Tensor& a) {
    return scalar_mul(sum(a), 1.0 / static_cast<double>(a.shape().size()));
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    Tape& t = same_tape(a, b);
    Shape sa = a.shape(), sb = b.shape();
    if (sa.cols != sb.cols)
        throw ShapeError("concat_rows: " + sa.str() + " | " + sb.str());
    std::vector<double> out;
    out.reserve(sa.size() + sb.size());
    out.insert(out.end(), a.value().begin(), a.value().end());
    out.insert(out.end(), b.value().begin(), b.value().end());
    Tensor r = TA::add_node(t, {sa.rows + sb.rows, sa.cols}, std::move(out),
                            {a.id(), b.id()});
    int ia = a.id(), ib = b.id(), ir = r.id();
    TA::set_backprop(r, [ia, ib, ir, sa](Tape& tp) {
        const auto& go = TA::grad(tp, ir);
        auto& ga = TA::grad(tp, ia);
        auto& gb = TA::grad(tp, ib);
        for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += go[k];
        for (std::size_t k = 0; k < gb.size(); ++k) gb[k] += go[sa.size() + k];
    });
    return r;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    Tape& t = same_tape(a, b);
    Shape sa = a.shape(), sb = b.shape();
    if (sa.rows != sb.rows)
        throw ShapeError("concat_cols: " + sa.str() + " | " + sb.str());
    const auto& av = a.value();
    const auto& bv = b.value();
    std::size_t cols = sa.cols + sb.cols;
    std::vector<double> out(sa.rows * cols);
    for (std::size_t i = 0; i < sa.rows; ++i) {
        for (std::size_t j = 0; j < sa.cols; ++j)
            out[i * cols + j] = av[i * sa.cols + j];
        for (std::size_t j = 0; j < sb.cols; ++j)
            out[i * cols + sa.cols + j] = bv[i * sb.cols + j];
    }
    Tensor r = TA::add_node(t, {sa.rows, cols}, std::move(out), {a.id(), b.id()});
    int ia = a.id(), ib = b.id(), ir = r.id();
    TA::set_backprop(r, [ia, ib, ir, sa, sb](Tape& tp) {
        const auto& go = TA::grad(tp, ir);
        auto& ga = TA::grad(tp, ia);
        auto& gb = TA::grad(tp, ib);
        std::size_t cols = sa.cols + sb.cols;
        for (std::size_t i = 0; i < sa.rows; ++i) {
            for (std::size_t j = 0; j < sa.cols; ++j)
                ga[i * sa.cols + j] += go[i * cols + j];
            for (std::size_t j = 0; j < sb.cols; ++j)
                gb[i * sb.cols + j] += go[i * cols + sa.cols + j];
        }
    });
    return r;
}

Tensor colwise_max(const Tensor& a) {
    Tape& t = *a.tape();
    Shape s = a.shape();
    if (s.rows == 0)
        throw ShapeError("colwise_max: zero rows");
    const auto& av = a.value();
    std::vector<double> out(s.cols, -std::numeric_limits<double>::infinity());
    std::vector<std::size_t> argmax(s.cols, 0);
    for (std::size_t i = 0; i < s.rows; ++i)
        for (std::size_t j = 0; j < s.cols; ++j)
            if (av[i * s.cols + j] > out[j]) {
                out[j] = av[i * s.cols + j];
                argmax[j] = i;
            }
    Tensor r = TA::add_node(t, {1, s.cols}, std::move(out), {a.id()});
    int ia = a.id(), ir = r.id();
    TA::set_backprop(r, [ia, ir, s, argmax = std::move(argmax)](Tape& tp) {
        const auto& go = TA::grad(tp, ir);
        auto& ga = TA::grad(tp, ia);
        for (std::size_t j = 0; j < s.cols; ++j)
            ga[argmax[j] * s.cols + j] += go[j];
    });
    return r;
}

Tensor frobenius_sq(const Tensor& a) {
    Tape& t = *a.tape();
    const auto& av = a.value();
    double s = 0.0;
    for (double x : av) s += x * x;
    Tensor r = TA::add_node(t, {1, 1}, {s}, {a.id()});
    int ia = a.id(), ir = r.id();
    TA::set_backprop(r, [ia, ir](Tape& tp) {
        double go = TA::grad(tp, ir)[0];
        const auto& av2 = TA::val(tp, ia);
        auto& ga = TA::grad(tp, ia);
        for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += 2.0 * av2[k] * go;
    });
    return r;
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    Tape& t = *a.tape();
    const auto& av = a.value();
    std::vector<double> out(av.size());
    for (std::size_t k = 0; k < av.size(); ++k)
        out[k] = std::min(hi, std::max(lo, av[k]));
    Tensor r = TA::add_node(t, a.shape(), std::move(out), {a.id()});
    int ia = a.id(), ir = r.id();
    TA::set_backprop(r, [ia, ir, lo, hi](Tape& tp) {
        const auto& go = TA::grad(tp, ir);
        const auto& av2 = TA::val(tp, ia);
        auto& ga = TA::grad(tp, ia);
        for (std::size_t k = 0; k < go.size(); ++k)
            if (av2[k] > lo && av2[k] < hi) ga[k] += go[k];
    });
    return r;
}

// --- gradient checking ------------------------------------------------------

namespace {

double rel_error(double a, double n) {
    double diff = std::abs(a - n);
    if (diff <= 1e-8) return 0.0;
    return diff / std::max(std::abs(a), std::abs(n));
}

// Central difference with step refinement: a perturbation that steps across a
// relu/max kink makes the base estimate invalid, but the artifact vanishes as
// the step shrinks, while a wrong analytic gradient does not. Returns the
// smallest relative error over the refinement ladder.
double check_coord(double analytic, const std::function<double(double)>& shift,
                   double step) {
    double best = 2.0;
    for (int k = 0; k < 3 && best >= 1e-6; ++k, step *= 0.1) {
        double numeric = (shift(step) - shift(-step)) / (2.0 * step);
        best = std::min(best, rel_error(analytic, numeric));
    }
    return best;
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& f, Shape shape,
                           const std::vector<double>& point,
                           double step, double tol) {
    if (step <= 0.0 || step > 1e-2)
        throw std::invalid_argument("grad_check: step must be in (0, 1e-2]");
    Param p("gradcheck_point", shape.rows, shape.cols);
    p.value = point;

    Tape tape;
    Tensor x = tape.leaf(p);
    Tensor loss = f(tape, x);
    if (loss.shape().size() != 1)
        throw ShapeError("grad_check: function output must be scalar");
    tape.backward(loss);
    std::vector<double> analytic = p.grad;

    auto eval = [&](const std::vector<double>& v) {
        Tape t2;
        Tensor x2 = t2.constant(shape, v);
        return f(t2, x2).scalar();
    };
    GradCheckReport rep;
    std::vector<double> probe = point;
    for (std::size_t k = 0; k < point.size(); ++k) {
        auto shift = [&](double h) {
            probe[k] = point[k] + h;
            double v = eval(probe);
            probe[k] = point[k];
            return v;
        };
        rep.max_rel_error =
            std::max(rep.max_rel_error, check_coord(analytic[k], shift, step));
    }
    rep.pass = rep.max_rel_error < tol;
    return rep;
}

GradCheckReport grad_check_params(const std::function<Tensor(Tape&)>& loss_fn,
                                  std::span<Param* const> params,
                                  double step, double tol) {
    if (step <= 0.0 || step > 1e-2)
        throw std::invalid_argument("grad_check_params: step must be in (0, 1e-2]");
    for (Param* p : params) p->zero_grad();
    {
        Tape tape;
        Tensor loss = loss_fn(tape);
        if (loss.shape().size() != 1)
            throw ShapeError("grad_check_params: loss must be scalar");
        tape.backward(loss);
    }
    auto eval = [&] {
        Tape tape;
        return loss_fn(tape).scalar();
    };
    GradCheckReport rep;
    for (Param* p : params) {
        for (std::size_t k = 0; k < p->value.size(); ++k) {
            double orig = p->value[k];
            auto shift = [&](double h) {
                p->value[k] = orig + h;
                double v = eval();
                p->value[k] = orig;
                return v;
            };
            double e = check_coord(p->grad[k], shift, step);
            if (e >= tol && std::getenv("SDGG_GRADCHECK_VERBOSE"))
                std::fprintf(stderr, "mismatch %s[%zu] analytic=%.12g numeric=%.12g\n",
                             p->name.c_str(), k, p->grad[k],
                             (shift(step) - shift(-step)) / (2.0 * step));
            rep.max_rel_error = std::max(rep.max_rel_error, e);
        }
    }
    rep.pass = rep.max_rel_error < tol;
    return rep;
}

}  // namespace sdgg
