#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rulegrad/error.hpp"
#include "rulegrad/tensor.hpp"

namespace rulegrad {

class Tape;

// Handle to a node on a tape. Cheap to copy; owns nothing.
class Value {
public:
    Value() = default;
    bool valid() const { return tape_ != nullptr; }
    Tape& tape() const { return *tape_; }
    std::size_t id() const { return id_; }
    const Tensor& val() const;
    const Tensor& grad() const;

private:
    friend class Tape;
    Value(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

// Reverse-mode tape. Nodes are appended in construction order, which is a
// topological order by construction; backward() walks it once in reverse.
// Single-threaded per tape; distinct tapes are independent.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaf that does not require gradients (data, constants).
    Value input(Tensor v) { return push(std::move(v), false, true); }

    // Leaf that accumulates gradients (trainable parameter).
    Value param(Tensor v) { return push(std::move(v), true, true); }

    Value constant(double v) { return input(Tensor::scalar(v)); }

    std::size_t size() const { return nodes_.size(); }

    const Tensor& value_of(std::size_t id) const { return nodes_[id].value; }
    const Tensor& grad_of(std::size_t id) const {
        const Node& n = nodes_[id];
        if (!n.requires_grad) {
            throw ContractError("gradient requested for a node that does not require grad");
        }
        return n.grad;
    }

    bool wants_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    // Gradient buffer of a node, or nullptr when the node does not take part
    // in differentiation. Backward closures use this to skip dead branches.
    Tensor* grad_ptr(std::size_t id) {
        Node& n = nodes_[id];
        return n.requires_grad ? &n.grad : nullptr;
    }

    // Seeds d(root)/d(root) = 1 and propagates to every leaf below it.
    // Repeated calls accumulate into leaf gradients; interior buffers are
    // scratch and reset on every call.
    void backward(Value root) {
        check_mine(root);
        Node& r = nodes_[root.id()];
        if (r.value.numel() != 1) {
            throw ContractError("backward() requires a scalar root, got shape " +
                                shape_str(r.value.shape()));
        }
        if (!r.requires_grad) return; // nothing differentiable below the root
        for (std::size_t i = 0; i <= root.id(); ++i) {
            Node& n = nodes_[i];
            if (n.requires_grad && !n.leaf) n.grad.fill(0.0);
        }
        nodes_[root.id()].grad[0] += 1.0;
        for (std::size_t i = root.id() + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (n.requires_grad && n.backward) n.backward(*this);
        }
    }

    void zero_grad() {
        for (Node& n : nodes_)
            if (n.requires_grad) n.grad.fill(0.0);
    }

    void check_mine(Value v) const {
        if (!v.valid() || &v.tape() != this) {
            throw ContractError("value does not belong to this tape");
        }
    }

    // --- node construction (used by the op layer) ---

    Value push(Tensor value, bool requires_grad, bool leaf) {
        Node n;
        n.grad = requires_grad ? Tensor(value.shape()) : Tensor();
        n.value = std::move(value);
        n.requires_grad = requires_grad;
        n.leaf = leaf;
        nodes_.push_back(std::move(n));
        return Value(this, nodes_.size() - 1);
    }

    void set_backward(Value v, std::function<void(Tape&)> fn) {
        nodes_[v.id()].backward = std::move(fn);
    }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&)> backward; // empty for leaves
        bool requires_grad = false;
        bool leaf = false;
    };
    // deque: growing the tape must not invalidate value/grad references held
    // by callers or by backward closures
    std::deque<Node> nodes_;
};

inline const Tensor& Value::val() const { return tape_->value_of(id_); }
inline const Tensor& Value::grad() const { return tape_->grad_of(id_); }

namespace detail {

inline Tape& same_tape(Value a, Value b) {
    a.tape().check_mine(b);
    return a.tape();
}

// Elementwise unary op. df(x, y) is d(out)/d(in) at input x, output y.
template <typename F, typename DF>
Value unary_elementwise(Value a, F&& f, DF&& df) {
    Tape& t = a.tape();
    const Tensor& x = a.val();
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) out[i] = f(x[i]);
    const bool rg = t.wants_grad(a.id());
    Value v = t.push(std::move(out), rg, false);
    if (rg) {
        t.set_backward(v, [ia = a.id(), self = v.id(), df](Tape& tp) {
            const Tensor& g = tp.grad_of(self);
            const Tensor& xv = tp.value_of(ia);
            const Tensor& yv = tp.value_of(self);
            Tensor* ga = tp.grad_ptr(ia);
            for (std::size_t i = 0; i < xv.numel(); ++i) (*ga)[i] += g[i] * df(xv[i], yv[i]);
        });
    }
    return v;
}

// Elementwise binary op over same-shape operands (no broadcasting).
template <typename F, typename DA, typename DB>
Value binary_elementwise(Value a, Value b, const char* name, F&& f, DA&& dfa, DB&& dfb) {
    Tape& t = same_tape(a, b);
    const Tensor& x = a.val();
    const Tensor& y = b.val();
    if (!x.same_shape(y)) {
        throw DimensionError(std::string(name) + ": shape mismatch " + shape_str(x.shape()) +
                             " vs " + shape_str(y.shape()));
    }
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) out[i] = f(x[i], y[i]);
    const bool rg = t.wants_grad(a.id()) || t.wants_grad(b.id());
    Value v = t.push(std::move(out), rg, false);
    if (rg) {
        t.set_backward(v, [ia = a.id(), ib = b.id(), self = v.id(), dfa, dfb](Tape& tp) {
            const Tensor& g = tp.grad_of(self);
            const Tensor& xv = tp.value_of(ia);
            const Tensor& yv = tp.value_of(ib);
            if (Tensor* ga = tp.grad_ptr(ia))
                for (std::size_t i = 0; i < xv.numel(); ++i) (*ga)[i] += g[i] * dfa(xv[i], yv[i]);
            if (Tensor* gb = tp.grad_ptr(ib))
                for (std::size_t i = 0; i < yv.numel(); ++i) (*gb)[i] += g[i] * dfb(xv[i], yv[i]);
        });
    }
    return v;
}

inline double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double stable_softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

} // namespace detail

// --- arithmetic ---

inline Value add(Value a, Value b) {
    return detail::binary_elementwise(
        a, b, "add", [](double x, double y) { return x + y; },
        [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

inline Value sub(Value a, Value b) {
    return detail::binary_elementwise(
        a, b, "sub", [](double x, double y) { return x - y; },
        [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

inline Value mul(Value a, Value b) {
    return detail::binary_elementwise(
        a, b, "mul", [](double x, double y) { return x * y; },
        [](double x, double y) { (void)x; return y; }, [](double x, double y) { (void)y; return x; });
}

inline Value neg(Value a) {
    return detail::unary_elementwise(
        a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

inline Value scale(Value a, double s) {
    return detail::unary_elementwise(
        a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

inline Value add_scalar(Value a, double s) {
    return detail::unary_elementwise(
        a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

// --- nonlinearities ---

inline Value sigmoid(Value a) {
    return detail::unary_elementwise(
        a, [](double x) { return detail::stable_sigmoid(x); },
        [](double, double y) { return y * (1.0 - y); });
}

inline Value softplus(Value a) {
    return detail::unary_elementwise(
        a, [](double x) { return detail::stable_softplus(x); },
        [](double x, double) { return detail::stable_sigmoid(x); });
}

inline Value log(Value a) {
    const Tensor& x = a.val();
    for (std::size_t i = 0; i < x.numel(); ++i) {
        if (!(x[i] > 0.0)) {
            throw NumericError("log: non-positive input " + std::to_string(x[i]));
        }
    }
    return detail::unary_elementwise(
        a, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

inline Value exp(Value a) {
    return detail::unary_elementwise(
        a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

// Gradient passes through where the input sits inside [lo, hi], is zero past
// the saturation boundaries.
inline Value clamp(Value a, double lo, double hi) {
    if (!(lo < hi)) {
        throw ContractError("clamp: requires lo < hi, got [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
    }
    return detail::unary_elementwise(
        a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
        [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

// --- reductions ---

inline Value sum(Value a) {
    Tape& t = a.tape();
    const Tensor& x = a.val();
    double s = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) s += x[i];
    const bool rg = t.wants_grad(a.id());
    Value v = t.push(Tensor::scalar(s), rg, false);
    if (rg) {
        t.set_backward(v, [ia = a.id(), self = v.id()](Tape& tp) {
            const double g = tp.grad_of(self)[0];
            Tensor* ga = tp.grad_ptr(ia);
            for (std::size_t i = 0; i < ga->numel(); ++i) (*ga)[i] += g;
        });
    }
    return v;
}

inline Value mean(Value a) {
    const std::size_t n = a.val().numel();
    if (n == 0) throw ContractError("mean of empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(n));
}

inline Value l2_norm_sq(Value a) {
    Tape& t = a.tape();
    const Tensor& x = a.val();
    double s = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) s += x[i] * x[i];
    const bool rg = t.wants_grad(a.id());
    Value v = t.push(Tensor::scalar(s), rg, false);
    if (rg) {
        t.set_backward(v, [ia = a.id(), self = v.id()](Tape& tp) {
            const double g = tp.grad_of(self)[0];
            const Tensor& xv = tp.value_of(ia);
            Tensor* ga = tp.grad_ptr(ia);
            for (std::size_t i = 0; i < xv.numel(); ++i) (*ga)[i] += g * 2.0 * xv[i];
        });
    }
    return v;
}

// --- linear algebra ---

inline Value matmul(Value a, Value b) {
    Tape& t = detail::same_tape(a, b);
    const Tensor& x = a.val();
    const Tensor& y = b.val();
    if (x.rank() != 2 || y.rank() != 2 || x.shape()[1] != y.shape()[0]) {
        throw DimensionError("matmul: incompatible shapes " + shape_str(x.shape()) + " x " +
                             shape_str(y.shape()));
    }
    const std::size_t m = x.shape()[0], k = x.shape()[1], n = y.shape()[1];
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double xv = x.at2(i, p);
            for (std::size_t j = 0; j < n; ++j) out.at2(i, j) += xv * y.at2(p, j);
        }
    const bool rg = t.wants_grad(a.id()) || t.wants_grad(b.id());
    Value v = t.push(std::move(out), rg, false);
    if (rg) {
        t.set_backward(v, [ia = a.id(), ib = b.id(), self = v.id(), m, k, n](Tape& tp) {
            const Tensor& g = tp.grad_of(self);
            const Tensor& xv = tp.value_of(ia);
            const Tensor& yv = tp.value_of(ib);
            if (Tensor* ga = tp.grad_ptr(ia)) { // dA = G * B^T
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < n; ++j) s += g.at2(i, j) * yv.at2(p, j);
                        (*ga).at2(i, p) += s;
                    }
            }
            if (Tensor* gb = tp.grad_ptr(ib)) { // dB = A^T * G
                for (std::size_t p = 0; p < k; ++p)
                    for (std::size_t j = 0; j < n; ++j) {
                        double s = 0.0;
                        for (std::size_t i = 0; i < m; ++i) s += xv.at2(i, p) * g.at2(i, j);
                        (*gb).at2(p, j) += s;
                    }
            }
        });
    }
    return v;
}

// x[k] * W[k x n] -> [n].
inline Value vecmat(Value x, Value w) {
    Tape& t = detail::same_tape(x, w);
    const Tensor& xv = x.val();
    const Tensor& wv = w.val();
    if (xv.rank() != 1 || wv.rank() != 2 || xv.shape()[0] != wv.shape()[0]) {
        throw DimensionError("vecmat: incompatible shapes " + shape_str(xv.shape()) + " x " +
                             shape_str(wv.shape()));
    }
    const std::size_t k = wv.shape()[0], n = wv.shape()[1];
    Tensor out({n});
    for (std::size_t i = 0; i < k; ++i) {
        const double xi = xv[i];
        for (std::size_t j = 0; j < n; ++j) out[j] += xi * wv.at2(i, j);
    }
    const bool rg = t.wants_grad(x.id()) || t.wants_grad(w.id());
    Value v = t.push(std::move(out), rg, false);
    if (rg) {
        t.set_backward(v, [ix = x.id(), iw = w.id(), self = v.id(), k, n](Tape& tp) {
            const Tensor& g = tp.grad_of(self);
            const Tensor& xval = tp.value_of(ix);
            const Tensor& wval = tp.value_of(iw);
            if (Tensor* gx = tp.grad_ptr(ix)) {
                for (std::size_t i = 0; i < k; ++i) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += g[j] * wval.at2(i, j);
                    (*gx)[i] += s;
                }
            }
            if (Tensor* gw = tp.grad_ptr(iw)) {
                for (std::size_t i = 0; i < k; ++i) {
                    const double xi = xval[i];
                    for (std::size_t j = 0; j < n; ++j) (*gw).at2(i, j) += xi * g[j];
                }
            }
        });
    }
    return v;
}

// Row i of a matrix as a vector.
inline Value row(Value m, std::size_t i) {
    Tape& t = m.tape();
    const Tensor& mv = m.val();
    if (mv.rank() != 2) throw DimensionError("row: expected a matrix, got " + shape_str(mv.shape()));
    if (i >= mv.shape()[0]) {
        throw ContractError("row: index " + std::to_string(i) + " out of range for " +
                            shape_str(mv.shape()));
    }
    const std::size_t c = mv.shape()[1];
    Tensor out({c});
    for (std::size_t j = 0; j < c; ++j) out[j] = mv.at2(i, j);
    const bool rg = t.wants_grad(m.id());
    Value v = t.push(std::move(out), rg, false);
    if (rg) {
        t.set_backward(v, [im = m.id(), self = v.id(), i, c](Tape& tp) {
            const Tensor& g = tp.grad_of(self);
            Tensor* gm = tp.grad_ptr(im);
            for (std::size_t j = 0; j < c; ++j) (*gm).at2(i, j) += g[j];
        });
    }
    return v;
}

// Single element of a vector as a scalar.
inline Value pick(Value v, std::size_t i) {
    Tape& t = v.tape();
    const Tensor& x = v.val();
    if (x.rank() != 1) throw DimensionError("pick: expected a vector, got " + shape_str(x.shape()));
    if (i >= x.numel()) {
        throw ContractError("pick: index " + std::to_string(i) + " out of range for " +
                            shape_str(x.shape()));
    }
    const bool rg = t.wants_grad(v.id());
    Value out = t.push(Tensor::scalar(x[i]), rg, false);
    if (rg) {
        t.set_backward(out, [iv = v.id(), self = out.id(), i](Tape& tp) {
            (*tp.grad_ptr(iv))[i] += tp.grad_of(self)[0];
        });
    }
    return out;
}

// Stack scalar nodes into a vector.
inline Value stack(const std::vector<Value>& xs) {
    if (xs.empty()) throw ContractError("stack: empty input");
    Tape& t = xs.front().tape();
    Tensor out({xs.size()});
    bool rg = false;
    std::vector<std::size_t> ids(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        t.check_mine(xs[i]);
        if (xs[i].val().numel() != 1) {
            throw DimensionError("stack: element " + std::to_string(i) + " is not a scalar");
        }
        out[i] = xs[i].val()[0];
        ids[i] = xs[i].id();
        rg = rg || t.wants_grad(xs[i].id());
    }
    Value v = t.push(std::move(out), rg, false);
    if (rg) {
        t.set_backward(v, [ids = std::move(ids), self = v.id()](Tape& tp) {
            const Tensor& g = tp.grad_of(self);
            for (std::size_t i = 0; i < ids.size(); ++i)
                if (Tensor* gi = tp.grad_ptr(ids[i])) (*gi)[0] += g[i];
        });
    }
    return v;
}

// Sum of selected entries of a vector.
inline Value sum_over(Value v, std::span<const std::size_t> idx) {
    Tape& t = v.tape();
    const Tensor& x = v.val();
    if (x.rank() != 1) throw DimensionError("sum_over: expected a vector");
    if (idx.empty()) throw ContractError("sum_over: empty index set");
    double s = 0.0;
    for (std::size_t i : idx) {
        if (i >= x.numel()) throw ContractError("sum_over: index " + std::to_string(i) + " out of range");
        s += x[i];
    }
    const bool rg = t.wants_grad(v.id());
    Value out = t.push(Tensor::scalar(s), rg, false);
    if (rg) {
        std::vector<std::size_t> ix(idx.begin(), idx.end());
        t.set_backward(out, [iv = v.id(), self = out.id(), ix = std::move(ix)](Tape& tp) {
            const double g = tp.grad_of(self)[0];
            Tensor* gv = tp.grad_ptr(iv);
            for (std::size_t i : ix) (*gv)[i] += g;
        });
    }
    return out;
}

// log(sum over idx of exp(v[i])), max-shifted.
inline Value logsumexp_over(Value v, std::span<const std::size_t> idx) {
    Tape& t = v.tape();
    const Tensor& x = v.val();
    if (x.rank() != 1) throw DimensionError("logsumexp_over: expected a vector");
    if (idx.empty()) throw ContractError("logsumexp_over: empty index set");
    double mx = -HUGE_VAL;
    for (std::size_t i : idx) {
        if (i >= x.numel())
            throw ContractError("logsumexp_over: index " + std::to_string(i) + " out of range");
        mx = std::max(mx, x[i]);
    }
    double s = 0.0;
    for (std::size_t i : idx) s += std::exp(x[i] - mx);
    const double lse = mx + std::log(s);
    const bool rg = t.wants_grad(v.id());
    Value out = t.push(Tensor::scalar(lse), rg, false);
    if (rg) {
        std::vector<std::size_t> ix(idx.begin(), idx.end());
        t.set_backward(out, [iv = v.id(), self = out.id(), ix = std::move(ix)](Tape& tp) {
            const double g = tp.grad_of(self)[0];
            const double y = tp.value_of(self)[0];
            const Tensor& xv = tp.value_of(iv);
            Tensor* gv = tp.grad_ptr(iv);
            for (std::size_t i : ix) (*gv)[i] += g * std::exp(xv[i] - y);
        });
    }
    return out;
}

// log(e^a + e^b + e^c) over three scalars, max-shifted.
inline Value logsumexp3(Value a, Value b, Value c) {
    Tape& t = detail::same_tape(a, b);
    t.check_mine(c);
    if (a.val().numel() != 1 || b.val().numel() != 1 || c.val().numel() != 1) {
        throw DimensionError("logsumexp3: expects scalars");
    }
    const double xa = a.val()[0], xb = b.val()[0], xc = c.val()[0];
    const double mx = std::max(xa, std::max(xb, xc));
    const double s = std::exp(xa - mx) + std::exp(xb - mx) + std::exp(xc - mx);
    const double y = mx + std::log(s);
    const bool rg = t.wants_grad(a.id()) || t.wants_grad(b.id()) || t.wants_grad(c.id());
    Value out = t.push(Tensor::scalar(y), rg, false);
    if (rg) {
        t.set_backward(out, [ia = a.id(), ib = b.id(), ic = c.id(), self = out.id()](Tape& tp) {
            const double g = tp.grad_of(self)[0];
            const double y = tp.value_of(self)[0];
            if (Tensor* ga = tp.grad_ptr(ia)) (*ga)[0] += g * std::exp(tp.value_of(ia)[0] - y);
            if (Tensor* gb = tp.grad_ptr(ib)) (*gb)[0] += g * std::exp(tp.value_of(ib)[0] - y);
            if (Tensor* gc = tp.grad_ptr(ic)) (*gc)[0] += g * std::exp(tp.value_of(ic)[0] - y);
        });
    }
    return out;
}

// cosine(u, v) = u.v / (|u||v|). Zero-norm operands are rejected, not floored.
inline Value cosine(Value u, Value v) {
    Tape& t = detail::same_tape(u, v);
    const Tensor& x = u.val();
    const Tensor& y = v.val();
    if (x.rank() != 1 || y.rank() != 1 || x.numel() != y.numel()) {
        throw DimensionError("cosine: expected equal-length vectors, got " + shape_str(x.shape()) +
                             " vs " + shape_str(y.shape()));
    }
    double dot = 0.0, nx2 = 0.0, ny2 = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        dot += x[i] * y[i];
        nx2 += x[i] * x[i];
        ny2 += y[i] * y[i];
    }
    if (nx2 == 0.0 || ny2 == 0.0) throw NumericError("cosine: zero-norm input");
    const double nx = std::sqrt(nx2), ny = std::sqrt(ny2);
    const double cosv = dot / (nx * ny);
    const bool rg = t.wants_grad(u.id()) || t.wants_grad(v.id());
    Value out = t.push(Tensor::scalar(cosv), rg, false);
    if (rg) {
        t.set_backward(out, [iu = u.id(), iv = v.id(), self = out.id(), nx, ny, cosv](Tape& tp) {
            const double g = tp.grad_of(self)[0];
            const Tensor& xv = tp.value_of(iu);
            const Tensor& yv = tp.value_of(iv);
            if (Tensor* gu = tp.grad_ptr(iu)) {
                for (std::size_t i = 0; i < xv.numel(); ++i)
                    (*gu)[i] += g * (yv[i] / (nx * ny) - cosv * xv[i] / (nx * nx));
            }
            if (Tensor* gv = tp.grad_ptr(iv)) {
                for (std::size_t i = 0; i < yv.numel(); ++i)
                    (*gv)[i] += g * (xv[i] / (nx * ny) - cosv * yv[i] / (ny * ny));
            }
        });
    }
    return out;
}

// Log-probabilities via max-shifted log-sum-exp; exp of the output sums to 1.
inline Value softmax_log_probs(Value logits) {
    Tape& t = logits.tape();
    const Tensor& x = logits.val();
    if (x.rank() != 1 || x.numel() == 0) {
        throw DimensionError("softmax_log_probs: expected a non-empty vector");
    }
    double mx = x[0];
    for (std::size_t i = 1; i < x.numel(); ++i) mx = std::max(mx, x[i]);
    double s = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) s += std::exp(x[i] - mx);
    const double lse = mx + std::log(s);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] - lse;
    const bool rg = t.wants_grad(logits.id());
    Value v = t.push(std::move(out), rg, false);
    if (rg) {
        t.set_backward(v, [il = logits.id(), self = v.id()](Tape& tp) {
            const Tensor& g = tp.grad_of(self);
            const Tensor& y = tp.value_of(self);
            Tensor* gl = tp.grad_ptr(il);
            double gsum = 0.0;
            for (std::size_t i = 0; i < g.numel(); ++i) gsum += g[i];
            for (std::size_t i = 0; i < g.numel(); ++i)
                (*gl)[i] += g[i] - std::exp(y[i]) * gsum;
        });
    }
    return v;
}

} // namespace rulegrad
