#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "demonet/graph.hpp"
#include "demonet/tensor.hpp"

namespace demonet {

// Handle to a value recorded on a Tape.
struct Var {
    std::size_t id = std::numeric_limits<std::size_t>::max();
    bool valid() const { return id != std::numeric_limits<std::size_t>::max(); }
};

// Reverse-mode record. Values are appended in execution order; backward()
// visits them in reverse and lets each node push its output gradient into its
// inputs. Nodes that do not depend on a parameter keep no backward rule.
template <typename Real>
class Tape {
public:
    using Backward = std::function<void(Tape&, const Matrix<Real>& grad_out)>;

    Var constant(Matrix<Real> value) { return push(std::move(value), false, nullptr); }
    Var parameter(Matrix<Real> value) { return push(std::move(value), true, nullptr); }

    Var record(Matrix<Real> value, std::initializer_list<Var> inputs, Backward rule) {
        return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(rule));
    }

    Var record(Matrix<Real> value, std::span<const Var> inputs, Backward rule) {
        bool needs = false;
        for (Var v : inputs) needs = needs || nodes_.at(v.id).requires_grad;
        return push(std::move(value), needs, needs ? std::move(rule) : nullptr);
    }

    const Matrix<Real>& value(Var v) const { return nodes_.at(v.id).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    // Gradient after backward(); zeros when nothing reached the node.
    Matrix<Real> grad(Var v) const {
        const Node& n = nodes_.at(v.id);
        if (n.grad.size() == 0) return Matrix<Real>(n.value.rows(), n.value.cols());
        return n.grad;
    }

    // Accumulation buffer used by backward rules. Returns nullptr when the
    // node does not need a gradient.
    Matrix<Real>* grad_buffer(Var v) {
        Node& n = nodes_.at(v.id);
        if (!n.requires_grad) return nullptr;
        if (n.grad.size() == 0 && n.value.size() != 0) n.grad = Matrix<Real>(n.value.rows(), n.value.cols());
        return &n.grad;
    }

    void accumulate(Var v, const Matrix<Real>& g) {
        if (Matrix<Real>* buf = grad_buffer(v)) *buf += g;
    }

    void backward(Var loss) {
        Node& root = nodes_.at(loss.id);
        if (root.value.rows() != 1 || root.value.cols() != 1) throw ShapeError("backward needs a 1x1 loss");
        for (auto& n : nodes_) n.grad = Matrix<Real>();
        if (!root.requires_grad) return;
        root.grad = Matrix<Real>(1, 1, Real(1));
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (n.rule && n.grad.size() != 0) n.rule(*this, n.grad);
        }
    }

private:
    struct Node {
        Matrix<Real> value;
        Matrix<Real> grad;
        bool requires_grad = false;
        Backward rule;
    };

    Var push(Matrix<Real> value, bool needs, Backward rule) {
        assert(all_finite(value) && "non-finite value recorded on tape");
        nodes_.push_back(Node{std::move(value), {}, needs, std::move(rule)});
        return Var{nodes_.size() - 1};
    }

    std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Core differentiable operations.

template <typename Real>
Var matmul(Tape<Real>& t, Var a, Var b) {
    Matrix<Real> out = multiply(t.value(a), t.value(b));
    return t.record(std::move(out), {a, b}, [a, b](Tape<Real>& tp, const Matrix<Real>& g) {
        if (auto* ga = tp.grad_buffer(a)) gemm_nt_add(g, tp.value(b), *ga);
        if (auto* gb = tp.grad_buffer(b)) gemm_tn_add(tp.value(a), g, *gb);
    });
}

template <typename Real>
Var add(Tape<Real>& t, Var a, Var b) {
    const auto& x = t.value(a);
    const auto& y = t.value(b);
    if (!x.same_shape(y)) throw ShapeError("add shape mismatch " + x.shape_string() + " vs " + y.shape_string());
    Matrix<Real> out = x;
    out += y;
    return t.record(std::move(out), {a, b}, [a, b](Tape<Real>& tp, const Matrix<Real>& g) {
        tp.accumulate(a, g);
        tp.accumulate(b, g);
    });
}

template <typename Real>
Var scale(Tape<Real>& t, Var a, Real factor) {
    Matrix<Real> out = t.value(a);
    for (auto& x : out.data()) x *= factor;
    return t.record(std::move(out), {a}, [a, factor](Tape<Real>& tp, const Matrix<Real>& g) {
        if (auto* ga = tp.grad_buffer(a)) {
            for (std::size_t i = 0; i < g.size(); ++i) ga->data()[i] += factor * g.data()[i];
        }
    });
}

// max(0, x); the subgradient at exactly 0 is 0.
template <typename Real>
Var relu(Tape<Real>& t, Var a) {
    Matrix<Real> out = t.value(a);
    for (auto& x : out.data()) x = x > Real(0) ? x : Real(0);
    return t.record(std::move(out), {a}, [a](Tape<Real>& tp, const Matrix<Real>& g) {
        if (auto* ga = tp.grad_buffer(a)) {
            const auto& x = tp.value(a);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (x.data()[i] > Real(0)) ga->data()[i] += g.data()[i];
            }
        }
    });
}

// Column-wise concatenation [a | b].
template <typename Real>
Var concat(Tape<Real>& t, Var a, Var b) {
    const auto& x = t.value(a);
    const auto& y = t.value(b);
    if (x.rows() != y.rows()) throw ShapeError("concat row mismatch " + x.shape_string() + " vs " + y.shape_string());
    const std::size_t p = x.cols(), q = y.cols();
    Matrix<Real> out(x.rows(), p + q);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        std::copy(x.row(r).begin(), x.row(r).end(), out.row(r).begin());
        std::copy(y.row(r).begin(), y.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(p));
    }
    return t.record(std::move(out), {a, b}, [a, b, p, q](Tape<Real>& tp, const Matrix<Real>& g) {
        auto* ga = tp.grad_buffer(a);
        auto* gb = tp.grad_buffer(b);
        for (std::size_t r = 0; r < g.rows(); ++r) {
            auto row = g.row(r);
            if (ga) {
                for (std::size_t j = 0; j < p; ++j) (*ga)(r, j) += row[j];
            }
            if (gb) {
                for (std::size_t j = 0; j < q; ++j) (*gb)(r, j) += row[p + j];
            }
        }
    });
}

namespace detail {

// out[v] = sum of rows h[u] over u in N(v), summed in ascending u so the
// result does not depend on neighbor storage order.
template <typename Real>
Matrix<Real> neighbor_sum_values(const Graph& graph, const Matrix<Real>& h) {
    Matrix<Real> out(h.rows(), h.cols());
    std::vector<NodeId> sorted;
    const std::size_t f = h.cols();
    for (std::size_t v = 0; v < graph.num_nodes(); ++v) {
        auto nbrs = graph.neighbors(static_cast<NodeId>(v));
        if (!graph.rows_sorted()) {
            sorted.assign(nbrs.begin(), nbrs.end());
            std::sort(sorted.begin(), sorted.end());
            nbrs = sorted;
        }
        Real* o = out.row(v).data();
        for (NodeId u : nbrs) {
            const Real* src = h.row(static_cast<std::size_t>(u)).data();
            for (std::size_t j = 0; j < f; ++j) o[j] += src[j];
        }
    }
    return out;
}

}  // namespace detail

// Row v = sum of H[u] over the neighbors of v. The adjacency is symmetric, so
// the backward rule is the same operator.
template <typename Real>
Var neighbor_sum(Tape<Real>& t, const Graph& graph, Var h) {
    const auto& x = t.value(h);
    if (x.rows() != graph.num_nodes()) {
        throw ShapeError("neighbor_sum: " + std::to_string(x.rows()) + " rows for " + std::to_string(graph.num_nodes()) + " nodes");
    }
    const Graph* g = &graph;
    return t.record(detail::neighbor_sum_values(graph, x), {h}, [g, h](Tape<Real>& tp, const Matrix<Real>& grad) {
        if (auto* gh = tp.grad_buffer(h)) *gh += detail::neighbor_sum_values(*g, grad);
    });
}

// Elementwise product with a fixed mask (already carrying the 1/(1-p) scale).
template <typename Real>
Var apply_mask(Tape<Real>& t, Var a, Matrix<Real> mask) {
    const auto& x = t.value(a);
    if (!x.same_shape(mask)) throw ShapeError("mask shape mismatch");
    Matrix<Real> out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= mask.data()[i];
    return t.record(std::move(out), {a}, [a, mask = std::move(mask)](Tape<Real>& tp, const Matrix<Real>& g) {
        if (auto* ga = tp.grad_buffer(a)) {
            for (std::size_t i = 0; i < g.size(); ++i) ga->data()[i] += mask.data()[i] * g.data()[i];
        }
    });
}

// Sum of squared entries, as a 1x1 value.
template <typename Real>
Var sum_squares(Tape<Real>& t, Var a) {
    const auto& x = t.value(a);
    Real s = 0;
    for (Real v : x.data()) s += v * v;
    return t.record(Matrix<Real>(1, 1, s), {a}, [a](Tape<Real>& tp, const Matrix<Real>& g) {
        if (auto* ga = tp.grad_buffer(a)) {
            const auto& xv = tp.value(a);
            const Real scale = Real(2) * g(0, 0);
            for (std::size_t i = 0; i < xv.size(); ++i) ga->data()[i] += scale * xv.data()[i];
        }
    });
}

// Mean over masked rows of -log softmax(logits)[label].
template <typename Real>
Var softmax_xent_loss(Tape<Real>& t, Var logits, std::span<const int> labels, std::span<const std::size_t> mask) {
    const auto& z = t.value(logits);
    if (mask.empty()) throw ValidationError("cross-entropy over an empty mask");
    if (labels.size() != z.rows()) throw ShapeError("label count does not match logit rows");
    const std::size_t c = z.cols();
    Matrix<Real> probs(mask.size(), c);
    std::vector<int> picked(mask.size());
    double total = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const std::size_t r = mask[i];
        const int y = labels[r];
        if (y < 0 || static_cast<std::size_t>(y) >= c) {
            throw ValidationError("row " + std::to_string(r) + " has label " + std::to_string(y) + " outside 0.." + std::to_string(c - 1));
        }
        auto row = z.row(r);
        const Real mx = *std::max_element(row.begin(), row.end());
        double denom = 0;
        for (std::size_t j = 0; j < c; ++j) denom += std::exp(static_cast<double>(row[j] - mx));
        for (std::size_t j = 0; j < c; ++j) probs(i, j) = static_cast<Real>(std::exp(static_cast<double>(row[j] - mx)) / denom);
        total += std::log(denom) - static_cast<double>(row[y] - mx);
        picked[i] = y;
    }
    const Real loss = static_cast<Real>(total / static_cast<double>(mask.size()));
    std::vector<std::size_t> rows(mask.begin(), mask.end());
    return t.record(Matrix<Real>(1, 1, loss), {logits},
                    [logits, probs = std::move(probs), picked = std::move(picked), rows = std::move(rows)](
                        Tape<Real>& tp, const Matrix<Real>& g) {
                        auto* gz = tp.grad_buffer(logits);
                        if (!gz) return;
                        const Real s = g(0, 0) / static_cast<Real>(rows.size());
                        for (std::size_t i = 0; i < rows.size(); ++i) {
                            for (std::size_t j = 0; j < probs.cols(); ++j) {
                                const Real onehot = static_cast<int>(j) == picked[i] ? Real(1) : Real(0);
                                (*gz)(rows[i], j) += s * (probs(i, j) - onehot);
                            }
                        }
                    });
}

}  // namespace demonet
