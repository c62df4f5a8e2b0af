#include "supplycast/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "supplycast/errors.hpp"

namespace supplycast::ad {

namespace {

Tape& tape_of(Var a) {
    if (!a.valid()) throw std::invalid_argument("operation on an unbound variable");
    return *a.tape();
}

Tape& tape_of(Var a, Var b) {
    if (a.tape() != b.tape()) throw std::invalid_argument("operands recorded on different tapes");
    return tape_of(a);
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " + b.shape_string());
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) shape_mismatch(op, a, b);
}

// C += A * B (transpose flags select A^T or B^T).
void gemm_acc(const Tensor& a, bool ta, const Tensor& b, bool tb, Tensor& c) {
    const std::size_t m = ta ? a.cols() : a.rows();
    const std::size_t k = ta ? a.rows() : a.cols();
    const std::size_t n = tb ? b.rows() : b.cols();
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = &c(i, 0);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ta ? a(p, i) : a(i, p);
            if (av == 0.0) continue;
            if (!tb) {
                const double* brow = &b.values()[p * b.cols()];
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            } else {
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * b(j, p);
            }
        }
    }
}

}  // namespace

Var matmul(Var a, Var b) {
    auto& t = tape_of(a, b);
    const auto& av = a.value();
    const auto& bv = b.value();
    if (av.cols() != bv.rows()) shape_mismatch("matmul", av, bv);
    Tensor out(av.rows(), bv.cols(), 0.0);
    gemm_acc(av, false, bv, false, out);
    const auto ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        if (tp.requires_grad(ia)) gemm_acc(g, false, tp.value(ib), true, tp.grad_buffer(ia));
        if (tp.requires_grad(ib)) gemm_acc(tp.value(ia), true, g, false, tp.grad_buffer(ib));
    });
}

Var add(Var a, Var b) {
    auto& t = tape_of(a, b);
    require_same_shape("add", a.value(), b.value());
    Tensor out = a.value();
    out += b.value();
    const auto ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        if (tp.requires_grad(ia)) tp.grad_buffer(ia) += g;
        if (tp.requires_grad(ib)) tp.grad_buffer(ib) += g;
    });
}

Var sub(Var a, Var b) {
    auto& t = tape_of(a, b);
    require_same_shape("sub", a.value(), b.value());
    Tensor out = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    const auto ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        if (tp.requires_grad(ia)) tp.grad_buffer(ia) += g;
        if (tp.requires_grad(ib)) {
            auto& gb = tp.grad_buffer(ib);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

Var mul(Var a, Var b) {
    auto& t = tape_of(a, b);
    require_same_shape("mul", a.value(), b.value());
    Tensor out = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    const auto ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        if (tp.requires_grad(ia)) {
            auto& ga = tp.grad_buffer(ia);
            const auto& bv = tp.value(ib);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (tp.requires_grad(ib)) {
            auto& gb = tp.grad_buffer(ib);
            const auto& av = tp.value(ia);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
    });
}

Var scale(Var a, double factor) {
    auto& t = tape_of(a);
    Tensor out = a.value();
    for (auto& x : out.values()) x *= factor;
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia, factor](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        auto& ga = tp.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
    });
}

Var add_row(Var a, Var row) {
    auto& t = tape_of(a, row);
    const auto& av = a.value();
    const auto& rv = row.value();
    if (rv.rows() != 1 || rv.cols() != av.cols()) shape_mismatch("add_row", av, rv);
    Tensor out = av;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += rv(0, c);
    const auto ia = a.id(), ir = row.id();
    return t.record(std::move(out), {a, row}, [ia, ir](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        if (tp.requires_grad(ia)) tp.grad_buffer(ia) += g;
        if (tp.requires_grad(ir)) {
            auto& gr = tp.grad_buffer(ir);
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t c = 0; c < g.cols(); ++c) gr(0, c) += g(r, c);
        }
    });
}

Var mul_rows(Var a, Var s) {
    auto& t = tape_of(a, s);
    const auto& av = a.value();
    const auto& sv = s.value();
    if (sv.cols() != 1 || sv.rows() != av.rows()) shape_mismatch("mul_rows", av, sv);
    Tensor out = av;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) *= sv(r, 0);
    const auto ia = a.id(), is = s.id();
    return t.record(std::move(out), {a, s}, [ia, is](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        const auto& av = tp.value(ia);
        const auto& sv = tp.value(is);
        if (tp.requires_grad(ia)) {
            auto& ga = tp.grad_buffer(ia);
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += g(r, c) * sv(r, 0);
        }
        if (tp.requires_grad(is)) {
            auto& gs = tp.grad_buffer(is);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < g.cols(); ++c) acc += g(r, c) * av(r, c);
                gs(r, 0) += acc;
            }
        }
    });
}

Var mul_scalar(Var a, Var s) {
    auto& t = tape_of(a, s);
    const auto& sv = s.value();
    if (sv.size() != 1) shape_mismatch("mul_scalar", a.value(), sv);
    Tensor out = a.value();
    const double k = sv[0];
    for (auto& x : out.values()) x *= k;
    const auto ia = a.id(), is = s.id();
    return t.record(std::move(out), {a, s}, [ia, is](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        if (tp.requires_grad(ia)) {
            auto& ga = tp.grad_buffer(ia);
            const double k = tp.value(is)[0];
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += k * g[i];
        }
        if (tp.requires_grad(is)) {
            const auto& av = tp.value(ia);
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * av[i];
            tp.grad_buffer(is)[0] += acc;
        }
    });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    auto& t = tape_of(parts.front());
    const auto rows = parts.front().rows();
    std::size_t cols = 0;
    std::vector<std::size_t> ids, offsets;
    for (const auto& p : parts) {
        if (p.tape() != &t) throw std::invalid_argument("concat_cols: operands recorded on different tapes");
        if (p.rows() != rows) shape_mismatch("concat_cols", parts.front().value(), p.value());
        ids.push_back(p.id());
        offsets.push_back(cols);
        cols += p.cols();
    }
    Tensor out(rows, cols, 0.0);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto& v = parts[k].value();
        for (std::size_t r = 0; r < rows; ++r)
            std::copy(v.row_span(r).begin(), v.row_span(r).end(), out.row_span(r).begin() + offsets[k]);
    }
    return t.record(std::move(out), parts, [ids, offsets](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (!tp.requires_grad(ids[k])) continue;
            auto& gk = tp.grad_buffer(ids[k]);
            for (std::size_t r = 0; r < gk.rows(); ++r)
                for (std::size_t c = 0; c < gk.cols(); ++c) gk(r, c) += g(r, offsets[k] + c);
        }
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
    auto& t = tape_of(parts.front());
    const auto cols = parts.front().cols();
    std::size_t rows = 0;
    std::vector<std::size_t> ids, offsets;
    for (const auto& p : parts) {
        if (p.tape() != &t) throw std::invalid_argument("concat_rows: operands recorded on different tapes");
        if (p.cols() != cols) shape_mismatch("concat_rows", parts.front().value(), p.value());
        ids.push_back(p.id());
        offsets.push_back(rows);
        rows += p.rows();
    }
    Tensor out(rows, cols, 0.0);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto& v = parts[k].value();
        std::copy(v.values().begin(), v.values().end(), out.values().begin() + offsets[k] * cols);
    }
    return t.record(std::move(out), parts, [ids, offsets](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (!tp.requires_grad(ids[k])) continue;
            auto& gk = tp.grad_buffer(ids[k]);
            const auto base = offsets[k] * g.cols();
            for (std::size_t i = 0; i < gk.size(); ++i) gk[i] += g[base + i];
        }
    });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
    auto& t = tape_of(a);
    const auto& av = a.value();
    if (begin > end || end > av.cols()) {
        throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") outside shape " + av.shape_string());
    }
    Tensor out(av.rows(), end - begin, 0.0);
    for (std::size_t r = 0; r < av.rows(); ++r)
        for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = av(r, c);
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia, begin](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        auto& ga = tp.grad_buffer(ia);
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) ga(r, begin + c) += g(r, c);
    });
}

Var gather_rows(Var a, std::span<const std::size_t> index) {
    auto& t = tape_of(a);
    const auto& av = a.value();
    Tensor out(index.size(), av.cols(), 0.0);
    for (std::size_t k = 0; k < index.size(); ++k) {
        if (index[k] >= av.rows()) throw ShapeError("gather_rows: index out of range for shape " + av.shape_string());
        std::copy(av.row_span(index[k]).begin(), av.row_span(index[k]).end(), out.row_span(k).begin());
    }
    std::vector<std::size_t> idx(index.begin(), index.end());
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia, idx = std::move(idx)](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        auto& ga = tp.grad_buffer(ia);
        for (std::size_t k = 0; k < idx.size(); ++k)
            for (std::size_t c = 0; c < g.cols(); ++c) ga(idx[k], c) += g(k, c);
    });
}

Var scatter_add_rows(Var a, std::span<const std::size_t> index, std::size_t rows) {
    auto& t = tape_of(a);
    const auto& av = a.value();
    if (index.size() != av.rows()) {
        throw ShapeError("scatter_add_rows: " + std::to_string(index.size()) + " indices for shape " +
                         av.shape_string());
    }
    Tensor out(rows, av.cols(), 0.0);
    for (std::size_t k = 0; k < index.size(); ++k) {
        if (index[k] >= rows) throw ShapeError("scatter_add_rows: index out of range");
        for (std::size_t c = 0; c < av.cols(); ++c) out(index[k], c) += av(k, c);
    }
    std::vector<std::size_t> idx(index.begin(), index.end());
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia, idx = std::move(idx)](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        auto& ga = tp.grad_buffer(ia);
        for (std::size_t k = 0; k < idx.size(); ++k)
            for (std::size_t c = 0; c < g.cols(); ++c) ga(k, c) += g(idx[k], c);
    });
}

Var leaky_relu(Var a, double slope) {
    auto& t = tape_of(a);
    Tensor out = a.value();
    for (auto& x : out.values()) x = x > 0.0 ? x : slope * x;
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia, slope](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        const auto& x = tp.value(ia);
        auto& ga = tp.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (x[i] > 0.0 ? 1.0 : slope);
    });
}

Var sigmoid(Var a) {
    auto& t = tape_of(a);
    Tensor out = a.value();
    for (auto& x : out.values()) {
        x = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        const auto& y = tp.value(self);
        auto& ga = tp.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
    });
}

namespace {

// Softmax over `count` entries starting at `base` separated by `stride`.
void softmax_strided(const double* in, double* out, std::size_t count, std::size_t stride) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < count; ++k) peak = std::max(peak, in[k * stride]);
    double total = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        out[k * stride] = std::exp(in[k * stride] - peak);
        total += out[k * stride];
    }
    for (std::size_t k = 0; k < count; ++k) out[k * stride] /= total;
}

// dx = y * (dy - sum(dy * y)) over one softmax group.
void softmax_backward_strided(const double* y, const double* dy, double* dx, std::size_t count,
                              std::size_t stride, double factor) {
    double dot = 0.0;
    for (std::size_t k = 0; k < count; ++k) dot += dy[k * stride] * y[k * stride];
    for (std::size_t k = 0; k < count; ++k) dx[k * stride] += factor * y[k * stride] * (dy[k * stride] - dot);
}

}  // namespace

Var softmax(Var a, int axis) {
    if (axis != 0 && axis != 1) throw std::invalid_argument("softmax: axis must be 0 or 1");
    auto& t = tape_of(a);
    const auto& av = a.value();
    Tensor out(av.rows(), av.cols(), 0.0);
    const std::size_t groups = axis == 1 ? av.rows() : av.cols();
    const std::size_t count = axis == 1 ? av.cols() : av.rows();
    const std::size_t stride = axis == 1 ? 1 : av.cols();
    const std::size_t step = axis == 1 ? av.cols() : 1;
    for (std::size_t g = 0; g < groups; ++g) {
        softmax_strided(av.values().data() + g * step, out.values().data() + g * step, count, stride);
    }
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia, groups, count, stride, step](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        const auto& y = tp.value(self);
        auto& ga = tp.grad_buffer(ia);
        for (std::size_t k = 0; k < groups; ++k) {
            softmax_backward_strided(y.values().data() + k * step, g.values().data() + k * step,
                                     ga.values().data() + k * step, count, stride, 1.0);
        }
    });
}

Var segment_softmax(Var scores, std::span<const std::size_t> segment, std::size_t segment_count) {
    auto& t = tape_of(scores);
    const auto& sv = scores.value();
    if (sv.cols() != 1 || sv.rows() != segment.size()) {
        throw ShapeError("segment_softmax: scores of shape " + sv.shape_string() + " with " +
                         std::to_string(segment.size()) + " segment ids");
    }
    std::vector<double> peak(segment_count, -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < segment.size(); ++k) {
        if (segment[k] >= segment_count) throw ShapeError("segment_softmax: segment id out of range");
        peak[segment[k]] = std::max(peak[segment[k]], sv[k]);
    }
    Tensor out(sv.rows(), 1, 0.0);
    std::vector<double> total(segment_count, 0.0);
    for (std::size_t k = 0; k < segment.size(); ++k) {
        out[k] = std::exp(sv[k] - peak[segment[k]]);
        total[segment[k]] += out[k];
    }
    for (std::size_t k = 0; k < segment.size(); ++k) out[k] /= total[segment[k]];
    std::vector<std::size_t> seg(segment.begin(), segment.end());
    const auto is = scores.id();
    return t.record(std::move(out), {scores}, [is, seg = std::move(seg), segment_count](Tape& tp, std::size_t self) {
        const auto& g = tp.grad_buffer(self);
        const auto& y = tp.value(self);
        std::vector<double> dot(segment_count, 0.0);
        for (std::size_t k = 0; k < seg.size(); ++k) dot[seg[k]] += g[k] * y[k];
        auto& gs = tp.grad_buffer(is);
        for (std::size_t k = 0; k < seg.size(); ++k) gs[k] += y[k] * (g[k] - dot[seg[k]]);
    });
}

Var sum(Var a) {
    auto& t = tape_of(a);
    double total = 0.0;
    for (double x : a.value().values()) total += x;
    const auto ia = a.id();
    return t.record(Tensor::scalar(total), {a}, [ia](Tape& tp, std::size_t self) {
        const double g = tp.grad_buffer(self)[0];
        for (auto& x : tp.grad_buffer(ia).values()) x += g;
    });
}

Var squared_error(Var a, Var b) {
    auto& t = tape_of(a, b);
    require_same_shape("squared_error", a.value(), b.value());
    const auto& av = a.value();
    const auto& bv = b.value();
    double total = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) total += (av[i] - bv[i]) * (av[i] - bv[i]);
    const auto ia = a.id(), ib = b.id();
    return t.record(Tensor::scalar(total), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
        const double g = tp.grad_buffer(self)[0];
        const auto& av = tp.value(ia);
        const auto& bv = tp.value(ib);
        if (tp.requires_grad(ia)) {
            auto& ga = tp.grad_buffer(ia);
            for (std::size_t i = 0; i < av.size(); ++i) ga[i] += 2.0 * g * (av[i] - bv[i]);
        }
        if (tp.requires_grad(ib)) {
            auto& gb = tp.grad_buffer(ib);
            for (std::size_t i = 0; i < av.size(); ++i) gb[i] -= 2.0 * g * (av[i] - bv[i]);
        }
    });
}

Tensor gumbel_noise(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Tensor out(rows, cols, 0.0);
    for (auto& x : out.values()) {
        double u = unit(rng);
        while (u <= 0.0) u = unit(rng);
        x = -std::log(-std::log(u));
    }
    return out;
}

Var gumbel_softmax(Var logits, const Tensor& noise, double temperature, bool hard) {
    if (!(temperature > 0.0)) throw std::invalid_argument("gumbel_softmax: temperature must be positive");
    auto& t = tape_of(logits);
    const auto& lv = logits.value();
    require_same_shape("gumbel_softmax", lv, noise);
    Tensor perturbed = lv;
    for (std::size_t i = 0; i < perturbed.size(); ++i) perturbed[i] = (perturbed[i] + noise[i]) / temperature;
    Tensor soft(lv.rows(), lv.cols(), 0.0);
    for (std::size_t r = 0; r < lv.rows(); ++r) {
        softmax_strided(perturbed.row_span(r).data(), soft.row_span(r).data(), lv.cols(), 1);
    }
    Tensor out = soft;
    if (hard) {
        for (std::size_t r = 0; r < out.rows(); ++r) {
            auto row = out.row_span(r);
            const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
            std::fill(row.begin(), row.end(), 0.0);
            row[best] = 1.0;
        }
    }
    const auto il = logits.id();
    // The soft sample drives the backward rule in both modes.
    return t.record(std::move(out), {logits},
                    [il, soft = std::move(soft), temperature](Tape& tp, std::size_t self) {
                        const auto& g = tp.grad_buffer(self);
                        auto& gl = tp.grad_buffer(il);
                        for (std::size_t r = 0; r < g.rows(); ++r) {
                            softmax_backward_strided(soft.row_span(r).data(), g.row_span(r).data(),
                                                     gl.row_span(r).data(), g.cols(), 1, 1.0 / temperature);
                        }
                    });
}

Var gumbel_softmax(Var logits, double temperature, bool hard, std::mt19937_64& rng) {
    if (!(temperature > 0.0)) throw std::invalid_argument("gumbel_softmax: temperature must be positive");
    return gumbel_softmax(logits, gumbel_noise(logits.rows(), logits.cols(), rng), temperature, hard);
}

}  // namespace supplycast::ad
