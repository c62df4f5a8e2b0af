#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "supplycast/autodiff/tape.hpp"

namespace supplycast::ad {

// Linear algebra and elementwise arithmetic. Shape mismatches throw
// ShapeError quoting both shapes.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// a (r x c) plus a 1 x c row broadcast over every row.
Var add_row(Var a, Var row);
/// Row i of a (r x c) multiplied by s(i, 0); s is r x 1.
Var mul_rows(Var a, Var s);
/// Every entry of a multiplied by the 1 x 1 value s.
Var mul_scalar(Var a, Var s);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, std::size_t begin, std::size_t end);

/// out.row(k) = a.row(index[k]).
Var gather_rows(Var a, std::span<const std::size_t> index);
/// out.row(index[k]) += a.row(k), out has `rows` rows.
Var scatter_add_rows(Var a, std::span<const std::size_t> index, std::size_t rows);

Var leaky_relu(Var a, double slope = 0.01);
Var sigmoid(Var a);
/// Softmax along axis 1 (each row) or axis 0 (each column).
Var softmax(Var a, int axis = 1);
/// Softmax of a column vector within groups: entries sharing segment[k] are
/// normalized together.
Var segment_softmax(Var scores, std::span<const std::size_t> segment, std::size_t segment_count);

Var sum(Var a);
/// sum((a - b)^2) as a 1 x 1 value.
Var squared_error(Var a, Var b);

/// Row-wise Gumbel-Softmax with explicit noise (same shape as logits).
/// Soft: softmax((logits + noise) / temperature). Hard: one-hot at the soft
/// argmax with the soft backward rule (straight-through).
Var gumbel_softmax(Var logits, const Tensor& noise, double temperature, bool hard);
Var gumbel_softmax(Var logits, double temperature, bool hard, std::mt19937_64& rng);

/// Standard Gumbel(0, 1) draws.
Tensor gumbel_noise(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

}  // namespace supplycast::ad
