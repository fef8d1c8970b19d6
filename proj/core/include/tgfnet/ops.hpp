#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tgfnet/tape.hpp"
#include "tgfnet/tensor.hpp"

// Differentiable tensor operations. Every op takes the tape it records onto;
// with an inference tape nothing is recorded.
//
// Broadcasting is deliberately narrow: an operand may be broadcast across
// leading dimensions (its shape equals a suffix of the other operand's shape,
// i.e. an implicit leading extent of 1), and row_scale broadcasts one scalar
// per row. Anything else is a ShapeError.
namespace tgfnet::ops {

// Batched product [...,m,k] x [...,k,n]. Leading extents must match, or one
// side's leading extents must all be 1 (including a plain rank-2 matrix).
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& x, double factor);

// x: [...,L,D], s: [...,L]; out[...,l,:] = s[...,l] * x[...,l,:].
Tensor row_scale(Tape& tape, const Tensor& x, const Tensor& s);

Tensor concat(Tape& tape, std::span<const Tensor> parts, std::size_t axis);
Tensor transpose_last2(Tape& tape, const Tensor& x);
Tensor reshape(Tape& tape, const Tensor& x, Shape shape);
// [a,b,c,d] -> [a,c,b,d]; used to move heads next to the batch axis.
Tensor swap_axes_1_2(Tape& tape, const Tensor& x);
// [B,L,D] -> [B,h,L,D/h] and back.
Tensor split_heads(Tape& tape, const Tensor& x, std::size_t heads);
Tensor merge_heads(Tape& tape, const Tensor& x);

Tensor sum_axis(Tape& tape, const Tensor& x, std::size_t axis);
Tensor mean_axis(Tape& tape, const Tensor& x, std::size_t axis);
Tensor sum_all(Tape& tape, const Tensor& x);

Tensor softmax(Tape& tape, const Tensor& x, std::size_t axis);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor relu(Tape& tape, const Tensor& x);
Tensor exp(Tape& tape, const Tensor& x);
Tensor log(Tape& tape, const Tensor& x);

// x: [B,L,D] or [1,L,D] (shared across the batch); idx: one list per batch
// item, all of equal length. Backward scatters additively into source rows.
Tensor gather_rows(Tape& tape, const Tensor& x,
                   const std::vector<std::vector<std::size_t>>& idx);

// Indices of the k largest values, ordered by descending value then ascending
// index. Not differentiable.
std::vector<std::size_t> topk_indices(std::span<const double> values, std::size_t k);

}  // namespace tgfnet::ops
