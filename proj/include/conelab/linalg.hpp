#pragma once

#include <Eigen/Dense>

#include "conelab/rng.hpp"

namespace conelab {

// Orthonormal basis of the column span of M, dependent columns dropped by the
// shared relative singular-value cutoff. Returns a d x r matrix, r = rank.
Mat orthonormal_span(const Mat& M);

// Orthonormal basis of the right null space of M (d = M.cols()).
Mat null_space_basis(const Mat& M);

// Orthonormal basis of the orthogonal complement of the span of Q, where Q
// already has orthonormal columns.
Mat orthonormal_complement(const Mat& Q);

// Largest singular value by power iteration on G^T G (deterministic start).
double sigma_max_power(const Mat& G);

}  // namespace conelab
