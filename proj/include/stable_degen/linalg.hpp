#pragma once

#include "stable_degen/quadrature.hpp"

#include <Eigen/Dense>

#include <vector>

namespace stable_degen {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

struct Nullspace {
    CMatrix basis;              // orthonormal columns spanning the numerical kernel
    RVector singular_values;    // descending, padded with zeros to the column count
    int rank = 0;
    /// sigma_rank / sigma_{rank+1}, with exact zeros replaced by sigma_1 times machine epsilon.
    double gap = 0.0;
};

/// Kernel by SVD. The rank is the first index where consecutive singular
/// values drop by at least `relative_gap`; without such a drop the matrix is
/// treated as full rank.
Nullspace numerical_nullspace(const CMatrix& a, double relative_gap = 1e6);

/// Rescale each row to unit Euclidean norm (zero rows are left alone).
void normalize_rows(CMatrix& a);

/// Upper-triangular T with T^* G T = I, from G = L L^*. Throws NumericalError
/// if G is not numerically positive definite.
CMatrix cholesky_whitening(const CMatrix& gram);

double condition_number(const CMatrix& a);

/// Fubini-Study distance sqrt(1 - |<a,b>|^2) of unit vectors.
double fs_distance(const CVector& a, const CVector& b);

struct Alignment {
    CMatrix unitary;
    double residual = 0.0;    // RMS Fubini-Study distance after alignment
    int iterations = 0;
    bool degenerate = false;  // fewer than dim independent lifts
};

/// Unitary U minimizing sum_i min_phi |U a_i - e^{i phi} b_i|^2 over paired
/// unit columns of a and b: alternating phase alignment and unitary Procrustes.
Alignment unitary_align(const CMatrix& a, const CMatrix& b, int max_iterations = 50,
                        double stagnation = 1e-12);

/// Cosines of the principal angles between the column spans of a and b.
RVector principal_cosines(const CMatrix& a, const CMatrix& b);

}  // namespace stable_degen
