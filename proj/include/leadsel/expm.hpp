#pragma once

#include <Eigen/Dense>

namespace leadsel {

/// exp(A) for a Metzler matrix A (off-diagonal entries >= 0).
///
/// Shifts A by cI so the working matrix is entrywise nonnegative, scales it
/// by 2^-s until its 1-norm is at most 1/2, sums a degree-16 Taylor
/// polynomial with Paterson-Stockmeyer, and squares back. Every intermediate
/// is a nonnegative matrix, so there is no cancellation: small entries of the
/// result keep their relative accuracy and the output is never negative.
Eigen::MatrixXd expm_metzler(const Eigen::MatrixXd& a);

/// e^{-L t} for a leader-absorbing Laplacian L (zero row sums, nonpositive
/// off-diagonals), t >= 0. Zero rows of L map to identity rows exactly;
/// entries are clipped at -1e-12 and rows renormalized to sum to 1.
/// Throws DomainError on non-Laplacian input or negative t.
Eigen::MatrixXd expm_neg(const Eigen::MatrixXd& laplacian, double t);

}  // namespace leadsel
