#pragma once

#include <span>
#include <vector>

namespace metaratio {

/// Positive linear combination sum_j lambda_j Z_j^2 of independent squared
/// standard normals. Coefficients are positive and sorted descending.
struct WeightedChiSq {
  std::vector<double> lambdas;
};

/// Coefficients of the quadratic form Q_a = y' B y, B = diag(a) - a a'/sum(a),
/// for y ~ N(theta 1, diag(marginal_vars)). Returns the K-1 positive
/// eigenvalues of diag(s)^1/2 B diag(s)^1/2.
///
/// The matrix is a diagonal minus a rank-one update, so its eigenvalues are
/// the roots of the secular equation 1 = sum_i u_i^2 / (d_i - x), one between
/// each pair of consecutive distinct d_i. Ties in d are deflated first.
/// Eigenvalues below 1e-12 times the largest are dropped.
WeightedChiSq q_eigenvalues(std::span<const double> a, std::span<const double> marginal_vars);

/// P(sum_j lambda_j Z_j^2 <= x) to an absolute accuracy of 1e-6 or better.
///
/// Equal coefficients reduce to a scaled chi-square CDF. Otherwise Ruben's
/// mixture-of-chi-squares series is tried first (positive terms, so its
/// truncation error is bounded), and Imhof's numerical inversion of the
/// characteristic function covers the cases where the series is slow.
/// Throws ToleranceNotMet when the quadrature cannot certify its error.
double cdf_weighted_chisq(const WeightedChiSq& w, double x);

namespace detail {
/// Individual evaluation routes, exposed for cross-checking.
double weighted_chisq_cdf_imhof(std::span<const double> lambdas, double x);
/// Returns a negative value when the series would need more than
/// `max_terms` terms.
double weighted_chisq_cdf_ruben(std::span<const double> lambdas, double x,
                                std::size_t max_terms = 400);
}  // namespace detail

}  // namespace metaratio
