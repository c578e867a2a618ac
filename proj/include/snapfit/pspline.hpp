#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "snapfit/doe.hpp"
#include "snapfit/errors.hpp"
#include "snapfit/oracle.hpp"

namespace snapfit::pspline {

// Clamped knot vector: boundary knots repeated degree+1 times, interior
// knots strictly increasing inside the domain.
struct KnotVector {
  int degree = 3;
  double domain_lo = 0.0;
  double domain_hi = 1.0;
  std::vector<double> interior;

  static KnotVector uniform(std::size_t n_interior, double lo = 0.0,
                            double hi = 1.0, int degree = 3);

  std::size_t n_basis() const { return interior.size() + degree + 1; }
  std::vector<double> full() const;
  void validate() const;

  bool operator==(const KnotVector&) const = default;
};

struct SplineModel {
  KnotVector knots;
  Eigen::VectorXd beta;
  double lambda = 0.0;
  int penalty_order = 2;

  double eval(double x) const;
  // Value and derivatives up to `order` at x, taken from the right
  // except at the domain's upper end.
  std::vector<double> eval_derivatives(double x, int order) const;
};

// Per-interval cubic p_i(x) = a(x-x_i)^3 + b(x-x_i)^2 + c(x-x_i) + d.
struct PiecewiseCubic {
  struct Coeffs {
    double a, b, c, d;
  };
  std::vector<double> breakpoints;
  std::vector<Coeffs> coeffs;
};

// Main-effects model on spline coefficients: beta(z) = beta0 + sum_j z_j e_j.
struct CoeffResponseModel {
  KnotVector knots;
  Eigen::VectorXd beta0;
  std::vector<Eigen::VectorXd> effects;
  std::vector<std::string> factor_names;
};

// Row r holds B_k(x_r) for every basis function k (Cox-de Boor).
Eigen::MatrixXd basis_matrix(const std::vector<double>& x,
                             const KnotVector& knots);

// Second-order difference operator on coefficients, (n-2) x n.
Eigen::MatrixXd difference_matrix(std::size_t n_basis, int order = 2);

// Divided-difference penalty operator over the Greville abscissae of the
// knot vector, scaled so it reduces to difference_matrix on uniformly
// spaced abscissae. Its null space consists of coefficient vectors whose
// spline is exactly a polynomial of degree < order, which plain index
// differences do not give near clamped boundaries.
Eigen::MatrixXd penalty_matrix(const KnotVector& knots, int order = 2);

// Penalized least squares: argmin ||y - B beta||^2 + lambda ||D2 beta||^2.
SplineModel fit(const oracle::ForceProfile& y, std::size_t n_interior_knots,
                double lambda);

struct GcvResult {
  double lambda;
  double gcv;
  double rss;
  double edf;  // tr(H)
};

GcvResult gcv_score(const oracle::ForceProfile& y, std::size_t n_interior_knots,
                    double lambda);

// Grid minimizer of GCV(lambda) = n RSS / (n - tr(H))^2, ties toward
// the larger lambda.
double select_lambda(const oracle::ForceProfile& y,
                     std::size_t n_interior_knots,
                     const std::vector<double>& grid);

PiecewiseCubic to_piecewise(const SplineModel& model);
double eval_piecewise(const PiecewiseCubic& pw, double x);

// Least-squares main-effects regression of each spline coefficient on
// the coded factors; runs and models aligned by index.
CoeffResponseModel fit_response(const std::vector<doe::CodedRun>& runs,
                                const std::vector<SplineModel>& models);

oracle::ForceProfile predict_profile(const CoeffResponseModel& crm,
                                     const std::vector<double>& z,
                                     std::size_t n_points,
                                     const std::string& run_id = "");
oracle::ForceProfile predict_profile(const CoeffResponseModel& crm,
                                     const doe::CodedRun& run,
                                     std::size_t n_points);

// Evaluate a fitted spline on a uniform n-point grid over its domain.
oracle::ForceProfile sample_spline(const SplineModel& model,
                                   std::size_t n_points,
                                   const std::string& run_id);

}  // namespace snapfit::pspline
