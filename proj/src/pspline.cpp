#include "snapfit/pspline.hpp"

#include <algorithm>
#include <cmath>

namespace snapfit::pspline {

namespace {

// Index of the knot span containing x: largest i with t[i] <= x < t[i+1],
// with x == domain_hi assigned to the last nonempty span.
std::size_t find_span(const std::vector<double>& t, int degree, double x) {
  const std::size_t n = t.size() - degree - 2;  // last basis index
  if (x >= t[n + 1]) return n;
  if (x <= t[degree]) return degree;
  auto it = std::upper_bound(t.begin() + degree, t.begin() + n + 1, x);
  return static_cast<std::size_t>(it - t.begin()) - 1;
}

// Nonzero basis values B_{span-degree..span}(x), Cox-de Boor triangle.
std::vector<double> basis_funs(const std::vector<double>& t, std::size_t span,
                               int degree, double x) {
  std::vector<double> n_vals(degree + 1, 0.0);
  std::vector<double> left(degree + 1, 0.0), right(degree + 1, 0.0);
  n_vals[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    left[j] = x - t[span + 1 - j];
    right[j] = t[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom != 0.0 ? n_vals[r] / denom : 0.0;
      n_vals[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n_vals[j] = saved;
  }
  return n_vals;
}

// Basis values and derivatives up to order n at x; ders[k][j] is the
// k-th derivative of B_{span-degree+j}.
std::vector<std::vector<double>> ders_basis_funs(const std::vector<double>& t,
                                                 std::size_t span, int degree,
                                                 double x, int n) {
  const int p = degree;
  std::vector<std::vector<double>> ndu(p + 1, std::vector<double>(p + 1, 0.0));
  std::vector<double> left(p + 1, 0.0), right(p + 1, 0.0);
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - t[span + 1 - j];
    right[j] = t[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[j][r] != 0.0 ? ndu[r][j - 1] / ndu[j][r] : 0.0;
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }

  std::vector<std::vector<double>> ders(n + 1, std::vector<double>(p + 1, 0.0));
  for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];

  std::vector<std::vector<double>> a(2, std::vector<double>(p + 1, 0.0));
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= n; ++k) {
      double d = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        a[s2][0] = ndu[pk + 1][rk] != 0.0 ? a[s1][0] / ndu[pk + 1][rk] : 0.0;
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = r - 1 <= pk ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = ndu[pk + 1][rk + j] != 0.0
                       ? (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j]
                       : 0.0;
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = ndu[pk + 1][r] != 0.0 ? -a[s1][k - 1] / ndu[pk + 1][r] : 0.0;
        d += a[s2][k] * ndu[r][pk];
      }
      ders[k][r] = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= n; ++k) {
    for (int j = 0; j <= p; ++j) ders[k][j] *= factor;
    factor *= (p - k);
  }
  return ders;
}

struct NormalSystem {
  Eigen::MatrixXd basis;         // n x nb
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::MatrixXd btb;           // Bt B
  Eigen::VectorXd bty;           // Bt y
};

NormalSystem build_normal_system(const oracle::ForceProfile& y,
                                 const KnotVector& knots, double lambda,
                                 int penalty_order) {
  if (lambda < 0.0) throw NumericError("fit: lambda must be >= 0");
  NormalSystem sys;
  sys.basis = basis_matrix(y.displacement, knots);
  const Eigen::Map<const Eigen::VectorXd> yv(y.force.data(),
                                             static_cast<long>(y.force.size()));
  sys.btb = sys.basis.transpose() * sys.basis;
  sys.bty = sys.basis.transpose() * yv;

  const Eigen::MatrixXd d = penalty_matrix(knots, penalty_order);
  Eigen::MatrixXd m = sys.btb + lambda * (d.transpose() * d);
  sys.llt.compute(m);
  if (sys.llt.info() != Eigen::Success) {
    m.diagonal().array() += 1e-12 * m.trace();
    sys.llt.compute(m);
    if (sys.llt.info() != Eigen::Success) {
      throw SingularSystem("fit: normal matrix not positive definite");
    }
  }
  return sys;
}

}  // namespace

KnotVector KnotVector::uniform(std::size_t n_interior, double lo, double hi,
                               int degree) {
  KnotVector k;
  k.degree = degree;
  k.domain_lo = lo;
  k.domain_hi = hi;
  k.interior.resize(n_interior);
  for (std::size_t i = 0; i < n_interior; ++i) {
    k.interior[i] = lo + (hi - lo) * static_cast<double>(i + 1) /
                             static_cast<double>(n_interior + 1);
  }
  k.validate();
  return k;
}

std::vector<double> KnotVector::full() const {
  std::vector<double> t;
  t.reserve(interior.size() + 2 * (degree + 1));
  t.insert(t.end(), degree + 1, domain_lo);
  t.insert(t.end(), interior.begin(), interior.end());
  t.insert(t.end(), degree + 1, domain_hi);
  return t;
}

void KnotVector::validate() const {
  if (degree < 1) throw NumericError("knots: degree must be >= 1");
  if (!(domain_lo < domain_hi)) throw NumericError("knots: empty domain");
  double prev = domain_lo;
  for (double k : interior) {
    if (!(k > prev) || !(k < domain_hi)) {
      throw NumericError("knots: interior knots must increase strictly inside the domain");
    }
    prev = k;
  }
}

Eigen::MatrixXd basis_matrix(const std::vector<double>& x,
                             const KnotVector& knots) {
  knots.validate();
  const std::vector<double> t = knots.full();
  const int p = knots.degree;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<long>(x.size()),
                                            static_cast<long>(knots.n_basis()));
  for (std::size_t r = 0; r < x.size(); ++r) {
    if (x[r] < knots.domain_lo || x[r] > knots.domain_hi) {
      throw OutOfDomain("basis_matrix: x outside the knot domain");
    }
    const std::size_t span = find_span(t, p, x[r]);
    const std::vector<double> vals = basis_funs(t, span, p, x[r]);
    for (int j = 0; j <= p; ++j) {
      b(static_cast<long>(r), static_cast<long>(span - p + j)) = vals[j];
    }
  }
  return b;
}

Eigen::MatrixXd difference_matrix(std::size_t n_basis, int order) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(static_cast<long>(n_basis),
                                                static_cast<long>(n_basis));
  for (int k = 0; k < order; ++k) {
    const long rows = d.rows() - 1;
    Eigen::MatrixXd next(rows, d.cols());
    next = d.bottomRows(rows) - d.topRows(rows);
    d = std::move(next);
  }
  return d;
}

Eigen::MatrixXd penalty_matrix(const KnotVector& knots, int order) {
  if (order < 1) throw NumericError("penalty_matrix: order must be >= 1");
  const std::vector<double> t = knots.full();
  const long m = static_cast<long>(knots.n_basis());
  std::vector<double> xi(static_cast<std::size_t>(m));
  for (long k = 0; k < m; ++k) {
    double s = 0.0;
    for (int j = 1; j <= knots.degree; ++j) {
      s += t[static_cast<std::size_t>(k) + static_cast<std::size_t>(j)];
    }
    xi[static_cast<std::size_t>(k)] = s / knots.degree;
  }
  const double h = (xi.back() - xi.front()) / static_cast<double>(m - 1);

  // Divided differences built by the usual recurrence; each stage maps
  // row weights for [xi_k .. xi_{k+j}] to [xi_k .. xi_{k+j+1}].
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(m, m);
  double scale = 1.0;
  for (int j = 0; j < order; ++j) {
    const long rows = d.rows() - 1;
    Eigen::MatrixXd next(rows, m);
    for (long k = 0; k < rows; ++k) {
      const double span = xi[static_cast<std::size_t>(k + j + 1)] -
                          xi[static_cast<std::size_t>(k)];
      next.row(k) = (d.row(k + 1) - d.row(k)) / span;
    }
    d = std::move(next);
    scale *= h * static_cast<double>(j + 1);
  }
  return scale * d;
}

double SplineModel::eval(double x) const {
  const std::vector<double> t = knots.full();
  if (x < knots.domain_lo || x > knots.domain_hi) {
    throw OutOfDomain("spline eval: x outside the knot domain");
  }
  const std::size_t span = find_span(t, knots.degree, x);
  const std::vector<double> vals = basis_funs(t, span, knots.degree, x);
  double s = 0.0;
  for (int j = 0; j <= knots.degree; ++j) {
    s += vals[j] * beta(static_cast<long>(span - knots.degree + j));
  }
  return s;
}

std::vector<double> SplineModel::eval_derivatives(double x, int order) const {
  const std::vector<double> t = knots.full();
  if (x < knots.domain_lo || x > knots.domain_hi) {
    throw OutOfDomain("spline eval: x outside the knot domain");
  }
  const std::size_t span = find_span(t, knots.degree, x);
  const auto ders = ders_basis_funs(t, span, knots.degree, x, order);
  std::vector<double> out(order + 1, 0.0);
  for (int k = 0; k <= order; ++k) {
    for (int j = 0; j <= knots.degree; ++j) {
      out[k] += ders[k][j] * beta(static_cast<long>(span - knots.degree + j));
    }
  }
  return out;
}

SplineModel fit(const oracle::ForceProfile& y, std::size_t n_interior_knots,
                double lambda) {
  if (n_interior_knots < 1) throw NumericError("fit: need >= 1 interior knot");
  y.validate();
  SplineModel model;
  model.knots = KnotVector::uniform(n_interior_knots);
  model.lambda = lambda;
  // QR on the augmented system [B; sqrt(lambda) D] rather than the normal
  // equations: the squared condition number of B^T B + lambda D^T D loses
  // several digits once lambda is very large.
  const Eigen::MatrixXd basis = basis_matrix(y.displacement, model.knots);
  const long m = basis.cols();
  const Eigen::MatrixXd diff = penalty_matrix(model.knots, 2);
  Eigen::MatrixXd aug(basis.rows() + diff.rows(), m);
  aug.topRows(basis.rows()) = basis;
  aug.bottomRows(diff.rows()) = std::sqrt(lambda) * diff;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(aug.rows());
  rhs.head(basis.rows()) = Eigen::Map<const Eigen::VectorXd>(
      y.force.data(), static_cast<long>(y.force.size()));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aug);
  if (qr.rank() < m) {
    throw SingularSystem("fit: penalized design is rank deficient");
  }
  model.beta = qr.solve(rhs);
  return model;
}

GcvResult gcv_score(const oracle::ForceProfile& y, std::size_t n_interior_knots,
                    double lambda) {
  const KnotVector knots = KnotVector::uniform(n_interior_knots);
  const NormalSystem sys = build_normal_system(y, knots, lambda, 2);
  const Eigen::VectorXd beta = sys.llt.solve(sys.bty);
  const Eigen::Map<const Eigen::VectorXd> yv(y.force.data(),
                                             static_cast<long>(y.force.size()));
  const double n = static_cast<double>(y.force.size());
  const double rss = (yv - sys.basis * beta).squaredNorm();
  const double edf = sys.llt.solve(sys.btb).trace();
  const double denom = n - edf;
  GcvResult res;
  res.lambda = lambda;
  res.rss = rss;
  res.edf = edf;
  res.gcv = n * rss / (denom * denom);
  return res;
}

double select_lambda(const oracle::ForceProfile& y,
                     std::size_t n_interior_knots,
                     const std::vector<double>& grid) {
  if (grid.empty()) throw NumericError("select_lambda: empty grid");
  double best_lambda = 0.0;
  double best_gcv = 0.0;
  bool first = true;
  for (double lambda : grid) {
    if (lambda < 0.0) throw NumericError("select_lambda: lambda must be >= 0");
    const GcvResult res = gcv_score(y, n_interior_knots, lambda);
    if (first || res.gcv < best_gcv ||
        (res.gcv == best_gcv && lambda > best_lambda)) {
      best_gcv = res.gcv;
      best_lambda = lambda;
      first = false;
    }
  }
  return best_lambda;
}

PiecewiseCubic to_piecewise(const SplineModel& model) {
  if (model.knots.degree != 3) {
    throw NumericError("to_piecewise: requires a cubic spline");
  }
  PiecewiseCubic pw;
  pw.breakpoints.push_back(model.knots.domain_lo);
  pw.breakpoints.insert(pw.breakpoints.end(), model.knots.interior.begin(),
                        model.knots.interior.end());
  pw.breakpoints.push_back(model.knots.domain_hi);
  pw.coeffs.reserve(pw.breakpoints.size() - 1);
  for (std::size_t i = 0; i + 1 < pw.breakpoints.size(); ++i) {
    // Right-sided derivatives at the interval's left end.
    const std::vector<double> d = model.eval_derivatives(pw.breakpoints[i], 3);
    pw.coeffs.push_back({d[3] / 6.0, d[2] / 2.0, d[1], d[0]});
  }
  return pw;
}

double eval_piecewise(const PiecewiseCubic& pw, double x) {
  if (x < pw.breakpoints.front() || x > pw.breakpoints.back()) {
    throw OutOfDomain("eval_piecewise: x outside the breakpoint range");
  }
  // Intervals are [x_i, x_{i+1}); the rightmost is closed.
  auto it = std::upper_bound(pw.breakpoints.begin(), pw.breakpoints.end(), x);
  std::size_t i = static_cast<std::size_t>(it - pw.breakpoints.begin());
  i = i == 0 ? 0 : i - 1;
  if (i >= pw.coeffs.size()) i = pw.coeffs.size() - 1;
  const double dx = x - pw.breakpoints[i];
  const PiecewiseCubic::Coeffs& c = pw.coeffs[i];
  return ((c.a * dx + c.b) * dx + c.c) * dx + c.d;
}

CoeffResponseModel fit_response(const std::vector<doe::CodedRun>& runs,
                                const std::vector<SplineModel>& models) {
  if (runs.size() != models.size() || runs.empty()) {
    throw NumericError("fit_response: runs and models must align");
  }
  const KnotVector& knots = models.front().knots;
  const double lambda = models.front().lambda;
  for (const SplineModel& m : models) {
    if (!(m.knots == knots) || m.lambda != lambda) {
      throw NumericError("fit_response: models must share knots and lambda");
    }
  }
  const long n_runs = static_cast<long>(runs.size());
  constexpr long kCols = 1 + doe::kNumFactors;
  if (n_runs < kCols) {
    throw RankDeficientDesign("fit_response: need at least 8 runs");
  }

  Eigen::MatrixXd x(n_runs, kCols);
  Eigen::MatrixXd b(n_runs, static_cast<long>(knots.n_basis()));
  for (long r = 0; r < n_runs; ++r) {
    if (runs[r].z.size() != doe::kNumFactors) {
      throw NumericError("fit_response: runs must have 7 coded levels");
    }
    x(r, 0) = 1.0;
    for (int j = 0; j < doe::kNumFactors; ++j) {
      x(r, 1 + j) = static_cast<double>(runs[r].z[j]);
    }
    b.row(r) = models[r].beta.transpose();
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < kCols) {
    throw RankDeficientDesign("fit_response: design matrix is rank deficient");
  }
  const Eigen::MatrixXd theta = qr.solve(b);  // kCols x n_basis

  CoeffResponseModel crm;
  crm.knots = knots;
  crm.beta0 = theta.row(0).transpose();
  for (int j = 0; j < doe::kNumFactors; ++j) {
    crm.effects.push_back(theta.row(1 + j).transpose());
    crm.factor_names.emplace_back(doe::kFactorNames[j]);
  }
  return crm;
}

oracle::ForceProfile predict_profile(const CoeffResponseModel& crm,
                                     const std::vector<double>& z,
                                     std::size_t n_points,
                                     const std::string& run_id) {
  if (z.size() != doe::kNumFactors) {
    throw NumericError("predict_profile: expected 7 coded levels");
  }
  for (double zj : z) {
    if (std::abs(zj) > 1.0) {
      throw ExtrapolationRefused(
          "predict_profile: coded level outside [-1, +1]");
    }
  }
  SplineModel m;
  m.knots = crm.knots;
  m.beta = crm.beta0;
  for (int j = 0; j < doe::kNumFactors; ++j) m.beta += z[j] * crm.effects[j];
  return sample_spline(m, n_points, run_id);
}

oracle::ForceProfile predict_profile(const CoeffResponseModel& crm,
                                     const doe::CodedRun& run,
                                     std::size_t n_points) {
  std::vector<double> z(run.z.begin(), run.z.end());
  return predict_profile(crm, z, n_points, run.run_id);
}

oracle::ForceProfile sample_spline(const SplineModel& model,
                                   std::size_t n_points,
                                   const std::string& run_id) {
  if (n_points < 2) throw NumericError("sample_spline: n_points must be >= 2");
  oracle::ForceProfile p;
  p.run_id = run_id;
  p.displacement.resize(n_points);
  p.force.resize(n_points);
  const double lo = model.knots.domain_lo, hi = model.knots.domain_hi;
  for (std::size_t i = 0; i < n_points; ++i) {
    const double s = lo + (hi - lo) * static_cast<double>(i) /
                              static_cast<double>(n_points - 1);
    p.displacement[i] = s;
    p.force[i] = model.eval(s);
  }
  return p;
}

}  // namespace snapfit::pspline
