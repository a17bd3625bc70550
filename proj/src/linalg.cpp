#include "hypokfem/linalg.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

namespace hypokfem {

SparseOperator SparseOperator::from_triplets(int rows, int cols,
                                             std::vector<Triplet> trips) {
  std::sort(trips.begin(), trips.end(), [](const Triplet& a, const Triplet& b) {
    return a.r != b.r ? a.r < b.r : a.c < b.c;
  });
  SparseOperator op;
  op.rows = rows;
  op.cols = cols;
  op.row_ptr.assign(rows + 1, 0);
  op.col_idx.reserve(trips.size());
  op.vals.reserve(trips.size());
  std::size_t k = 0;
  for (int r = 0; r < rows; ++r) {
    while (k < trips.size() && trips[k].r == r) {
      int c = trips[k].c;
      double v = 0;
      while (k < trips.size() && trips[k].r == r && trips[k].c == c)
        v += trips[k++].v;
      op.col_idx.push_back(c);
      op.vals.push_back(v);
    }
    op.row_ptr[r + 1] = static_cast<int>(op.col_idx.size());
  }
  return op;
}

std::vector<double> SparseOperator::apply(std::span<const double> x) const {
  std::vector<double> y(rows, 0.0);
  for (int r = 0; r < rows; ++r) {
    double s = 0;
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
      s += vals[k] * x[col_idx[k]];
    y[r] = s;
  }
  return y;
}

SparseOperator SparseOperator::transposed() const {
  std::vector<Triplet> trips;
  trips.reserve(vals.size());
  for (int r = 0; r < rows; ++r)
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
      trips.push_back({col_idx[k], r, vals[k]});
  return from_triplets(cols, rows, std::move(trips));
}

SparseOperator SparseOperator::scaled(double s) const {
  SparseOperator op = *this;
  for (double& v : op.vals) v *= s;
  return op;
}

double SparseOperator::max_abs() const {
  double m = 0;
  for (double v : vals) m = std::max(m, std::abs(v));
  return m;
}

double SparseOperator::coeff(int r, int c) const {
  for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
    if (col_idx[k] == c) return vals[k];
  return 0.0;
}

void axpy(double a, std::span<const double> x, std::vector<double>& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

SparseOperator added(const SparseOperator& a, const SparseOperator& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("added: dimension mismatch");
  std::vector<Triplet> trips;
  trips.reserve(a.vals.size() + b.vals.size());
  for (const SparseOperator* m : {&a, &b})
    for (int r = 0; r < m->rows; ++r)
      for (int k = m->row_ptr[r]; k < m->row_ptr[r + 1]; ++k)
        trips.push_back({r, m->col_idx[k], m->vals[k]});
  return SparseOperator::from_triplets(a.rows, a.cols, std::move(trips));
}

SparseOperator restricted(const SparseOperator& op,
                          const std::vector<char>& row_constrained,
                          const std::vector<char>& col_constrained,
                          bool unit_diagonal) {
  std::vector<Triplet> trips;
  trips.reserve(op.vals.size());
  for (int r = 0; r < op.rows; ++r) {
    if (row_constrained[r]) continue;
    for (int k = op.row_ptr[r]; k < op.row_ptr[r + 1]; ++k)
      if (!col_constrained[op.col_idx[k]])
        trips.push_back({r, op.col_idx[k], op.vals[k]});
  }
  if (unit_diagonal)
    for (int r = 0; r < op.rows; ++r)
      if (row_constrained[r]) trips.push_back({r, r, 1.0});
  return SparseOperator::from_triplets(op.rows, op.cols, std::move(trips));
}

SparseOperator block_compose(const SparseOperator* A, const SparseOperator* B,
                             const SparseOperator* C, const SparseOperator* D) {
  int r0 = A ? A->rows : (B ? B->rows : 0);
  int r1 = C ? C->rows : (D ? D->rows : 0);
  int c0 = A ? A->cols : (C ? C->cols : 0);
  int c1 = B ? B->cols : (D ? D->cols : 0);
  auto check = [](const SparseOperator* M, int r, int c) {
    if (M && (M->rows != r || M->cols != c))
      throw std::invalid_argument("block_compose: dimensions do not conform");
  };
  check(A, r0, c0);
  check(B, r0, c1);
  check(C, r1, c0);
  check(D, r1, c1);
  std::vector<Triplet> trips;
  auto add = [&](const SparseOperator* M, int roff, int coff) {
    if (!M) return;
    for (int r = 0; r < M->rows; ++r)
      for (int k = M->row_ptr[r]; k < M->row_ptr[r + 1]; ++k)
        trips.push_back({r + roff, M->col_idx[k] + coff, M->vals[k]});
  };
  add(A, 0, 0);
  add(B, 0, c0);
  add(C, r0, 0);
  add(D, r0, c0);
  return SparseOperator::from_triplets(r0 + r1, c0 + c1, std::move(trips));
}

namespace {

using EigenCsr = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

EigenCsr to_eigen(const SparseOperator& A) {
  EigenCsr M(A.rows, A.cols);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(A.vals.size());
  for (int r = 0; r < A.rows; ++r)
    for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
      t.emplace_back(r, A.col_idx[k], A.vals[k]);
  M.setFromTriplets(t.begin(), t.end());
  M.makeCompressed();
  return M;
}

double rel_residual(const SparseOperator& A, std::span<const double> b,
                    const std::vector<double>& x) {
  std::vector<double> r = A.apply(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  double nb = norm2(b);
  return nb > 0 ? norm2(r) / nb : norm2(r);
}

}  // namespace

struct Factorization::Impl {
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  SparseOperator a;            // original, for iterative refinement
  std::vector<double> dr, dc;  // equilibration scalings (powers of two)

  std::vector<double> scaled_solve(std::span<const double> b) const {
    Eigen::VectorXd rhs(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) rhs[i] = b[i] * dr[i];
    Eigen::VectorXd y = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
      throw SolveFailure("direct back-substitution failed");
    std::vector<double> x(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = y[i] * dc[i];
    return x;
  }
};

Factorization::Factorization(const SparseOperator& A)
    : impl_(std::make_unique<Impl>()) {
  // Ruiz equilibration with power-of-two factors: rows span ~h^2 (mass)
  // to ~1/h (penalty), which otherwise costs LU several digits of forward
  // accuracy on fine meshes.
  impl_->dr.assign(A.rows, 1.0);
  impl_->dc.assign(A.cols, 1.0);
  auto& dr = impl_->dr;
  auto& dc = impl_->dc;
  for (int sweep = 0; sweep < 4; ++sweep) {
    std::vector<double> rmax(A.rows, 0.0), cmax(A.cols, 0.0);
    for (int r = 0; r < A.rows; ++r)
      for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k) {
        const int c = A.col_idx[k];
        const double v = std::abs(A.vals[k]) * dr[r] * dc[c];
        rmax[r] = std::max(rmax[r], v);
        cmax[c] = std::max(cmax[c], v);
      }
    for (int r = 0; r < A.rows; ++r)
      if (rmax[r] > 0.0)
        dr[r] *= std::exp2(-std::round(0.5 * std::log2(rmax[r])));
    for (int c = 0; c < A.cols; ++c)
      if (cmax[c] > 0.0)
        dc[c] *= std::exp2(-std::round(0.5 * std::log2(cmax[c])));
  }
  SparseOperator S = A;
  for (int r = 0; r < S.rows; ++r)
    for (int k = S.row_ptr[r]; k < S.row_ptr[r + 1]; ++k)
      S.vals[k] *= dr[r] * dc[S.col_idx[k]];
  Eigen::SparseMatrix<double> M = to_eigen(S);
  impl_->lu.analyzePattern(M);
  impl_->lu.factorize(M);
  if (impl_->lu.info() != Eigen::Success)
    throw SolveFailure("direct factorisation failed (structurally or "
                       "numerically singular operator)");
  impl_->a = A;
}

Factorization::~Factorization() = default;
Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;

std::vector<double> Factorization::solve(std::span<const double> b) const {
  std::vector<double> sol = impl_->scaled_solve(b);
  const double nb = norm2(b);
  if (nb > 0.0) {
    std::vector<double> r(sol.size());
    for (int sweep = 0; sweep < 3; ++sweep) {
      const std::vector<double> ax = impl_->a.apply(sol);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - ax[i];
      if (norm2(r) <= 1e-14 * nb) break;
      const std::vector<double> d = impl_->scaled_solve(r);
      for (std::size_t i = 0; i < sol.size(); ++i) sol[i] += d[i];
    }
  }
  return sol;
}

LinearSolveReport solve(const SparseOperator& A, std::span<const double> b,
                        std::vector<double>& x, double tol, int direct_limit) {
  if (A.rows != A.cols) throw SolveFailure("solve: operator not square");
  if (static_cast<int>(b.size()) != A.rows)
    throw SolveFailure("solve: rhs size mismatch");
  const auto t0 = std::chrono::steady_clock::now();
  LinearSolveReport rep;
  if (A.rows <= direct_limit) {
    Factorization f(A);
    x = f.solve(b);
    rep.method = SolveMethod::Direct;
    rep.iterations = 1;
  } else {
    EigenCsr M = to_eigen(A);
    Eigen::GMRES<EigenCsr, Eigen::IncompleteLUT<double>> gmres;
    gmres.setMaxIterations(20000);
    gmres.set_restart(100);
    gmres.setTolerance(tol);
    gmres.preconditioner().setFillfactor(20);
    gmres.preconditioner().setDroptol(1e-6);
    gmres.compute(M);
    if (gmres.info() != Eigen::Success)
      throw SolveFailure("GMRES preconditioner setup failed");
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
    Eigen::VectorXd sol = gmres.solve(rhs);
    if (gmres.info() != Eigen::Success)
      throw SolveFailure("GMRES failed to converge within iteration budget");
    x.assign(sol.data(), sol.data() + sol.size());
    rep.method = SolveMethod::Gmres;
    rep.iterations = gmres.iterations();
  }
  rep.rel_residual = rel_residual(A, b, x);
  rep.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rep;
}

void export_matrix_market(const SparseOperator& op, std::ostream& os) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << op.rows << " " << op.cols << " " << op.nnz() << "\n";
  os.precision(16);
  for (int r = 0; r < op.rows; ++r)
    for (int k = op.row_ptr[r]; k < op.row_ptr[r + 1]; ++k)
      os << r + 1 << " " << op.col_idx[k] + 1 << " " << std::scientific
         << op.vals[k] << "\n";
}

}  // namespace hypokfem
