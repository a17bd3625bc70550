#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypokfem {

struct Triplet {
  int r = 0, c = 0;
  double v = 0;
};

// Compressed sparse row matrix. Column indices are sorted and duplicate-free
// within each row; restricted operators carry an explicit unit diagonal on
// constrained rows.
struct SparseOperator {
  int rows = 0, cols = 0;
  std::vector<int> row_ptr;  // size rows+1
  std::vector<int> col_idx;
  std::vector<double> vals;

  static SparseOperator from_triplets(int rows, int cols,
                                      std::vector<Triplet> trips);
  long nnz() const { return static_cast<long>(vals.size()); }
  std::vector<double> apply(std::span<const double> x) const;
  SparseOperator transposed() const;
  SparseOperator scaled(double s) const;
  double max_abs() const;
  double coeff(int r, int c) const;  // 0 if not stored
};

// y += a*x
void axpy(double a, std::span<const double> x, std::vector<double>& y);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

// a + b (dimensions must match).
SparseOperator added(const SparseOperator& a, const SparseOperator& b);

// Zero constrained rows/columns; optionally set a unit diagonal on
// constrained rows (only meaningful for square blocks).
SparseOperator restricted(const SparseOperator& op,
                          const std::vector<char>& row_constrained,
                          const std::vector<char>& col_constrained,
                          bool unit_diagonal);

// CSR of [[A, B], [C, D]]; null blocks are treated as zero. Dimensions must
// conform (throws otherwise).
SparseOperator block_compose(const SparseOperator* A, const SparseOperator* B,
                             const SparseOperator* C, const SparseOperator* D);

enum class SolveMethod { Direct, Gmres };

struct LinearSolveReport {
  SolveMethod method = SolveMethod::Direct;
  long iterations = 0;
  double rel_residual = 0;
  double seconds = 0;
};

struct SolveFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sparse direct factorisation for systems up to `direct_limit` unknowns,
// restarted GMRES with an incomplete-LU preconditioner beyond it. Throws
// SolveFailure on singular factorisation or non-convergence.
LinearSolveReport solve(const SparseOperator& A, std::span<const double> b,
                        std::vector<double>& x, double tol = 1e-10,
                        int direct_limit = 200000);

// Reusable direct factorisation (for iterative schemes doing many solves
// against the same operator).
class Factorization {
 public:
  explicit Factorization(const SparseOperator& A);
  ~Factorization();
  Factorization(Factorization&&) noexcept;
  Factorization& operator=(Factorization&&) noexcept;
  std::vector<double> solve(std::span<const double> b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// MatrixMarket coordinate format.
void export_matrix_market(const SparseOperator& op, std::ostream& os);

}  // namespace hypokfem
