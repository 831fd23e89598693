#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace wf {

// Deterministic pairwise (tree) summation. Used for every aggregation whose
// result feeds a tolerance check, so accumulation order never depends on
// worker count or loop structure.
double pairwise_sum(const double* x, std::size_t n);
double pairwise_sum(const std::vector<double>& x);

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [-1, 1]. Cached per n; thread-safe after
// first use of a given n.
const Quadrature& gauss_legendre(int n);

// n-point Gauss-Hermite rule for the weight e^{-t^2} on the real line.
const Quadrature& gauss_hermite(int n);

// Adaptive Gauss-Legendre integration of f over [a, b] to the given relative
// tolerance (absolute floor abs_floor guards integrals near zero). Throws
// NumericalError if the interval subdivision exceeds its depth limit.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double rel_tol, double abs_floor = 1e-300);

// Standard normal CDF via the complementary error function.
double normal_cdf(double x);

// Four-point (cubic Lagrange) interpolation on a uniform table covering
// [x0, x0 + (n-1) dx]. Queries are clamped to the table range.
struct UniformCubicTable {
  double x0 = 0.0;
  double dx = 1.0;
  std::vector<double> values;
  double eval(double x) const;
};

// Symmetric Toeplitz matrix-vector product out_i = sum_j k[|i-j|] c_j via a
// circulant FFT embedding (FFTW, deterministic plans). One instance holds its
// own buffers and is not safe for concurrent apply() calls.
class ToeplitzConvolver {
 public:
  // kernel_diagonals[j] = matrix value on diagonal offset j, j in [0, n).
  ToeplitzConvolver(const std::vector<double>& kernel_diagonals, std::size_t n);
  ~ToeplitzConvolver();
  ToeplitzConvolver(const ToeplitzConvolver&) = delete;
  ToeplitzConvolver& operator=(const ToeplitzConvolver&) = delete;

  void apply(const double* coeffs, double* out) const;
  std::vector<double> apply(const std::vector<double>& coeffs) const;
  std::size_t size() const { return n_; }

 private:
  struct Impl;
  Impl* impl_;
  std::size_t n_;
};

// Runs fn(i) for i in [0, n) over the given worker count. Workers own disjoint
// index blocks; fn must only write to slots indexed by i. With n_threads <= 1 the
// loop runs inline.
void parallel_for(std::size_t n, int n_threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace wf
