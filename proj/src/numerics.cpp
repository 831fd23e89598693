#include "weightflow/numerics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <map>
#include <mutex>
#include <thread>

#include "weightflow/errors.hpp"

namespace wf {

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

double pairwise_sum(const std::vector<double>& x) {
  return pairwise_sum(x.data(), x.size());
}

namespace {

// Legendre P_n(x) and its derivative by the three-term recurrence.
std::pair<double, double> legendre_with_derivative(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

Quadrature build_gauss_legendre(int n) {
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre_with_derivative(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const auto [p, dp] = legendre_with_derivative(n, x);
    (void)p;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.nodes[i] = -x;
    q.weights[i] = w;
    q.nodes[n - 1 - i] = x;
    q.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) {
    const auto [p, dp] = legendre_with_derivative(n, 0.0);
    (void)p;
    q.nodes[n / 2] = 0.0;
    q.weights[n / 2] = 2.0 / (dp * dp);
  }
  std::sort(q.nodes.begin(), q.nodes.end());
  return q;
}

// Scaled orthonormal Hermite recurrence: returns h~_{n}(x), h~_{n-1}(x) and
// log of the applied rescaling, where h~_k = h_k e^{-x^2/2} up to the scale.
struct HermitePair {
  double hn;
  double hn1;
  double log_scale;
};

HermitePair hermite_scaled(int n, double x) {
  double log_scale = -0.5 * x * x;
  double hm = 0.0;
  double h = std::pow(M_PI, -0.25);
  for (int k = 0; k < n; ++k) {
    const double hp = x * std::sqrt(2.0 / (k + 1.0)) * h -
                      std::sqrt(static_cast<double>(k) / (k + 1.0)) * hm;
    hm = h;
    h = hp;
    const double mag = std::max(std::abs(h), std::abs(hm));
    if (mag > 1e100) {
      h *= 1e-100;
      hm *= 1e-100;
      log_scale += 100.0 * std::log(10.0);
    }
  }
  return {h, hm, log_scale};
}

// Eigenvalue count below t for the Jacobi matrix of the e^{-x^2} weight
// (diagonal 0, off-diagonal b_k = sqrt(k/2)), by Sturm sequence.
int sturm_count(int n, double t) {
  int count = 0;
  double d = -t;
  if (d < 0.0) ++count;
  for (int k = 1; k < n; ++k) {
    const double b2 = 0.5 * k;
    double denom = d;
    if (std::abs(denom) < 1e-300) denom = (denom < 0.0 ? -1e-300 : 1e-300);
    d = -t - b2 / denom;
    if (d < 0.0) ++count;
  }
  return count;
}

Quadrature build_gauss_hermite(int n) {
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  const double hi = std::sqrt(2.0 * n + 1.0) + 2.0;
  for (int i = 0; i < n; ++i) {
    double lo = -hi, up = hi;
    // Bisection on the Sturm count isolates the (i+1)-th eigenvalue.
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + up);
      if (sturm_count(n, mid) >= i + 1) {
        up = mid;
      } else {
        lo = mid;
      }
      if (up - lo < 1e-13) break;
    }
    double x = 0.5 * (lo + up);
    // Newton polish: h_n / h_n' with h_n' = sqrt(2n) h_{n-1}.
    for (int it = 0; it < 8; ++it) {
      const HermitePair hp = hermite_scaled(n, x);
      const double deriv = std::sqrt(2.0 * n) * hp.hn1;
      if (deriv == 0.0) break;
      const double dx = hp.hn / deriv;
      x -= dx;
      if (std::abs(dx) < 1e-16 * (1.0 + std::abs(x))) break;
    }
    q.nodes[i] = x;
    const HermitePair hp = hermite_scaled(n - 1, x);
    // w_i = 1 / (n h_{n-1}(x_i)^2), evaluated in log space to survive the
    // e^{x^2/2} growth of the raw polynomials near the extreme nodes.
    const double log_h = std::log(std::abs(hp.hn)) + hp.log_scale + 0.5 * x * x;
    q.weights[i] = std::exp(-std::log(static_cast<double>(n)) - 2.0 * log_h);
  }
  // Enforce exact symmetry of the rule.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double node = 0.5 * (q.nodes[j] - q.nodes[i]);
    const double weight = 0.5 * (q.weights[i] + q.weights[j]);
    q.nodes[i] = -node;
    q.nodes[j] = node;
    q.weights[i] = weight;
    q.weights[j] = weight;
  }
  if (n % 2 == 1) q.nodes[n / 2] = 0.0;
  return q;
}

const Quadrature& cached_rule(int n, std::map<int, Quadrature>& cache,
                              std::mutex& mutex, Quadrature (*builder)(int)) {
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, builder(n)).first;
  return it->second;
}

}  // namespace

const Quadrature& gauss_legendre(int n) {
  if (n < 1 || n > 2048) throw ConfigError("gauss_legendre: order out of range");
  static std::map<int, Quadrature> cache;
  static std::mutex mutex;
  return cached_rule(n, cache, mutex, build_gauss_legendre);
}

const Quadrature& gauss_hermite(int n) {
  if (n < 1 || n > 2048) throw ConfigError("gauss_hermite: order out of range");
  static std::map<int, Quadrature> cache;
  static std::mutex mutex;
  return cached_rule(n, cache, mutex, build_gauss_hermite);
}

namespace {

double gl15(const std::function<double(double)>& f, double a, double b) {
  const Quadrature& q = gauss_legendre(15);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double vals[15];
  for (int i = 0; i < 15; ++i)
    vals[i] = q.weights[i] * f(mid + half * q.nodes[i]);
  return half * pairwise_sum(vals, 15);
}

// budget_density spreads a global absolute error budget over subintervals in
// proportion to their length, so non-smooth points (kinks, cusps) terminate
// once their interval can no longer move the total at the requested accuracy.
double adaptive_rec(const std::function<double(double)>& f, double a, double b,
                    double whole, double rel_tol, double abs_floor,
                    double budget_density, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = gl15(f, a, mid);
  const double right = gl15(f, mid, b);
  const double sum = left + right;
  if (std::abs(sum - whole) <=
      rel_tol * std::abs(sum) + budget_density * (b - a) + abs_floor)
    return sum;
  if (depth >= 40)
    throw NumericalError("adaptive quadrature failed to converge");
  return adaptive_rec(f, a, mid, left, rel_tol, abs_floor, budget_density,
                      depth + 1) +
         adaptive_rec(f, mid, b, right, rel_tol, abs_floor, budget_density,
                      depth + 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double rel_tol, double abs_floor) {
  if (!(b > a)) return 0.0;
  const double whole = gl15(f, a, b);
  const double budget_density =
      0.25 * rel_tol * std::abs(whole) / (b - a);
  return adaptive_rec(f, a, b, whole, rel_tol, abs_floor, budget_density, 0);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double UniformCubicTable::eval(double x) const {
  const std::size_t n = values.size();
  if (n == 0) throw NumericalError("empty interpolation table");
  if (n < 4) return values.front();
  double u = (x - x0) / dx;
  if (u <= 0.0) return values.front();
  if (u >= static_cast<double>(n - 1)) return values.back();
  std::size_t i = static_cast<std::size_t>(u);
  if (i < 1) i = 1;
  if (i > n - 3) i = n - 3;
  const double t = u - static_cast<double>(i);
  const double ym = values[i - 1], y0 = values[i], y1 = values[i + 1],
               y2 = values[i + 2];
  // Cubic Lagrange through the four surrounding samples.
  const double a0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double a1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double a2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double a3 = (t + 1.0) * t * (t - 1.0) / 6.0;
  return a0 * ym + a1 * y0 + a2 * y1 + a3 * y2;
}

struct ToeplitzConvolver::Impl {
  std::size_t fft_size = 0;
  double* in = nullptr;
  fftw_complex* freq = nullptr;
  fftw_complex* kernel_freq = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

ToeplitzConvolver::ToeplitzConvolver(const std::vector<double>& kernel_diagonals,
                                     std::size_t n)
    : impl_(new Impl), n_(n) {
  if (kernel_diagonals.size() < n || n == 0)
    throw ConfigError("ToeplitzConvolver: kernel shorter than matrix size");
  std::size_t m = 1;
  while (m < 2 * n) m <<= 1;
  impl_->fft_size = m;
  impl_->in = fftw_alloc_real(m);
  impl_->freq = fftw_alloc_complex(m / 2 + 1);
  impl_->kernel_freq = fftw_alloc_complex(m / 2 + 1);
  impl_->forward =
      fftw_plan_dft_r2c_1d(static_cast<int>(m), impl_->in, impl_->freq, FFTW_ESTIMATE);
  impl_->backward = fftw_plan_dft_c2r_1d(static_cast<int>(m), impl_->freq,
                                         impl_->in, FFTW_ESTIMATE);
  // First circulant column: k[0..n-1] forward, mirrored into the tail.
  std::memset(impl_->in, 0, sizeof(double) * m);
  for (std::size_t j = 0; j < n; ++j) impl_->in[j] = kernel_diagonals[j];
  for (std::size_t j = 1; j < n; ++j) impl_->in[m - j] = kernel_diagonals[j];
  fftw_execute(impl_->forward);
  std::memcpy(impl_->kernel_freq, impl_->freq, sizeof(fftw_complex) * (m / 2 + 1));
}

ToeplitzConvolver::~ToeplitzConvolver() {
  fftw_destroy_plan(impl_->forward);
  fftw_destroy_plan(impl_->backward);
  fftw_free(impl_->in);
  fftw_free(impl_->freq);
  fftw_free(impl_->kernel_freq);
  delete impl_;
}

void ToeplitzConvolver::apply(const double* coeffs, double* out) const {
  const std::size_t m = impl_->fft_size;
  std::memset(impl_->in, 0, sizeof(double) * m);
  std::memcpy(impl_->in, coeffs, sizeof(double) * n_);
  fftw_execute(impl_->forward);
  for (std::size_t k = 0; k <= m / 2; ++k) {
    const double re = impl_->freq[k][0], im = impl_->freq[k][1];
    const double kre = impl_->kernel_freq[k][0], kim = impl_->kernel_freq[k][1];
    impl_->freq[k][0] = re * kre - im * kim;
    impl_->freq[k][1] = re * kim + im * kre;
  }
  fftw_execute(impl_->backward);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < n_; ++i) out[i] = impl_->in[i] * scale;
}

std::vector<double> ToeplitzConvolver::apply(const std::vector<double>& coeffs) const {
  if (coeffs.size() != n_)
    throw ConfigError("ToeplitzConvolver: coefficient size mismatch");
  std::vector<double> out(n_);
  apply(coeffs.data(), out.data());
  return out;
}

void parallel_for(std::size_t n, int n_threads,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  if (n_threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(n_threads), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      const std::size_t lo = n * w / workers;
      const std::size_t hi = n * (w + 1) / workers;
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace wf
