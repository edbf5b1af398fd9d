#ifndef SHAPINT_LINALG_HPP
#define SHAPINT_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace shapint {

using Vec = std::vector<double>;

/// Dense row-major matrix, just enough for the surrogate's hand-written
/// forward/backward passes.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

inline double dot(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm(const Vec& x) { return std::sqrt(dot(x, x)); }

inline void axpy(double alpha, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// y = M x
inline Vec matvec(const Mat& m, const Vec& x) {
  if (x.size() != m.cols) throw std::invalid_argument("matvec dimension mismatch");
  Vec y(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) s += m(r, c) * x[c];
    y[r] = s;
  }
  return y;
}

/// y = M^T x
inline Vec matvec_t(const Mat& m, const Vec& x) {
  if (x.size() != m.rows) throw std::invalid_argument("matvec_t dimension mismatch");
  Vec y(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) y[c] += m(r, c) * x[r];
  return y;
}

/// grad += g x^T (outer-product accumulation)
inline void add_outer(Mat& grad, const Vec& g, const Vec& x) {
  for (std::size_t r = 0; r < grad.rows; ++r)
    for (std::size_t c = 0; c < grad.cols; ++c) grad(r, c) += g[r] * x[c];
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vec softmax(const Vec& logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  Vec out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

}  // namespace shapint

#endif  // SHAPINT_LINALG_HPP
