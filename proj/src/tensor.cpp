#include "corpusgen/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "corpusgen/errors.hpp"

namespace corpusgen {

namespace {

// Below these sizes the OpenMP fork/join overhead dominates; the
// kernels fall back to the serial path. Chosen from bench_kernels runs.
constexpr int kParRows = 256;
constexpr long long kParWork = 1 << 15;

void check_matvec_dims(const Mat &m, const Vec &v) {
  if (m.cols != static_cast<int>(v.size()))
    throw DimensionError("matvec: matrix is " + std::to_string(m.rows) + "x" +
                         std::to_string(m.cols) + " but vector has dim " +
                         std::to_string(v.size()));
}

void check_equal_dims(const Vec &a, const Vec &b, const char *op) {
  if (a.size() != b.size())
    throw DimensionError(std::string(op) + ": dims " +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
}

} // namespace

namespace serial {

Vec matvec(const Mat &m, const Vec &v) {
  check_matvec_dims(m, v);
  Vec out(static_cast<std::size_t>(m.rows));
  for (int r = 0; r < m.rows; ++r) {
    const double *row = m.row(r);
    double acc = 0.0;
    for (int c = 0; c < m.cols; ++c)
      acc += row[c] * v[c];
    out[r] = acc;
  }
  return out;
}

Vec matvec_t(const Mat &m, const Vec &v) {
  if (m.rows != static_cast<int>(v.size()))
    throw DimensionError("matvec_t: matrix is " + std::to_string(m.rows) +
                         "x" + std::to_string(m.cols) +
                         " but vector has dim " + std::to_string(v.size()));
  Vec out(static_cast<std::size_t>(m.cols));
  for (int c = 0; c < m.cols; ++c) {
    double acc = 0.0;
    for (int r = 0; r < m.rows; ++r)
      acc += m.at(r, c) * v[r];
    out[c] = acc;
  }
  return out;
}

void add_outer(Mat &m, const Vec &u, const Vec &v, double scale) {
  if (m.rows != static_cast<int>(u.size()) ||
      m.cols != static_cast<int>(v.size()))
    throw DimensionError("add_outer: matrix is " + std::to_string(m.rows) +
                         "x" + std::to_string(m.cols) + " but vectors are " +
                         std::to_string(u.size()) + " and " +
                         std::to_string(v.size()));
  for (int r = 0; r < m.rows; ++r) {
    double *row = m.row(r);
    const double su = scale * u[static_cast<std::size_t>(r)];
    for (int c = 0; c < m.cols; ++c)
      row[c] += su * v[static_cast<std::size_t>(c)];
  }
}

} // namespace serial

Vec matvec(const Mat &m, const Vec &v) {
  check_matvec_dims(m, v);
  const long long work = static_cast<long long>(m.rows) * m.cols;
  Vec out(static_cast<std::size_t>(m.rows));
#pragma omp parallel for schedule(static) if (m.rows >= kParRows && work >= kParWork)
  for (int r = 0; r < m.rows; ++r) {
    const double *row = m.row(r);
    double acc = 0.0;
    for (int c = 0; c < m.cols; ++c)
      acc += row[c] * v[c];
    out[r] = acc;
  }
  return out;
}

Vec matvec_t(const Mat &m, const Vec &v) {
  if (m.rows != static_cast<int>(v.size()))
    throw DimensionError("matvec_t: matrix is " + std::to_string(m.rows) +
                         "x" + std::to_string(m.cols) +
                         " but vector has dim " + std::to_string(v.size()));
  const long long work = static_cast<long long>(m.rows) * m.cols;
  Vec out(static_cast<std::size_t>(m.cols));
#pragma omp parallel for schedule(static) if (m.cols >= kParRows && work >= kParWork)
  for (int c = 0; c < m.cols; ++c) {
    double acc = 0.0;
    for (int r = 0; r < m.rows; ++r)
      acc += m.at(r, c) * v[r];
    out[c] = acc;
  }
  return out;
}

void add_outer(Mat &m, const Vec &u, const Vec &v, double scale) {
  if (m.rows != static_cast<int>(u.size()) ||
      m.cols != static_cast<int>(v.size()))
    throw DimensionError("add_outer: matrix is " + std::to_string(m.rows) +
                         "x" + std::to_string(m.cols) + " but vectors are " +
                         std::to_string(u.size()) + " and " +
                         std::to_string(v.size()));
  const long long work = static_cast<long long>(m.rows) * m.cols;
#pragma omp parallel for schedule(static) if (m.rows >= kParRows && work >= kParWork)
  for (int r = 0; r < m.rows; ++r) {
    double *row = m.row(r);
    const double su = scale * u[static_cast<std::size_t>(r)];
    for (int c = 0; c < m.cols; ++c)
      row[c] += su * v[static_cast<std::size_t>(c)];
  }
}

Vec sigmoid(const Vec &v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = 1.0 / (1.0 + std::exp(-v[i]));
  return out;
}

Vec tanh_elem(const Vec &v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = std::tanh(v[i]);
  return out;
}

Vec hadamard(const Vec &a, const Vec &b) {
  check_equal_dims(a, b, "hadamard");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = a[i] * b[i];
  return out;
}

Vec add(const Vec &a, const Vec &b) {
  check_equal_dims(a, b, "add");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = a[i] + b[i];
  return out;
}

Vec concat(const Vec &a, const Vec &b) {
  Vec out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Vec softmax(const Vec &v) {
  if (v.empty())
    throw ValidationError("softmax: empty vector");
  double mx = *std::max_element(v.begin(), v.end());
  Vec out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (double &x : out)
    x /= sum;
  return out;
}

double dot(const Vec &a, const Vec &b) {
  check_equal_dims(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += a[i] * b[i];
  return acc;
}

void axpy(Vec &y, double alpha, const Vec &x) {
  check_equal_dims(y, x, "axpy");
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] += alpha * x[i];
}

void scale_inplace(Vec &v, double s) {
  for (double &x : v)
    x *= s;
}

bool all_finite(const Vec &v) {
  for (double x : v)
    if (!std::isfinite(x))
      return false;
  return true;
}

bool all_finite(const Mat &m) {
  for (double x : m.a)
    if (!std::isfinite(x))
      return false;
  return true;
}

double grad_check(const std::function<double(const Vec &)> &f,
                  const Vec &analytic_grad, const Vec &point, double epsilon) {
  if (epsilon <= 0.0)
    throw ValidationError("grad_check: epsilon must be > 0");
  if (analytic_grad.size() != point.size())
    throw DimensionError("grad_check: gradient dim " +
                         std::to_string(analytic_grad.size()) +
                         " vs point dim " + std::to_string(point.size()));
  if (!std::isfinite(f(point)))
    throw ValidationError("grad_check: f is not finite at the point");

  Vec x = point;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + epsilon;
    const double fp = f(x);
    x[i] = saved - epsilon;
    const double fm = f(x);
    x[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw ValidationError("grad_check: non-finite value at coordinate " +
                            std::to_string(i));
    const double numeric = (fp - fm) / (2.0 * epsilon);
    const double a = analytic_grad[i];
    const double rel = std::abs(a - numeric) /
                       std::max(1e-8, std::abs(a) + std::abs(numeric));
    worst = std::max(worst, rel);
  }
  return worst;
}

} // namespace corpusgen
