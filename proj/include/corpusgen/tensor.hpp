#ifndef CORPUSGEN_TENSOR_HPP
#define CORPUSGEN_TENSOR_HPP

#include <cstddef>
#include <functional>
#include <vector>

namespace corpusgen {

// Minimal dense kernel for the hand-built network. 64-bit floats
// throughout, row-major storage, no broadcasting: every dimension
// mismatch is a hard error so wiring bugs surface immediately.
using Vec = std::vector<double>;

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a; // row-major, rows*cols

  Mat() = default;
  Mat(int r, int c, double fill = 0.0)
      : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

  double &at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return a[static_cast<std::size_t>(r) * cols + c];
  }
  const double *row(int r) const {
    return a.data() + static_cast<std::size_t>(r) * cols;
  }
  double *row(int r) { return a.data() + static_cast<std::size_t>(r) * cols; }
};

// Serial reference kernels. These are the semantics of record; the
// OpenMP versions below must match them bit for bit (each output
// element is an independent serial reduction, so thread count never
// changes results). Tests and the kernel benchmark compare the two.
namespace serial {
Vec matvec(const Mat &m, const Vec &v);
// m^T * v without materializing the transpose; v.size() == rows.
Vec matvec_t(const Mat &m, const Vec &v);
// m += scale * u * v^T
void add_outer(Mat &m, const Vec &u, const Vec &v, double scale = 1.0);
} // namespace serial

Vec matvec(const Mat &m, const Vec &v);
Vec matvec_t(const Mat &m, const Vec &v);
void add_outer(Mat &m, const Vec &u, const Vec &v, double scale = 1.0);

Vec sigmoid(const Vec &v);
Vec tanh_elem(const Vec &v);
Vec hadamard(const Vec &a, const Vec &b);
Vec add(const Vec &a, const Vec &b);
Vec concat(const Vec &a, const Vec &b);

// Max-subtracted softmax; outputs sum to 1 within 1e-12 and preserve
// the argmax. Empty input is an error.
Vec softmax(const Vec &v);

double dot(const Vec &a, const Vec &b);
void axpy(Vec &y, double alpha, const Vec &x); // y += alpha * x
void scale_inplace(Vec &v, double s);
bool all_finite(const Vec &v);
bool all_finite(const Mat &m);

// Central-difference gradient check over a flat parameter vector.
// Returns max over coordinates of |analytic - numeric| /
// max(1e-8, |analytic| + |numeric|). Non-finite values are an error.
double grad_check(const std::function<double(const Vec &)> &f,
                  const Vec &analytic_grad, const Vec &point, double epsilon);

} // namespace corpusgen

#endif
