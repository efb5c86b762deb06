#include <cstring>

#include "kernels_detail.hpp"
#include "season/kernels.hpp"

// OpenMP kernels. Work is split by output row (or disjoint element range),
// and each output element is still reduced sequentially in ascending index
// order, so results are bitwise equal to kernels::serial and independent of
// the thread count. Small problems stay on one thread via the if() clauses.
//
// matmul uses an i-k-j loop with a zero/copy pass first: the inner j loop
// runs over contiguous memory in both matrices, which vectorizes without
// reordering the per-element k-sum.

namespace season::kernels {

namespace {
constexpr int64_t kParFlops = 16 * 1024;
constexpr int64_t kParElems = 8 * 1024;
}  // namespace

void matmul_nn(const double* a, const double* b, double* c, int m, int k,
               int n, bool accumulate) {
  const int64_t flops = int64_t(m) * k * n;
#pragma omp parallel for schedule(static) if (flops > kParFlops)
  for (int i = 0; i < m; ++i) {
    double* crow = c + int64_t(i) * n;
    if (!accumulate) std::memset(crow, 0, sizeof(double) * n);
    const double* arow = a + int64_t(i) * k;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + int64_t(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k,
               int n, bool accumulate) {
  const int64_t flops = int64_t(m) * k * n;
#pragma omp parallel for schedule(static) if (flops > kParFlops)
  for (int i = 0; i < m; ++i) {
    const double* arow = a + int64_t(i) * k;
    double* crow = c + int64_t(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + int64_t(j) * k;
      double acc = accumulate ? crow[j] : 0.0;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] = acc;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k,
               int n, bool accumulate) {
  const int64_t flops = int64_t(m) * k * n;
#pragma omp parallel for schedule(static) if (flops > kParFlops)
  for (int i = 0; i < k; ++i) {
    double* crow = c + int64_t(i) * n;
    if (!accumulate) std::memset(crow, 0, sizeof(double) * n);
    for (int p = 0; p < m; ++p) {
      const double av = a[int64_t(p) * k + i];
      const double* brow = b + int64_t(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void add(const double* a, const double* b, double* out, int64_t n) {
#pragma omp parallel for schedule(static) if (n > kParElems)
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void mul(const double* a, const double* b, double* out, int64_t n) {
#pragma omp parallel for schedule(static) if (n > kParElems)
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(const double* a, double s, double* out, int64_t n) {
#pragma omp parallel for schedule(static) if (n > kParElems)
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

void axpy(double alpha, const double* x, double* y, int64_t n) {
#pragma omp parallel for schedule(static) if (n > kParElems)
  for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gelu(const double* x, double* y, int64_t n) {
#pragma omp parallel for schedule(static) if (n > kParElems / 8)
  for (int64_t i = 0; i < n; ++i) y[i] = detail::gelu_val(x[i]);
}

void gelu_grad(const double* x, const double* dy, double* dx, int64_t n) {
#pragma omp parallel for schedule(static) if (n > kParElems / 8)
  for (int64_t i = 0; i < n; ++i) dx[i] += dy[i] * detail::gelu_deriv(x[i]);
}

void softmax_rows(const double* x, double* y, int rows, int cols,
                  double inv_temp) {
#pragma omp parallel for schedule(static) if (int64_t(rows) * cols > kParElems)
  for (int r = 0; r < rows; ++r) {
    detail::softmax_row(x + int64_t(r) * cols, y + int64_t(r) * cols, cols,
                        inv_temp);
  }
}

void softmax_rows_grad(const double* y, const double* dy, double* dx, int rows,
                       int cols, double inv_temp) {
#pragma omp parallel for schedule(static) if (int64_t(rows) * cols > kParElems)
  for (int r = 0; r < rows; ++r) {
    detail::softmax_row_grad(y + int64_t(r) * cols, dy + int64_t(r) * cols,
                             dx + int64_t(r) * cols, cols, inv_temp);
  }
}

void layer_norm_rows(const double* x, const double* gain, const double* bias,
                     double* y, double* mean, double* inv_std, int rows,
                     int cols, double eps) {
#pragma omp parallel for schedule(static) if (int64_t(rows) * cols > kParElems)
  for (int r = 0; r < rows; ++r) {
    detail::layer_norm_row(x + int64_t(r) * cols, gain, bias,
                           y + int64_t(r) * cols, mean + r, inv_std + r, cols,
                           eps);
  }
}

void layer_norm_rows_grad(const double* x, const double* gain,
                          const double* dy, const double* mean,
                          const double* inv_std, double* dx, double* dgain,
                          double* dbias, int rows, int cols) {
  // dx rows are independent; dgain/dbias are row sums and stay serial so the
  // accumulation order matches the reference.
#pragma omp parallel for schedule(static) if (int64_t(rows) * cols > kParElems)
  for (int r = 0; r < rows; ++r) {
    detail::layer_norm_row_grad_dx(x + int64_t(r) * cols, gain,
                                   dy + int64_t(r) * cols, mean[r], inv_std[r],
                                   dx + int64_t(r) * cols, cols);
  }
  for (int r = 0; r < rows; ++r) {
    const double* xr = x + int64_t(r) * cols;
    const double* dyr = dy + int64_t(r) * cols;
    for (int j = 0; j < cols; ++j) {
      const double xhat = (xr[j] - mean[r]) * inv_std[r];
      dgain[j] += dyr[j] * xhat;
      dbias[j] += dyr[j];
    }
  }
}

void take_rows(const double* src, const int* idx, double* dst, int out_rows,
               int cols) {
#pragma omp parallel for schedule(static) if (int64_t(out_rows) * cols > kParElems)
  for (int r = 0; r < out_rows; ++r) {
    double* d = dst + int64_t(r) * cols;
    if (idx[r] < 0) {
      std::memset(d, 0, sizeof(double) * cols);
    } else {
      std::memcpy(d, src + int64_t(idx[r]) * cols, sizeof(double) * cols);
    }
  }
}

void scatter_add_rows(double* dst, const int* idx, const double* src,
                      int in_rows, int cols) {
  serial::scatter_add_rows(dst, idx, src, in_rows, cols);
}

}  // namespace season::kernels
