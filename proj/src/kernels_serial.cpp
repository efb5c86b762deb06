#include <cstring>

#include "kernels_detail.hpp"
#include "season/kernels.hpp"

// Reference kernels: straight loops, no threading, no blocking. The OpenMP
// variants must match these bit for bit (see tests/test_kernels.cpp and
// tools/bench_kernels.cpp).

namespace season::kernels::serial {

void matmul_nn(const double* a, const double* b, double* c, int m, int k,
               int n, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = accumulate ? c[i * n + j] : 0.0;
      for (int p = 0; p < k; ++p) {
        acc += a[i * k + p] * b[p * n + j];
      }
      c[i * n + j] = acc;
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k,
               int n, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = accumulate ? c[i * n + j] : 0.0;
      for (int p = 0; p < k; ++p) {
        acc += a[i * k + p] * b[j * k + p];
      }
      c[i * n + j] = acc;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k,
               int n, bool accumulate) {
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = accumulate ? c[i * n + j] : 0.0;
      for (int p = 0; p < m; ++p) {
        acc += a[p * k + i] * b[p * n + j];
      }
      c[i * n + j] = acc;
    }
  }
}

void add(const double* a, const double* b, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void mul(const double* a, const double* b, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(const double* a, double s, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

void axpy(double alpha, const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gelu(const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = detail::gelu_val(x[i]);
}

void gelu_grad(const double* x, const double* dy, double* dx, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dx[i] += dy[i] * detail::gelu_deriv(x[i]);
}

void softmax_rows(const double* x, double* y, int rows, int cols,
                  double inv_temp) {
  for (int r = 0; r < rows; ++r) {
    detail::softmax_row(x + int64_t(r) * cols, y + int64_t(r) * cols, cols,
                        inv_temp);
  }
}

void softmax_rows_grad(const double* y, const double* dy, double* dx, int rows,
                       int cols, double inv_temp) {
  for (int r = 0; r < rows; ++r) {
    detail::softmax_row_grad(y + int64_t(r) * cols, dy + int64_t(r) * cols,
                             dx + int64_t(r) * cols, cols, inv_temp);
  }
}

void layer_norm_rows(const double* x, const double* gain, const double* bias,
                     double* y, double* mean, double* inv_std, int rows,
                     int cols, double eps) {
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
  for (int r = 0; r < rows; ++r) {
    const double* xr = x + int64_t(r) * cols;
    const double* dyr = dy + int64_t(r) * cols;
    detail::layer_norm_row_grad_dx(xr, gain, dyr, mean[r], inv_std[r],
                                   dx + int64_t(r) * cols, cols);
    for (int j = 0; j < cols; ++j) {
      const double xhat = (xr[j] - mean[r]) * inv_std[r];
      dgain[j] += dyr[j] * xhat;
      dbias[j] += dyr[j];
    }
  }
}

void take_rows(const double* src, const int* idx, double* dst, int out_rows,
               int cols) {
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
  for (int r = 0; r < in_rows; ++r) {
    if (idx[r] < 0) continue;
    const double* s = src + int64_t(r) * cols;
    double* d = dst + int64_t(idx[r]) * cols;
    for (int j = 0; j < cols; ++j) d[j] += s[j];
  }
}

}  // namespace season::kernels::serial
