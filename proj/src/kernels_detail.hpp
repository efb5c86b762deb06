#pragma once

#include <cmath>

// Shared scalar math for the serial and OpenMP kernel variants. Keeping the
// per-element formulas in one place guarantees the two variants agree bit
// for bit; only loop structure differs between them.

namespace season::kernels::detail {

inline double gelu_val(double x) {
  return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
}

inline double gelu_deriv(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

inline void softmax_row(const double* x, double* y, int cols,
                        double inv_temp) {
  double mx = x[0];
  for (int j = 1; j < cols; ++j) {
    if (x[j] > mx) mx = x[j];
  }
  double sum = 0.0;
  for (int j = 0; j < cols; ++j) {
    const double e = std::exp((x[j] - mx) * inv_temp);
    y[j] = e;
    sum += e;
  }
  const double inv = 1.0 / sum;
  for (int j = 0; j < cols; ++j) y[j] *= inv;
}

inline void softmax_row_grad(const double* y, const double* dy, double* dx,
                             int cols, double inv_temp) {
  double dot = 0.0;
  for (int j = 0; j < cols; ++j) dot += dy[j] * y[j];
  for (int j = 0; j < cols; ++j) dx[j] += (dy[j] - dot) * y[j] * inv_temp;
}

inline void layer_norm_row(const double* x, const double* gain,
                           const double* bias, double* y, double* mean_out,
                           double* inv_std_out, int cols, double eps) {
  double mean = 0.0;
  for (int j = 0; j < cols; ++j) mean += x[j];
  mean /= cols;
  double var = 0.0;
  for (int j = 0; j < cols; ++j) {
    const double d = x[j] - mean;
    var += d * d;
  }
  var /= cols;
  const double inv_std = 1.0 / std::sqrt(var + eps);
  for (int j = 0; j < cols; ++j) {
    y[j] = (x[j] - mean) * inv_std * gain[j] + bias[j];
  }
  *mean_out = mean;
  *inv_std_out = inv_std;
}

// dgain/dbias accumulation is kept out of this helper: those buffers are
// shared across rows and need either a serial loop or a reduction.
inline void layer_norm_row_grad_dx(const double* x, const double* gain,
                                   const double* dy, double mean,
                                   double inv_std, double* dx, int cols) {
  // dL/dxhat_j = dy_j * gain_j; dx = inv_std * (dxhat - mean(dxhat)
  //              - xhat * mean(dxhat * xhat))
  double sum_dxhat = 0.0;
  double sum_dxhat_xhat = 0.0;
  for (int j = 0; j < cols; ++j) {
    const double xhat = (x[j] - mean) * inv_std;
    const double dxhat = dy[j] * gain[j];
    sum_dxhat += dxhat;
    sum_dxhat_xhat += dxhat * xhat;
  }
  const double inv_cols = 1.0 / cols;
  for (int j = 0; j < cols; ++j) {
    const double xhat = (x[j] - mean) * inv_std;
    const double dxhat = dy[j] * gain[j];
    dx[j] += inv_std *
             (dxhat - sum_dxhat * inv_cols - xhat * sum_dxhat_xhat * inv_cols);
  }
}

}  // namespace season::kernels::detail
