#pragma once

#include <cstdint>

namespace season::kernels {

// Dense double-precision kernels used by the autodiff graph and the
// inference evaluator. The functions in this namespace are OpenMP-parallel;
// kernels::serial holds a plain reference implementation of each one.
//
// Both variants reduce every output element sequentially in the same index
// order, so their results are bitwise identical. Parallel loops only
// distribute whole output rows (or disjoint element ranges) across threads,
// which also makes results independent of the thread count.

// c[m,n] = a[m,k] * b[k,n]           (+= when accumulate)
void matmul_nn(const double* a, const double* b, double* c, int m, int k,
               int n, bool accumulate = false);

// c[m,n] = a[m,k] * b[n,k]^T         (+= when accumulate)
void matmul_nt(const double* a, const double* b, double* c, int m, int k,
               int n, bool accumulate = false);

// c[k,n] = a[m,k]^T * b[m,n]         (+= when accumulate)
void matmul_tn(const double* a, const double* b, double* c, int m, int k,
               int n, bool accumulate = false);

void add(const double* a, const double* b, double* out, int64_t n);
void mul(const double* a, const double* b, double* out, int64_t n);
void scale(const double* a, double s, double* out, int64_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, int64_t n);

void gelu(const double* x, double* y, int64_t n);
// dx += dy * gelu'(x)
void gelu_grad(const double* x, const double* dy, double* dx, int64_t n);

// Row-wise softmax of x * inv_temp with max subtraction. -inf entries are
// legal and map to probability zero; a row must contain at least one finite
// entry.
void softmax_rows(const double* x, double* y, int rows, int cols,
                  double inv_temp);
// dx += J_softmax^T dy, where y is the forward output.
void softmax_rows_grad(const double* y, const double* dy, double* dx, int rows,
                       int cols, double inv_temp);

// Row-wise layer norm with affine gain/bias. mean and inv_std (one per row)
// are written for the backward pass.
void layer_norm_rows(const double* x, const double* gain, const double* bias,
                     double* y, double* mean, double* inv_std, int rows,
                     int cols, double eps);
void layer_norm_rows_grad(const double* x, const double* gain,
                          const double* dy, const double* mean,
                          const double* inv_std, double* dx, double* dgain,
                          double* dbias, int rows, int cols);

// dst[r,:] = src[idx[r],:]; idx[r] < 0 emits a zero row.
void take_rows(const double* src, const int* idx, double* dst, int out_rows,
               int cols);
// dst[idx[r],:] += src[r,:]; idx[r] < 0 rows are skipped. Serial in both
// variants: duplicate indices make row-parallel scatter racy.
void scatter_add_rows(double* dst, const int* idx, const double* src,
                      int in_rows, int cols);

namespace serial {

void matmul_nn(const double* a, const double* b, double* c, int m, int k,
               int n, bool accumulate = false);
void matmul_nt(const double* a, const double* b, double* c, int m, int k,
               int n, bool accumulate = false);
void matmul_tn(const double* a, const double* b, double* c, int m, int k,
               int n, bool accumulate = false);
void add(const double* a, const double* b, double* out, int64_t n);
void mul(const double* a, const double* b, double* out, int64_t n);
void scale(const double* a, double s, double* out, int64_t n);
void axpy(double alpha, const double* x, double* y, int64_t n);
void gelu(const double* x, double* y, int64_t n);
void gelu_grad(const double* x, const double* dy, double* dx, int64_t n);
void softmax_rows(const double* x, double* y, int rows, int cols,
                  double inv_temp);
void softmax_rows_grad(const double* y, const double* dy, double* dx, int rows,
                       int cols, double inv_temp);
void layer_norm_rows(const double* x, const double* gain, const double* bias,
                     double* y, double* mean, double* inv_std, int rows,
                     int cols, double eps);
void layer_norm_rows_grad(const double* x, const double* gain,
                          const double* dy, const double* mean,
                          const double* inv_std, double* dx, double* dgain,
                          double* dbias, int rows, int cols);
void take_rows(const double* src, const int* idx, double* dst, int out_rows,
               int cols);
void scatter_add_rows(double* dst, const int* idx, const double* src,
                      int in_rows, int cols);

}  // namespace serial

}  // namespace season::kernels
