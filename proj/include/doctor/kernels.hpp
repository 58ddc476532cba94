#pragma once

namespace doctor::kernels {

// Dense inner loops behind the tensor engine. Each kernel exists twice: a
// serial reference and an OpenMP version parallelized over independent output
// rows. Within one output element the summation order is identical in both,
// so results are bit-identical for any thread count; the serial versions stay
// as the comparison oracle for tests and the benchmark tool.
//
// All kernels accumulate into c (callers zero fresh buffers).

namespace serial {
// c[m x n] += a[m x k] * b[k x n]
void matmul(const double* a, const double* b, double* c, int m, int k, int n);
// c[m x k] += a[m x n] * b[k x n]^T
void matmul_nt(const double* a, const double* b, double* c, int m, int n, int k);
// c[k x n] += a[m x k]^T * b[m x n]
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);
// x[h x w x ci], w[kh x kw x ci x co], bias[co] -> out[ho x wo x co]
void conv2d(const double* x, const double* w, const double* bias, double* out,
            int h, int wd, int ci, int kh, int kw, int co, int stride, int pad);
}  // namespace serial

namespace parallel {
void matmul(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nt(const double* a, const double* b, double* c, int m, int n, int k);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);
void conv2d(const double* x, const double* w, const double* bias, double* out,
            int h, int wd, int ci, int kh, int kw, int co, int stride, int pad);
}  // namespace parallel

// Size-based dispatch: small problems stay serial to avoid fork/join cost.
void matmul(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nt(const double* a, const double* b, double* c, int m, int n, int k);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);
void conv2d(const double* x, const double* w, const double* bias, double* out,
            int h, int wd, int ci, int kh, int kw, int co, int stride, int pad);

// Output sizes for strided zero-padded convolution.
int conv_out_dim(int in, int kernel, int stride, int pad);

}  // namespace doctor::kernels
