#include "doctor/kernels.hpp"

namespace doctor::kernels {

namespace {
// Below this many multiply-adds the OpenMP fork costs more than it saves.
constexpr long kParallelThreshold = 64 * 1024;
}  // namespace

int conv_out_dim(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

namespace serial {

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<long>(i) * k;
    double* ci = c + static_cast<long>(i) * n;
    for (int l = 0; l < k; ++l) {
      const double av = ai[l];
      const double* bl = b + static_cast<long>(l) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int n, int k) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<long>(i) * n;
    double* ci = c + static_cast<long>(i) * k;
    for (int l = 0; l < k; ++l) {
      const double* bl = b + static_cast<long>(l) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += ai[j] * bl[j];
      ci[l] += acc;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int l = 0; l < k; ++l) {
    double* cl = c + static_cast<long>(l) * n;
    for (int i = 0; i < m; ++i) {
      const double av = a[static_cast<long>(i) * k + l];
      const double* bi = b + static_cast<long>(i) * n;
      for (int j = 0; j < n; ++j) cl[j] += av * bi[j];
    }
  }
}

void conv2d(const double* x, const double* w, const double* bias, double* out,
            int h, int wd, int ci, int kh, int kw, int co, int stride, int pad) {
  const int ho = conv_out_dim(h, kh, stride, pad);
  const int wo = conv_out_dim(wd, kw, stride, pad);
  for (int oy = 0; oy < ho; ++oy) {
    for (int ox = 0; ox < wo; ++ox) {
      double* op = out + (static_cast<long>(oy) * wo + ox) * co;
      for (int f = 0; f < co; ++f) op[f] += bias[f];
      for (int ky = 0; ky < kh; ++ky) {
        const int iy = oy * stride + ky - pad;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ox * stride + kx - pad;
          if (ix < 0 || ix >= wd) continue;
          const double* xp = x + (static_cast<long>(iy) * wd + ix) * ci;
          const double* wp = w + ((static_cast<long>(ky) * kw + kx) * ci) * co;
          for (int c = 0; c < ci; ++c) {
            const double xv = xp[c];
            const double* wc = wp + static_cast<long>(c) * co;
            for (int f = 0; f < co; ++f) op[f] += xv * wc[f];
          }
        }
      }
    }
  }
}

}  // namespace serial

namespace parallel {

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<long>(i) * k;
    double* ci = c + static_cast<long>(i) * n;
    for (int l = 0; l < k; ++l) {
      const double av = ai[l];
      const double* bl = b + static_cast<long>(l) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int n, int k) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<long>(i) * n;
    double* ci = c + static_cast<long>(i) * k;
    for (int l = 0; l < k; ++l) {
      const double* bl = b + static_cast<long>(l) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += ai[j] * bl[j];
      ci[l] += acc;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
  // Parallel over rows of c (the k axis); each row scans all of a and b but
  // writes only its own slice, keeping per-element sum order serial.
#pragma omp parallel for schedule(static)
  for (int l = 0; l < k; ++l) {
    double* cl = c + static_cast<long>(l) * n;
    for (int i = 0; i < m; ++i) {
      const double av = a[static_cast<long>(i) * k + l];
      const double* bi = b + static_cast<long>(i) * n;
      for (int j = 0; j < n; ++j) cl[j] += av * bi[j];
    }
  }
}

void conv2d(const double* x, const double* w, const double* bias, double* out,
            int h, int wd, int ci, int kh, int kw, int co, int stride, int pad) {
  const int ho = conv_out_dim(h, kh, stride, pad);
  const int wo = conv_out_dim(wd, kw, stride, pad);
#pragma omp parallel for schedule(static)
  for (int oy = 0; oy < ho; ++oy) {
    for (int ox = 0; ox < wo; ++ox) {
      double* op = out + (static_cast<long>(oy) * wo + ox) * co;
      for (int f = 0; f < co; ++f) op[f] += bias[f];
      for (int ky = 0; ky < kh; ++ky) {
        const int iy = oy * stride + ky - pad;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ox * stride + kx - pad;
          if (ix < 0 || ix >= wd) continue;
          const double* xp = x + (static_cast<long>(iy) * wd + ix) * ci;
          const double* wp = w + ((static_cast<long>(ky) * kw + kx) * ci) * co;
          for (int c = 0; c < ci; ++c) {
            const double xv = xp[c];
            const double* wc = wp + static_cast<long>(c) * co;
            for (int f = 0; f < co; ++f) op[f] += xv * wc[f];
          }
        }
      }
    }
  }
}

}  // namespace parallel

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
  if (static_cast<long>(m) * k * n >= kParallelThreshold)
    parallel::matmul(a, b, c, m, k, n);
  else
    serial::matmul(a, b, c, m, k, n);
}

void matmul_nt(const double* a, const double* b, double* c, int m, int n, int k) {
  if (static_cast<long>(m) * n * k >= kParallelThreshold)
    parallel::matmul_nt(a, b, c, m, n, k);
  else
    serial::matmul_nt(a, b, c, m, n, k);
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
  if (static_cast<long>(m) * k * n >= kParallelThreshold)
    parallel::matmul_tn(a, b, c, m, k, n);
  else
    serial::matmul_tn(a, b, c, m, k, n);
}

void conv2d(const double* x, const double* w, const double* bias, double* out,
            int h, int wd, int ci, int kh, int kw, int co, int stride, int pad) {
  const long work = static_cast<long>(conv_out_dim(h, kh, stride, pad)) *
                    conv_out_dim(wd, kw, stride, pad) * kh * kw * ci * co;
  if (work >= kParallelThreshold)
    parallel::conv2d(x, w, bias, out, h, wd, ci, kh, kw, co, stride, pad);
  else
    serial::conv2d(x, w, bias, out, h, wd, ci, kh, kw, co, stride, pad);
}

}  // namespace doctor::kernels
