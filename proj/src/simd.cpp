#include "taucover/simd.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define TAUCOVER_X86 1
#endif
#if defined(__aarch64__)
#include <arm_neon.h>
#define TAUCOVER_NEON 1
#endif

namespace taucover::simd {

namespace scalar {

void horner(const double* c, int degree, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double r = c[degree];
    for (int k = degree - 1; k >= 0; --k) r = std::fma(r, x[i], c[k]);
    out[i] = r;
  }
}

void axpy(double a, const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::fma(a, x[i], y[i]);
}

void combine3(const double* y, double a, const double* f0, double b, const double* f1, double c, const double* f2,
              double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double r = std::fma(a, f0[i], y[i]);
    r = std::fma(b, f1[i], r);
    out[i] = std::fma(c, f2[i], r);
  }
}

}  // namespace scalar

namespace {

#ifdef TAUCOVER_X86
__attribute__((target("avx2,fma"))) void horner_avx2(const double* c, int degree, const double* x, double* out,
                                                      std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d r = _mm256_set1_pd(c[degree]);
    for (int k = degree - 1; k >= 0; --k) r = _mm256_fmadd_pd(r, xv, _mm256_set1_pd(c[k]));
    _mm256_storeu_pd(out + i, r);
  }
  scalar::horner(c, degree, x + i, out + i, n - i);
}

__attribute__((target("avx2,fma"))) void axpy_avx2(double a, const double* x, const double* y, double* out,
                                                    std::size_t n) {
  std::size_t i = 0;
  __m256d av = _mm256_set1_pd(a);
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  scalar::axpy(a, x + i, y + i, out + i, n - i);
}

__attribute__((target("avx2,fma"))) void combine3_avx2(const double* y, double a, const double* f0, double b,
                                                        const double* f1, double c, const double* f2, double* out,
                                                        std::size_t n) {
  std::size_t i = 0;
  __m256d av = _mm256_set1_pd(a), bv = _mm256_set1_pd(b), cv = _mm256_set1_pd(c);
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_fmadd_pd(av, _mm256_loadu_pd(f0 + i), _mm256_loadu_pd(y + i));
    r = _mm256_fmadd_pd(bv, _mm256_loadu_pd(f1 + i), r);
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(cv, _mm256_loadu_pd(f2 + i), r));
  }
  scalar::combine3(y + i, a, f0 + i, b, f1 + i, c, f2 + i, out + i, n - i);
}
#endif

#ifdef TAUCOVER_NEON
void horner_neon(const double* c, int degree, const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t xv = vld1q_f64(x + i);
    float64x2_t r = vdupq_n_f64(c[degree]);
    for (int k = degree - 1; k >= 0; --k) r = vfmaq_f64(vdupq_n_f64(c[k]), r, xv);
    vst1q_f64(out + i, r);
  }
  scalar::horner(c, degree, x + i, out + i, n - i);
}

void axpy_neon(double a, const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  float64x2_t av = vdupq_n_f64(a);
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
  scalar::axpy(a, x + i, y + i, out + i, n - i);
}

void combine3_neon(const double* y, double a, const double* f0, double b, const double* f1, double c,
                   const double* f2, double* out, std::size_t n) {
  std::size_t i = 0;
  float64x2_t av = vdupq_n_f64(a), bv = vdupq_n_f64(b), cv = vdupq_n_f64(c);
  for (; i + 2 <= n; i += 2) {
    float64x2_t r = vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(f0 + i));
    r = vfmaq_f64(r, bv, vld1q_f64(f1 + i));
    vst1q_f64(out + i, vfmaq_f64(r, cv, vld1q_f64(f2 + i)));
  }
  scalar::combine3(y + i, a, f0 + i, b, f1 + i, c, f2 + i, out + i, n - i);
}
#endif

Backend detect() {
  if (const char* env = std::getenv("TAUCOVER_SIMD"); env && std::strcmp(env, "scalar") == 0) return Backend::Scalar;
  if (supported(Backend::AVX2)) return Backend::AVX2;
  if (supported(Backend::NEON)) return Backend::NEON;
  return Backend::Scalar;
}

std::atomic<Backend>& active() {
  static std::atomic<Backend> b{detect()};
  return b;
}

}  // namespace

bool supported(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::AVX2:
#ifdef TAUCOVER_X86
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::NEON:
#ifdef TAUCOVER_NEON
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend backend() { return active().load(); }

bool set_backend(Backend b) {
  if (!supported(b)) return false;
  active().store(b);
  return true;
}

const char* name(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return "scalar";
    case Backend::AVX2:
      return "avx2";
    case Backend::NEON:
      return "neon";
  }
  return "?";
}

void horner(const double* c, int degree, const double* x, double* out, std::size_t n) {
  if (degree < 0) {
    for (std::size_t i = 0; i < n; ++i) out[i] = 0;
    return;
  }
  switch (backend()) {
#ifdef TAUCOVER_X86
    case Backend::AVX2:
      return horner_avx2(c, degree, x, out, n);
#endif
#ifdef TAUCOVER_NEON
    case Backend::NEON:
      return horner_neon(c, degree, x, out, n);
#endif
    default:
      return scalar::horner(c, degree, x, out, n);
  }
}

void axpy(double a, const double* x, const double* y, double* out, std::size_t n) {
  switch (backend()) {
#ifdef TAUCOVER_X86
    case Backend::AVX2:
      return axpy_avx2(a, x, y, out, n);
#endif
#ifdef TAUCOVER_NEON
    case Backend::NEON:
      return axpy_neon(a, x, y, out, n);
#endif
    default:
      return scalar::axpy(a, x, y, out, n);
  }
}

void combine3(const double* y, double a, const double* f0, double b, const double* f1, double c, const double* f2,
              double* out, std::size_t n) {
  switch (backend()) {
#ifdef TAUCOVER_X86
    case Backend::AVX2:
      return combine3_avx2(y, a, f0, b, f1, c, f2, out, n);
#endif
#ifdef TAUCOVER_NEON
    case Backend::NEON:
      return combine3_neon(y, a, f0, b, f1, c, f2, out, n);
#endif
    default:
      return scalar::combine3(y, a, f0, b, f1, c, f2, out, n);
  }
}

}  // namespace taucover::simd
