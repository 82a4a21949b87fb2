#pragma once

#include <cstddef>

namespace taucover::simd {

enum class Backend { Scalar, AVX2, NEON };

/// Best backend the CPU supports, unless overridden by set_backend or by
/// TAUCOVER_SIMD=scalar in the environment.
Backend backend();
bool supported(Backend b);
/// Returns false (and keeps the current backend) if b is unsupported.
bool set_backend(Backend b);
const char* name(Backend b);

// Every backend evaluates the same fused multiply-add sequence, so results are
// bit-identical across backends.

/// out[i] = sum_k c[k] x[i]^k, k = 0..degree.
void horner(const double* c, int degree, const double* x, double* out, std::size_t n);
/// out[i] = y[i] + a x[i]
void axpy(double a, const double* x, const double* y, double* out, std::size_t n);
/// out[i] = y[i] + a f0[i] + b f1[i] + c f2[i]
void combine3(const double* y, double a, const double* f0, double b, const double* f1, double c, const double* f2,
              double* out, std::size_t n);

namespace scalar {
void horner(const double* c, int degree, const double* x, double* out, std::size_t n);
void axpy(double a, const double* x, const double* y, double* out, std::size_t n);
void combine3(const double* y, double a, const double* f0, double b, const double* f1, double c, const double* f2,
              double* out, std::size_t n);
}  // namespace scalar

}  // namespace taucover::simd
