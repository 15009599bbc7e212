#pragma once

#include <cstddef>

// Data-parallel inner loops shared by clustering, neighbor search, projection,
// classifier training and fusion weighting. A scalar reference implementation
// is always available; an AVX2+FMA variant is selected at runtime when the CPU
// supports it. The two are equivalence-tested against each other.
//
// Backend selection: best supported backend by default, overridable with the
// SMN_KERNELS environment variable ("scalar" or "avx2") or set_backend().

namespace smn::kern {

enum class Backend { Scalar, Avx2 };

Backend active_backend();
const char* backend_name(Backend b);

// Returns false (and leaves the backend unchanged) if b is unsupported here.
bool set_backend(Backend b);

// Re-runs detection, honoring SMN_KERNELS.
void use_best_backend();

double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);  // y += alpha*x
double sum(const double* x, std::size_t n);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
}  // namespace scalar

namespace avx2 {
bool supported();
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
}  // namespace avx2

}  // namespace smn::kern
