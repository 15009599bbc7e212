#include "smn/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace smn::kern {

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  double (*sqdist)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*sum)(const double*, std::size_t);
};

constexpr Table kScalarTable{scalar::dot, scalar::squared_distance, scalar::axpy, scalar::sum};
constexpr Table kAvx2Table{avx2::dot, avx2::squared_distance, avx2::axpy, avx2::sum};

struct State {
  Backend backend;
  Table table;
};

State detect() {
  Backend b = avx2::supported() ? Backend::Avx2 : Backend::Scalar;
  if (const char* env = std::getenv("SMN_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) b = Backend::Scalar;
    if (std::strcmp(env, "avx2") == 0 && avx2::supported()) b = Backend::Avx2;
  }
  return {b, b == Backend::Avx2 ? kAvx2Table : kScalarTable};
}

State& state() {
  static State s = detect();
  return s;
}

}  // namespace

Backend active_backend() { return state().backend; }

const char* backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

bool set_backend(Backend b) {
  if (b == Backend::Avx2 && !avx2::supported()) return false;
  state() = {b, b == Backend::Avx2 ? kAvx2Table : kScalarTable};
  return true;
}

void use_best_backend() { state() = detect(); }

double dot(const double* a, const double* b, std::size_t n) { return state().table.dot(a, b, n); }

double squared_distance(const double* a, const double* b, std::size_t n) {
  return state().table.sqdist(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  state().table.axpy(alpha, x, y, n);
}

double sum(const double* x, std::size_t n) { return state().table.sum(x, n); }

}  // namespace smn::kern
