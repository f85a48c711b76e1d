#include <cmath>
#include <numbers>

#include "gausstomo/errors.h"
#include "gausstomo/fock_mle.h"

namespace gausstomo {

double hermite_wavefunction(int k, double y) {
  if (k < 0 || k > kMaxFockDimension) {
    throw DomainError("Hermite function index " + std::to_string(k) + " outside [0, " +
                      std::to_string(kMaxFockDimension) + "]");
  }
  return hermite_wavefunctions(k + 1, y)(k);
}

Vector hermite_wavefunctions(int count, double y) {
  if (count < 1 || count > kMaxFockDimension + 1) {
    throw DomainError("Hermite function count out of range");
  }
  Vector psi(count);
  // pi^{-1/4}
  psi(0) = std::exp(-0.5 * y * y) / std::sqrt(std::sqrt(std::numbers::pi));
  if (count > 1) psi(1) = std::sqrt(2.0) * y * psi(0);
  for (int k = 2; k < count; ++k) {
    psi(k) = std::sqrt(2.0 / k) * y * psi(k - 1) - std::sqrt((k - 1.0) / k) * psi(k - 2);
  }
  return psi;
}

}  // namespace gausstomo
