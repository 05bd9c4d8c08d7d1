#include "minsuff/random.hpp"

#include <cmath>

namespace minsuff {

Matrix random_gaussian(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

Matrix random_hermitian(Rng& rng, int n) {
  Matrix g = random_gaussian(rng, n, n);
  return 0.5 * (g + g.adjoint());
}

Matrix random_unitary(Rng& rng, int n) {
  Eigen::HouseholderQR<Matrix> qr(random_gaussian(rng, n, n));
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < n; ++k) {
    const double a = std::abs(r(k, k));
    if (a > 0) q.col(k) *= r(k, k) / a;
  }
  return q;
}

Matrix random_density(Rng& rng, int n, int rank) {
  if (rank <= 0 || rank > n) rank = n;
  Matrix g = random_gaussian(rng, n, rank);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return 0.5 * (rho + rho.adjoint());
}

RealVector random_probability(Rng& rng, int n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  RealVector p(n);
  for (int i = 0; i < n; ++i) p(i) = u(rng);
  return p / p.sum();
}

}  // namespace minsuff
