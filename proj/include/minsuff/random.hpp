#pragma once

#include <cstdint>
#include <random>

#include "minsuff/numerics.hpp"

namespace minsuff {

using Rng = std::mt19937_64;

Matrix random_gaussian(Rng& rng, int rows, int cols);
Matrix random_hermitian(Rng& rng, int n);
/// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
Matrix random_unitary(Rng& rng, int n);
/// Random density matrix of the given rank (Wishart-type).
Matrix random_density(Rng& rng, int n, int rank = -1);
/// Random probability vector with strictly positive entries.
RealVector random_probability(Rng& rng, int n);

}  // namespace minsuff
