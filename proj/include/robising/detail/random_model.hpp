#pragma once

#include <random>

namespace robising {

template <typename Rng>
IsingParameters random_bounded_model(Index d, double M, double alpha, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-alpha, alpha);
  MatrixXd theta = MatrixXd::Zero(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) {
      theta(i, j) = theta(j, i) = gauss(rng);
    }
  }
  double maxRow = theta.cwiseAbs().rowwise().sum().maxCoeff();
  if (maxRow > 0.0) theta *= M / maxRow;
  // Rescaling can overshoot M by an ulp; pull back if so.
  while (d > 1 && theta.cwiseAbs().rowwise().sum().maxCoeff() > M) theta *= 1.0 - 1e-15;
  VectorXd field(d);
  for (Index i = 0; i < d; ++i) field(i) = alpha > 0.0 ? unif(rng) : 0.0;
  return IsingParameters(std::move(theta), std::move(field));
}

}  // namespace robising
