#include "leadsel/expm.hpp"

#include "leadsel/errors.hpp"

#include <array>
#include <cmath>
#include <string>

namespace leadsel {

namespace {

constexpr double kScaledNorm = 0.5;

// 1/k!, k = 0..16
constexpr std::array<double, 17> kTaylor = [] {
  std::array<double, 17> c{};
  c[0] = 1.0;
  for (std::size_t k = 1; k < c.size(); ++k) c[k] = c[k - 1] / static_cast<double>(k);
  return c;
}();

}  // namespace

Eigen::MatrixXd expm_metzler(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw DomainError("matrix exponential needs a square matrix");
  if (n == 0) return a;

  double shift = -a(0, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    shift = std::max(shift, -a(i, i));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && a(i, j) < 0.0) throw DomainError("matrix has a negative off-diagonal entry");
    }
  }
  Eigen::MatrixXd x = a;
  x.diagonal().array() += shift;

  const double norm = x.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > kScaledNorm) {
    int exponent = 0;
    std::frexp(norm / kScaledNorm, &exponent);
    squarings = exponent;
  }
  const double scale = std::ldexp(1.0, -squarings);
  x *= scale;

  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd x2 = x * x;
  const Eigen::MatrixXd x3 = x2 * x;
  const Eigen::MatrixXd x4 = x2 * x2;
  auto block = [&](std::size_t i) -> Eigen::MatrixXd {
    return kTaylor[4 * i] * id + kTaylor[4 * i + 1] * x + kTaylor[4 * i + 2] * x2 +
           kTaylor[4 * i + 3] * x3;
  };
  Eigen::MatrixXd r = block(3) + kTaylor[16] * x4;
  for (int i = 2; i >= 0; --i) r = block(static_cast<std::size_t>(i)) + x4 * r;

  r *= std::exp(-shift * scale);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

Eigen::MatrixXd expm_neg(const Eigen::MatrixXd& laplacian, double t) {
  const Eigen::Index n = laplacian.rows();
  if (laplacian.cols() != n) throw DomainError("Laplacian must be square");
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("time must be finite and nonnegative");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(laplacian.row(i).sum()) > 1e-9) {
      throw DomainError("not a Laplacian: row " + std::to_string(i) + " does not sum to zero");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && laplacian(i, j) > 0.0) {
        throw DomainError("not a Laplacian: positive off-diagonal entry");
      }
    }
  }
  Eigen::MatrixXd p = expm_metzler(-t * laplacian);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (laplacian.row(i).isZero(0.0)) {
      p.row(i).setZero();
      p(i, i) = 1.0;
      continue;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (p(i, j) < 0.0) {
        if (p(i, j) < -1e-12) throw NumericError("matrix exponential produced a negative entry");
        p(i, j) = 0.0;
      }
    }
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

}  // namespace leadsel
