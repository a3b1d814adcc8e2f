#include "aos/error.hpp"
#include "aos/eval.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace aos {

namespace {

struct Residuals {
  Eigen::VectorXd weighted;
  Eigen::MatrixX2d jacobian;  // of the weighted residuals
  double cost = 0.0;
};

Residuals evaluate(std::span<const Eigen::Vector2d> pts, double a, double b, double penalty) {
  Residuals r;
  const auto n = static_cast<Eigen::Index>(pts.size());
  r.weighted.resize(n);
  r.jacobian.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = pts[i].x(), y = pts[i].y();
    const double den = b + x;
    const double f = a * x / den;
    const double res = y - f;
    const double w = res > 0.0 ? penalty : 1.0;
    r.weighted(i) = w * res;
    r.jacobian(i, 0) = -w * x / den;
    r.jacobian(i, 1) = w * a * x / (den * den);
  }
  r.cost = r.weighted.squaredNorm();
  return r;
}

}  // namespace

ApCurveFit fit_ap_curve(std::span<const Eigen::Vector2d> points, const FitOptions& opt) {
  if (points.size() < 2) throw ParameterError("need at least two (N, AP) points");
  for (const auto& p : points) {
    if (!(p.x() > 0.0) || !std::isfinite(p.y())) throw ParameterError("N must be > 0 and AP finite");
  }
  if (!(opt.penalty > 0.0)) throw ParameterError("penalty must be > 0");

  double a = 0.0;
  for (const auto& p : points) a = std::max(a, p.y());
  if (!(a > 0.0)) throw ParameterError("all AP values are <= 0");
  std::vector<double> b_guess;
  for (const auto& p : points) {
    if (p.y() > 0.0 && p.y() < a) b_guess.push_back(p.x() * (a / p.y() - 1.0));
  }
  double b = 1.0;
  if (!b_guess.empty()) {
    std::nth_element(b_guess.begin(), b_guess.begin() + b_guess.size() / 2, b_guess.end());
    b = std::max(1e-3, b_guess[b_guess.size() / 2]);
  }

  double mu = 1e-3;
  auto cur = evaluate(points, a, b, opt.penalty);
  int it = 0;
  bool converged = false;
  for (; it < opt.max_iterations; ++it) {
    const Eigen::Matrix2d jtj = cur.jacobian.transpose() * cur.jacobian;
    const Eigen::Vector2d grad = cur.jacobian.transpose() * cur.weighted;
    if (grad.lpNorm<Eigen::Infinity>() <= opt.tolerance || cur.cost <= opt.tolerance * opt.tolerance) {
      converged = true;
      break;
    }
    bool stepped = false;
    while (mu < 1e16) {
      Eigen::Matrix2d damped = jtj;
      damped.diagonal() += mu * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::Vector2d step = damped.ldlt().solve(-grad);
      const double na = a + step(0), nb = b + step(1);
      if (nb > 0.0 && std::isfinite(na)) {
        auto next = evaluate(points, na, nb, opt.penalty);
        if (next.cost < cur.cost) {
          const double rel = (cur.cost - next.cost) / std::max(cur.cost, 1e-300);
          const double step_rel = step.norm() / (std::hypot(a, b) + 1e-300);
          a = na;
          b = nb;
          cur = std::move(next);
          mu = std::max(mu / 3.0, 1e-12);
          stepped = true;
          if (rel < opt.tolerance || step_rel < 1e-13) converged = true;
          break;
        }
      }
      mu *= 4.0;
    }
    if (!stepped) {
      // No descent direction left at machine precision: a stationary point.
      converged = true;
      break;
    }
    if (converged) break;
  }
  if (!converged) throw FitError("AP curve fit did not converge", it, std::sqrt(cur.cost));

  ApCurveFit fit;
  fit.a = a;
  fit.b = b;
  fit.iterations = it;
  double sse = 0.0;
  for (const auto& p : points) {
    const double r = p.y() - fit(p.x());
    sse += r * r;
  }
  fit.mse = sse / static_cast<double>(points.size());
  return fit;
}

}  // namespace aos
