#include "vqa/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vqa/errors.hpp"

namespace vqa {

namespace {

void check_lengths(const std::vector<double>& a, const std::vector<double>& b, const char* op) {
  if (a.size() != b.size()) throw NumericError("metrics", std::string(op) + ": length mismatch");
  if (a.size() < 2) throw NumericError("metrics", std::string(op) + ": needs at least 2 samples");
  for (double v : a)
    if (!std::isfinite(v)) throw NumericError("metrics", std::string(op) + ": non-finite value");
  for (double v : b)
    if (!std::isfinite(v)) throw NumericError("metrics", std::string(op) + ": non-finite value");
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Least-squares fit of label ~ b2 + (b1 - b2) / (1 + exp(-(x - b3)/b4)) by
// Levenberg-Marquardt. Returns false when the fit does not converge.
bool fit_logistic4(const std::vector<double>& x, const std::vector<double>& y, double beta[4]) {
  const int n = static_cast<int>(x.size());
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), n), yv(y.data(), n);

  double b1 = yv.maxCoeff(), b2 = yv.minCoeff();
  double b3 = xv.mean();
  double b4 = std::sqrt((xv.array() - b3).square().sum() / n);
  if (b4 <= 0.0) return false;
  if (b1 == b2) return false;

  auto sse = [&](double p1, double p2, double p3, double p4) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double f = p2 + (p1 - p2) * sigmoid((x[i] - p3) / p4);
      s += (f - y[i]) * (f - y[i]);
    }
    return s;
  };

  double lambda = 1e-3;
  double err = sse(b1, b2, b3, b4);
  bool converged = false;
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::MatrixXd jac(n, 4);
    Eigen::VectorXd resid(n);
    for (int i = 0; i < n; ++i) {
      const double t = (x[i] - b3) / b4;
      const double s = sigmoid(t);
      const double ds = s * (1.0 - s);
      resid[i] = b2 + (b1 - b2) * s - y[i];
      jac(i, 0) = s;
      jac(i, 1) = 1.0 - s;
      jac(i, 2) = (b1 - b2) * ds * (-1.0 / b4);
      jac(i, 3) = (b1 - b2) * ds * (-t / b4);
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * resid;
    if (jtr.lpNorm<Eigen::Infinity>() < 1e-10 * (1.0 + err)) {
      converged = true;
      break;
    }

    Eigen::MatrixXd damped = jtj;
    damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
    const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
    if (!step.allFinite()) return false;

    const double c1 = b1 + step[0], c2 = b2 + step[1], c3 = b3 + step[2], c4 = b4 + step[3];
    const double new_err = (c4 == 0.0) ? std::numeric_limits<double>::infinity() : sse(c1, c2, c3, c4);
    if (new_err < err) {
      const double rel = (err - new_err) / std::max(err, 1e-300);
      b1 = c1;
      b2 = c2;
      b3 = c3;
      b4 = c4;
      err = new_err;
      lambda = std::max(lambda / 3.0, 1e-12);
      if (rel < 1e-12) {
        converged = true;
        break;
      }
    } else {
      lambda *= 3.0;
      if (lambda > 1e12) break;
    }
  }
  beta[0] = b1;
  beta[1] = b2;
  beta[2] = b3;
  beta[3] = b4;
  return converged;
}

}  // namespace

std::vector<double> midranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&values](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;  // average of 1-based positions
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  check_lengths(a, b, "pearson");
  const int n = static_cast<int>(a.size());
  Eigen::Map<const Eigen::VectorXd> av(a.data(), n), bv(b.data(), n);
  const Eigen::VectorXd ac = av.array() - av.mean();
  const Eigen::VectorXd bc = bv.array() - bv.mean();
  const double denom = ac.norm() * bc.norm();
  if (denom == 0.0) {
    throw UndefinedCorrelationError("metrics", "correlation undefined for a constant sequence");
  }
  return ac.dot(bc) / denom;
}

double srocc(const std::vector<double>& predictions, const std::vector<double>& labels) {
  check_lengths(predictions, labels, "srocc");
  return pearson(midranks(predictions), midranks(labels));
}

PlccResult plcc_detailed(const std::vector<double>& predictions, const std::vector<double>& labels,
                         bool apply_logistic) {
  check_lengths(predictions, labels, "plcc");
  if (!apply_logistic) return {pearson(predictions, labels), false};

  double beta[4];
  if (!fit_logistic4(predictions, labels, beta)) {
    return {pearson(predictions, labels), false};
  }
  std::vector<double> mapped(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    mapped[i] = beta[1] + (beta[0] - beta[1]) * sigmoid((predictions[i] - beta[2]) / beta[3]);
  }
  try {
    return {pearson(mapped, labels), true};
  } catch (const UndefinedCorrelationError&) {
    // collapsed fit; report the raw correlation instead
    return {pearson(predictions, labels), false};
  }
}

double plcc(const std::vector<double>& predictions, const std::vector<double>& labels,
            bool apply_logistic) {
  return plcc_detailed(predictions, labels, apply_logistic).value;
}

}  // namespace vqa
