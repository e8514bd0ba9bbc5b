#pragma once

#include <vector>

namespace vqa {

struct EvalReport {
  int n = 0;
  double srocc = 0.0;
  double plcc = 0.0;
  bool srocc_defined = false;
  bool plcc_defined = false;
  bool logistic_fit_applied = false;
};

// Mid-rank (average rank over ties) assignment, 1-based.
std::vector<double> midranks(const std::vector<double>& values);

// Pearson correlation. Throws UndefinedCorrelationError on zero variance.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

// Spearman rank-order correlation: Pearson over midranks.
double srocc(const std::vector<double>& predictions, const std::vector<double>& labels);

struct PlccResult {
  double value = 0.0;
  // True when the 4-parameter logistic mapping was requested and converged.
  bool logistic_applied = false;
};

// Pearson correlation, optionally after fitting a 4-parameter logistic from
// predictions to labels. A fit that fails to converge falls back to the raw
// correlation with logistic_applied = false.
PlccResult plcc_detailed(const std::vector<double>& predictions, const std::vector<double>& labels,
                         bool apply_logistic);
double plcc(const std::vector<double>& predictions, const std::vector<double>& labels,
            bool apply_logistic = false);

}  // namespace vqa
