#include "rlnet/metrics.hpp"

#include <algorithm>
#include <string>

namespace rlnet {

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t classes) {
  if (y_true.size() != y_pred.size()) throw ShapeError("confusion: label vectors differ in length");
  const auto C = static_cast<Eigen::Index>(classes);
  ConfusionMatrix cm = ConfusionMatrix::Zero(C, C);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || t >= C || p < 0 || p >= C) {
      throw DataError("confusion: label out of range at index " + std::to_string(i));
    }
    ++cm(t, p);
  }
  return cm;
}

bool EvalReport::any_undefined() const {
  return std::any_of(per_class.begin(), per_class.end(), [](const ClassScores& s) { return s.undefined; });
}

EvalReport scores(const ConfusionMatrix& cm) {
  const long total = cm.sum();
  if (total == 0) throw DataError("scores: empty confusion matrix");
  EvalReport r;
  r.confusion = cm;
  r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  const auto C = cm.rows();
  double f1_sum = 0.0;
  double weighted = 0.0;
  for (Eigen::Index c = 0; c < C; ++c) {
    ClassScores s;
    const long tp = cm(c, c);
    const long predicted = cm.col(c).sum();
    s.support = cm.row(c).sum();
    if (predicted > 0) {
      s.precision = static_cast<double>(tp) / static_cast<double>(predicted);
    } else {
      s.undefined = true;
    }
    if (s.support > 0) {
      s.recall = static_cast<double>(tp) / static_cast<double>(s.support);
    } else {
      s.undefined = true;
    }
    if (s.precision + s.recall > 0.0) {
      s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    }
    f1_sum += s.f1;
    weighted += s.f1 * static_cast<double>(s.support);
    r.per_class.push_back(s);
  }
  r.macro_f1 = f1_sum / static_cast<double>(C);
  r.weighted_f1 = weighted / static_cast<double>(total);
  return r;
}

EvalReport evaluate_predictions(std::span<const int> y_true, std::span<const int> y_pred, std::size_t classes) {
  return scores(confusion(y_true, y_pred, classes));
}

}  // namespace rlnet
