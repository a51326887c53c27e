#pragma once

#include "rlnet/common.hpp"

#include <span>
#include <vector>

namespace rlnet {

using ConfusionMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Entry [i][j] counts samples of true class i predicted as j.
ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t classes);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
  bool undefined = false;  // 0/0 occurred; the value was set to 0
};

struct EvalReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  std::vector<ClassScores> per_class;
  ConfusionMatrix confusion;
  std::size_t num_rules = 0;
  std::size_t num_conditions = 0;

  bool any_undefined() const;
};

/// Per-class precision/recall/F1 with the 0/0 -> 0 convention, macro and weighted F1,
/// accuracy = trace / total. Throws DataError on an empty matrix.
EvalReport scores(const ConfusionMatrix& cm);

EvalReport evaluate_predictions(std::span<const int> y_true, std::span<const int> y_pred, std::size_t classes);

}  // namespace rlnet
