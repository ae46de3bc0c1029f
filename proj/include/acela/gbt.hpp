#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "acela/features.hpp"

namespace acela {

/// Training objective: squared error (conditional mean) or pinball loss at
/// quantile q (conditional q-quantile).
class Loss {
 public:
  enum class Kind { SquaredError, Pinball };

  static Loss squared_error() { return Loss(Kind::SquaredError, 0.5); }
  /// Throws Error(InvalidQuantile) unless 0 < q < 1.
  static Loss pinball(double q);

  Kind kind() const { return kind_; }
  double quantile() const { return q_; }
  bool operator==(const Loss&) const = default;

  double value(double y, double yhat) const;

 private:
  Loss(Kind k, double q) : kind_(k), q_(q) {}
  Kind kind_;
  double q_;
};

/// q*(y - yhat) when y >= yhat, (q - 1)*(y - yhat) otherwise.
double pinball_loss(double y, double yhat, double q);

struct Hyperparams {
  int num_rounds = 100;
  double learning_rate = 0.1;
  int max_depth = 4;
  int min_samples_leaf = 20;
  // Fitting is fully deterministic; the seed is carried for provenance only.
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const Hyperparams&) const = default;
};

/// One node of a regression tree stored in preorder. Leaves have feature == -1.
/// Samples with x[feature] <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double evaluate(std::span<const double> x) const;
  /// Index of the leaf `x` lands in.
  int leaf_index(std::span<const double> x) const;
};

struct BoostedModel {
  double base_score = 0.0;
  double learning_rate = 0.1;
  Loss loss = Loss::squared_error();
  std::size_t num_features = 0;
  std::vector<Tree> trees;

  /// base_score + learning_rate * sum of tree outputs, before the floor.
  double raw_score(std::span<const double> x) const;
};

/// Fits `hp.num_rounds` trees. If `round_loss` is given it receives the mean
/// training loss at round 0 (base score only) and after every round.
BoostedModel fit(const FeatureMatrix& features, std::span<const double> targets, const Loss& loss,
                 const Hyperparams& hp, std::vector<double>* round_loss = nullptr);

/// Throws Error(ShapeError) on a width mismatch. Result is clamped below at `floor`.
double predict(const BoostedModel& model, std::span<const double> x, double floor = 0.0);
inline double predict(const BoostedModel& model, const FeatureVector& x, double floor = 0.0) {
  return predict(model, std::span<const double>(x.values), floor);
}

/// Order-statistic quantile: the ceil(q*n)-th smallest value (1-based). Minimises
/// the summed pinball loss over the sample.
double empirical_quantile(std::vector<double> values, double q);

struct LinearModel {
  std::vector<double> weights;
  double intercept = 0.0;

  double raw_score(std::span<const double> x) const;
};

/// Least squares on centred data with ridge damping 1e-6; all-constant designs
/// reduce to the intercept-only model.
LinearModel fit_linear(const FeatureMatrix& features, std::span<const double> targets);
double predict(const LinearModel& model, std::span<const double> x, double floor = 0.0);

// JSON documents: base_score, learning_rate, loss kind + q, trees in preorder.
std::string to_json(const BoostedModel& model);
BoostedModel boosted_model_from_json(const std::string& text);
std::string to_json(const LinearModel& model);
LinearModel linear_model_from_json(const std::string& text);

}  // namespace acela
