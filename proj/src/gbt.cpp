#include "acela/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "acela/error.hpp"

namespace acela {
namespace {

using json = nlohmann::json;

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

// Per-node accumulator used while sweeping one feature column.
struct SweepState {
  double sum_left = 0.0;
  std::size_t count_left = 0;
  double last_x = 0.0;
};

struct NodeStats {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
};

// Builds one tree on pseudo-residuals `grad`, leaving the leaf id of every sample
// in `leaf_of`. Leaf values are filled in by the caller.
// Column presorted once per fit: sample ids and their values in ascending order.
struct SortedColumn {
  std::vector<std::uint32_t> ids;
  std::vector<double> values;
};

Tree grow_tree(const FeatureMatrix& x, const std::vector<SortedColumn>& sorted, std::span<const double> grad, const Hyperparams& hp, std::vector<int>& leaf_of) {
  const std::size_t n = x.rows;
  const auto msl = static_cast<std::size_t>(hp.min_samples_leaf);

  std::vector<TreeNode> nodes(1);
  std::vector<int> node_of(n, 0);
  std::vector<int> active = {0};

  for (int depth = 0; depth < hp.max_depth && !active.empty(); ++depth) {
    std::vector<int> slot(nodes.size(), -1);
    for (std::size_t a = 0; a < active.size(); ++a) slot[active[a]] = static_cast<int>(a);

    std::vector<int> sample_slot(n);
    std::vector<NodeStats> stats(active.size());
    for (std::size_t i = 0; i < n; ++i) {
      const int s = sample_slot[i] = slot[node_of[i]];
      if (s < 0) continue;
      stats[s].sum += grad[i];
      stats[s].sum_sq += grad[i] * grad[i];
      ++stats[s].count;
    }

    std::vector<SplitCandidate> best(active.size());
    std::vector<SweepState> sweep(active.size());
    for (std::size_t f = 0; f < x.cols; ++f) {
      std::fill(sweep.begin(), sweep.end(), SweepState{});
      const auto& col = sorted[f];
      if (col.values.empty() || col.values.front() == col.values.back()) continue;
      for (std::size_t k = 0; k < col.ids.size(); ++k) {
        const std::uint32_t i = col.ids[k];
        const int s = sample_slot[i];
        if (s < 0) continue;
        auto& st = sweep[s];
        const double xi = col.values[k];
        if (st.count_left > 0 && xi > st.last_x) {
          const auto& ns = stats[s];
          const std::size_t count_right = ns.count - st.count_left;
          if (st.count_left >= msl && count_right >= msl) {
            const double sum_right = ns.sum - st.sum_left;
            const double gain = st.sum_left * st.sum_left / static_cast<double>(st.count_left) +
                                sum_right * sum_right / static_cast<double>(count_right) -
                                ns.sum * ns.sum / static_cast<double>(ns.count);
            if (gain > best[s].gain) {
              double thr = st.last_x + (xi - st.last_x) / 2.0;
              if (!(thr < xi)) thr = st.last_x;
              best[s] = {gain, static_cast<int>(f), thr};
            }
          }
        }
        st.sum_left += grad[i];
        ++st.count_left;
        st.last_x = xi;
      }
    }

    std::vector<int> next_active;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto& b = best[a];
      const double tol = 1e-12 * (1.0 + stats[a].sum_sq);
      if (b.feature < 0 || !(b.gain > tol)) continue;
      const int id = active[a];
      const int left = static_cast<int>(nodes.size());
      nodes.emplace_back();
      nodes.emplace_back();
      nodes[id].feature = b.feature;
      nodes[id].threshold = b.threshold;
      nodes[id].left = left;
      nodes[id].right = left + 1;
      next_active.push_back(left);
      next_active.push_back(left + 1);
    }
    if (next_active.empty()) break;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& node = nodes[node_of[i]];
      if (node.is_leaf()) continue;
      node_of[i] = x.at(i, node.feature) <= node.threshold ? node.left : node.right;
    }
    active = std::move(next_active);
  }

  // Re-index into preorder.
  Tree tree;
  std::vector<int> new_id(nodes.size(), -1);
  std::vector<int> stack = {0};
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    new_id[id] = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(nodes[id]);
    if (!nodes[id].is_leaf()) {
      stack.push_back(nodes[id].right);
      stack.push_back(nodes[id].left);
    }
  }
  for (auto& node : tree.nodes) {
    if (node.is_leaf()) continue;
    node.left = new_id[node.left];
    node.right = new_id[node.right];
  }
  leaf_of.resize(n);
  for (std::size_t i = 0; i < n; ++i) leaf_of[i] = new_id[node_of[i]];
  return tree;
}

double mean_loss(const Loss& loss, std::span<const double> y, std::span<const double> f) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += loss.value(y[i], f[i]);
  return total / static_cast<double>(y.size());
}

void check_width(std::size_t expected, std::size_t got) {
  if (expected != got)
    throw Error(ErrorKind::ShapeError, fmt::format("shape error: expected {} features, got {}", expected, got));
}

}  // namespace

Loss Loss::pinball(double q) {
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorKind::InvalidQuantile, fmt::format("invalid quantile: {}", q));
  return Loss(Kind::Pinball, q);
}

double Loss::value(double y, double yhat) const {
  if (kind_ == Kind::Pinball) return pinball_loss(y, yhat, q_);
  const double d = y - yhat;
  return d * d;
}

double pinball_loss(double y, double yhat, double q) {
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorKind::InvalidQuantile, fmt::format("invalid quantile: {}", q));
  const double d = y - yhat;
  return d >= 0.0 ? q * d : (q - 1.0) * d;
}

void Hyperparams::validate() const {
  if (num_rounds < 0 || !(learning_rate > 0.0 && learning_rate <= 1.0) || max_depth <= 0 ||
      min_samples_leaf <= 0)
    throw Error(ErrorKind::InvalidConfig, "invalid hyperparameters");
}

double Tree::evaluate(std::span<const double> x) const { return nodes[leaf_index(x)].value; }

int Tree::leaf_index(std::span<const double> x) const {
  int id = 0;
  while (!nodes[id].is_leaf()) {
    const auto& node = nodes[id];
    id = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return id;
}

double BoostedModel::raw_score(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.evaluate(x);
  return base_score + learning_rate * sum;
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  const double n = static_cast<double>(values.size());
  auto k = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  k = std::clamp<std::size_t>(k, 1, values.size());
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

BoostedModel fit(const FeatureMatrix& x, std::span<const double> y, const Loss& loss, const Hyperparams& hp,
                 std::vector<double>* round_loss) {
  hp.validate();
  if (x.rows != y.size())
    throw Error(ErrorKind::ShapeError, fmt::format("shape error: {} rows vs {} targets", x.rows, y.size()));
  if (y.empty() || y.size() < static_cast<std::size_t>(hp.min_samples_leaf))
    throw Error(ErrorKind::InsufficientData,
                fmt::format("insufficient data: {} samples, min_samples_leaf {}", y.size(), hp.min_samples_leaf));
  for (double t : y)
    if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorKind::InvalidRecord, "invalid record: targets must be positive");

  const std::size_t n = x.rows;
  const bool pinball = loss.kind() == Loss::Kind::Pinball;
  const double q = loss.quantile();

  BoostedModel model;
  model.loss = loss;
  model.learning_rate = hp.learning_rate;
  model.num_features = x.cols;
  model.base_score = pinball ? empirical_quantile({y.begin(), y.end()}, q)
                             : std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  std::vector<SortedColumn> sorted(x.cols);
  for (std::size_t f = 0; f < x.cols; ++f) {
    auto& idx = sorted[f].ids;
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return x.at(a, f) < x.at(b, f); });
    sorted[f].values.reserve(n);
    for (auto i : idx) sorted[f].values.push_back(x.at(i, f));
  }

  std::vector<double> score(n, model.base_score);
  std::vector<double> grad(n);
  std::vector<int> leaf_of;
  if (round_loss) {
    round_loss->clear();
    round_loss->push_back(mean_loss(loss, y, score));
  }

  model.trees.reserve(static_cast<std::size_t>(hp.num_rounds));
  for (int round = 0; round < hp.num_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - score[i];
      grad[i] = pinball ? (r >= 0.0 ? q : q - 1.0) : r;
    }
    Tree tree = grow_tree(x, sorted, grad, hp, leaf_of);

    // Leaf values: mean residual for squared error; for pinball loss the
    // gradient carries no magnitude, so each leaf is refit to the q-quantile
    // of its residuals.
    std::vector<std::vector<double>> residuals(tree.nodes.size());
    for (std::size_t i = 0; i < n; ++i) residuals[leaf_of[i]].push_back(y[i] - score[i]);
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
      if (!tree.nodes[id].is_leaf()) continue;
      auto& res = residuals[id];
      tree.nodes[id].value = pinball ? empirical_quantile(std::move(res), q)
                                     : std::accumulate(res.begin(), res.end(), 0.0) / static_cast<double>(res.size());
    }
    for (std::size_t i = 0; i < n; ++i) score[i] += hp.learning_rate * tree.nodes[leaf_of[i]].value;
    model.trees.push_back(std::move(tree));
    if (round_loss) round_loss->push_back(mean_loss(loss, y, score));
  }
  return model;
}

double predict(const BoostedModel& model, std::span<const double> x, double floor) {
  check_width(model.num_features, x.size());
  return std::max(model.raw_score(x), floor);
}

double LinearModel::raw_score(std::span<const double> x) const {
  double s = intercept;
  for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * x[j];
  return s;
}

double predict(const LinearModel& model, std::span<const double> x, double floor) {
  check_width(model.weights.size(), x.size());
  return std::max(model.raw_score(x), floor);
}

std::string to_json(const BoostedModel& model) {
  json doc;
  doc["type"] = "boosted_trees";
  doc["base_score"] = model.base_score;
  doc["learning_rate"] = model.learning_rate;
  doc["num_features"] = model.num_features;
  doc["loss"] = model.loss.kind() == Loss::Kind::Pinball
                    ? json{{"kind", "pinball"}, {"q", model.loss.quantile()}}
                    : json{{"kind", "squared_error"}};
  json trees = json::array();
  for (const auto& t : model.trees) {
    json nodes = json::array();
    for (const auto& n : t.nodes) {
      if (n.is_leaf())
        nodes.push_back({{"leaf", n.value}});
      else
        nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}});
    }
    trees.push_back(std::move(nodes));
  }
  doc["trees"] = std::move(trees);
  return doc.dump();
}

namespace {

// Rebuilds child links from a preorder node list.
int link_preorder(std::vector<TreeNode>& nodes, int pos) {
  if (pos >= static_cast<int>(nodes.size())) throw Error(ErrorKind::InvalidConfig, "malformed tree");
  if (nodes[pos].is_leaf()) return pos + 1;
  nodes[pos].left = pos + 1;
  int next = link_preorder(nodes, pos + 1);
  nodes[pos].right = next;
  return link_preorder(nodes, next);
}

}  // namespace

BoostedModel boosted_model_from_json(const std::string& text) {
  try {
    auto doc = json::parse(text);
    BoostedModel m;
    m.base_score = doc.at("base_score").get<double>();
    m.learning_rate = doc.at("learning_rate").get<double>();
    m.num_features = doc.at("num_features").get<std::size_t>();
    const auto& loss = doc.at("loss");
    m.loss = loss.at("kind") == "pinball" ? Loss::pinball(loss.at("q").get<double>()) : Loss::squared_error();
    for (const auto& jt : doc.at("trees")) {
      Tree t;
      for (const auto& jn : jt) {
        TreeNode n;
        if (jn.contains("leaf")) {
          n.value = jn.at("leaf").get<double>();
        } else {
          n.feature = jn.at("feature").get<int>();
          n.threshold = jn.at("threshold").get<double>();
          if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= m.num_features)
            throw Error(ErrorKind::InvalidConfig, "malformed tree: feature index out of range");
        }
        t.nodes.push_back(n);
      }
      if (t.nodes.empty() || link_preorder(t.nodes, 0) != static_cast<int>(t.nodes.size()))
        throw Error(ErrorKind::InvalidConfig, "malformed tree");
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, fmt::format("malformed model JSON: {}", e.what()));
  }
}

std::string to_json(const LinearModel& model) {
  json doc;
  doc["type"] = "linear";
  doc["intercept"] = model.intercept;
  doc["weights"] = model.weights;
  return doc.dump();
}

LinearModel linear_model_from_json(const std::string& text) {
  try {
    auto doc = json::parse(text);
    LinearModel m;
    m.intercept = doc.at("intercept").get<double>();
    m.weights = doc.at("weights").get<std::vector<double>>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, fmt::format("malformed model JSON: {}", e.what()));
  }
}

}  // namespace acela
