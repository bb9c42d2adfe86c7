#pragma once

// Latent -> Bloch regressors: multi-output linear least squares (optionally
// ridge) and an extremely randomized trees ensemble.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "oamreg/error.hpp"
#include "oamreg/parallel.hpp"

namespace oamreg {

struct LinearFitOptions {
  double ridge_lambda = 0.0;
  // Singular values of the centred design below rcond * max are discarded
  // when ridge_lambda == 0 (minimum-norm solution).
  double rcond = 1e-9;
};

struct LinearModel {
  Eigen::MatrixXd weights;    // q x n
  Eigen::VectorXd intercept;  // q
  double ridge_lambda = 0.0;
  int rank = 0;
  bool rank_deficient = false;
  bool underdetermined = false;  // samples <= inputs

  int input_dim() const { return static_cast<int>(weights.cols()); }
  int output_dim() const { return static_cast<int>(weights.rows()); }
};

// Minimizes sum_i |W z_i + w0 - b_i|^2 + lambda |W|_F^2 with an unpenalized
// intercept. Rows of `latents` / `targets` are samples.
inline LinearModel linfit(const Eigen::Ref<const Eigen::MatrixXd>& latents,
                          const Eigen::Ref<const Eigen::MatrixXd>& targets,
                          const LinearFitOptions& options = {}) {
  require(latents.rows() == targets.rows(), ErrorCategory::dimension_mismatch,
          "latent and target sample counts differ");
  require(latents.rows() >= 1 && latents.cols() >= 1 && targets.cols() >= 1,
          ErrorCategory::invalid_argument, "empty regression problem");
  require(options.ridge_lambda >= 0 && std::isfinite(options.ridge_lambda),
          ErrorCategory::invalid_argument, "ridge lambda must be nonnegative");
  require(latents.allFinite() && targets.allFinite(), ErrorCategory::invalid_argument,
          "regression inputs must be finite");

  const Eigen::VectorXd zmean = latents.colwise().mean().transpose();
  const Eigen::VectorXd bmean = targets.colwise().mean().transpose();
  const Eigen::MatrixXd zc = latents.rowwise() - zmean.transpose();
  const Eigen::MatrixXd bc = targets.rowwise() - bmean.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(zc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;

  LinearModel model;
  model.ridge_lambda = options.ridge_lambda;
  model.underdetermined = latents.rows() <= latents.cols();
  Eigen::VectorXd filter = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const bool kept = sv[i] > options.rcond * smax && sv[i] > 0;
    if (kept) ++model.rank;
    if (options.ridge_lambda > 0) {
      filter[i] = sv[i] / (sv[i] * sv[i] + options.ridge_lambda);
    } else if (kept) {
      filter[i] = 1.0 / sv[i];
    }
  }
  model.rank_deficient = model.rank < latents.cols();

  // W^T = V diag(f) U^T Bc
  const Eigen::MatrixXd wt =
      svd.matrixV() * filter.asDiagonal() * (svd.matrixU().transpose() * bc);
  model.weights = wt.transpose();
  model.intercept = bmean - model.weights * zmean;
  return model;
}

inline Eigen::VectorXd linpredict(const LinearModel& model,
                                  const Eigen::Ref<const Eigen::VectorXd>& z) {
  require(z.size() == model.input_dim(), ErrorCategory::dimension_mismatch,
          "latent vector has " + std::to_string(z.size()) + " entries, model expects " +
              std::to_string(model.input_dim()));
  return model.weights * z + model.intercept;
}

// ---------------------------------------------------------------------------
// Extremely randomized trees

struct EtrOptions {
  int n_trees = 100;
  int min_samples_split = 5;
  int max_depth = 0;             // 0: unlimited
  int n_candidate_features = 0;  // 0: ceil(sqrt(n_features))
  std::uint64_t seed = 0;
};

struct EtrNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int leaf = -1;  // row into EtrTree::leaf_values
  int depth = 0;
};

struct EtrTree {
  std::vector<EtrNode> nodes;
  std::vector<double> leaf_values;  // n_leaves x q, row-major

  int n_leaves(int q) const { return static_cast<int>(leaf_values.size()) / q; }
};

struct EtrModel {
  int input_dim = 0;
  int output_dim = 0;
  EtrOptions options;
  std::vector<EtrTree> trees;
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const std::vector<double>& y, int q,
              const EtrOptions& opt, int n_candidates, std::uint64_t seed)
      : x_(x), y_(y), q_(q), opt_(opt), n_candidates_(n_candidates), rng_(seed) {}

  EtrTree build() {
    std::vector<int> idx(static_cast<std::size_t>(x_.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    grow(idx, 0);
    return std::move(tree_);
  }

 private:
  int make_leaf(const std::vector<int>& idx, int depth) {
    EtrNode node;
    node.depth = depth;
    node.leaf = static_cast<int>(tree_.leaf_values.size()) / q_;
    const std::size_t base = tree_.leaf_values.size();
    tree_.leaf_values.resize(base + static_cast<std::size_t>(q_), 0.0);
    for (int i : idx) {
      const double* row = &y_[static_cast<std::size_t>(i) * q_];
      for (int k = 0; k < q_; ++k) tree_.leaf_values[base + k] += row[k];
    }
    for (int k = 0; k < q_; ++k) tree_.leaf_values[base + k] /= static_cast<double>(idx.size());
    tree_.nodes.push_back(node);
    return static_cast<int>(tree_.nodes.size()) - 1;
  }

  bool pure(const std::vector<int>& idx) const {
    const double* first = &y_[static_cast<std::size_t>(idx.front()) * q_];
    for (int i : idx) {
      const double* row = &y_[static_cast<std::size_t>(i) * q_];
      for (int k = 0; k < q_; ++k) {
        if (row[k] != first[k]) return false;
      }
    }
    return true;
  }

  int grow(const std::vector<int>& idx, int depth) {
    const bool depth_capped = opt_.max_depth > 0 && depth >= opt_.max_depth;
    if (static_cast<int>(idx.size()) < opt_.min_samples_split || depth_capped || pure(idx)) {
      return make_leaf(idx, depth);
    }

    const int nf = static_cast<int>(x_.cols());
    std::vector<int> order(static_cast<std::size_t>(nf));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = -std::numeric_limits<double>::infinity();
    int drawn = 0;
    std::vector<double> left_sum(static_cast<std::size_t>(q_)), total(static_cast<std::size_t>(q_), 0.0);
    for (int i : idx) {
      const double* row = &y_[static_cast<std::size_t>(i) * q_];
      for (int k = 0; k < q_; ++k) total[k] += row[k];
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (int f : order) {
      if (drawn >= n_candidates_) break;
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (int i : idx) {
        lo = std::min(lo, x_(i, f));
        hi = std::max(hi, x_(i, f));
      }
      if (!(hi > lo)) continue;  // constant feature in this node
      ++drawn;
      double thr = lo + unit(rng_) * (hi - lo);
      if (thr >= hi) thr = lo;

      std::fill(left_sum.begin(), left_sum.end(), 0.0);
      int n_left = 0;
      for (int i : idx) {
        if (x_(i, f) <= thr) {
          ++n_left;
          const double* row = &y_[static_cast<std::size_t>(i) * q_];
          for (int k = 0; k < q_; ++k) left_sum[k] += row[k];
        }
      }
      const int n_right = static_cast<int>(idx.size()) - n_left;
      if (n_left == 0 || n_right == 0) continue;
      // Minimizing the pooled child SSE is maximizing |S_L|^2/n_L + |S_R|^2/n_R.
      double sl = 0.0, sr = 0.0;
      for (int k = 0; k < q_; ++k) {
        sl += left_sum[k] * left_sum[k];
        const double r = total[k] - left_sum[k];
        sr += r * r;
      }
      const double score = sl / n_left + sr / n_right;
      if (score > best_score) {
        best_score = score;
        best_feature = f;
        best_threshold = thr;
      }
    }
    if (best_feature < 0) return make_leaf(idx, depth);

    std::vector<int> left, right;
    left.reserve(idx.size());
    right.reserve(idx.size());
    for (int i : idx) (x_(i, best_feature) <= best_threshold ? left : right).push_back(i);

    const int self = static_cast<int>(tree_.nodes.size());
    EtrNode node;
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.depth = depth;
    tree_.nodes.push_back(node);
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree_.nodes[static_cast<std::size_t>(self)].left = l;
    tree_.nodes[static_cast<std::size_t>(self)].right = r;
    return self;
  }

  const Eigen::MatrixXd& x_;
  const std::vector<double>& y_;
  int q_;
  EtrOptions opt_;
  int n_candidates_;
  std::mt19937_64 rng_;
  EtrTree tree_;
};

inline std::uint64_t tree_seed(std::uint64_t master, int tree) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(tree), 0x7e7eu};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace detail

inline EtrModel etr_fit(const Eigen::Ref<const Eigen::MatrixXd>& latents,
                        const Eigen::Ref<const Eigen::MatrixXd>& targets,
                        const EtrOptions& options = {}) {
  require(latents.rows() == targets.rows(), ErrorCategory::dimension_mismatch,
          "latent and target sample counts differ");
  require(options.n_trees >= 1, ErrorCategory::invalid_argument, "n_trees must be >= 1");
  require(options.min_samples_split >= 2, ErrorCategory::invalid_argument,
          "min_samples_split must be >= 2");
  require(latents.rows() >= options.min_samples_split, ErrorCategory::invalid_argument,
          "fewer samples than min_samples_split");
  require(latents.cols() >= 1 && targets.cols() >= 1, ErrorCategory::invalid_argument,
          "empty regression problem");
  require(latents.allFinite() && targets.allFinite(), ErrorCategory::invalid_argument,
          "regression inputs must be finite");

  EtrModel model;
  model.input_dim = static_cast<int>(latents.cols());
  model.output_dim = static_cast<int>(targets.cols());
  model.options = options;
  const int n_candidates =
      options.n_candidate_features > 0
          ? std::min(options.n_candidate_features, model.input_dim)
          : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(model.input_dim))));
  model.options.n_candidate_features = n_candidates;

  const Eigen::MatrixXd x = latents;
  const int q = model.output_dim;
  std::vector<double> y(static_cast<std::size_t>(targets.rows()) * q);
  for (Eigen::Index i = 0; i < targets.rows(); ++i) {
    for (int k = 0; k < q; ++k) y[static_cast<std::size_t>(i) * q + k] = targets(i, k);
  }

  model.trees.resize(static_cast<std::size_t>(options.n_trees));
  parallel_for(model.trees.size(), [&](std::size_t t) {
    detail::TreeBuilder builder(x, y, q, model.options, n_candidates,
                                detail::tree_seed(options.seed, static_cast<int>(t)));
    model.trees[t] = builder.build();
  });
  return model;
}

inline Eigen::VectorXd etr_predict(const EtrModel& model,
                                   const Eigen::Ref<const Eigen::VectorXd>& z) {
  require(z.size() == model.input_dim, ErrorCategory::dimension_mismatch,
          "latent vector has " + std::to_string(z.size()) + " entries, model expects " +
              std::to_string(model.input_dim));
  const int q = model.output_dim;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(q);
  for (const EtrTree& tree : model.trees) {
    int node = 0;
    while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
      const EtrNode& n = tree.nodes[static_cast<std::size_t>(node)];
      node = z[n.feature] <= n.threshold ? n.left : n.right;
    }
    const double* leaf =
        &tree.leaf_values[static_cast<std::size_t>(tree.nodes[static_cast<std::size_t>(node)].leaf) * q];
    for (int k = 0; k < q; ++k) out[k] += leaf[k];
  }
  return out / static_cast<double>(model.trees.size());
}

}  // namespace oamreg
