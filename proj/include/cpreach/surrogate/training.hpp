#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpreach/dynamics/simulate.hpp"
#include "cpreach/dynamics/trajectory.hpp"
#include "cpreach/error.hpp"
#include "cpreach/surrogate/mlp.hpp"

namespace cpreach {

/// Per-feature affine standardisation x -> (x - mean) / scale.
struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardization identity(Eigen::Index dim) {
    return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
  }

  /// Column statistics of a row-per-sample matrix; constant columns keep scale 1.
  static Standardization fit(const RowMatrix& data) {
    Standardization s;
    const double count = static_cast<double>(data.rows());
    s.mean = data.colwise().mean().transpose();
    s.scale.resize(data.cols());
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      const double var = (data.col(j).array() - s.mean[j]).square().sum() / count;
      const double sd = std::sqrt(var);
      s.scale[j] = sd > 1e-12 * (1.0 + std::abs(s.mean[j])) ? sd : 1.0;
    }
    return s;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return (x - mean).cwiseQuotient(scale); }
  Eigen::VectorXd invert(const Eigen::VectorXd& y) const { return mean + scale.cwiseProduct(y); }

  friend bool operator==(const Standardization& a, const Standardization& b) {
    return a.mean.size() == b.mean.size() && a.mean == b.mean && a.scale == b.scale;
  }
};

struct TrainingHyperparams {
  int epochs = 200;
  double learning_rate = 1e-3;
  int batch_size = 256;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  bool standardize = true;
  std::uint64_t seed = 0;
};

/// A trained sub-horizon model: the network works in standardised units,
/// the two standardisations map raw features in and raw targets out.
struct SubModel {
  MLP net;
  Standardization input;
  Standardization output;
  std::vector<double> loss_history;  // per-epoch training MSE (standardised units)

  Eigen::Index input_dim() const { return net.input_dim(); }
  Eigen::Index output_dim() const { return net.output_dim(); }

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return output.invert(net.evaluate(input.apply(x))); }

  double final_loss() const { return loss_history.empty() ? NAN : loss_history.back(); }

  /// Equivalent network in raw units: input scaling folded into the first
  /// layer, output scaling into the last.
  MLP folded() const {
    std::vector<Eigen::MatrixXd> w = net.weights();
    std::vector<Eigen::VectorXd> b = net.biases();
    const Eigen::VectorXd inv_scale = input.scale.cwiseInverse();
    Eigen::MatrixXd w0 = w.front() * inv_scale.asDiagonal();
    b.front() -= w0 * input.mean;
    w.front() = std::move(w0);
    w.back() = output.scale.asDiagonal() * w.back();
    b.back() = output.scale.cwiseProduct(b.back()) + output.mean;
    return MLP(std::move(w), std::move(b));
  }

  /// Mean squared error in raw units over a row-per-sample dataset.
  double mse(const RowMatrix& features, const RowMatrix& targets) const {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      sum += ((*this)(features.row(i).transpose()) - targets.row(i).transpose()).squaredNorm();
    }
    return sum / static_cast<double>(features.rows() * targets.cols());
  }
};

/// He-normal weights, zero biases.
inline MLP he_initialize(const std::vector<Eigen::Index>& layer_sizes, Rng& rng) {
  MLP net = MLP::zeros(layer_sizes);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / static_cast<double>(layer_sizes[l])));
    Eigen::MatrixXd& w = net.weights()[l];
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = gauss(rng);
    }
  }
  return net;
}

/// Mini-batch Adam on mean squared error.
inline SubModel train_model(const RowMatrix& features, const RowMatrix& targets,
                            const std::vector<Eigen::Index>& layer_sizes, const TrainingHyperparams& hp) {
  require(features.rows() == targets.rows(), ErrorKind::ShapeMismatch, "feature and target row counts differ");
  require(features.rows() > 0, ErrorKind::ShapeMismatch, "training data is empty");
  require(layer_sizes.size() >= 2 && layer_sizes.front() == features.cols() && layer_sizes.back() == targets.cols(),
          ErrorKind::DimensionMismatch, "architecture endpoints must match feature/target widths");
  require(hp.epochs >= 0 && hp.batch_size >= 1 && hp.learning_rate > 0.0, ErrorKind::Config,
          "invalid training hyperparameters");

  Rng rng(hp.seed);
  SubModel model;
  model.net = he_initialize(layer_sizes, rng);
  model.input = hp.standardize ? Standardization::fit(features) : Standardization::identity(features.cols());
  model.output = hp.standardize ? Standardization::fit(targets) : Standardization::identity(targets.cols());

  const Eigen::Index count = features.rows();
  // Standardised data, one sample per column.
  Eigen::MatrixXd x = features.transpose();
  Eigen::MatrixXd y = targets.transpose();
  x = (x.colwise() - model.input.mean).array().colwise() / model.input.scale.array();
  y = (y.colwise() - model.output.mean).array().colwise() / model.output.scale.array();

  const std::size_t layers = model.net.num_layers();
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  for (std::size_t l = 0; l < layers; ++l) {
    mw.push_back(Eigen::MatrixXd::Zero(model.net.weights()[l].rows(), model.net.weights()[l].cols()));
    vw.push_back(mw.back());
    mb.push_back(Eigen::VectorXd::Zero(model.net.biases()[l].size()));
    vb.push_back(mb.back());
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<Eigen::MatrixXd> pre(layers), act(layers + 1);
  long step = 0;
  const double out_dim = static_cast<double>(targets.cols());

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < count; start += hp.batch_size) {
      const Eigen::Index size = std::min<Eigen::Index>(hp.batch_size, count - start);
      Eigen::MatrixXd xb(x.rows(), size), yb(y.rows(), size);
      for (Eigen::Index c = 0; c < size; ++c) {
        const Eigen::Index idx = order[static_cast<std::size_t>(start + c)];
        xb.col(c) = x.col(idx);
        yb.col(c) = y.col(idx);
      }
      act[0] = xb;
      for (std::size_t l = 0; l < layers; ++l) {
        pre[l] = model.net.weights()[l] * act[l];
        pre[l].colwise() += model.net.biases()[l];
        act[l + 1] = model.net.is_hidden(l) ? Eigen::MatrixXd(pre[l].cwiseMax(0.0)) : pre[l];
      }
      const Eigen::MatrixXd err = act[layers] - yb;
      epoch_loss += err.squaredNorm();
      Eigen::MatrixXd delta = (2.0 / (static_cast<double>(size) * out_dim)) * err;

      ++step;
      const double corr1 = 1.0 - std::pow(hp.beta1, static_cast<double>(step));
      const double corr2 = 1.0 - std::pow(hp.beta2, static_cast<double>(step));
      for (std::size_t li = layers; li-- > 0;) {
        const Eigen::MatrixXd gw = delta * act[li].transpose();
        const Eigen::VectorXd gb = delta.rowwise().sum();
        if (li > 0) {
          delta = (model.net.weights()[li].transpose() * delta).cwiseProduct(
              (pre[li - 1].array() > 0.0).cast<double>().matrix());
        }
        mw[li] = hp.beta1 * mw[li] + (1.0 - hp.beta1) * gw;
        vw[li] = hp.beta2 * vw[li] + (1.0 - hp.beta2) * gw.cwiseProduct(gw);
        mb[li] = hp.beta1 * mb[li] + (1.0 - hp.beta1) * gb;
        vb[li] = hp.beta2 * vb[li] + (1.0 - hp.beta2) * gb.cwiseProduct(gb);
        model.net.weights()[li].array() -=
            hp.learning_rate * (mw[li].array() / corr1) / ((vw[li].array() / corr2).sqrt() + hp.adam_epsilon);
        model.net.biases()[li].array() -=
            hp.learning_rate * (mb[li].array() / corr1) / ((vb[li].array() / corr2).sqrt() + hp.adam_epsilon);
      }
    }
    epoch_loss /= static_cast<double>(count) * out_dim;
    if (!std::isfinite(epoch_loss) || !model.net.all_finite()) {
      fail(ErrorKind::Diverged, "training loss became non-finite at epoch " + std::to_string(epoch));
    }
    model.loss_history.push_back(epoch_loss);
  }
  return model;
}

}  // namespace cpreach
