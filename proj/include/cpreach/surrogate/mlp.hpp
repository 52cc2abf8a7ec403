#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "cpreach/error.hpp"

namespace cpreach {

/// Feedforward network: ReLU on hidden layers, identity on the output.
/// weights[l] maps layer l to layer l+1 and has shape sizes[l+1] x sizes[l].
class MLP {
 public:
  MLP() = default;

  MLP(std::vector<Eigen::MatrixXd> weights, std::vector<Eigen::VectorXd> biases)
      : weights_(std::move(weights)), biases_(std::move(biases)) {
    validate();
  }

  /// Zero-initialised network of the given architecture.
  static MLP zeros(const std::vector<Eigen::Index>& layer_sizes) {
    require(layer_sizes.size() >= 2, ErrorKind::DimensionMismatch, "an MLP needs at least input and output layers");
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
      require(layer_sizes[l] > 0 && layer_sizes[l + 1] > 0, ErrorKind::DimensionMismatch, "layer sizes must be positive");
      w.push_back(Eigen::MatrixXd::Zero(layer_sizes[l + 1], layer_sizes[l]));
      b.push_back(Eigen::VectorXd::Zero(layer_sizes[l + 1]));
    }
    return MLP(std::move(w), std::move(b));
  }

  std::size_t num_layers() const { return weights_.size(); }
  Eigen::Index input_dim() const { return weights_.front().cols(); }
  Eigen::Index output_dim() const { return weights_.back().rows(); }
  bool is_hidden(std::size_t layer) const { return layer + 1 < weights_.size(); }

  std::vector<Eigen::Index> layer_sizes() const {
    std::vector<Eigen::Index> sizes{input_dim()};
    for (const auto& w : weights_) sizes.push_back(w.rows());
    return sizes;
  }

  std::size_t hidden_neurons() const {
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < weights_.size(); ++l) count += static_cast<std::size_t>(weights_[l].rows());
    return count;
  }

  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }
  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  std::vector<Eigen::VectorXd>& biases() { return biases_; }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const {
    require(x.size() == input_dim(), ErrorKind::DimensionMismatch, "MLP input has the wrong length");
    Eigen::VectorXd a = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Eigen::VectorXd z = weights_[l] * a + biases_[l];
      a = is_hidden(l) ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
    }
    return a;
  }

  /// Column-wise evaluation of a batch (one sample per column).
  Eigen::MatrixXd evaluate_batch(const Eigen::MatrixXd& x) const {
    require(x.rows() == input_dim(), ErrorKind::DimensionMismatch, "MLP batch has the wrong row count");
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Eigen::MatrixXd z = weights_[l] * a;
      z.colwise() += biases_[l];
      a = is_hidden(l) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    return a;
  }

  bool all_finite() const {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
    }
    return true;
  }

  void validate() const {
    require(!weights_.empty(), ErrorKind::DimensionMismatch, "an MLP needs at least one layer");
    require(weights_.size() == biases_.size(), ErrorKind::DimensionMismatch, "weight and bias counts differ");
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      require(biases_[l].size() == weights_[l].rows(), ErrorKind::DimensionMismatch, "bias length must match layer width");
      if (l > 0) {
        require(weights_[l].cols() == weights_[l - 1].rows(), ErrorKind::DimensionMismatch,
                "consecutive layer dimensions are incompatible");
      }
    }
  }

  friend bool operator==(const MLP& a, const MLP& b) {
    if (a.weights_.size() != b.weights_.size()) return false;
    for (std::size_t l = 0; l < a.weights_.size(); ++l) {
      if (a.weights_[l].rows() != b.weights_[l].rows() || a.weights_[l].cols() != b.weights_[l].cols()) return false;
      if (a.weights_[l] != b.weights_[l] || a.biases_[l] != b.biases_[l]) return false;
    }
    return true;
  }

 private:
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

}  // namespace cpreach
