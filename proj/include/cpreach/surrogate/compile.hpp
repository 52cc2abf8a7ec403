#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cpreach/surrogate/composite.hpp"
#include "cpreach/surrogate/mlp.hpp"

namespace cpreach {

/// Realises the composite as one pure-ReLU network G: R^n -> R^{(K+1)n}.
///
/// The construction tracks an affine readout buffer = R z + r from the current
/// activation z to every state predicted so far. A hidden layer of a stage
/// emits the pre-activation [R z + r; -(R z + r); stage layer], so after the
/// ReLU the buffer is recovered as relu(x) - relu(-x) and the readout becomes
/// [I, -I, 0]. A stage's final (linear) layer is absorbed into the readout,
/// and the readout itself is the network's output layer.
inline MLP compile_to_single_network(const CompositeSurrogate& cs) {
  const Eigen::Index n = cs.n();
  const SubHorizonSchedule& sched = cs.schedule();

  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Eigen::MatrixXd readout = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(n);

  // Emits a hidden layer computing [buffer; -buffer; w * z + b] and resets the
  // readout to the copy channels of the new activation.
  auto emit_hidden = [&](const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
    const Eigen::Index buffer = readout.rows();
    const Eigen::Index width = 2 * buffer + w.rows();
    Eigen::MatrixXd layer(width, readout.cols());
    Eigen::VectorXd bias(width);
    layer << readout, -readout, w;
    bias << offset, -offset, b;
    weights.push_back(std::move(layer));
    biases.push_back(std::move(bias));
    readout = Eigen::MatrixXd::Zero(buffer, width);
    readout.leftCols(buffer).setIdentity();
    readout.middleCols(buffer, buffer) = -Eigen::MatrixXd::Identity(buffer, buffer);
    offset = Eigen::VectorXd::Zero(buffer);
  };

  for (std::size_t s = 0; s < cs.models().size(); ++s) {
    const MLP f = cs.models()[s].folded();
    const Eigen::Index in_at = sched.feature_offset(s) * n;
    const Eigen::Index in_len = sched.pi(s) * n;

    // First stage layer acts on the selected buffer slice.
    Eigen::MatrixXd w = f.weights()[0] * readout.middleRows(in_at, in_len);
    Eigen::VectorXd b = f.weights()[0] * offset.segment(in_at, in_len) + f.biases()[0];

    for (std::size_t l = 1; l < f.num_layers(); ++l) {
      const Eigen::Index hidden = w.rows();
      emit_hidden(w, b);
      // The stage's hidden activation occupies the trailing block of z.
      const Eigen::Index z_dim = readout.cols();
      w = Eigen::MatrixXd::Zero(f.weights()[l].rows(), z_dim);
      w.rightCols(hidden) = f.weights()[l];
      b = f.biases()[l];
    }

    // Linear output of the stage extends the readout.
    Eigen::MatrixXd grown(readout.rows() + w.rows(), readout.cols());
    grown << readout, w;
    Eigen::VectorXd grown_offset(offset.size() + b.size());
    grown_offset << offset, b;
    readout = std::move(grown);
    offset = std::move(grown_offset);
  }

  weights.push_back(readout);
  biases.push_back(offset);
  return MLP(std::move(weights), std::move(biases));
}

}  // namespace cpreach
