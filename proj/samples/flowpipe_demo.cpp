// Library walk-through without the CLI: sample the Linear2D system, train
// one-step surrogates, compute an approx-star flowpipe and inflate it so that
// it covers fresh trajectories with probability at least 0.9.

#include <iostream>

#include "cpreach/conformal/calibration.hpp"
#include "cpreach/dynamics/simulate.hpp"
#include "cpreach/reach/flowpipe.hpp"
#include "cpreach/surrogate/compile.hpp"
#include "cpreach/surrogate/composite.hpp"

int main() {
  using namespace cpreach;
  try {
    const SystemModel model = linear2d_model();
    const Eigen::Index K = 10;
    const double epsilon = 0.1;

    const TrajectoryDataset train = generate_dataset(model, 5000, K, 1);
    const TrajectoryDataset test = generate_dataset(model, 2000, K, 2);
    const TrajectoryDataset fresh = generate_dataset(model, 5000, K, 3);

    TrainingHyperparams hp;
    hp.epochs = 300;
    hp.learning_rate = 3e-3;
    hp.batch_size = 64;
    hp.seed = 4;
    const CompositeSurrogate F = train_composite(train, SubHorizonSchedule::one_step(K), {8}, hp);

    ReachConfig rc;
    rc.mode = ReachMode::ApproxStar;
    rc.partitions_per_dim = {2, 2};
    const SurrogateFlowpipe xbar = surrogate_flowpipe(compile_to_single_network(F), model.initial_box, rc);

    const QuantileVector q = conformal_quantiles(residual_matrix(F, test), epsilon);
    const ConfidentFlowpipe X = inflate_flowpipe(xbar, q);

    const Eigen::Index n = model.state_dim();
    for (Eigen::Index k = 0; k <= K; ++k) {
      std::cout << "step " << k << ":";
      for (Eigen::Index j = 0; j < n; ++j) {
        std::cout << " [" << X.bounds.lower(k * n + j) << ", " << X.bounds.upper(k * n + j) << "]";
      }
      std::cout << "\n";
    }
    std::cout << "Delta = " << X.Delta << ", coverage on fresh trajectories = " << empirical_coverage(X, fresh)
              << "\n";
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
