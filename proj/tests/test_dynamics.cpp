#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "cpreach/dynamics/dataset_io.hpp"
#include "cpreach/dynamics/simulate.hpp"

using namespace cpreach;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("cpreach_test_" + name)).string();
}

}  // namespace

TEST(RhsEval, LaubloomisAtOnes) {
  const SystemModel m = laubloomis_model();
  const Eigen::VectorXd ds = rhs_eval(m, Eigen::VectorXd::Ones(7), Eigen::VectorXd(0));
  const Eigen::VectorXd expected = vec({0.5, 1.0, -0.2, 0.7, -0.3, -2.8, 0.3});
  EXPECT_LE((ds - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RhsEval, AccAtRestDecelerates) {
  const SystemModel m = acc_model();
  const Eigen::VectorXd ds = rhs_eval(m, Eigen::VectorXd::Zero(6), Eigen::VectorXd::Zero(1));
  EXPECT_EQ(ds, vec({0, 0, -4, 0, 0, 0}));
}

TEST(RhsEval, AccFrictionUsesQuadraticTerms) {
  const SystemModel m = acc_model();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(6);
  s[1] = 10.0;  // lead velocity
  s[3] = 20.0;  // ego position, as written in the ego equation
  const Eigen::VectorXd ds = rhs_eval(m, s, Eigen::VectorXd::Constant(1, 1.5));
  EXPECT_DOUBLE_EQ(ds[2], -4.0 - 1e-4 * 100.0);
  EXPECT_DOUBLE_EQ(ds[5], 3.0 - 1e-4 * 400.0);
}

TEST(RhsEval, QuadcopterHoverIsEquilibrium) {
  const SystemModel m = quadcopter_model();
  const Eigen::VectorXd ds = rhs_eval(m, Eigen::VectorXd::Zero(12), Eigen::VectorXd::Zero(3));
  EXPECT_EQ(ds, Eigen::VectorXd::Zero(12));
}

TEST(RhsEval, QuadcopterRejectsVerticalPitch) {
  const SystemModel m = quadcopter_model();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(12);
  s[7] = M_PI / 2;
  // cos(pi/2) in double is ~6e-17.
  try {
    rhs_eval(m, s, Eigen::VectorXd::Zero(3));
    FAIL() << "expected DomainError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainError);
  }
}

TEST(Controller, AccSaturates) {
  const SystemModel m = acc_model();
  Eigen::VectorXd s(6);
  s << 100, 32, 0, 10, 30, 0;
  EXPECT_DOUBLE_EQ(controller(m, s)[0], 3.0);
  s << 20.5, 30, 0, 10, 30, 0;
  EXPECT_DOUBLE_EQ(controller(m, s)[0], 0.1 * 0.5);
}

TEST(Controller, QuadcopterFeedbackStabilisesHover) {
  SystemModel m = quadcopter_model();
  m.noise_std.setZero();
  Rng rng(1);
  Eigen::VectorXd s0 = Eigen::VectorXd::Zero(12);
  s0.head(6).setConstant(0.2);
  const Trajectory t = simulate_trajectory(m, s0, 200, rng);
  // Yaw is uncontrolled but stays at zero here; everything else converges.
  EXPECT_LT(t.state(200).norm(), 1e-2 * s0.norm());
}

TEST(SimulateTrajectory, LinearSystemMatchesRk4MatrixPower) {
  SystemModel m = linear2d_model();
  m.noise_std.setZero();
  const Eigen::Matrix2d A = m.linear_a;
  const double h = m.dt / 4;
  const Eigen::Matrix2d hA = h * A;
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d step = I + hA + hA * hA / 2.0 + hA * hA * hA / 6.0 + hA * hA * hA * hA / 24.0;
  const Eigen::Matrix2d per_dt = step * step * step * step;
  Rng rng(3);
  const Eigen::Vector2d s0(1.05, -0.07);
  const Trajectory t = simulate_trajectory(m, s0, 25, rng);
  Eigen::Vector2d expected = s0;
  for (int k = 0; k <= 25; ++k) {
    EXPECT_LE((t.state(k) - expected).cwiseAbs().maxCoeff(), 1e-12) << "step " << k;
    expected = per_dt * expected;
  }
}

TEST(SimulateTrajectory, SameSeedIsBitIdentical) {
  const SystemModel m = acc_model();
  Rng a(42), b(42);
  const Eigen::VectorXd s0 = sample_initial(m.initial_box, a);
  const Eigen::VectorXd s0b = sample_initial(m.initial_box, b);
  const Trajectory ta = simulate_trajectory(m, s0, 20, a);
  const Trajectory tb = simulate_trajectory(m, s0b, 20, b);
  EXPECT_EQ(ta.data, tb.data);
}

TEST(SimulateTrajectory, ZeroHorizonIsInitialState) {
  const SystemModel m = linear2d_model();
  Rng rng(0);
  const Trajectory t = simulate_trajectory(m, Eigen::Vector2d(1, 0), 0, rng);
  EXPECT_EQ(t.data, Eigen::Vector2d(1, 0));
}

TEST(SimulateTrajectory, NonFiniteIsReported) {
  SystemModel m = linear2d_model();
  m.linear_a << 1e300, 0, 0, 1e300;
  Rng rng(0);
  try {
    simulate_trajectory(m, Eigen::Vector2d(1, 1), 5, rng);
    FAIL() << "expected NonFinite";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFinite);
  }
}

TEST(SimulateTrajectory, ContractiveLinearNormsDoNotGrow) {
  SystemModel m = linear2d_model();
  m.noise_std.setZero();
  // Strictly contractive in the Euclidean norm.
  m.linear_a << -0.5, 1.0, -1.0, -0.5;
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Trajectory t = simulate_trajectory(m, sample_initial(m.initial_box, rng), 30, rng);
    for (int k = 0; k < 30; ++k) EXPECT_LE(t.state(k + 1).norm(), t.state(k).norm() + 1e-15);
  }
}

TEST(SampleInitial, DegenerateBoxIsExact) {
  const IntervalBox b(vec({1.5, -2}), vec({1.5, -2}));
  Rng rng(4);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_initial(b, rng), vec({1.5, -2}));
}

TEST(SampleInitial, UniformMeanOnUnitInterval) {
  const IntervalBox b(vec({0}), vec({1}));
  Rng rng(6);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) sum += sample_initial(b, rng)[0];
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.01);
}

TEST(SampleInitial, QuadcopterAnglesAndRatesAreZero) {
  const SystemModel m = quadcopter_model();
  Rng rng(12);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd s = sample_initial(m.initial_box, rng);
    EXPECT_TRUE((s.tail(6).array() == 0.0).all());
    EXPECT_TRUE((s.head(6).cwiseAbs().array() <= 0.2).all());
  }
}

TEST(GenerateDataset, DegenerateNoiseFreeRowsAreIdentical) {
  SystemModel m = linear2d_model();
  m.noise_std.setZero();
  m.initial_box = IntervalBox::point(Eigen::Vector2d(1.0, 0.0));
  const TrajectoryDataset ds = generate_dataset(m, 3, 10, 99);
  EXPECT_EQ(ds.rows.row(0), ds.rows.row(1));
  EXPECT_EQ(ds.rows.row(1), ds.rows.row(2));
}

TEST(GenerateDataset, SeedsSelectDifferentData) {
  const SystemModel m = linear2d_model();
  EXPECT_NE(generate_dataset(m, 5, 4, 1).rows, generate_dataset(m, 5, 4, 2).rows);
  EXPECT_EQ(generate_dataset(m, 5, 4, 1).rows, generate_dataset(m, 5, 4, 1).rows);
}

TEST(GenerateDataset, AccShapeAndLayout) {
  const SystemModel m = acc_model();
  const TrajectoryDataset ds = generate_dataset(m, 4, 50, 7);
  EXPECT_EQ(ds.width(), 306);
  EXPECT_EQ(ds.rows.cols(), 306);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    // Layout: the first n entries are the sampled initial state.
    Rng rng = stream_rng(7, static_cast<std::uint64_t>(i));
    EXPECT_EQ(ds.rows.row(i).head(6).transpose(), sample_initial(m.initial_box, rng));
  }
}

TEST(GenerateDataset, LaubloomisIsDeterministicGivenInitialState) {
  const SystemModel m = laubloomis_model();
  Rng a(1), b(2);
  const Eigen::VectorXd s0 = sample_initial(m.initial_box, a);
  EXPECT_EQ(simulate_trajectory(m, s0, 20, a).data, simulate_trajectory(m, s0, 20, b).data);
}

TEST(GenerateDataset, ParallelMatchesSerial) {
  const SystemModel m = acc_model();
  setenv("CPREACH_WORKERS", "1", 1);
  const TrajectoryDataset serial = generate_dataset(m, 16, 10, 5);
  setenv("CPREACH_WORKERS", "4", 1);
  const TrajectoryDataset parallel = generate_dataset(m, 16, 10, 5);
  unsetenv("CPREACH_WORKERS");
  EXPECT_EQ(serial.rows, parallel.rows);
}

TEST(DatasetFile, RoundTripsBitExactly) {
  const TrajectoryDataset ds = generate_dataset(linear2d_model(), 7, 5, 11);
  const std::string path = temp_path("ds.bin");
  save_dataset(ds, path);
  const TrajectoryDataset back = load_dataset(path);
  EXPECT_EQ(back.n, 2);
  EXPECT_EQ(back.K, 5);
  EXPECT_EQ(back.seed, 11u);
  EXPECT_EQ(back.model_name, "Linear2D");
  EXPECT_EQ(back.dt, 0.1);
  EXPECT_EQ(back.rows, ds.rows);
  EXPECT_EQ(std::filesystem::file_size(path), 8u + 4 + 4 + 8 + 8 + 16 + 8 + 7u * 12 * 8);
  std::filesystem::remove(path);
}

TEST(DatasetFile, HeaderIsLittleEndian) {
  TrajectoryDataset ds;
  ds.n = 1;
  ds.K = 0;
  ds.seed = 0x0102030405060708ULL;
  ds.model_name = "Linear2D";
  ds.dt = 0.5;
  ds.rows = RowMatrix::Constant(1, 1, 1.0);
  const auto bytes = encode_dataset(ds).bytes();
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "CPRDSET1");
  EXPECT_EQ(bytes[8], 1);  // n, low byte first
  EXPECT_EQ(bytes[24], 0x08);  // seed low byte
  EXPECT_EQ(bytes[31], 0x01);
}

TEST(DatasetFile, CsvHasOneRowPerTrajectory) {
  const TrajectoryDataset ds = generate_dataset(linear2d_model(), 3, 2, 1);
  const std::string path = temp_path("ds.csv");
  export_dataset_csv(ds, path);
  std::ifstream in(path);
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header, "s0_x1,s0_x2,s1_x1,s1_x2,s2_x1,s2_x2");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
  std::filesystem::remove(path);
}

TEST(DatasetFile, RejectsForeignFile) {
  const std::string path = temp_path("junk.bin");
  std::ofstream(path) << "not a dataset";
  EXPECT_THROW(load_dataset(path), Error);
  std::filesystem::remove(path);
}
