#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "aoor/error.hpp"
#include "aoor/learner.hpp"
#include "test_support.hpp"

namespace aoor {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double rel(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).norm() / b.norm();
}

struct Problem {
  ExperimentConfig cfg;
  BasisSet basis;
  KnownMatrices known;
  KleinmanResult oracle;

  explicit Problem(const std::string& name)
      : cfg(testing::benchmark(name)),
        basis(build_basis(cfg.plant.C, cfg.plant.F, cfg.plant.q())),
        known{cfg.plant.C, cfg.weights},
        oracle(solve_are_kleinman(cfg.plant, cfg.weights, cfg.excitation.K0)) {}

  MatrixXd S(std::size_t i) const {
    return sylvester_map(cfg.plant.A, cfg.exo.E, basis.X[i]);
  }
};

TEST(PsiPhi, ShapeAndBlocks) {
  Problem pb("b2");
  std::mt19937_64 rng(3);
  const DataMatrices data = testing::synthetic_exact_data(pb.cfg.plant, pb.cfg.exo, pb.basis, 10, rng);
  const PsiPhi pp = assemble_psi_phi(data, 0, MatrixXd::Zero(1, 2), pb.known);
  EXPECT_EQ(pp.psi.rows(), 10);
  EXPECT_EQ(pp.psi.cols(), 9);
  EXPECT_EQ(pp.phi.size(), 10);
  // R = 1 and K = 0: middle block is -2 Gamma_xu
  EXPECT_LE((pp.psi2() + 2.0 * data.per_index[0].gamma_xu).norm(), 1e-14);
  EXPECT_EQ(MatrixXd(pp.psi3()), MatrixXd(-2.0 * data.per_index[0].gamma_xv));
  EXPECT_THROW(assemble_psi_phi(data, 4, MatrixXd::Zero(1, 2), pb.known), Error);
  EXPECT_THROW(assemble_psi_phi(data, 0, MatrixXd::Zero(2, 2), pb.known), Error);
}

TEST(SolveDims, Counts) {
  const SolveDims d = solve_dims(2, 1, 2);
  EXPECT_EQ(d.full, 9);
  EXPECT_EQ(d.exo, 4);
  EXPECT_EQ(d.reduced, 5);
}

TEST(Recovery, RoundTrip) {
  Problem pb("b2");
  const MatrixXd& P = pb.oracle.solution.P_star;
  const MatrixXd W = pb.cfg.plant.D.transpose() * P;
  EXPECT_LE((recover_D(W, P) - pb.cfg.plant.D).norm(), 1e-12);
  for (std::size_t i = 1; i < pb.basis.X.size(); ++i) {
    const MatrixXd W_i = (pb.cfg.plant.D - pb.S(i)).transpose() * P;
    EXPECT_LE((recover_S(pb.cfg.plant.D, W_i, P) - pb.S(i)).norm(), 1e-10);
  }
  EXPECT_THROW(recover_D(W, -P), Error);
}

TEST(MD, ReparametrizesTheDisturbanceBlock) {
  std::mt19937_64 rng(5);
  const MatrixXd D = testing::random_matrix(3, 2, rng);
  const MatrixXd P = testing::random_symmetric(3, rng);
  const MatrixXd M_D = build_M_D(D);
  EXPECT_EQ(M_D.rows(), 6);
  EXPECT_EQ(M_D.cols(), 6);
  EXPECT_LE((M_D * vecs(P).entries - vec(D.transpose() * P)).norm(), 1e-12);
}

class ExactData : public ::testing::TestWithParam<const char*> {};

TEST_P(ExactData, OriginalRecoversOracle) {
  Problem pb(GetParam());
  std::mt19937_64 rng(11);
  const DataMatrices data = testing::synthetic_exact_data(
      pb.cfg.plant, pb.cfg.exo, pb.basis, 3 * solve_dims(pb.cfg.plant.n(), pb.cfg.plant.m(), pb.cfg.plant.q()).full, rng);
  const LearnResult res = original_learn(data, pb.cfg.excitation.K0, pb.known);
  const std::size_t common = std::min(res.history.size(), pb.oracle.history.size());
  for (std::size_t j = 0; j < common; ++j) {
    EXPECT_LE(rel(res.history[j].P, pb.oracle.history[j].P), 1e-9) << j;
  }
  EXPECT_LE(rel(res.P_final(), pb.oracle.solution.P_star), 1e-5);
  EXPECT_LE((res.model.D_hat - pb.cfg.plant.D).norm(), 1e-9);
  ASSERT_EQ(static_cast<Eigen::Index>(res.model.S_hat.size()), pb.basis.h + 1);
  for (std::size_t i = 1; i < pb.basis.X.size(); ++i) {
    EXPECT_LE((res.model.S_hat[i - 1] - pb.S(i)).norm(), 1e-9 * (1 + pb.S(i).norm()));
  }
}

TEST_P(ExactData, RefinedRecoversOracleAndAgrees) {
  Problem pb(GetParam());
  std::mt19937_64 rng(13);
  const DataMatrices data = testing::synthetic_exact_data(
      pb.cfg.plant, pb.cfg.exo, pb.basis, 3 * solve_dims(pb.cfg.plant.n(), pb.cfg.plant.m(), pb.cfg.plant.q()).full, rng);
  const LearnResult ref = refined_learn(data, pb.cfg.excitation.K0, pb.known);
  const LearnResult orig = original_learn(data, pb.cfg.excitation.K0, pb.known);
  const std::size_t common = std::min(ref.history.size(), pb.oracle.history.size());
  for (std::size_t j = 0; j < common; ++j) {
    EXPECT_LE(rel(ref.history[j].P, pb.oracle.history[j].P), 1e-9) << j;
  }
  ASSERT_EQ(ref.history.size(), orig.history.size());
  for (std::size_t j = 0; j < ref.history.size(); ++j) {
    EXPECT_LE(rel(ref.history[j].P, orig.history[j].P), 1e-6) << j;
  }
  EXPECT_LE((ref.model.D_hat - pb.cfg.plant.D).norm(), 1e-9);
  for (std::size_t i = 1; i < pb.basis.X.size(); ++i) {
    EXPECT_LE((ref.model.S_hat[i - 1] - pb.S(i)).norm(), 1e-9 * (1 + pb.S(i).norm()));
  }
  EXPECT_GE(min_monotone_gap(ref.history), -1e-6 * ref.history.front().P.norm());

  const RegulatorAssembly reg = assemble_regulator_system(
      pb.basis, ref.model.S_hat, ref.model.D_hat, ref.P_final(), ref.K_next,
      pb.cfg.weights.R);
  const RegulatorSolution exact = solve_regulator_exact(pb.cfg.plant, pb.cfg.exo);
  EXPECT_LE((reg.solution.X - exact.X).norm(), 1e-6 * (1 + exact.X.norm()));
  EXPECT_LE((reg.solution.U - exact.U).norm(), 1e-6 * (1 + exact.U.norm()));
}

INSTANTIATE_TEST_SUITE_P(Benchmarks, ExactData, ::testing::Values("b1", "b2", "b3"));

TEST(SolveRecords, DimensionsOnB2) {
  Problem pb("b2");
  std::mt19937_64 rng(17);
  const DataMatrices data = testing::synthetic_exact_data(pb.cfg.plant, pb.cfg.exo, pb.basis, 30, rng);
  const LearnResult ref = refined_learn(data, pb.cfg.excitation.K0, pb.known);
  int exo = 0;
  for (const SolveRecord& r : ref.solves) {
    switch (r.kind) {
      case SolveRecord::Kind::kFull: EXPECT_EQ(r.cols, 9); break;
      case SolveRecord::Kind::kExo: EXPECT_EQ(r.cols, 4); ++exo; break;
      case SolveRecord::Kind::kReduced: EXPECT_EQ(r.cols, 5); break;
    }
    EXPECT_EQ(r.rank, r.cols);
  }
  EXPECT_EQ(exo, 3);
  EXPECT_EQ(ref.solves.front().kind, SolveRecord::Kind::kFull);
  EXPECT_EQ(ref.model.M_D.rows(), 4);
  EXPECT_EQ(ref.model.M_D.cols(), 3);

  const LearnResult orig = original_learn(data, pb.cfg.excitation.K0, pb.known);
  for (const SolveRecord& r : orig.solves) {
    EXPECT_EQ(r.kind, SolveRecord::Kind::kFull);
    EXPECT_EQ(r.cols, 9);
  }
}

TEST(Step1, B1Simulated) {
  Problem pb("b1");
  const DataMatrices data = testing::simulated_data(pb.cfg, pb.basis);
  const Step1Result s1 = refined_step1(data, pb.cfg.excitation.K0, pb.known);
  EXPECT_NEAR(s1.P0(0, 0), 0.5, 1e-3);
  EXPECT_NEAR(s1.K1(0, 0), 0.5, 1e-3);
  EXPECT_NEAR(s1.D_hat(0, 0), 1.0, 1e-3);
  EXPECT_EQ(s1.record.cols, 3);
}

TEST(Step1, ZeroExcitationIsRankDeficient) {
  Problem pb("b1");
  ExperimentConfig cfg = pb.cfg;
  for (VectorXd& a : cfg.excitation.amplitudes) a.setZero();
  cfg.x0.setZero();
  cfg.v0.setZero();
  const DataMatrices data = testing::simulated_data(cfg, pb.basis);
  try {
    refined_step1(data, cfg.excitation.K0, pb.known);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kRankDeficient);
  }
  EXPECT_THROW(original_learn(data, cfg.excitation.K0, pb.known), Error);
}

TEST(Learn, B1SimulatedLimits) {
  Problem pb("b1");
  const DataMatrices data = testing::simulated_data(pb.cfg, pb.basis);
  const double k_star = std::sqrt(2.0) - 1.0;
  const LearnResult ref = refined_learn(data, pb.cfg.excitation.K0, pb.known);
  const LearnResult orig = original_learn(data, pb.cfg.excitation.K0, pb.known);
  EXPECT_NEAR(ref.K_next(0, 0), k_star, 1e-2 * k_star);
  EXPECT_NEAR(orig.K_next(0, 0), k_star, 1e-2 * k_star);
  EXPECT_TRUE(ref.model.S_hat.size() == 1);
  ASSERT_EQ(ref.history.size(), orig.history.size());
  for (std::size_t j = 0; j < ref.history.size(); ++j) {
    EXPECT_LE(rel(ref.history[j].P, orig.history[j].P), 1e-6) << j;
  }
  EXPECT_GE(min_monotone_gap(ref.history), -1e-6 * ref.history.front().P.norm());

  const RegulatorAssembly reg = assemble_regulator_system(
      pb.basis, ref.model.S_hat, ref.model.D_hat, ref.P_final(), ref.K_next,
      pb.cfg.weights.R);
  ASSERT_EQ(reg.chi.size(), 2);
  EXPECT_NEAR(reg.chi(0), 1.0, 1e-2);
  EXPECT_NEAR(reg.chi(1), 0.0, 1e-2);
  const Controller c = learned_controller(ref.K_next, reg.solution);
  EXPECT_NEAR(c.L(0, 0), k_star, 1e-2 * k_star);
}

TEST(Learn, B2SimulatedAccuracy) {
  Problem pb("b2");
  const DataMatrices data = testing::simulated_data(pb.cfg, pb.basis, pb.cfg.excitation.seed);
  const LearnResult ref = refined_learn(data, pb.cfg.excitation.K0, pb.known);
  EXPECT_LE(rel(ref.K_next, pb.oracle.solution.K_star), 1e-2);
  ASSERT_EQ(ref.model.S_hat.size(), 3u);
  for (std::size_t i = 1; i < pb.basis.X.size(); ++i) {
    EXPECT_LE((ref.model.S_hat[i - 1] - pb.S(i)).norm(), 1e-2 * (1 + pb.S(i).norm())) << i;
  }
  const RegulatorAssembly reg = assemble_regulator_system(
      pb.basis, ref.model.S_hat, ref.model.D_hat, ref.P_final(), ref.K_next,
      pb.cfg.weights.R);
  EXPECT_EQ(reg.A_mat.rows(), 8);
  EXPECT_EQ(reg.A_mat.cols(), 2 + 4 + 2);
  const RegulatorSolution exact = solve_regulator_exact(pb.cfg.plant, pb.cfg.exo);
  EXPECT_LE((reg.solution.X - exact.X).norm(), 1e-2 * (1 + exact.X.norm()));
  EXPECT_LE((reg.solution.U - exact.U).norm(), 1e-2 * (1 + exact.U.norm()));

  const LearnResult orig = original_learn(data, pb.cfg.excitation.K0, pb.known);
  ASSERT_EQ(ref.history.size(), orig.history.size());
  for (std::size_t j = 0; j < ref.history.size(); ++j) {
    EXPECT_LE(rel(ref.history[j].P, orig.history[j].P), 1e-3) << j;
  }
}

TEST(Regulator, GroundTruthInputsGiveZeroResidual) {
  for (const char* name : {"b1", "b2", "b3"}) {
    Problem pb(name);
    std::vector<MatrixXd> S;
    for (std::size_t i = 1; i < pb.basis.X.size(); ++i) S.push_back(pb.S(i));
    const KleinmanResult& o = pb.oracle;
    const RegulatorAssembly reg = assemble_regulator_system(
        pb.basis, S, pb.cfg.plant.D, o.solution.P_star, o.solution.K_star,
        pb.cfg.weights.R);
    EXPECT_LE(reg.residual, 1e-8) << name;
    const auto [r1, r2] = regulator_residuals(pb.cfg.plant, pb.cfg.exo, reg.solution.X, reg.solution.U);
    EXPECT_LE(std::max(r1, r2), 1e-8) << name;
  }
}

TEST(Regulator, RejectsWrongSCount) {
  Problem pb("b2");
  EXPECT_THROW(assemble_regulator_system(pb.basis, {}, pb.cfg.plant.D,
                                         pb.oracle.solution.P_star,
                                         pb.oracle.solution.K_star, pb.cfg.weights.R),
               Error);
}

TEST(LearnedController, Examples) {
  RegulatorSolution reg;
  reg.X = MatrixXd::Constant(1, 1, 2.0);
  reg.U = MatrixXd::Constant(1, 1, 3.0);
  EXPECT_DOUBLE_EQ(learned_controller(MatrixXd::Zero(1, 1), reg).L(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(learned_controller(MatrixXd::Constant(1, 1, 0.5), reg).L(0, 0), 4.0);
  EXPECT_THROW(learned_controller(MatrixXd::Zero(2, 1), reg), Error);
}

TEST(Monotone, Gap) {
  std::vector<PolicyIterate> h{{0, MatrixXd::Constant(1, 1, 2.0), MatrixXd()},
                               {1, MatrixXd::Constant(1, 1, 1.5), MatrixXd()}};
  EXPECT_DOUBLE_EQ(min_monotone_gap(h), 0.5);
  EXPECT_TRUE(std::isinf(min_monotone_gap({h[0]})));
}

}  // namespace
}  // namespace aoor
