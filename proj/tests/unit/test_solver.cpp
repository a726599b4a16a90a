#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "protocell/constants.hpp"
#include "protocell/errors.hpp"
#include "protocell/response.hpp"
#include "protocell/solver.hpp"
#include "protocell/sweep.hpp"

using namespace protocell;

namespace {

ModelConfig coarse_config() {
    ModelConfig c;
    c.sigma = 1;
    c.q_ccm = {200, 250};
    return c;
}

}  // namespace

TEST(ModelConfig, DefaultsAreValid) { EXPECT_NO_THROW(ModelConfig{}.validate()); }

TEST(ModelConfig, RejectsBadSchedules) {
    ModelConfig c;
    c.q_ccm = {250, 200};
    EXPECT_THROW(c.validate(), ValidationError);
    c.q_ccm = {200, 200};
    EXPECT_THROW(c.validate(), ValidationError);
    c.q_ccm = {};
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(ModelConfig, RejectsNonPositiveTolerance) {
    ModelConfig c;
    c.outer_tolerance = 0.0;
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(ModelConfig, KineticLayerDataMustMatchMaterials) {
    ModelConfig c;
    c.kinetics.t_cl = 100e-6;
    EXPECT_THROW(c.validate(), ValidationError);
    c = ModelConfig{};
    c.kinetics.r_p = 1e-6;
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Fingerprint, DistinguishesOperatingPoints) {
    ModelConfig c;
    const auto base = solution_fingerprint(c, 250);
    EXPECT_EQ(base.size(), 16u);
    EXPECT_EQ(base, solution_fingerprint(c, 250));
    EXPECT_NE(base, solution_fingerprint(c, 300));
    ModelConfig k = c;
    k.kinetics.k1 = 10;
    EXPECT_NE(base, solution_fingerprint(k, 250));
    k = c;
    k.kinetics.k2 = 1;
    EXPECT_NE(base, solution_fingerprint(k, 250));
    k = c;
    k.sigma = 3;
    EXPECT_NE(base, solution_fingerprint(k, 250));
}

TEST(BuildMesh, HonoursTheCellBudget) {
    ModelConfig c;
    c.sigma = 2;
    c.cell_budget = 1000;
    EXPECT_THROW(build_mesh(c), ResourceError);
}

class SolverTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        model_ = std::make_unique<Model>(coarse_config());
        beta_ = std::make_unique<Solution>(model_->solve(250));
    }
    static void TearDownTestSuite() {
        beta_.reset();
        model_.reset();
    }
    static std::unique_ptr<Model> model_;
    static std::unique_ptr<Solution> beta_;
};

std::unique_ptr<Model> SolverTest::model_;
std::unique_ptr<Solution> SolverTest::beta_;

TEST_F(SolverTest, BetaConvergesOnResponseMonitors) {
    const Solution& s = *beta_;
    EXPECT_TRUE(s.converged);
    ASSERT_GE(s.history.size(), 2u);
    EXPECT_LE(s.history.back().change, model_->config().outer_tolerance);
    EXPECT_EQ(s.outer_iterations, static_cast<int>(s.history.size()));
    EXPECT_GT(s.history.back().dchi, 0.0);
    EXPECT_GT(s.history.back().dp, 0.0);
    EXPECT_GT(s.history.back().r_total, 0.0);
    EXPECT_TRUE(s.flow.converged);
    EXPECT_EQ(s.fingerprint, solution_fingerprint(model_->config(), 250));
}

TEST_F(SolverTest, ConvergedStateIsAFixedPoint) {
    const Solution again = model_->solve(250, beta_.get());
    const double d0 = beta_->history.back().dchi;
    const double d1 = again.history.front().dchi;
    EXPECT_LT(std::abs(d1 - d0) / d0, model_->config().outer_tolerance);
}

TEST_F(SolverTest, FlowCarriesTheReactionMassSink) {
    const Solution& s = *beta_;
    const auto source = mass_source_from_sink(*s.mesh, s.species.sink);
    EXPECT_LE(global_mass_imbalance(*s.mesh, s.flow, source, 250 * constants::ccm_to_m3s), 1e-6);
    const auto b = species_balance(*s.mesh, s.flow, s.materials, s.species);
    EXPECT_LE(b.relative_error(), 1e-3);
}

TEST_F(SolverTest, WarmStartNeedsFewerIterations) {
    Model cold_model(coarse_config(), model_->mesh_ptr());
    const Solution cold = cold_model.solve(250);
    const int cold_total = cold_model.base_flow(250).iterations + cold.flow_iterations;

    Model warm_model(coarse_config(), model_->mesh_ptr());
    const Solution first = warm_model.solve(200);
    const Solution warm = warm_model.solve(250, &first);
    EXPECT_LT(warm.flow_iterations, cold_total);
    EXPECT_LE(warm.outer_iterations, cold.outer_iterations);
    EXPECT_NEAR(warm.history.back().dchi, cold.history.back().dchi,
                1e-4 * cold.history.back().dchi);
}

TEST_F(SolverTest, RepeatedRunsAreBitwiseIdentical) {
    Model other(coarse_config(), model_->mesh_ptr());
    const Solution s = other.solve(250);
    const auto a = scalar_responses(*beta_);
    const auto b = scalar_responses(s);
    EXPECT_EQ(a.dchi, b.dchi);
    EXPECT_EQ(a.dp, b.dp);
    EXPECT_EQ(a.r_total, b.r_total);
    EXPECT_EQ(a.rprime_raw, b.rprime_raw);
}

TEST_F(SolverTest, AlphaRunsTheTwoStepCycleOnce) {
    ModelConfig c = coarse_config();
    c.formulation = Formulation::Alpha;
    Model alpha(c, model_->mesh_ptr());
    const Solution s = alpha.solve(250);
    EXPECT_EQ(s.formulation, Formulation::Alpha);
    EXPECT_EQ(s.outer_iterations, 1);
    EXPECT_TRUE(s.converged);
    ASSERT_EQ(s.history.size(), 1u);
    for (double t : s.species.theta) EXPECT_EQ(t, 0.0);
    EXPECT_GT(s.history[0].dchi, 0.0);
}

TEST_F(SolverTest, IterationCapRaisesDivergenceWithHistory) {
    ModelConfig c = coarse_config();
    c.max_outer_iterations = 1;
    Model capped(c, model_->mesh_ptr());
    try {
        capped.solve(250);
        FAIL() << "expected DivergenceError";
    } catch (const DivergenceError& e) {
        EXPECT_EQ(e.records().size(), 1u);
        EXPECT_EQ(e.history().size(), 1u);
    }
}

TEST_F(SolverTest, FastAdsorptionConvergesOrReportsDivergence) {
    KineticsParams k = model_->config().kinetics;
    k.k1 = 1e4;
    try {
        const Solution s = model_->solve(250, k);
        EXPECT_TRUE(s.converged);
        EXPECT_LE(s.history.back().change, model_->config().outer_tolerance);
    } catch (const DivergenceError& e) {
        EXPECT_FALSE(e.records().empty());
    }
}

TEST_F(SolverTest, ContinuationWalksTheSchedule) {
    const auto r = continuation_run(*model_);
    EXPECT_TRUE(r.complete);
    ASSERT_EQ(r.solutions.size(), 2u);
    EXPECT_EQ(r.solutions[0].q_ccm, 200);
    EXPECT_EQ(r.solutions[1].q_ccm, 250);
    EXPECT_GT(r.solutions[1].history.back().dp, r.solutions[0].history.back().dp);
}

TEST_F(SolverTest, ContinuationStopsAtFirstFailure) {
    ModelConfig c = coarse_config();
    c.max_outer_iterations = 1;
    Model capped(c, model_->mesh_ptr());
    const auto r = continuation_run(capped);
    EXPECT_FALSE(r.complete);
    EXPECT_TRUE(r.solutions.empty());
    EXPECT_EQ(r.failed_q_ccm, 200);
    EXPECT_FALSE(r.failure.empty());
}

TEST_F(SolverTest, SingleSweepPointMatchesDirectSolve) {
    const auto table = parametric_sweep(model_->config(), {100}, {10}, {250});
    ASSERT_EQ(table.size(), 1u);
    const auto direct = scalar_responses(*beta_);
    EXPECT_EQ(table[0].dchi, direct.dchi);
    EXPECT_EQ(table[0].dp, direct.dp);
    EXPECT_EQ(table[0].fingerprint, direct.fingerprint);
    EXPECT_TRUE(table[0].converged);
}

TEST_F(SolverTest, SweepIsIndependentOfOrderAndWorkers) {
    const auto serial = parametric_sweep(model_->config(), {1, 100}, {10}, {200, 250}, 1);
    const auto parallel = parametric_sweep(model_->config(), {1, 100}, {10}, {200, 250}, 2);
    const auto shuffled = parametric_sweep(model_->config(), {100, 1}, {10}, {250, 200}, 1);
    ASSERT_EQ(serial.size(), 4u);
    ASSERT_EQ(parallel.size(), 4u);
    for (std::size_t n = 0; n < serial.size(); ++n) {
        EXPECT_EQ(serial[n].dchi, parallel[n].dchi);
        EXPECT_EQ(serial[n].dp, parallel[n].dp);
        EXPECT_EQ(serial[n].r_total, parallel[n].r_total);
    }
    for (const auto& a : serial) {
        bool found = false;
        for (const auto& b : shuffled)
            if (a.k1 == b.k1 && a.q_ccm == b.q_ccm) {
                found = true;
                EXPECT_EQ(a.dchi, b.dchi);
                EXPECT_EQ(a.dp, b.dp);
            }
        EXPECT_TRUE(found);
    }
    // Order: k1 outer, Q inner.
    EXPECT_EQ(serial[0].k1, 1);
    EXPECT_EQ(serial[1].q_ccm, 250);
    EXPECT_EQ(serial[2].k1, 100);
    // Nondecreasing consumption in k1.
    EXPECT_GE(serial[2].dchi, serial[0].dchi);
}

TEST_F(SolverTest, SweepRecordsFailuresInsteadOfDroppingThem) {
    ModelConfig c = coarse_config();
    c.max_outer_iterations = 1;
    std::vector<std::string> lines;
    const auto table =
        parametric_sweep(c, {100}, {10}, {250}, 1, [&](const std::string& l) { lines.push_back(l); });
    ASSERT_EQ(table.size(), 1u);
    EXPECT_FALSE(table[0].converged);
    EXPECT_TRUE(std::isnan(table[0].dchi));
    EXPECT_FALSE(table[0].error.empty());
    ASSERT_EQ(lines.size(), 1u);
    EXPECT_NE(lines[0].find("converged=0"), std::string::npos);
}

TEST(Sweep, RejectsEmptySets) {
    ModelConfig c = coarse_config();
    EXPECT_THROW(parametric_sweep(c, {}, {10}, {250}), ValidationError);
    EXPECT_THROW(parametric_sweep(c, {1}, {}, {250}), ValidationError);
    EXPECT_THROW(parametric_sweep(c, {1}, {10}, {}), ValidationError);
}

TEST(Sweep, EffectiveWorkersRespectsPointCount) {
    EXPECT_EQ(effective_workers(4, 2), 2);
    EXPECT_EQ(effective_workers(3, 10), 3);
    EXPECT_GE(effective_workers(0, 10), 1);
}
