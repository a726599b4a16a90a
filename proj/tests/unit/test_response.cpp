#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "protocell/constants.hpp"
#include "protocell/errors.hpp"
#include "protocell/io.hpp"
#include "protocell/response.hpp"
#include "protocell/solver.hpp"

using namespace protocell;

class ResponseTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        ModelConfig c;
        c.sigma = 1;
        c.q_ccm = {350};
        model_ = std::make_unique<Model>(c);
        beta_ = std::make_unique<Solution>(model_->solve(350));
        ModelConfig a = c;
        a.formulation = Formulation::Alpha;
        Model alpha(a, model_->mesh_ptr());
        alpha_ = std::make_unique<Solution>(alpha.solve(350));
    }
    static void TearDownTestSuite() {
        alpha_.reset();
        beta_.reset();
        model_.reset();
    }
    static std::unique_ptr<Model> model_;
    static std::unique_ptr<Solution> beta_, alpha_;
};

std::unique_ptr<Model> ResponseTest::model_;
std::unique_ptr<Solution> ResponseTest::beta_;
std::unique_ptr<Solution> ResponseTest::alpha_;

TEST_F(ResponseTest, StoichiometriesHoldByConstruction) {
    for (const Solution* s : {beta_.get(), alpha_.get()}) {
        const auto r = scalar_responses(*s);
        const double chi_in = s->formulation == Formulation::Alpha ? s->c_in : s->chi_in;
        EXPECT_DOUBLE_EQ(r.lambda_prime, r.dchi / chi_in);
        ASSERT_TRUE(r.lambda.has_value());
        ASSERT_TRUE(r.kprime.has_value());
        EXPECT_DOUBLE_EQ(*r.kprime, r.dchi / r.rprime_norm);
        EXPECT_DOUBLE_EQ(r.rprime_norm * r.c_in, r.rprime_raw);
        EXPECT_GT(r.lambda_prime, 0.0);
        EXPECT_LT(r.lambda_prime, 1.0);
        EXPECT_GE(*r.lambda, r.lambda_prime);
    }
}

TEST_F(ResponseTest, LambdaTimesInletSupplyIsConsumption) {
    // lambda R_total equals the molar supply Q_in C_in of the inlet, with
    // Q_in the inlet mass flow over the mean inlet density.
    const Solution& s = *beta_;
    const auto r = scalar_responses(s);
    double rho = 0.0, area = 0.0;
    for (auto f : s.mesh->inlet_faces()) {
        const auto ijk = s.mesh->face_ijk(1, f);
        const double a = s.mesh->face_area(1, ijk[0], ijk[1], ijk[2]);
        rho += a * s.flow.density[s.mesh->cell(ijk[0], ijk[1], ijk[2])];
        area += a;
    }
    const double q_in = inlet_mass_flow(*s.mesh, s.flow) / (rho / area);
    EXPECT_NEAR(*r.lambda * r.r_total, q_in * r.c_in, 1e-12 * q_in * r.c_in);
    const double p_in = s.materials.p_ref + r.p_in;
    EXPECT_NEAR(r.c_in, s.chi_in * p_in / (constants::gas_constant * s.materials.temperature),
                1e-12 * r.c_in);
}

TEST_F(ResponseTest, MixingCupStoichiometryClosesTheBalance) {
    for (const Solution* s : {beta_.get(), alpha_.get()}) {
        const auto r = scalar_responses(*s);
        const double chi_in = s->formulation == Formulation::Alpha ? s->c_in : s->chi_in;
        EXPECT_NEAR(*r.lambda * r.dchi_bulk / chi_in, 1.0, 1e-3) << to_string(s->formulation);
    }
}

TEST_F(ResponseTest, PressureResponsesComeFromBoundaryAverages) {
    const auto r = scalar_responses(*beta_);
    EXPECT_DOUBLE_EQ(r.p_in, mean_inlet_pressure(*beta_->mesh, beta_->flow));
    EXPECT_DOUBLE_EQ(r.dp, r.p_in - mean_outlet_pressure(*beta_->mesh, beta_->flow));
    EXPECT_DOUBLE_EQ(r.dp_over_pin, r.dp / r.p_in);
    EXPECT_GT(r.dp, 0.0);
}

TEST_F(ResponseTest, ExtractionIsIdempotent) {
    const auto a = scalar_responses(*beta_);
    const auto b = scalar_responses(*beta_);
    EXPECT_EQ(response_csv({a}), response_csv({b}));
}

TEST_F(ResponseTest, ZeroKineticsGiveNoConsumption) {
    KineticsParams k = model_->config().kinetics;
    k.k1 = 0.0;
    ModelConfig c = model_->config();
    c.species.pressure_diffusion = false;
    Model m(c, model_->mesh_ptr());
    const auto r = scalar_responses(m.solve(350, k));
    EXPECT_LT(std::abs(r.dchi), 1e-6 * c.chi_in);
    EXPECT_EQ(r.rprime_raw, 0.0);
    EXPECT_EQ(r.r_total, 0.0);
    EXPECT_FALSE(r.kprime.has_value());
    EXPECT_FALSE(r.lambda.has_value());
    const auto csv = CsvTable::parse(response_csv({r}));
    EXPECT_EQ(csv.rows[0][csv.column("Kprime")], "");
    EXPECT_EQ(csv.rows[0][csv.column("lambda")], "");
}

TEST_F(ResponseTest, SurfaceQuadratureMatchesRprime) {
    const auto s = surfaces(*beta_);
    const auto r = scalar_responses(*beta_);
    double integral = 0.0;
    for (std::size_t n = 0; n < s.area.size(); ++n) integral += s.r_dec[n] * s.area[n];
    EXPECT_DOUBLE_EQ(integral, r.rprime_raw);
    EXPECT_EQ(s.x.size(), static_cast<std::size_t>(beta_->mesh->nx() * beta_->mesh->ny()));
}

TEST_F(ResponseTest, SurfacePartialPressureObeysMaximumPrinciple) {
    const auto s = surfaces(*beta_);
    const double p_max =
        beta_->materials.p_ref +
        *std::max_element(beta_->flow.pressure.begin(), beta_->flow.pressure.end());
    for (double p : s.partial_pressure) {
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, beta_->chi_in * p_max);
    }
}

TEST_F(ResponseTest, RbarIsNormalisedToTheMean) {
    const Mesh& mesh = *beta_->mesh;
    const auto rbar = r_bar_field(mesh, beta_->species);
    double integral = 0.0;
    for (std::size_t c = 0; c < mesh.cell_count(); ++c)
        if (mesh.region(c) == Region::Cl) integral += rbar[c] * mesh.volume(c);
        else EXPECT_EQ(rbar[c], 0.0);
    EXPECT_NEAR(integral / mesh.region_volume(Region::Cl), 1.0, 1e-6);
}

TEST_F(ResponseTest, UniformRateGivesUnitRbar) {
    const Mesh& mesh = *beta_->mesh;
    SpeciesState forced = beta_->species;
    for (std::size_t c = 0; c < mesh.cell_count(); ++c)
        forced.r_dec[c] = mesh.region(c) == Region::Cl ? 3.7 : 0.0;
    const auto rbar = r_bar_field(mesh, forced);
    for (std::size_t c = 0; c < mesh.cell_count(); ++c)
        if (mesh.region(c) == Region::Cl) EXPECT_NEAR(rbar[c], 1.0, 1e-12);
}

TEST_F(ResponseTest, ProfilesLieOnTheirLines) {
    const Mesh& mesh = *beta_->mesh;
    const auto p = profiles(*beta_);
    const auto& px = p.line("P_O3_x");
    const auto& rx = p.line("R_bar_x");
    EXPECT_EQ(px.position.size(), static_cast<std::size_t>(mesh.nx()));
    EXPECT_EQ(rx.value.size(), px.value.size());
    const auto& third = mesh.sections()[2];
    const auto& ux = p.line("U_x");
    const auto& uz = p.line("U_z");
    EXPECT_EQ(ux.position.size(), static_cast<std::size_t>(third.i1 - third.i0));
    EXPECT_EQ(uz.position.size(), static_cast<std::size_t>(mesh.nz()));
    EXPECT_GE(ux.position.front(), mesh.faces(0)[third.i0]);
    EXPECT_LE(ux.position.back(), mesh.faces(0)[third.i1]);
    for (double v : ux.value) EXPECT_GT(v, 0.0);
    // Speed peaks in the channel and decays through the porous layers.
    const double u_channel = *std::max_element(uz.value.begin(), uz.value.begin() + mesh.k_mps());
    EXPECT_GT(u_channel, 10.0 * uz.value.back());
    EXPECT_THROW(p.line("nope"), Error);
}

TEST_F(ResponseTest, PlumeSpreadIsAnAreaFraction) {
    const auto s = surfaces(*beta_);
    const double f = plume_spread(s, s.partial_pressure);
    EXPECT_GT(f, 0.0);
    EXPECT_LT(f, 1.0);
    std::vector<double> flat(s.area.size(), 2.0);
    EXPECT_EQ(plume_spread(s, flat), 1.0);
    std::vector<double> one(s.area.size(), 0.0);
    one[0] = 1.0;
    EXPECT_NEAR(plume_spread(s, one), s.area[0] / [&] {
        double a = 0.0;
        for (double v : s.area) a += v;
        return a;
    }(), 1e-15);
    EXPECT_THROW(plume_spread(s, {1.0}), ValidationError);
}

TEST_F(ResponseTest, FluxesBalanceAcrossTheMps) {
    const auto f = flux_decomposition(*beta_);
    const double in = f.ch_mps_convective + f.ch_mps_diffusive;
    const double out = f.mps_cl_convective + f.mps_cl_diffusive;
    EXPECT_GT(std::abs(in), 0.0);
    EXPECT_NEAR(in, out - f.mps_reaction, 1e-3 * std::abs(in));
    EXPECT_GT(f.cl_convective_mean, 0.0);
    EXPECT_GT(f.cl_diffusive_mean, 0.0);
    EXPECT_EQ(f.mps_reaction, 0.0);
}

TEST_F(ResponseTest, QuiescentFlowHasNoConvectiveFlux) {
    Solution s = *beta_;
    FlowSolver solver(*s.mesh, s.materials);
    s.flow = solver.initial_field({0.0, 7240.0});
    s.species = solve_species_beta(*s.mesh, s.flow, s.materials, s.kinetics, s.chi_in);
    const auto f = flux_decomposition(s);
    EXPECT_EQ(f.ch_mps_convective, 0.0);
    EXPECT_EQ(f.mps_cl_convective, 0.0);
    EXPECT_EQ(f.mps_convective_mean, 0.0);
    EXPECT_EQ(f.cl_convective_mean, 0.0);
}

TEST(ResponseCsv, HeaderAndFailedRows) {
    KineticsParams k;
    const auto failed = failed_record(Formulation::Beta, 250, k, 2, "diverged");
    EXPECT_FALSE(failed.converged);
    EXPECT_TRUE(std::isnan(failed.dchi));
    const auto csv = CsvTable::parse(response_csv({failed}));
    const std::vector<std::string> header{"formulation", "Q_ccm",        "k1",       "k2",
                                          "dchi",        "Rprime_raw",   "Rprime_norm", "Kprime",
                                          "R_total",     "lambda",       "lambda_prime", "dP_Pa",
                                          "Pin_Pa",      "dP_over_Pin",  "converged"};
    EXPECT_EQ(csv.header, header);
    ASSERT_EQ(csv.rows.size(), 1u);
    EXPECT_EQ(csv.rows[0][0], "beta");
    EXPECT_EQ(csv.rows[0][1], "250");
    EXPECT_EQ(csv.rows[0][csv.column("converged")], "0");
    EXPECT_EQ(csv.rows[0][csv.column("dchi")], "nan");
}

TEST(ResponseCsv, NumbersRoundTrip) {
    ResponseRecord r;
    r.q_ccm = 350;
    r.k1 = 100;
    r.k2 = 10;
    r.dchi = 0.1 + 0.2;
    r.kprime = 1.0 / 3.0;
    r.converged = true;
    const auto csv = CsvTable::parse(response_csv({r}));
    EXPECT_EQ(std::stod(csv.rows[0][csv.column("dchi")]), 0.1 + 0.2);
    EXPECT_EQ(std::stod(csv.rows[0][csv.column("Kprime")]), 1.0 / 3.0);
}
