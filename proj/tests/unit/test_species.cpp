#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "protocell/constants.hpp"
#include "protocell/errors.hpp"
#include "protocell/flow.hpp"
#include "protocell/species.hpp"

using namespace protocell;

namespace {

// Binary MS flux from the species velocity difference: the MS relation
// d_1 = chi_1 chi_2 (v_2 - v_1) / D gives v_1 - v_2, and the mass flux
// relative to the mass-averaged velocity is j_1 = rho omega_1 omega_2 (v_1 - v_2).
std::array<double, 3> ms_oracle(double rho, double omega, const std::array<double, 3>& grad_chi,
                                const std::array<double, 3>& grad_p, double p_abs, double d,
                                double m1, double m2) {
    const double n1 = omega / m1, n2 = (1.0 - omega) / m2;
    const double chi1 = n1 / (n1 + n2), chi2 = 1.0 - chi1;
    std::array<double, 3> j{};
    for (int k = 0; k < 3; ++k) {
        const double d1 = grad_chi[k] + (chi1 - omega) * grad_p[k] / p_abs;
        const double dv = -d1 * d / (chi1 * chi2);
        j[k] = rho * omega * (1.0 - omega) * dv;
    }
    return j;
}

}  // namespace

TEST(BinaryMsFlux, EquilibriumGivesZero) {
    const auto j = binary_ms_flux(1.2, 2e-3, {0, 0, 0}, {0, 0, 0}, 1e5, 1.6e-5);
    for (double v : j) EXPECT_EQ(v, 0.0);
}

TEST(BinaryMsFlux, EqualMassesReduceToFick) {
    const double m = 0.03;
    const std::array<double, 3> g{1.0, -2.0, 0.5};
    const auto j = binary_ms_flux(1.1, 0.3, g, {0, 0, 0}, 1e5, 2e-5, m, m);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(j[k], -1.1 * 2e-5 * g[k], 1e-18);
}

TEST(BinaryMsFlux, MatchesVelocityDifferenceOracle) {
    const std::array<double, 3> gc{3.0, 0.1, -0.4}, gp{1e4, -2e3, 5e2};
    for (double omega : {1e-4, 2e-3, 0.2, 0.7}) {
        const auto j = binary_ms_flux(1.25, omega, gc, gp, 1.1e5, 1.1e-5);
        const auto o = ms_oracle(1.25, omega, gc, gp, 1.1e5, 1.1e-5, constants::molar_mass_o3,
                                 constants::molar_mass_air);
        for (int k = 0; k < 3; ++k) EXPECT_NEAR(j[k], o[k], 1e-12 * std::abs(o[k]));
    }
}

TEST(BinaryMsFlux, RejectsNonPositivePressure) {
    EXPECT_THROW(binary_ms_flux(1, 0.1, {0, 0, 0}, {0, 0, 0}, 0.0, 1e-5), ValidationError);
}

TEST(Formulation, Parse) {
    EXPECT_EQ(parse_formulation("alpha"), Formulation::Alpha);
    EXPECT_EQ(parse_formulation("beta"), Formulation::Beta);
    EXPECT_EQ(to_string(Formulation::Beta), "beta");
    EXPECT_THROW(parse_formulation("gamma"), ValidationError);
}

class SpeciesOnReducedMesh : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        mesh_ = std::make_unique<Mesh>(generate_mesh(build_geometry(GeometryKind::Reduced), 1, false));
        const std::vector<double> omega(mesh_->cell_count(), mass_fraction(chi_in));
        flow_ = std::make_unique<FlowField>(
            FlowSolver(*mesh_, MaterialParams{}).solve({350 * constants::ccm_to_m3s, 7240.0}, {}, omega));
    }
    static void TearDownTestSuite() {
        flow_.reset();
        mesh_.reset();
    }

    static constexpr double chi_in = 1200e-6;
    static std::unique_ptr<Mesh> mesh_;
    static std::unique_ptr<FlowField> flow_;
};

std::unique_ptr<Mesh> SpeciesOnReducedMesh::mesh_;
std::unique_ptr<FlowField> SpeciesOnReducedMesh::flow_;

TEST_F(SpeciesOnReducedMesh, NoAdsorptionKeepsInletValue) {
    KineticsParams kin;
    kin.k1 = 0.0;
    const double w_in = mass_fraction(chi_in);
    auto worst = [&](const SpeciesState& st) {
        double w = 0.0;
        for (std::size_t c = 0; c < mesh_->cell_count(); ++c)
            if (mesh_->active(c)) w = std::max(w, std::abs(st.omega[c] / w_in - 1.0));
        return w;
    };
    // Without the pressure driving force only the flow's continuity
    // residual (tolerance 1e-5) perturbs the field.
    SpeciesOptions plain;
    plain.pressure_diffusion = false;
    EXPECT_LT(worst(solve_species_beta(*mesh_, *flow_, MaterialParams{}, kin, chi_in, plain)), 1e-6);
    // Pressure diffusion enriches O3 toward high pressure, bounded by
    // (1 - M/M_O3) dP / P_A.
    const double dp = mean_inlet_pressure(*mesh_, *flow_) - mean_outlet_pressure(*mesh_, *flow_);
    const double bound = dp / (MaterialParams{}.p_ref + 7240.0);
    const double w = worst(solve_species_beta(*mesh_, *flow_, MaterialParams{}, kin, chi_in));
    EXPECT_GT(w, 1e-6);
    EXPECT_LT(w, bound);
}

TEST_F(SpeciesOnReducedMesh, BetaGlobalBalance) {
    const auto st = solve_species_beta(*mesh_, *flow_, MaterialParams{}, KineticsParams{}, chi_in);
    const auto b = species_balance(*mesh_, *flow_, MaterialParams{}, st);
    EXPECT_GT(b.consumption, 0.0);
    EXPECT_LE(b.relative_error(), 1e-4);
    EXPECT_EQ(st.clipped, 0u);
}

TEST_F(SpeciesOnReducedMesh, BetaMaximumPrinciple) {
    const auto st = solve_species_beta(*mesh_, *flow_, MaterialParams{}, KineticsParams{}, chi_in);
    for (std::size_t c = 0; c < mesh_->cell_count(); ++c) {
        if (!mesh_->active(c)) continue;
        ASSERT_GE(st.omega[c], -1e-10);
        ASSERT_LE(st.omega[c], st.inlet_value * (1.0 + 1e-10));
    }
}

TEST_F(SpeciesOnReducedMesh, CoverageAndSinkConsistent) {
    const KineticsParams kin;
    const auto st = solve_species_beta(*mesh_, *flow_, MaterialParams{}, kin, chi_in);
    for (std::size_t c = 0; c < mesh_->cell_count(); ++c) {
        if (mesh_->region(c) != Region::Cl) {
            ASSERT_EQ(st.theta[c], 0.0);
            ASSERT_EQ(st.sink[c], 0.0);
            continue;
        }
        ASSERT_NEAR(st.theta[c], coverage_steady_state(kin.k1, kin.k2, st.chi[c]).theta, 1e-15);
        ASSERT_NEAR(-st.sink[c], kin.molar_mass_o3 * st.r_dec[c], 1e-12 * std::abs(st.sink[c]));
        ASSERT_NEAR(st.chi[c], mole_fraction(st.omega[c]), 1e-18);
    }
}

TEST_F(SpeciesOnReducedMesh, AlphaWithoutReactionIsUniform) {
    // Limited by the flow's continuity residual, as for Beta.
    const auto st = solve_species_alpha(*mesh_, *flow_, MaterialParams{}, 0.0, 1200e-6);
    for (std::size_t c = 0; c < mesh_->cell_count(); ++c)
        if (mesh_->active(c)) {
            ASSERT_NEAR(st.concentration[c], 1200e-6, 1e-6 * 1200e-6);
            ASSERT_EQ(st.chi[c], st.concentration[c]);  // C / C*, C* = 1 mol/m^3
        }
}

TEST_F(SpeciesOnReducedMesh, AlphaGlobalBalance) {
    const auto st = solve_species_alpha(*mesh_, *flow_, MaterialParams{}, 256.15, 1200e-6);
    const auto b = species_balance(*mesh_, *flow_, MaterialParams{}, st);
    EXPECT_GT(b.consumption, 0.0);
    EXPECT_LE(b.relative_error(), 1e-4);
}

TEST_F(SpeciesOnReducedMesh, KnudsenReducesCatalystLayerDiffusion) {
    MaterialParams with, without;
    without.coupling = CouplingScheme::NoKnudsen;
    EXPECT_LT(beta_diffusivity(with, Region::Cl), beta_diffusivity(without, Region::Cl));
    const auto st = solve_species_beta(*mesh_, *flow_, with, KineticsParams{}, chi_in);
    SpeciesOptions o;
    o.pressure_diffusion = false;
    const auto fw = species_face_fluxes(*mesh_, *flow_, with, st, o);
    const auto fo = species_face_fluxes(*mesh_, *flow_, without, st, o);
    const Mesh& m = *mesh_;
    int compared = 0;
    for (int d = 0; d < 3; ++d)
        for (std::size_t f = 0; f < m.face_count(d); ++f) {
            if (m.face_kind(d, f) != FaceKind::Interior) continue;
            auto ijk = m.face_ijk(d, f);
            const auto hi = m.cell(ijk[0], ijk[1], ijk[2]);
            ijk[d] -= 1;
            const auto lo = m.cell(ijk[0], ijk[1], ijk[2]);
            if (m.region(hi) != Region::Cl || m.region(lo) != Region::Cl) continue;
            if (fo.diffusive[d][f] == 0.0) continue;
            ASSERT_LT(std::abs(fw.diffusive[d][f]), std::abs(fo.diffusive[d][f]));
            ++compared;
        }
    EXPECT_GT(compared, 0);
}

TEST_F(SpeciesOnReducedMesh, BetaApproachesAlphaInTheDiluteLinearLimit) {
    // Equal molar masses make omega = chi; no pressure diffusion and the
    // Alpha porous correction on both; a huge k2 keeps theta ~ 1e-7.
    MaterialParams mat;
    mat.molar_mass_o3 = mat.molar_mass_air;
    mat.coupling = CouplingScheme::NoKnudsen;
    KineticsParams kin;
    kin.molar_mass_o3 = mat.molar_mass_air;
    kin.k1 = 100.0;
    kin.k2 = 1e6;
    SpeciesOptions o;
    o.pressure_diffusion = false;
    const std::vector<double> omega(mesh_->cell_count(), chi_in);
    const FlowField flow =
        FlowSolver(*mesh_, mat).solve({350 * constants::ccm_to_m3s, 7240.0}, {}, omega);
    const auto beta = solve_species_beta(*mesh_, flow, mat, kin, chi_in, o);

    // Molar sink A_v Gamma* k1 chi = k_app C with C = chi P_A / (R T).
    double p_mean = 0.0, vol = 0.0;
    for (std::size_t c = 0; c < mesh_->cell_count(); ++c)
        if (mesh_->region(c) == Region::Cl) {
            p_mean += (mat.p_ref + flow.pressure[c]) * mesh_->volume(c);
            vol += mesh_->volume(c);
        }
    p_mean /= vol;
    const double c_tot = p_mean / (constants::gas_constant * mat.temperature);
    const double k_app = kin.site_density() * kin.k1 / c_tot;
    const auto alpha = solve_species_alpha(*mesh_, flow, mat, k_app, chi_in * c_tot, o);

    double worst = 0.0;
    for (std::size_t c = 0; c < mesh_->cell_count(); ++c) {
        if (!mesh_->active(c)) continue;
        const double a = alpha.concentration[c] / c_tot;
        worst = std::max(worst, std::abs(beta.chi[c] - a) / chi_in);
    }
    EXPECT_LT(worst, 0.01);
}

TEST_F(SpeciesOnReducedMesh, FaceFluxesCloseEveryCell) {
    const auto st = solve_species_beta(*mesh_, *flow_, MaterialParams{}, KineticsParams{}, chi_in);
    const auto fx = species_face_fluxes(*mesh_, *flow_, MaterialParams{}, st);
    const Mesh& m = *mesh_;
    const double scale = species_balance(m, *flow_, MaterialParams{}, st).inflow;
    double worst = 0.0;
    for (int k = 0; k < m.nz(); ++k)
        for (int j = 0; j < m.ny(); ++j)
            for (int i = 0; i < m.nx(); ++i) {
                const auto c = m.cell(i, j, k);
                if (!m.active(c)) continue;
                double net = 0.0;
                const std::array<int, 3> ijk{i, j, k};
                for (int d = 0; d < 3; ++d) {
                    auto up = ijk;
                    up[d] += 1;
                    const auto f_lo = m.face(d, i, j, k);
                    const auto f_hi = m.face(d, up[0], up[1], up[2]);
                    net += fx.convective[d][f_hi] + fx.diffusive[d][f_hi];
                    net -= fx.convective[d][f_lo] + fx.diffusive[d][f_lo];
                }
                net += st.r_dec[c] * m.volume(c);
                worst = std::max(worst, std::abs(net));
            }
    EXPECT_LT(worst / scale, 1e-9);
}

TEST(Species, RejectsMismatchedFlow) {
    const Mesh mesh = generate_mesh(build_geometry(GeometryKind::Reduced), 1, false);
    FlowField empty;
    EXPECT_THROW(solve_species_beta(mesh, empty, MaterialParams{}, KineticsParams{}, 1200e-6),
                 ValidationError);
    FlowSolver solver(mesh, MaterialParams{});
    const FlowField rest = solver.initial_field({0.0, 7240.0});
    EXPECT_THROW(solve_species_beta(mesh, rest, MaterialParams{}, KineticsParams{}, 1.5),
                 ValidationError);
}
