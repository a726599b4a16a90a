#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "protocell/constants.hpp"
#include "protocell/errors.hpp"
#include "protocell/flow.hpp"
#include "protocell/geometry.hpp"
#include "protocell/properties.hpp"

using namespace protocell;

namespace {

constexpr double kPi = constants::pi;

// Fully developed laminar flow in a rectangular duct with half-widths
// a >= b, pressure gradient G = -dp/dy. Classical Fourier series.
struct DuctSeries {
    double a, b, mu;

    double flow_rate_per_gradient() const {
        double s = 0.0;
        for (int n = 1; n < 400; n += 2) s += std::tanh(n * kPi * a / (2 * b)) / std::pow(n, 5);
        return 4.0 * a * b * b * b / (3.0 * mu) * (1.0 - 192.0 * b / (std::pow(kPi, 5) * a) * s);
    }
    double centre_velocity_per_gradient() const {
        double s = 0.0;
        for (int n = 1; n < 400; n += 2) {
            const double sign = ((n - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
            s += sign / std::pow(n, 3) * (1.0 - 1.0 / std::cosh(n * kPi * a / (2 * b)));
        }
        return 16.0 * b * b / (mu * kPi * kPi * kPi) * s;
    }
};

double ccm(double q) { return q * constants::ccm_to_m3s; }

}  // namespace

TEST(DuctOracle, SquareDuctKnownRatio) {
    // Square duct: Q = 0.5623 (4 a^4 / (3 mu)) G, so u_max / u_mean = 2.0962.
    DuctSeries s{1.0, 1.0, 1.0};
    const double mean = s.flow_rate_per_gradient() / 4.0;
    EXPECT_NEAR(s.centre_velocity_per_gradient() / mean, 2.0962, 2e-4);
}

TEST(Flow, PoiseuilleDuctMatchesSeries) {
    // 0.8 mm x 1.0 mm duct, 33 x 41 cross-section cells.
    BoxMeshSpec spec;
    spec.cells = {33, 24, 41};
    spec.length = {0.8e-3, 6.0e-3, 1.0e-3};
    const Mesh mesh = make_box_mesh(spec);
    const MaterialParams mat;
    const FlowBC bc{ccm(5.0), 0.0};
    FlowSolver solver(mesh, mat);
    const FlowField f = solver.solve(bc);
    ASSERT_TRUE(f.converged);

    const double mu = air_viscosity(mat.temperature);
    const DuctSeries series{0.5e-3, 0.4e-3, mu};
    const int ic = 16, kc = 20;
    const int j1 = 12, j2 = 20;
    const double y1 = mesh.centers(1)[j1], y2 = mesh.centers(1)[j2];
    const double g_num = -(f.pressure[mesh.cell(ic, j2, kc)] - f.pressure[mesh.cell(ic, j1, kc)]) /
                         (y2 - y1);

    // Volumetric rate at the measurement station from the local density.
    const double mdot = inlet_mass_flow(mesh, f);
    const double rho = f.density[mesh.cell(ic, (j1 + j2) / 2, kc)];
    const double q_local = mdot / rho;
    const double g_exact = q_local / series.flow_rate_per_gradient();
    EXPECT_NEAR(g_num / g_exact, 1.0, 0.02);

    const int jf = (j1 + j2) / 2;
    const double u_num = f.velocity[1][mesh.face(1, ic, jf, kc)];
    const double u_exact = series.centre_velocity_per_gradient() * g_exact;
    EXPECT_NEAR(u_num / u_exact, 1.0, 0.02);
}

TEST(Flow, PorousSlabFollowsDarcy) {
    BoxMeshSpec spec;
    spec.cells = {4, 20, 4};
    spec.length = {1e-3, 1e-3, 1e-3};
    spec.fill = Region::Mps;
    spec.symmetry_x = spec.symmetry_z = true;
    const Mesh mesh = make_box_mesh(spec);
    const MaterialParams mat;
    const double u_target = 0.01;
    const double rho = mixture_density(mat.p_ref + 7240.0, mat.temperature, 0.0);
    const FlowBC bc{u_target * 1e-6 * rho / standard_density(), 7240.0};
    FlowSolver solver(mesh, mat);
    const FlowField f = solver.solve(bc);

    const double mu = air_viscosity(mat.temperature);
    const int j1 = 5, j2 = 15;
    const double dp = f.pressure[mesh.cell(1, j1, 1)] - f.pressure[mesh.cell(1, j2, 1)];
    const double grad = dp / (mesh.centers(1)[j2] - mesh.centers(1)[j1]);
    const double u = f.velocity[1][mesh.face(1, 1, 10, 1)];
    EXPECT_NEAR(grad / (mu * u / mat.kappa_mps), 1.0, 0.05);
    EXPECT_NEAR(u / u_target, 1.0, 1e-3);
}

TEST(Flow, QuiescentWithoutInflow) {
    const Mesh mesh = generate_mesh(build_geometry(GeometryKind::Reduced), 1, false);
    const FlowBC bc{0.0, 7240.0};
    const FlowField f = solve_flow(mesh, MaterialParams{}, bc);
    EXPECT_TRUE(f.converged);
    for (int d = 0; d < 3; ++d)
        for (double v : f.velocity[d]) ASSERT_EQ(v, 0.0);
    for (std::size_t c = 0; c < mesh.cell_count(); ++c)
        if (mesh.active(c)) ASSERT_EQ(f.pressure[c], 7240.0);
}

TEST(Flow, SourceWithoutInflowIsMassBalanceViolation) {
    const Mesh mesh = generate_mesh(build_geometry(GeometryKind::Reduced), 1, false);
    std::vector<double> src(mesh.cell_count(), 0.0);
    for (std::size_t c = 0; c < mesh.cell_count(); ++c)
        if (mesh.region(c) == Region::Cl) src[c] = -1e-3;
    EXPECT_THROW(solve_flow(mesh, MaterialParams{}, FlowBC{0.0, 7240.0}, src), ValidationError);
}

TEST(Flow, InvalidBoundaryValues) {
    EXPECT_THROW((FlowBC{-1.0, 0.0}.validate()), ValidationError);
    FlowOptions o;
    o.relax_pressure = 0.0;
    EXPECT_THROW(o.validate(), ValidationError);
}

TEST(Flow, ReportsNonConvergenceWithHistory) {
    const Mesh mesh = generate_mesh(build_geometry(GeometryKind::Reduced), 1, false);
    FlowOptions o;
    o.max_iterations = 3;
    FlowSolver solver(mesh, MaterialParams{}, o);
    try {
        solver.solve(FlowBC{ccm(350), 7240.0});
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.history().size(), 3u);
    }
}

class ReducedFlow : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        mesh_ = new Mesh(generate_mesh(build_geometry(GeometryKind::Reduced), 1, false));
        solver_ = new FlowSolver(*mesh_, MaterialParams{});
        source_ = new std::vector<double>(mesh_->cell_count(), 0.0);
        for (std::size_t c = 0; c < mesh_->cell_count(); ++c)
            if (mesh_->region(c) == Region::Cl) (*source_)[c] = -1.1e-3;
        field_ = new FlowField(solver_->solve(bc(), *source_));
    }
    static void TearDownTestSuite() {
        delete field_;
        delete source_;
        delete solver_;
        delete mesh_;
    }
    static FlowBC bc() { return {ccm(350), 7240.0}; }

    static Mesh* mesh_;
    static FlowSolver* solver_;
    static std::vector<double>* source_;
    static FlowField* field_;
};

Mesh* ReducedFlow::mesh_ = nullptr;
FlowSolver* ReducedFlow::solver_ = nullptr;
std::vector<double>* ReducedFlow::source_ = nullptr;
FlowField* ReducedFlow::field_ = nullptr;

TEST_F(ReducedFlow, GlobalMassBalance) {
    EXPECT_LE(global_mass_imbalance(*mesh_, *field_, *source_, bc().q_std), 1e-6);
    EXPECT_NEAR(inlet_mass_flow(*mesh_, *field_), standard_density() * bc().q_std,
                1e-12 * standard_density() * bc().q_std);
}

TEST_F(ReducedFlow, CellContinuityResiduals) {
    const auto res = continuity_residuals(*mesh_, *field_, *source_);
    const double scale = standard_density() * bc().q_std;
    double worst = 0.0;
    for (double r : res) worst = std::max(worst, std::abs(r));
    EXPECT_LE(worst / scale, 1e-5);
}

TEST_F(ReducedFlow, NoVelocityOnLandOrWalls) {
    const Mesh& m = *mesh_;
    for (int d = 0; d < 3; ++d)
        for (std::size_t f = 0; f < m.face_count(d); ++f)
            if (m.face_kind(d, f) == FaceKind::Wall) ASSERT_EQ(field_->velocity[d][f], 0.0);
}

TEST_F(ReducedFlow, PressureDropsFromInletToOutlet) {
    const double p_in = mean_inlet_pressure(*mesh_, *field_);
    const double p_out = mean_outlet_pressure(*mesh_, *field_);
    EXPECT_GT(p_in, p_out);
    EXPECT_NEAR(p_out, 7240.0, 50.0);
}

TEST_F(ReducedFlow, SourceIsSmallAgainstDarcyDrag) {
    const Mesh& m = *mesh_;
    const MaterialParams mat;
    const double mu = air_viscosity(mat.temperature);
    double drag = 0.0, src = 0.0;
    for (std::size_t c = 0; c < m.cell_count(); ++c) {
        if (m.region(c) != Region::Cl) continue;
        const auto u = cell_velocity(m, *field_, c);
        drag = std::max(drag, mu * std::hypot(u[0], u[1], u[2]) / mat.kappa_cl);
        src = std::max(src, std::abs((*source_)[c]));
    }
    EXPECT_LT(src / drag, 1e-3);
}

TEST_F(ReducedFlow, WarmStartConvergesFaster) {
    FlowField warm = solver_->solve(bc(), *source_, {}, field_);
    EXPECT_LT(warm.iterations - field_->iterations, field_->iterations / 4);
}

TEST_F(ReducedFlow, ResidualHistoryCsv) {
    const auto csv = residual_history_csv(*field_);
    EXPECT_EQ(csv.rfind("iteration,continuity,momentum\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'),
              static_cast<long>(field_->history.size()) + 1);
}

TEST(Flow, ReferencePressureRelabeling) {
    const Mesh mesh = generate_mesh(build_geometry(GeometryKind::Reduced), 1, false);
    MaterialParams a, b;
    b.p_ref = a.p_ref + 2000.0;
    const FlowField fa = solve_flow(mesh, a, FlowBC{ccm(250), 7240.0});
    const FlowField fb = solve_flow(mesh, b, FlowBC{ccm(250), 5240.0});
    double umax = 0.0, du = 0.0, dp = 0.0;
    for (int d = 0; d < 3; ++d)
        for (std::size_t f = 0; f < mesh.face_count(d); ++f) {
            umax = std::max(umax, std::abs(fa.velocity[d][f]));
            du = std::max(du, std::abs(fa.velocity[d][f] - fb.velocity[d][f]));
        }
    for (std::size_t c = 0; c < mesh.cell_count(); ++c)
        if (mesh.active(c))
            dp = std::max(dp, std::abs((fa.pressure[c] + a.p_ref) - (fb.pressure[c] + b.p_ref)));
    EXPECT_LT(du / umax, 1e-4);
    EXPECT_LT(dp, 1e-2);
}

TEST(Flow, MirrorSymmetricDuctProfile) {
    BoxMeshSpec spec;
    spec.cells = {6, 12, 5};
    spec.length = {0.8e-3, 4e-3, 1e-3};
    const Mesh mesh = make_box_mesh(spec);
    FlowOptions o;
    o.tolerance = 1e-8;
    const FlowField f = solve_flow(mesh, MaterialParams{}, FlowBC{ccm(20), 0.0}, {}, o);
    const int j = 6;
    double umax = 0.0, asym = 0.0;
    for (int k = 0; k < 5; ++k)
        for (int i = 0; i < 6; ++i) {
            const double u = f.velocity[1][mesh.face(1, i, j, k)];
            const double v = f.velocity[1][mesh.face(1, 5 - i, j, k)];
            umax = std::max(umax, std::abs(u));
            asym = std::max(asym, std::abs(u - v));
        }
    EXPECT_LT(asym / umax, 1e-10);
}

TEST(MassSource, ZeroSinkGivesZeroSource) {
    const Mesh mesh = generate_mesh(build_geometry(GeometryKind::Reduced), 1, false);
    std::size_t masked = 99;
    const auto s = mass_source_from_sink(mesh, std::vector<double>(mesh.cell_count(), 0.0), &masked);
    EXPECT_EQ(masked, 0u);
    EXPECT_TRUE(std::all_of(s.begin(), s.end(), [](double v) { return v == 0.0; }));
}

TEST(MassSource, MasksSinkOutsideCatalystLayer) {
    const Mesh mesh = generate_mesh(build_geometry(GeometryKind::Reduced), 1, false);
    std::vector<double> sink(mesh.cell_count(), -2.0);
    std::size_t masked = 0;
    const auto s = mass_source_from_sink(mesh, sink, &masked);
    EXPECT_EQ(masked, mesh.cell_count() - mesh.count(Region::Cl));
    for (std::size_t c = 0; c < mesh.cell_count(); ++c)
        ASSERT_EQ(s[c], mesh.region(c) == Region::Cl ? -2.0 : 0.0);
}
