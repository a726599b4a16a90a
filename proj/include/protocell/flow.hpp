#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "protocell/geometry.hpp"
#include "protocell/properties.hpp"

namespace protocell {

struct FlowBC {
    double q_std = 0.0;     // inflow at standard conditions, m^3/s
    double p_out = 7240.0;  // outlet pressure relative to MaterialParams::p_ref, Pa

    void validate() const;
};

struct FlowOptions {
    double relax_velocity = 0.7;
    double relax_pressure = 0.3;
    double tolerance = 1e-5;  // relative momentum and continuity residuals
    int max_iterations = 3000;
    double momentum_linear_tolerance = 1e-4;
    double pressure_linear_tolerance = 1e-3;
    int linear_max_iterations = 400;

    void validate() const;
};

struct ResidualRecord {
    int iteration;
    double continuity;
    double momentum;
};

/// Staggered solution: velocities and mass fluxes live on faces (index as in
/// Mesh::face), pressure and density on cells. Velocities are superficial.
struct FlowField {
    std::array<std::vector<double>, 3> velocity;
    std::array<std::vector<double>, 3> mass_flux;  // kg/s along +axis
    std::vector<double> pressure;                  // relative to p_ref
    std::vector<double> density;
    std::vector<ResidualRecord> history;
    bool converged = false;
    int iterations = 0;
};

/// Darcy-Brinkman SIMPLE solver bound to one mesh. The setup (stencils,
/// sparsity patterns) is reused across calls, so continuation and sweeps
/// should keep one instance per mesh.
class FlowSolver {
public:
    FlowSolver(const Mesh& mesh, const MaterialParams& materials, FlowOptions options = {});
    ~FlowSolver();
    FlowSolver(FlowSolver&&) noexcept;
    FlowSolver& operator=(FlowSolver&&) noexcept;

    const Mesh& mesh() const;
    const FlowOptions& options() const;

    /// Quiescent field at P_out.
    FlowField initial_field(const FlowBC& bc, std::span<const double> omega = {}) const;

    /// Up to `max_iterations` SIMPLE iterations on `field`. `mass_source` is
    /// per cell in kg/(m^3 s), `omega` the O3 mass fraction used for density;
    /// both may be empty (zero). Returns true once both residuals are below
    /// tolerance.
    bool iterate(FlowField& field, const FlowBC& bc, std::span<const double> mass_source,
                 std::span<const double> omega, int max_iterations);

    /// Iterates to convergence from `initial` (or rest). Throws
    /// ConvergenceError with the continuity history otherwise. Each call
    /// starts from a fresh pressure preconditioner, so the result does not
    /// depend on earlier calls.
    FlowField solve(const FlowBC& bc, std::span<const double> mass_source = {},
                    std::span<const double> omega = {}, const FlowField* initial = nullptr);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

FlowField solve_flow(const Mesh& mesh, const MaterialParams& materials, const FlowBC& bc,
                     std::span<const double> mass_source = {}, const FlowOptions& options = {},
                     const FlowField* initial = nullptr);

/// S_M = R_O3 on catalyst-layer cells; entries elsewhere are zeroed and
/// counted in `masked`.
std::vector<double> mass_source_from_sink(const Mesh& mesh, std::span<const double> sink,
                                          std::size_t* masked = nullptr);

/// Mass inflow through the inlet and outflow through the outlet, kg/s.
double inlet_mass_flow(const Mesh& mesh, const FlowField& field);
double outlet_mass_flow(const Mesh& mesh, const FlowField& field);
/// |in - out + int S_M dV| / (rho_std Q).
double global_mass_imbalance(const Mesh& mesh, const FlowField& field,
                             std::span<const double> mass_source, double q_std);
/// Per-cell net mass outflow minus source, kg/s.
std::vector<double> continuity_residuals(const Mesh& mesh, const FlowField& field,
                                         std::span<const double> mass_source);

/// Cell-centred velocity by averaging opposite faces.
std::array<double, 3> cell_velocity(const Mesh& mesh, const FlowField& field, std::size_t cell);

/// Area-weighted mean relative pressure over the inlet / outlet cells.
double mean_inlet_pressure(const Mesh& mesh, const FlowField& field);
double mean_outlet_pressure(const Mesh& mesh, const FlowField& field);

/// "iteration,continuity,momentum" CSV.
std::string residual_history_csv(const FlowField& field);

}  // namespace protocell
