#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "protocell/errors.hpp"
#include "protocell/flow.hpp"
#include "protocell/geometry.hpp"
#include "protocell/kinetics.hpp"
#include "protocell/properties.hpp"
#include "protocell/species.hpp"

namespace protocell {

struct ModelConfig {
    Formulation formulation = Formulation::Beta;
    GeometryKind geometry_kind = GeometryKind::Reduced;
    GeometryOverrides geometry;
    int sigma = 2;
    bool wall_graded = false;
    std::size_t cell_budget = kDefaultCellBudget;

    MaterialParams materials;
    KineticsParams kinetics;
    double chi_in = 1200e-6;  // Beta inlet mole fraction
    double c_in = 1200e-6;    // Alpha inlet concentration, mol/m^3
    double p_out = 7240.0;    // Pa, relative
    std::vector<double> q_ccm{200, 250, 300, 350, 400, 450};

    double outer_tolerance = 1e-5;
    int max_outer_iterations = 200;
    int divergence_window = 10;  // consecutive growing changes that count as divergence
    FlowOptions flow;
    SpeciesOptions species;

    void validate() const;
    GeometrySpec geometry_spec() const;
};

/// Changes of the outer-loop monitors between successive cycles.
struct OuterRecord {
    int iteration;
    double dchi;
    double dp;
    double r_total;
    double change;  // max relative change of the three monitors
};

/// Converged state at one operating point.
struct Solution {
    std::shared_ptr<const Mesh> mesh;
    Formulation formulation = Formulation::Beta;
    double q_ccm = 0.0;
    MaterialParams materials;
    KineticsParams kinetics;
    double chi_in = 0.0;
    double c_in = 0.0;
    double p_out = 0.0;
    FlowField flow;
    SpeciesState species;
    std::string fingerprint;
    int outer_iterations = 0;
    int flow_iterations = 0;  // SIMPLE iterations spent in this solve
    bool converged = false;
    std::vector<OuterRecord> history;
};

/// Outer-loop divergence or non-convergence of a segregated solve.
class DivergenceError : public ConvergenceError {
public:
    DivergenceError(const std::string& what, std::vector<OuterRecord> records);
    const std::vector<OuterRecord>& records() const noexcept { return records_; }

private:
    std::vector<OuterRecord> records_;
};

/// Identifies (config, Q, k1, k2, sigma) as 16 hex digits.
std::string solution_fingerprint(const ModelConfig& config, double q_ccm);

/// A configured device: the mesh, one flow solver bound to it and a cache of
/// reaction-free base flows per Q. Not safe for concurrent use; sweeps give
/// each worker its own instance sharing the mesh.
class Model {
public:
    explicit Model(ModelConfig config);
    Model(ModelConfig config, std::shared_ptr<const Mesh> mesh);
    ~Model();
    Model(Model&&) noexcept;
    Model& operator=(Model&&) noexcept;

    const ModelConfig& config() const { return config_; }
    const Mesh& mesh() const { return *mesh_; }
    std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }

    /// Flow at the inlet composition without mass source, cached per Q.
    const FlowField& base_flow(double q_ccm);
    void set_base_flow(double q_ccm, FlowField flow);
    bool has_base_flow(double q_ccm) const { return base_.count(q_ccm) > 0; }

    /// Three-step cycle (coverage, flow, species) until the outer monitors
    /// settle; Alpha runs flow then species once. Without `initial`, starts
    /// from the base flow and a uniform inlet composition. Throws
    /// DivergenceError rather than returning an unconverged solution.
    Solution solve(double q_ccm, const Solution* initial = nullptr);
    Solution solve(double q_ccm, const KineticsParams& kinetics,
                   const Solution* initial = nullptr);

private:
    ModelConfig config_;
    std::shared_ptr<const Mesh> mesh_;
    std::unique_ptr<FlowSolver> flow_solver_;
    std::map<double, FlowField> base_;
};

/// Builds the mesh, honouring config.cell_budget.
std::shared_ptr<const Mesh> build_mesh(const ModelConfig& config);

Solution segregated_solve(const ModelConfig& config, double q_ccm,
                          const Solution* initial = nullptr);

struct ContinuationResult {
    std::vector<Solution> solutions;
    bool complete = true;
    double failed_q_ccm = 0.0;
    std::string failure;
};

/// Solves the Q schedule in order, each point warm-started from the
/// previous one. The first failure stops the schedule.
ContinuationResult continuation_run(const ModelConfig& config);
ContinuationResult continuation_run(Model& model);

}  // namespace protocell
