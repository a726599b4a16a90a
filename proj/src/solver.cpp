#include "protocell/solver.hpp"

#include <algorithm>
#include <cmath>

#include "protocell/config.hpp"
#include "protocell/constants.hpp"
#include "protocell/errors.hpp"
#include "protocell/io.hpp"
#include "protocell/response.hpp"

namespace protocell {

void ModelConfig::validate() const {
    if (sigma < 1) throw ValidationError("mesh.sigma", "must be >= 1");
    if (q_ccm.empty()) throw ValidationError("run.Q_ccm", "schedule is empty");
    for (std::size_t i = 0; i < q_ccm.size(); ++i) {
        if (!(q_ccm[i] >= 0.0) || !std::isfinite(q_ccm[i]))
            throw ValidationError("run.Q_ccm", "flow rates must be finite and non-negative");
        if (i > 0 && !(q_ccm[i] > q_ccm[i - 1]))
            throw ValidationError("run.Q_ccm", "schedule must be strictly increasing");
    }
    if (!(outer_tolerance > 0.0)) throw ValidationError("solver.tolerance", "must be positive");
    if (max_outer_iterations < 1)
        throw ValidationError("solver.max_outer_iterations", "must be >= 1");
    if (divergence_window < 2) throw ValidationError("solver.divergence_window", "must be >= 2");
    if (!(chi_in >= 0.0 && chi_in <= 1.0)) throw ValidationError("inlet.chi_o3", "must lie in [0, 1]");
    if (!(c_in >= 0.0)) throw ValidationError("inlet.c_o3", "must be non-negative");
    if (!std::isfinite(p_out)) throw ValidationError("outlet.p_out", "must be finite");
    materials.validate();
    kinetics.validate();
    flow.validate();
    species.validate();
    const GeometrySpec g = geometry_spec();
    if (std::abs(kinetics.t_cl - g.cl_thickness) > 1e-12 * g.cl_thickness)
        throw ValidationError("kinetics.t_cl", "must equal geometry.cl_thickness");
    if (kinetics.epsilon_cl != materials.epsilon_cl)
        throw ValidationError("kinetics.epsilon_cl", "must equal materials.epsilon_cl");
    if (kinetics.r_p != materials.r_p)
        throw ValidationError("kinetics.r_p", "must equal materials.r_p");
}

GeometrySpec ModelConfig::geometry_spec() const { return build_geometry(geometry_kind, geometry); }

DivergenceError::DivergenceError(const std::string& what, std::vector<OuterRecord> records)
    : ConvergenceError(what,
                       [&] {
                           std::vector<double> h;
                           for (const auto& r : records) h.push_back(r.change);
                           return h;
                       }()),
      records_(std::move(records)) {}

std::string solution_fingerprint(const ModelConfig& config, double q_ccm) {
    ModelConfig c = config;
    c.q_ccm = {q_ccm};
    c.cell_budget = kDefaultCellBudget;  // a resource limit, not a model input
    return fnv1a_hex(config_to_text(c));
}

std::shared_ptr<const Mesh> build_mesh(const ModelConfig& config) {
    return std::make_shared<const Mesh>(
        generate_mesh(config.geometry_spec(), config.sigma, config.wall_graded, config.cell_budget));
}

Model::Model(ModelConfig config) : Model(config, build_mesh(config)) {}

Model::Model(ModelConfig config, std::shared_ptr<const Mesh> mesh)
    : config_(std::move(config)), mesh_(std::move(mesh)) {
    config_.validate();
    if (!mesh_) throw ValidationError("mesh", "is null");
    flow_solver_ = std::make_unique<FlowSolver>(*mesh_, config_.materials, config_.flow);
}

Model::~Model() = default;
Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;

namespace {

FlowBC bc_for(const ModelConfig& c, double q_ccm) {
    return {q_ccm * constants::ccm_to_m3s, c.p_out};
}

std::vector<double> inlet_composition(const Mesh& mesh, const ModelConfig& c) {
    if (c.formulation == Formulation::Alpha) return {};
    const double w = mass_fraction(c.chi_in, c.materials.molar_mass_o3, c.materials.molar_mass_air);
    std::vector<double> omega(mesh.cell_count(), 0.0);
    for (std::size_t i = 0; i < omega.size(); ++i)
        if (mesh.active(i)) omega[i] = w;
    return omega;
}

// `floor` keeps round-off sized monitors (no consumption) from counting as change.
double relative_change(double now, double before, double floor) {
    const double scale = std::max({std::abs(now), std::abs(before), floor});
    return scale > 0.0 ? std::abs(now - before) / scale : 0.0;
}

}  // namespace

const FlowField& Model::base_flow(double q_ccm) {
    auto it = base_.find(q_ccm);
    if (it != base_.end()) return it->second;
    const auto omega = inlet_composition(*mesh_, config_);
    FlowField f = flow_solver_->solve(bc_for(config_, q_ccm), {}, omega);
    return base_.emplace(q_ccm, std::move(f)).first->second;
}

void Model::set_base_flow(double q_ccm, FlowField flow) { base_[q_ccm] = std::move(flow); }

Solution Model::solve(double q_ccm, const Solution* initial) {
    return solve(q_ccm, config_.kinetics, initial);
}

Solution Model::solve(double q_ccm, const KineticsParams& kinetics, const Solution* initial) {
    ModelConfig cfg = config_;
    cfg.kinetics = kinetics;
    cfg.validate();
    const Mesh& mesh = *mesh_;
    const FlowBC bc = bc_for(cfg, q_ccm);
    if (initial && (initial->mesh.get() != mesh_.get() || initial->formulation != cfg.formulation))
        initial = nullptr;

    Solution s;
    s.mesh = mesh_;
    s.formulation = cfg.formulation;
    s.q_ccm = q_ccm;
    s.materials = cfg.materials;
    s.kinetics = kinetics;
    s.chi_in = cfg.chi_in;
    s.c_in = cfg.c_in;
    s.p_out = cfg.p_out;
    s.fingerprint = solution_fingerprint(cfg, q_ccm);

    if (cfg.formulation == Formulation::Alpha) {
        if (!has_base_flow(q_ccm) && initial) {
            FlowField f = flow_solver_->solve(bc, {}, {}, &initial->flow);
            s.flow_iterations = f.iterations - initial->flow.iterations;
            set_base_flow(q_ccm, std::move(f));
        } else if (!has_base_flow(q_ccm)) {
            s.flow_iterations = base_flow(q_ccm).iterations;
        }
        s.flow = base_flow(q_ccm);
        s.species = solve_species_alpha(mesh, s.flow, cfg.materials, kinetics.k_app, cfg.c_in,
                                        cfg.species);
        s.outer_iterations = 1;
        s.converged = true;
        s.history.push_back({1, delta_chi(mesh, s.species, cfg.c_in),
                             mean_inlet_pressure(mesh, s.flow) - mean_outlet_pressure(mesh, s.flow),
                             total_decomposition(mesh, s.species), 0.0});
        return s;
    }

    const double omega_in =
        mass_fraction(cfg.chi_in, cfg.materials.molar_mass_o3, cfg.materials.molar_mass_air);
    FlowField flow = initial ? initial->flow : base_flow(q_ccm);
    SpeciesState sp = initial ? initial->species
                              : evaluate_beta_state(mesh, flow, cfg.materials, kinetics,
                                                    inlet_composition(mesh, cfg), omega_in);
    const double supply = bc.q_std * standard_density(cfg.materials.molar_mass_air) /
                          cfg.materials.molar_mass_air * cfg.chi_in;
    const double dchi_floor = 1e-9 * cfg.chi_in, r_floor = 1e-9 * supply;
    double last_change = 0.0;
    int growth = 0;
    for (int it = 1; it <= cfg.max_outer_iterations; ++it) {
        // (i) coverage and sink from the current composition
        sp = evaluate_beta_state(mesh, flow, cfg.materials, kinetics, std::move(sp.omega), omega_in);
        const auto source = mass_source_from_sink(mesh, sp.sink);
        // (ii) flow with the mass source
        const int before = flow.iterations;
        flow = flow_solver_->solve(bc, source, sp.omega, &flow);
        s.flow_iterations += flow.iterations - before;
        // (iii) species on the updated flow
        sp = solve_species_beta(mesh, flow, cfg.materials, kinetics, cfg.chi_in, cfg.species, &sp);

        OuterRecord rec{it, delta_chi(mesh, sp, cfg.chi_in),
                        mean_inlet_pressure(mesh, flow) - mean_outlet_pressure(mesh, flow),
                        total_decomposition(mesh, sp), 0.0};
        if (!std::isfinite(rec.dchi) || !std::isfinite(rec.dp) || !std::isfinite(rec.r_total))
            throw DivergenceError("outer loop: non-finite monitors", s.history);
        if (!s.history.empty()) {
            const auto& p = s.history.back();
            rec.change = std::max({relative_change(rec.dchi, p.dchi, dchi_floor),
                                   relative_change(rec.dp, p.dp, 1e-12),
                                   relative_change(rec.r_total, p.r_total, r_floor)});
        } else {
            rec.change = 1.0;
        }
        s.history.push_back(rec);
        s.outer_iterations = it;
        if (it > 1 && rec.change <= cfg.outer_tolerance) {
            s.converged = true;
            break;
        }
        growth = (it > 2 && rec.change > last_change) ? growth + 1 : 0;
        last_change = rec.change;
        if (growth >= cfg.divergence_window)
            throw DivergenceError("outer loop diverged: monitor changes grew for " +
                                      std::to_string(growth) + " consecutive iterations",
                                  s.history);
    }
    if (!s.converged)
        throw DivergenceError("outer loop: no convergence within " +
                                  std::to_string(cfg.max_outer_iterations) + " iterations",
                              s.history);
    s.flow = std::move(flow);
    s.species = std::move(sp);
    return s;
}

Solution segregated_solve(const ModelConfig& config, double q_ccm, const Solution* initial) {
    Model model(config, initial ? initial->mesh : build_mesh(config));
    return model.solve(q_ccm, initial);
}

ContinuationResult continuation_run(const ModelConfig& config) {
    Model model(config);
    return continuation_run(model);
}

ContinuationResult continuation_run(Model& model) {
    ContinuationResult r;
    for (double q : model.config().q_ccm) {
        try {
            const Solution* prev = r.solutions.empty() ? nullptr : &r.solutions.back();
            r.solutions.push_back(model.solve(q, prev));
        } catch (const Error& e) {
            r.complete = false;
            r.failed_q_ccm = q;
            r.failure = e.what();
            break;
        }
    }
    return r;
}

}  // namespace protocell
