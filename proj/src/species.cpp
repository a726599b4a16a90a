#include "protocell/species.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "protocell/errors.hpp"

namespace protocell {

std::string_view to_string(Formulation f) { return f == Formulation::Alpha ? "alpha" : "beta"; }

Formulation parse_formulation(std::string_view s) {
    if (s == "alpha") return Formulation::Alpha;
    if (s == "beta") return Formulation::Beta;
    throw ValidationError("formulation", "expected alpha or beta, got '" + std::string(s) + "'");
}

void SpeciesOptions::validate() const {
    if (!(tolerance > 0.0)) throw ValidationError("species.tolerance", "must be positive");
    if (max_iterations < 1) throw ValidationError("species.max_iterations", "must be >= 1");
    if (!(linear_tolerance > 0.0))
        throw ValidationError("species.linear_tolerance", "must be positive");
}

std::array<double, 3> binary_ms_flux(double rho, double omega, const std::array<double, 3>& grad_chi,
                                     const std::array<double, 3>& grad_p, double p_abs,
                                     double d_coupled, double m_o3, double m_air) {
    if (!(p_abs > 0.0)) throw ValidationError("p_abs", "must be positive");
    const double m = mixture_molar_mass(omega, m_o3, m_air);
    const double chi = mole_fraction(omega, m_o3, m_air);
    const double coef = -rho * (m_o3 * m_air / (m * m)) * d_coupled;
    std::array<double, 3> j{};
    for (int d = 0; d < 3; ++d) j[d] = coef * (grad_chi[d] + (chi - omega) * grad_p[d] / p_abs);
    return j;
}

double beta_diffusivity(const MaterialParams& m, Region r) {
    switch (r) {
        case Region::Channel: return m.diffusivity_channel();
        case Region::Mps: return m.diffusivity_mps();
        case Region::Cl: return m.diffusivity_cl();
        case Region::LandSolid: break;
    }
    return 0.0;
}

double alpha_diffusivity(const MaterialParams& m, Region r) {
    switch (r) {
        case Region::Channel: return m.d_free;
        case Region::Mps: return m.f_pm_mps() * m.d_free;
        case Region::Cl: return m.f_pm_cl() * m.d_free;
        case Region::LandSolid: break;
    }
    return 0.0;
}

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

enum class Side : std::uint8_t { Interior, Inlet, Outlet };

struct FaceInfo {
    int d;
    std::size_t face;
    long lo, hi;      // cell indices, -1 outside the domain
    double area;
    double dist_lo;   // centre of lo cell to face
    double dist_hi;
    Side side;
};

std::vector<FaceInfo> collect_faces(const Mesh& m) {
    std::vector<FaceInfo> out;
    for (int d = 0; d < 3; ++d) {
        for (std::size_t f = 0; f < m.face_count(d); ++f) {
            const FaceKind kind = m.face_kind(d, f);
            if (kind != FaceKind::Interior && kind != FaceKind::Inlet && kind != FaceKind::Outlet)
                continue;
            const auto ijk = m.face_ijk(d, f);
            FaceInfo fi{d, f, -1, -1, m.face_area(d, ijk[0], ijk[1], ijk[2]), 0.0, 0.0,
                        Side::Interior};
            if (ijk[d] > 0) {
                auto c = ijk;
                c[d] -= 1;
                const auto cell = m.cell(c[0], c[1], c[2]);
                if (m.active(cell)) {
                    fi.lo = static_cast<long>(cell);
                    fi.dist_lo = 0.5 * m.width(d, c[d]);
                }
            }
            if (ijk[d] < m.n(d)) {
                const auto cell = m.cell(ijk[0], ijk[1], ijk[2]);
                if (m.active(cell)) {
                    fi.hi = static_cast<long>(cell);
                    fi.dist_hi = 0.5 * m.width(d, ijk[d]);
                }
            }
            if (kind == FaceKind::Inlet) fi.side = Side::Inlet;
            if (kind == FaceKind::Outlet) fi.side = Side::Outlet;
            if (fi.lo < 0 && fi.hi < 0) continue;
            out.push_back(fi);
        }
    }
    return out;
}

// Linearised face flux along +d: flux = c_lo * phi_lo + c_hi * phi_hi + c_in,
// split into an advective and a diffusive part. For Beta, phi is the mass
// fraction and the fluxes are O3 mass flows; for Alpha, phi is the molar
// concentration and the fluxes are molar flows. Boundary faces use c_in for
// the prescribed inlet value and never reference the missing cell.
struct FaceFlux {
    double conv_lo = 0.0, conv_hi = 0.0, conv_in = 0.0;
    double diff_lo = 0.0, diff_hi = 0.0, diff_in = 0.0;
};

struct Transport {
    const Mesh& mesh;
    const FlowField& flow;
    const MaterialParams& mat;
    Formulation formulation;
    bool pressure_diffusion;
    double inlet_value;  // omega_in or C_in
    double rho_ref = 1.0;  // Alpha: density that turns mass flux into volume flux
    std::vector<double> diffusivity;
    std::vector<FaceInfo> faces;

    Transport(const Mesh& m, const FlowField& f, const MaterialParams& mp, Formulation form,
              bool pdiff, double inlet)
        : mesh(m), flow(f), mat(mp), formulation(form), pressure_diffusion(pdiff),
          inlet_value(inlet), faces(collect_faces(m)) {
        diffusivity.assign(m.cell_count(), 0.0);
        for (std::size_t c = 0; c < m.cell_count(); ++c)
            diffusivity[c] = form == Formulation::Beta ? beta_diffusivity(mp, m.region(c))
                                                       : alpha_diffusivity(mp, m.region(c));
        if (form == Formulation::Alpha) {
            // Area-weighted inlet density: the volume flux rho u / rho_in is
            // solenoidal, so a uniform C stays uniform and the balance closes.
            double num = 0.0, den = 0.0;
            for (auto f : m.inlet_faces()) {
                const auto ijk = m.face_ijk(1, f);
                const int j = ijk[1] == 0 ? 0 : ijk[1] - 1;
                const auto c = m.cell(ijk[0], j, ijk[2]);
                const double a = m.face_area(1, ijk[0], j, ijk[2]);
                num += a * flow.density[c];
                den += a;
            }
            if (den > 0.0 && num > 0.0) rho_ref = num / den;
        }
    }

    double chi_per_omega(double omega) const {
        return mixture_molar_mass(omega, mat.molar_mass_o3, mat.molar_mass_air) /
               mat.molar_mass_o3;
    }
    double ms_factor(double omega) const {
        const double m = mixture_molar_mass(omega, mat.molar_mass_o3, mat.molar_mass_air);
        return mat.molar_mass_o3 * mat.molar_mass_air / (m * m);
    }

    // Advective flow rate through the face: kg/s (Beta) or m^3/s (Alpha).
    double advective_rate(const FaceInfo& fi) const {
        if (formulation == Formulation::Beta) return flow.mass_flux[fi.d][fi.face];
        return flow.mass_flux[fi.d][fi.face] / rho_ref;
    }

    // `lag` is the state about which the Beta flux is linearised.
    FaceFlux face_flux(const FaceInfo& fi, std::span<const double> lag) const {
        FaceFlux ff;
        const double rate = advective_rate(fi);
        if (fi.side == Side::Outlet) {
            // Zero-gradient: any flow carries the adjacent cell value.
            (fi.lo >= 0 ? ff.conv_lo : ff.conv_hi) = rate;
            return ff;
        }
        if (fi.side == Side::Inlet) {
            // Prescribed value enters through advection and conduction over
            // the half cell next to the face.
            const long c = fi.lo >= 0 ? fi.lo : fi.hi;
            const double sign = fi.lo >= 0 ? -1.0 : 1.0;  // +1 when the domain lies above
            ff.conv_in = rate * inlet_value;
            const double dist = fi.lo >= 0 ? fi.dist_lo : fi.dist_hi;
            const double d_c = diffusivity[c];
            if (formulation == Formulation::Beta) {
                const double rho = flow.density[c];
                const double g = ms_factor(0.5 * (lag[c] + inlet_value));
                const double s_c = chi_per_omega(lag[c]);
                const double s_in = chi_per_omega(inlet_value);
                // J = -rho g D (chi_cell - chi_in) / dist, oriented along +d.
                const double k = rho * g * d_c * fi.area / dist;
                double& c_cell = fi.lo >= 0 ? ff.diff_lo : ff.diff_hi;
                c_cell = -sign * k * s_c;
                ff.diff_in = sign * k * s_in * inlet_value;
            } else {
                const double k = d_c * fi.area / dist;
                double& c_cell = fi.lo >= 0 ? ff.diff_lo : ff.diff_hi;
                c_cell = -sign * k;
                ff.diff_in = sign * k * inlet_value;
            }
            return ff;
        }

        const auto lo = static_cast<std::size_t>(fi.lo), hi = static_cast<std::size_t>(fi.hi);
        (rate >= 0.0 ? ff.conv_lo : ff.conv_hi) = rate;
        const double dist = fi.dist_lo + fi.dist_hi;
        const double d_face = dist / (fi.dist_lo / diffusivity[lo] + fi.dist_hi / diffusivity[hi]);
        if (formulation == Formulation::Alpha) {
            const double k = d_face * fi.area / dist;
            ff.diff_lo = k;
            ff.diff_hi = -k;
            return ff;
        }
        const double w_lo = fi.dist_hi / dist, w_hi = fi.dist_lo / dist;
        const double rho = w_lo * flow.density[lo] + w_hi * flow.density[hi];
        const double omega_f = w_lo * lag[lo] + w_hi * lag[hi];
        const double k = rho * ms_factor(omega_f) * d_face * fi.area;
        ff.diff_lo = k * chi_per_omega(lag[lo]) / dist;
        ff.diff_hi = -k * chi_per_omega(lag[hi]) / dist;
        if (pressure_diffusion) {
            const double p_lo = flow.pressure[lo], p_hi = flow.pressure[hi];
            const double p_abs = mat.p_ref + w_lo * p_lo + w_hi * p_hi;
            // -rho g D (chi - omega) dP/dn / P_A, with (chi - omega) = (s - 1) omega
            // carried by the upwind side of the drift.
            const double s_f = chi_per_omega(omega_f);
            const double drift = -k * (s_f - 1.0) * (p_hi - p_lo) / (dist * p_abs);
            (drift >= 0.0 ? ff.diff_lo : ff.diff_hi) += drift;
        }
        return ff;
    }
};

double sum_flux(const FaceFlux& ff, const FaceInfo& fi, std::span<const double> phi, bool diffusive) {
    double v = diffusive ? ff.diff_in : ff.conv_in;
    const double c_lo = diffusive ? ff.diff_lo : ff.conv_lo;
    const double c_hi = diffusive ? ff.diff_hi : ff.conv_hi;
    if (fi.lo >= 0) v += c_lo * phi[fi.lo];
    if (fi.hi >= 0) v += c_hi * phi[fi.hi];
    return v;
}

struct Linearised {
    // Per-cell reaction: sink_out = diag * phi + constant (positive = removal).
    std::vector<double> diag, constant;
};

class Assembler {
public:
    explicit Assembler(const Transport& t) : t_(t) {
        const Mesh& m = t.mesh;
        index_.assign(m.cell_count(), -1);
        for (std::size_t c = 0; c < m.cell_count(); ++c)
            if (m.active(c)) {
                index_[c] = static_cast<int>(cells_.size());
                cells_.push_back(c);
            }
    }

    std::size_t size() const { return cells_.size(); }
    const std::vector<std::size_t>& cells() const { return cells_; }

    // Solves for phi given the lag state and the reaction linearisation.
    // `phi` holds the current iterate (full-mesh indexing) and is updated.
    void solve(std::vector<double>& phi, std::span<const double> lag, const Linearised& react,
               const SpeciesOptions& opt) {
        const int n = static_cast<int>(cells_.size());
        std::vector<Eigen::Triplet<double, int>> trip;
        trip.reserve(static_cast<std::size_t>(n) * 7);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) {
            const auto c = cells_[i];
            trip.emplace_back(i, i, react.diag[c]);
            b[i] -= react.constant[c];
        }
        for (const auto& fi : t_.faces) {
            const FaceFlux ff = t_.face_flux(fi, lag);
            const double c_lo = ff.conv_lo + ff.diff_lo, c_hi = ff.conv_hi + ff.diff_hi;
            const double c_in = ff.conv_in + ff.diff_in;
            // Outflow of the lo cell is +flux, of the hi cell -flux.
            if (fi.lo >= 0) {
                const int r = index_[fi.lo];
                trip.emplace_back(r, r, c_lo);
                if (fi.hi >= 0) trip.emplace_back(r, index_[fi.hi], c_hi);
                b[r] -= c_in;
            }
            if (fi.hi >= 0) {
                const int r = index_[fi.hi];
                trip.emplace_back(r, r, -c_hi);
                if (fi.lo >= 0) trip.emplace_back(r, index_[fi.lo], -c_lo);
                b[r] += c_in;
            }
        }
        SpMat a(n, n);
        a.setFromTriplets(trip.begin(), trip.end());
        a.makeCompressed();

        Eigen::VectorXd x0(n);
        for (int i = 0; i < n; ++i) x0[i] = phi[cells_[i]];
        const Eigen::VectorXd r0 = b - a * x0;
        const double rnorm = r0.norm();
        if (rnorm == 0.0) return;

        // Row scaling keeps the ILU threshold meaningful across the very
        // different CL reaction and channel advection magnitudes.
        Eigen::VectorXd scale(n);
        for (int i = 0; i < n; ++i) scale[i] = 1.0 / std::abs(a.coeff(i, i));
        const SpMat as = scale.asDiagonal() * a;
        Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> solver;
        solver.preconditioner().setDroptol(1e-4);
        solver.preconditioner().setFillfactor(4);
        solver.setTolerance(opt.linear_tolerance);
        solver.setMaxIterations(opt.linear_max_iterations);
        solver.compute(as);
        const Eigen::VectorXd rs = scale.asDiagonal() * r0;
        const Eigen::VectorXd dx = solver.solve(rs);
        if (solver.info() != Eigen::Success && solver.error() > 1e-6)
            throw ConvergenceError("species: linear solve failed (relative residual " +
                                       std::to_string(solver.error()) + ")",
                                   {solver.error()});
        for (int i = 0; i < n; ++i) phi[cells_[i]] = x0[i] + dx[i];
    }

private:
    const Transport& t_;
    std::vector<int> index_;
    std::vector<std::size_t> cells_;
};

void check_inputs(const Mesh& mesh, const FlowField& flow) {
    if (flow.pressure.size() != mesh.cell_count() || flow.density.size() != mesh.cell_count())
        throw ValidationError("flow", "field does not match the mesh");
    for (int d = 0; d < 3; ++d)
        if (flow.mass_flux[d].size() != mesh.face_count(d))
            throw ValidationError("flow", "face field does not match the mesh");
}

std::size_t clip_unit(std::vector<double>& phi, const std::vector<std::size_t>& cells, double hi) {
    std::size_t n = 0;
    for (auto c : cells) {
        if (phi[c] < 0.0) {
            phi[c] = 0.0;
            ++n;
        } else if (phi[c] > hi) {
            phi[c] = hi;
            ++n;
        }
    }
    return n;
}

}  // namespace

SpeciesState solve_species_beta(const Mesh& mesh, const FlowField& flow,
                                const MaterialParams& materials, const KineticsParams& kinetics,
                                double chi_in, const SpeciesOptions& options,
                                const SpeciesState* initial) {
    options.validate();
    kinetics.validate();
    materials.validate();
    check_inputs(mesh, flow);
    if (!(chi_in >= 0.0 && chi_in <= 1.0)) throw ValidationError("chi_in", "must lie in [0, 1]");
    const double m_o3 = materials.molar_mass_o3, m_air = materials.molar_mass_air;
    const double omega_in = mass_fraction(chi_in, m_o3, m_air);

    Transport t(mesh, flow, materials, Formulation::Beta, options.pressure_diffusion, omega_in);
    Assembler asmb(t);
    const std::size_t n = mesh.cell_count();

    std::vector<double> omega(n, 0.0);
    if (initial && initial->omega.size() == n && initial->formulation == Formulation::Beta)
        omega = initial->omega;
    else
        for (auto c : asmb.cells()) omega[c] = omega_in;

    const double site = kinetics.site_density();
    const double k1 = kinetics.k1, k2 = kinetics.k2;
    // Mass removal M A_v Gamma* k1 k2 chi / (k1 chi + k2) and its slope.
    auto removal = [&](double chi, double& slope) {
        const double den = k1 * chi + k2;
        if (den <= 0.0) {
            slope = 0.0;
            return 0.0;
        }
        slope = m_o3 * site * k1 * k2 * k2 / (den * den);
        return m_o3 * site * k1 * k2 * chi / den;
    };

    SpeciesState st;
    st.formulation = Formulation::Beta;
    st.inlet_value = omega_in;
    Linearised react{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    const double scale = omega_in > 0.0 ? omega_in : 1.0;
    bool converged = false;
    for (int it = 0; it < options.max_iterations; ++it) {
        const std::vector<double> lag = omega;
        for (auto c : asmb.cells()) {
            if (mesh.region(c) != Region::Cl) continue;
            const double s = t.chi_per_omega(lag[c]);
            const double chi0 = s * lag[c];
            double slope = 0.0;
            const double f0 = removal(chi0, slope);
            const double v = mesh.volume(c);
            react.diag[c] = slope * s * v;
            react.constant[c] = (f0 - slope * chi0) * v;
        }
        asmb.solve(omega, lag, react, options);
        st.clipped = clip_unit(omega, asmb.cells(), 1.0);
        st.iterations = it + 1;
        double change = 0.0;
        for (auto c : asmb.cells()) change = std::max(change, std::abs(omega[c] - lag[c]));
        if (change <= options.tolerance * scale) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw ConvergenceError("species: no convergence within " +
                                   std::to_string(options.max_iterations) + " iterations",
                               {});

    SpeciesState out = evaluate_beta_state(mesh, flow, materials, kinetics, std::move(omega),
                                           omega_in);
    out.clipped = st.clipped;
    out.iterations = st.iterations;
    return out;
}

SpeciesState evaluate_beta_state(const Mesh& mesh, const FlowField& flow,
                                 const MaterialParams& materials, const KineticsParams& kinetics,
                                 std::vector<double> omega, double omega_in) {
    const std::size_t n = mesh.cell_count();
    if (omega.size() != n) throw ValidationError("omega", "size does not match the mesh");
    if (flow.pressure.size() != n) throw ValidationError("flow", "field does not match the mesh");
    const double m_o3 = materials.molar_mass_o3, m_air = materials.molar_mass_air;
    const double site = kinetics.site_density();
    SpeciesState st;
    st.formulation = Formulation::Beta;
    st.inlet_value = omega_in;
    st.omega = std::move(omega);
    st.chi.assign(n, 0.0);
    st.concentration.assign(n, 0.0);
    st.partial_pressure.assign(n, 0.0);
    st.theta.assign(n, 0.0);
    st.r_dec.assign(n, 0.0);
    st.sink.assign(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        if (!mesh.active(c)) continue;
        const double chi = mole_fraction(st.omega[c], m_o3, m_air);
        const double p_abs = materials.p_ref + flow.pressure[c];
        st.chi[c] = chi;
        st.partial_pressure[c] = chi * p_abs;
        st.concentration[c] = chi * p_abs / (constants::gas_constant * materials.temperature);
        if (mesh.region(c) != Region::Cl) continue;
        const Coverage cov = coverage_steady_state(kinetics.k1, kinetics.k2, chi);
        st.degenerate_kinetics = st.degenerate_kinetics || cov.degenerate;
        st.theta[c] = cov.theta;
        st.r_dec[c] = decomposition_rate_density(kinetics, cov.theta);
        st.sink[c] = -m_o3 * site * kinetics.k1 * chi * cov.vacancy;
    }
    return st;
}

SpeciesState solve_species_alpha(const Mesh& mesh, const FlowField& flow,
                                 const MaterialParams& materials, double k_app, double c_in,
                                 const SpeciesOptions& options) {
    options.validate();
    materials.validate();
    check_inputs(mesh, flow);
    if (!(k_app >= 0.0)) throw ValidationError("k_app", "must be non-negative");
    if (!(c_in >= 0.0)) throw ValidationError("c_in", "must be non-negative");

    Transport t(mesh, flow, materials, Formulation::Alpha, false, c_in);
    Assembler asmb(t);
    const std::size_t n = mesh.cell_count();
    std::vector<double> c(n, 0.0);
    for (auto cell : asmb.cells()) c[cell] = c_in;
    Linearised react{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (auto cell : asmb.cells())
        if (mesh.region(cell) == Region::Cl) react.diag[cell] = k_app * mesh.volume(cell);

    SpeciesState st;
    st.formulation = Formulation::Alpha;
    st.inlet_value = c_in;
    const double scale = c_in > 0.0 ? c_in : 1.0;
    bool converged = false;
    for (int it = 0; it < options.max_iterations; ++it) {
        const std::vector<double> prev = c;
        asmb.solve(c, prev, react, options);
        st.clipped = clip_unit(c, asmb.cells(), std::numeric_limits<double>::infinity());
        st.iterations = it + 1;
        double change = 0.0;
        for (auto cell : asmb.cells()) change = std::max(change, std::abs(c[cell] - prev[cell]));
        if (change <= options.tolerance * scale) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw ConvergenceError("species: no convergence within " +
                                   std::to_string(options.max_iterations) + " iterations",
                               {});

    st.concentration = std::move(c);
    st.omega.assign(n, 0.0);
    st.chi.assign(n, 0.0);
    st.partial_pressure.assign(n, 0.0);
    st.theta.assign(n, 0.0);
    st.r_dec.assign(n, 0.0);
    st.sink.assign(n, 0.0);
    constexpr double c_star = 1.0;  // mol/m^3
    for (auto cell : asmb.cells()) {
        const double cc = st.concentration[cell];
        st.chi[cell] = cc / c_star;
        st.partial_pressure[cell] = cc / c_star * (materials.p_ref + flow.pressure[cell]);
        if (mesh.region(cell) != Region::Cl) continue;
        st.sink[cell] = alpha_sink(cc, k_app);
        st.r_dec[cell] = -st.sink[cell];
    }
    return st;
}

SpeciesFaceFlux species_face_fluxes(const Mesh& mesh, const FlowField& flow,
                                    const MaterialParams& materials, const SpeciesState& state,
                                    const SpeciesOptions& options) {
    check_inputs(mesh, flow);
    const bool beta = state.formulation == Formulation::Beta;
    Transport t(mesh, flow, materials, state.formulation, beta && options.pressure_diffusion,
                state.inlet_value);
    const std::vector<double>& phi = beta ? state.omega : state.concentration;
    if (phi.size() != mesh.cell_count()) throw ValidationError("state", "does not match the mesh");
    const double to_mol = beta ? 1.0 / materials.molar_mass_o3 : 1.0;
    SpeciesFaceFlux out;
    for (int d = 0; d < 3; ++d) {
        out.convective[d].assign(mesh.face_count(d), 0.0);
        out.diffusive[d].assign(mesh.face_count(d), 0.0);
    }
    for (const auto& fi : t.faces) {
        const FaceFlux ff = t.face_flux(fi, phi);
        out.convective[fi.d][fi.face] = sum_flux(ff, fi, phi, false) * to_mol;
        out.diffusive[fi.d][fi.face] = sum_flux(ff, fi, phi, true) * to_mol;
    }
    return out;
}

double SpeciesBalance::relative_error() const {
    const double ref = std::abs(inflow) > 0.0 ? std::abs(inflow) : 1.0;
    return std::abs(inflow - outflow - consumption) / ref;
}

SpeciesBalance species_balance(const Mesh& mesh, const FlowField& flow,
                               const MaterialParams& materials, const SpeciesState& state,
                               const SpeciesOptions& options) {
    const auto flux = species_face_fluxes(mesh, flow, materials, state, options);
    SpeciesBalance b;
    auto inward = [&](std::size_t f) {
        // +y flux enters when the boundary face sits at j = 0.
        return mesh.face_ijk(1, f)[1] == 0 ? 1.0 : -1.0;
    };
    for (auto f : mesh.inlet_faces())
        b.inflow += inward(f) * (flux.convective[1][f] + flux.diffusive[1][f]);
    for (auto f : mesh.outlet_faces())
        b.outflow -= inward(f) * (flux.convective[1][f] + flux.diffusive[1][f]);
    for (std::size_t c = 0; c < mesh.cell_count(); ++c)
        if (mesh.region(c) == Region::Cl) b.consumption += state.r_dec[c] * mesh.volume(c);
    return b;
}

}  // namespace protocell
