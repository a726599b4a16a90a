#include "protocell/response.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "protocell/constants.hpp"
#include "protocell/errors.hpp"
#include "protocell/io.hpp"

namespace protocell {

namespace {

struct BoundaryCell {
    std::size_t cell;
    double area;
};

std::vector<BoundaryCell> boundary_cells(const Mesh& mesh, const std::vector<std::size_t>& faces) {
    std::vector<BoundaryCell> out;
    out.reserve(faces.size());
    for (auto f : faces) {
        const auto ijk = mesh.face_ijk(1, f);
        const int j = ijk[1] == mesh.ny() ? mesh.ny() - 1 : ijk[1];
        out.push_back({mesh.cell(ijk[0], j, ijk[2]), mesh.face_area(1, ijk[0], j, ijk[2])});
    }
    return out;
}

void check_state(const Mesh& mesh, const SpeciesState& s) {
    if (s.chi.size() != mesh.cell_count() || s.r_dec.size() != mesh.cell_count())
        throw ValidationError("species", "state does not match the mesh");
}

double inlet_concentration(const Solution& s) {
    if (s.formulation == Formulation::Alpha) return s.c_in;
    const double p_in = s.materials.p_ref + mean_inlet_pressure(*s.mesh, s.flow);
    return s.chi_in * p_in / (constants::gas_constant * s.materials.temperature);
}

// Q at inlet conditions, so that Q C_in is the molar supply of the inlet.
double inlet_volume_rate(const Solution& s) {
    const Mesh& mesh = *s.mesh;
    double num = 0.0, den = 0.0;
    for (const auto& b : boundary_cells(mesh, mesh.inlet_faces())) {
        num += b.area * s.flow.density[b.cell];
        den += b.area;
    }
    return den > 0.0 && num > 0.0 ? inlet_mass_flow(mesh, s.flow) / (num / den) : 0.0;
}

// Alpha stores chi = C / C* with C* = 1 mol/m^3.
double inlet_chi(const Solution& s) {
    return s.formulation == Formulation::Alpha ? s.c_in : s.chi_in;
}

}  // namespace

double delta_chi(const Mesh& mesh, const SpeciesState& species, double chi_in) {
    check_state(mesh, species);
    double num = 0.0, den = 0.0;
    for (const auto& b : boundary_cells(mesh, mesh.outlet_faces())) {
        num += b.area * species.chi[b.cell];
        den += b.area;
    }
    if (!(den > 0.0)) throw ValidationError("mesh", "has no outlet faces");
    return chi_in - num / den;
}

double delta_chi_bulk(const Solution& s, const SpeciesOptions& options) {
    const Mesh& mesh = *s.mesh;
    const auto flux = species_face_fluxes(mesh, s.flow, s.materials, s.species, options);
    const bool beta = s.formulation == Formulation::Beta;
    double rho_in = 0.0, a_in = 0.0;
    for (const auto& b : boundary_cells(mesh, mesh.inlet_faces())) {
        rho_in += b.area * s.flow.density[b.cell];
        a_in += b.area;
    }
    rho_in = a_in > 0.0 ? rho_in / a_in : 1.0;
    double species_out = 0.0, carrier_out = 0.0;
    for (auto f : mesh.outlet_faces()) {
        const auto ijk = mesh.face_ijk(1, f);
        const double sign = ijk[1] == 0 ? -1.0 : 1.0;
        const int j = ijk[1] == mesh.ny() ? mesh.ny() - 1 : ijk[1];
        const std::size_t c = mesh.cell(ijk[0], j, ijk[2]);
        species_out += sign * (flux.convective[1][f] + flux.diffusive[1][f]);
        const double m = sign * s.flow.mass_flux[1][f];
        carrier_out += beta ? m / mixture_molar_mass(s.species.omega[c], s.materials.molar_mass_o3,
                                                     s.materials.molar_mass_air)
                            : m / rho_in;
    }
    if (!(carrier_out > 0.0)) return 0.0;
    return inlet_chi(s) - species_out / carrier_out;
}

double total_decomposition(const Mesh& mesh, const SpeciesState& species) {
    check_state(mesh, species);
    double r = 0.0;
    for (std::size_t c = 0; c < mesh.cell_count(); ++c)
        if (mesh.region(c) == Region::Cl) r += species.r_dec[c] * mesh.volume(c);
    return r;
}

double top_surface_decomposition(const Mesh& mesh, const SpeciesState& species) {
    check_state(mesh, species);
    const int k = mesh.nz() - 1;
    double r = 0.0;
    for (int j = 0; j < mesh.ny(); ++j)
        for (int i = 0; i < mesh.nx(); ++i)
            r += species.r_dec[mesh.cell(i, j, k)] * mesh.face_area(2, i, j, mesh.nz());
    return r;
}

ResponseRecord failed_record(Formulation f, double q_ccm, const KineticsParams& k, int sigma,
                             const std::string& error) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    ResponseRecord r;
    r.formulation = f;
    r.q_ccm = q_ccm;
    r.k1 = k.k1;
    r.k2 = k.k2;
    r.k_app = k.k_app;
    r.sigma = sigma;
    r.dchi = r.dchi_bulk = r.rprime_raw = r.rprime_norm = r.r_total = r.lambda_prime = nan;
    r.c_in = r.dp = r.p_in = r.dp_over_pin = nan;
    r.converged = false;
    r.error = error.empty() ? "failed" : error;
    return r;
}

ResponseRecord scalar_responses(const Solution& s) {
    const Mesh& mesh = *s.mesh;
    ResponseRecord r;
    r.formulation = s.formulation;
    r.q_ccm = s.q_ccm;
    r.k1 = s.kinetics.k1;
    r.k2 = s.kinetics.k2;
    r.k_app = s.kinetics.k_app;
    r.sigma = mesh.sigma();
    r.converged = s.converged;
    r.outer_iterations = s.outer_iterations;
    r.fingerprint = s.fingerprint;

    const double chi_in = inlet_chi(s);
    r.c_in = inlet_concentration(s);
    r.dchi = delta_chi(mesh, s.species, chi_in);
    r.dchi_bulk = delta_chi_bulk(s);
    r.rprime_raw = top_surface_decomposition(mesh, s.species);
    r.rprime_norm = r.c_in > 0.0 ? r.rprime_raw / r.c_in : 0.0;
    if (r.rprime_norm != 0.0) r.kprime = r.dchi / r.rprime_norm;
    r.r_total = total_decomposition(mesh, s.species);
    const double n_in = inlet_volume_rate(s) * r.c_in;
    if (r.r_total > 0.0) r.lambda = n_in / r.r_total;
    r.lambda_prime = chi_in > 0.0 ? r.dchi / chi_in : 0.0;
    r.p_in = mean_inlet_pressure(mesh, s.flow);
    r.dp = r.p_in - mean_outlet_pressure(mesh, s.flow);
    r.dp_over_pin = r.p_in != 0.0 ? r.dp / r.p_in : 0.0;
    return r;
}

std::string response_csv(const ResponseTable& table) {
    CsvTable csv;
    csv.header = {"formulation", "Q_ccm",       "k1",    "k2",     "dchi",
                  "Rprime_raw",  "Rprime_norm", "Kprime", "R_total", "lambda",
                  "lambda_prime", "dP_Pa",      "Pin_Pa", "dP_over_Pin", "converged"};
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    for (const auto& r : table) {
        csv.rows.push_back({std::string(to_string(r.formulation)), format_number(r.q_ccm),
                            format_number(r.formulation == Formulation::Alpha ? r.k_app : r.k1),
                            r.formulation == Formulation::Alpha ? std::string() : format_number(r.k2),
                            format_number(r.dchi), format_number(r.rprime_raw),
                            format_number(r.rprime_norm), opt(r.kprime), format_number(r.r_total),
                            opt(r.lambda), format_number(r.lambda_prime), format_number(r.dp),
                            format_number(r.p_in), format_number(r.dp_over_pin),
                            r.converged ? "1" : "0"});
    }
    return csv.to_string();
}

const LineProfile& ProfileData::line(const std::string& name) const {
    for (const auto& l : lines)
        if (l.name == name) return l;
    throw Error("no profile named '" + name + "'");
}

std::vector<double> r_bar_field(const Mesh& mesh, const SpeciesState& species) {
    check_state(mesh, species);
    const double total = total_decomposition(mesh, species);
    const double v_cl = mesh.region_volume(Region::Cl);
    std::vector<double> out(mesh.cell_count(), 0.0);
    if (!(total > 0.0)) return out;
    for (std::size_t c = 0; c < mesh.cell_count(); ++c)
        if (mesh.region(c) == Region::Cl) out[c] = species.r_dec[c] * v_cl / total;
    return out;
}

namespace {

double speed(const Mesh& mesh, const FlowField& flow, std::size_t c) {
    const auto u = cell_velocity(mesh, flow, c);
    return std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
}

}  // namespace

ProfileData profiles(const Solution& s) {
    const Mesh& mesh = *s.mesh;
    const auto& sec = mesh.sections();
    if (sec.size() < 3) throw ValidationError("geometry", "profiles need at least three sections");
    // Turn bands at the far y end span the last channel-width of the
    // sections; the line runs along their centre.
    const int cw = sec[0].i1 - sec[0].i0;
    const int j_turn = sec[0].j1 - cw / 2;
    const int k_top = mesh.nz() - 1;
    if (j_turn < 0 || j_turn >= mesh.ny()) throw ValidationError("geometry", "turn line outside mesh");
    const auto rbar = r_bar_field(mesh, s.species);

    ProfileData out;
    LineProfile p{"P_O3_x", "x", {}, {}}, rb{"R_bar_x", "x", {}, {}};
    for (int i = 0; i < mesh.nx(); ++i) {
        const std::size_t c = mesh.cell(i, j_turn, k_top);
        p.position.push_back(mesh.centers(0)[i]);
        p.value.push_back(s.species.partial_pressure[c]);
        rb.position.push_back(mesh.centers(0)[i]);
        rb.value.push_back(rbar[c]);
    }

    const auto& third = sec[2];
    const int j_mid = (third.j0 + third.j1) / 2;
    const int k_mid = mesh.k_mps() / 2;
    const int i_mid = (third.i0 + third.i1) / 2;
    LineProfile ux{"U_x", "x", {}, {}}, uz{"U_z", "z", {}, {}};
    for (int i = third.i0; i < third.i1; ++i) {
        ux.position.push_back(mesh.centers(0)[i]);
        ux.value.push_back(speed(mesh, s.flow, mesh.cell(i, j_mid, k_mid)));
    }
    for (int k = 0; k < mesh.nz(); ++k) {
        uz.position.push_back(mesh.centers(2)[k]);
        uz.value.push_back(speed(mesh, s.flow, mesh.cell(i_mid, j_mid, k)));
    }
    out.lines = {std::move(p), std::move(rb), std::move(ux), std::move(uz)};
    return out;
}

SurfaceData surfaces(const Solution& s) {
    const Mesh& mesh = *s.mesh;
    const auto rbar = r_bar_field(mesh, s.species);
    const int k = mesh.nz() - 1;
    SurfaceData out;
    for (int j = 0; j < mesh.ny(); ++j)
        for (int i = 0; i < mesh.nx(); ++i) {
            const std::size_t c = mesh.cell(i, j, k);
            out.x.push_back(mesh.centers(0)[i]);
            out.y.push_back(mesh.centers(1)[j]);
            out.area.push_back(mesh.face_area(2, i, j, mesh.nz()));
            out.partial_pressure.push_back(s.species.partial_pressure[c]);
            out.r_bar.push_back(rbar[c]);
            out.r_dec.push_back(s.species.r_dec[c]);
        }
    return out;
}

double plume_spread(const SurfaceData& s, const std::vector<double>& values) {
    if (values.size() != s.area.size()) throw ValidationError("values", "size does not match surface");
    if (values.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double span = *hi - *lo;
    if (!(span > 0.0)) return 1.0;
    double above = 0.0, total = 0.0;
    for (std::size_t n = 0; n < values.size(); ++n) {
        total += s.area[n];
        if ((values[n] - *lo) / span > 0.5) above += s.area[n];
    }
    return above / total;
}

FluxReport flux_decomposition(const Solution& s, const SpeciesOptions& options) {
    const Mesh& mesh = *s.mesh;
    const auto flux = species_face_fluxes(mesh, s.flow, s.materials, s.species, options);
    FluxReport rep;
    for (int j = 0; j < mesh.ny(); ++j)
        for (int i = 0; i < mesh.nx(); ++i) {
            const auto f_lo = mesh.face(2, i, j, mesh.k_mps());
            const auto f_hi = mesh.face(2, i, j, mesh.k_cl());
            rep.ch_mps_convective += flux.convective[2][f_lo];
            rep.ch_mps_diffusive += flux.diffusive[2][f_lo];
            rep.mps_cl_convective += flux.convective[2][f_hi];
            rep.mps_cl_diffusive += flux.diffusive[2][f_hi];
        }

    // Cell-centred vectors from the mean of opposite face flux densities.
    double v_mps = 0.0, v_cl = 0.0;
    for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
        const Region reg = mesh.region(c);
        if (reg != Region::Mps && reg != Region::Cl) continue;
        const auto ijk = mesh.cell_ijk(c);
        std::array<double, 3> conv{}, diff{};
        for (int d = 0; d < 3; ++d) {
            auto hi = ijk;
            hi[d] += 1;
            const auto f0 = mesh.face(d, ijk[0], ijk[1], ijk[2]);
            const auto f1 = mesh.face(d, hi[0], hi[1], hi[2]);
            const double a = mesh.face_area(d, ijk[0], ijk[1], ijk[2]);
            conv[d] = 0.5 * (flux.convective[d][f0] + flux.convective[d][f1]) / a;
            diff[d] = 0.5 * (flux.diffusive[d][f0] + flux.diffusive[d][f1]) / a;
        }
        const double vol = mesh.volume(c);
        const double mc = std::hypot(conv[0], conv[1], conv[2]) * vol;
        const double md = std::hypot(diff[0], diff[1], diff[2]) * vol;
        if (reg == Region::Mps) {
            rep.mps_convective_mean += mc;
            rep.mps_diffusive_mean += md;
            v_mps += vol;
        } else {
            rep.cl_convective_mean += mc;
            rep.cl_diffusive_mean += md;
            v_cl += vol;
        }
    }
    if (v_mps > 0.0) {
        rep.mps_convective_mean /= v_mps;
        rep.mps_diffusive_mean /= v_mps;
    }
    if (v_cl > 0.0) {
        rep.cl_convective_mean /= v_cl;
        rep.cl_diffusive_mean /= v_cl;
    }
    return rep;
}

}  // namespace protocell
