#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "protocell/flow.hpp"
#include "protocell/geometry.hpp"
#include "protocell/kinetics.hpp"
#include "protocell/properties.hpp"

namespace protocell {

enum class Formulation { Alpha, Beta };

std::string_view to_string(Formulation f);
Formulation parse_formulation(std::string_view s);

/// Cell fields of the O3 transport solution. Entries on LandSolid cells are
/// zero. `theta`, `r_dec` and `sink` vanish outside the catalyst layer.
struct SpeciesState {
    Formulation formulation = Formulation::Beta;
    std::vector<double> omega;             // O3 mass fraction (Beta)
    std::vector<double> chi;               // mole fraction; C / C* for Alpha
    std::vector<double> concentration;     // mol/m^3
    std::vector<double> partial_pressure;  // Pa
    std::vector<double> theta;             // coverage (Beta)
    std::vector<double> r_dec;             // decomposition rate density, mol/(m^3 s), >= 0
    std::vector<double> sink;              // Beta: kg/(m^3 s); Alpha: mol/(m^3 s); <= 0
    double inlet_value = 0.0;              // omega_in (Beta) or C_in (Alpha)
    std::size_t clipped = 0;               // cells moved back into [0, 1]
    bool degenerate_kinetics = false;
    int iterations = 0;
};

struct SpeciesOptions {
    double tolerance = 1e-11;  // max change of the unknown relative to its inlet value
    int max_iterations = 50;
    double linear_tolerance = 1e-12;
    int linear_max_iterations = 4000;
    bool pressure_diffusion = true;  // (chi - omega) grad P / P_A driving force

    void validate() const;
};

/// Binary Maxwell-Stefan mass flux of O3 (air carries the opposite flux):
/// J = -rho (M_O3 M_air / M^2) D [grad chi + (chi - omega) grad P_A / P_A].
std::array<double, 3> binary_ms_flux(double rho, double omega, const std::array<double, 3>& grad_chi,
                                     const std::array<double, 3>& grad_p, double p_abs,
                                     double d_coupled, double m_o3 = constants::molar_mass_o3,
                                     double m_air = constants::molar_mass_air);

/// Effective diffusivities of the two formulations. Beta couples porous
/// correction with Knudsen diffusion in the catalyst layer; Alpha applies the
/// porous correction only.
double beta_diffusivity(const MaterialParams& m, Region r);
double alpha_diffusivity(const MaterialParams& m, Region r);

/// Beta: conservative O3 mass balance with the binary MS flux and the
/// adsorption-decomposition sink on CL cells, coverage at its closed-form
/// steady state. Inlet mole fraction `chi_in` is fixed on the inlet faces;
/// the outlet carries advective outflow only; walls are impermeable.
SpeciesState solve_species_beta(const Mesh& mesh, const FlowField& flow,
                                const MaterialParams& materials, const KineticsParams& kinetics,
                                double chi_in, const SpeciesOptions& options = {},
                                const SpeciesState* initial = nullptr);

/// Derived Beta fields (chi, C, P_O3, theta, r_dec, sink) of a given mass
/// fraction field, coverage at its closed-form steady state.
SpeciesState evaluate_beta_state(const Mesh& mesh, const FlowField& flow,
                                 const MaterialParams& materials, const KineticsParams& kinetics,
                                 std::vector<double> omega, double omega_in);

/// Alpha: dilute molar concentration with Fick flux and the first-order sink
/// -k_app C on CL cells, advected by the volume flux rho u / rho_in (rho_in
/// the mean inlet density), which is solenoidal like the dilute operator
/// assumes.
SpeciesState solve_species_alpha(const Mesh& mesh, const FlowField& flow,
                                 const MaterialParams& materials, double k_app, double c_in,
                                 const SpeciesOptions& options = {});

/// Face-normal O3 molar flows (mol/s along +axis), split into the advective
/// and the diffusive part. Boundary faces carry the values used by the
/// discrete balance.
struct SpeciesFaceFlux {
    std::array<std::vector<double>, 3> convective;
    std::array<std::vector<double>, 3> diffusive;
};

SpeciesFaceFlux species_face_fluxes(const Mesh& mesh, const FlowField& flow,
                                    const MaterialParams& materials, const SpeciesState& state,
                                    const SpeciesOptions& options = {});

/// O3 molar flows through inlet and outlet and the total consumption, mol/s.
struct SpeciesBalance {
    double inflow = 0.0;
    double outflow = 0.0;
    double consumption = 0.0;  // integral of R_dec over the catalyst layer

    double relative_error() const;  // |in - out - consumption| / in
};

SpeciesBalance species_balance(const Mesh& mesh, const FlowField& flow,
                               const MaterialParams& materials, const SpeciesState& state,
                               const SpeciesOptions& options = {});

}  // namespace protocell
