#pragma once

#include <optional>
#include <string_view>

#include "protocell/constants.hpp"

namespace protocell {

enum class TortuosityModel { SqrtPorosity, MqStandard, Explicit };

/// How porous-media correction and Knudsen diffusion combine.
enum class CouplingScheme {
    CorrectThenCouple,   // [1/(f D) + 1/D_K]^-1
    CoupleThenCorrect,   // f [1/D + 1/D_K]^-1
    FreeOnly,            // D
    NoKnudsen,           // f D
    NoPorousCorrection,  // [1/D + 1/D_K]^-1
};

std::string_view to_string(TortuosityModel m);
std::string_view to_string(CouplingScheme s);
TortuosityModel parse_tortuosity_model(std::string_view s);
CouplingScheme parse_coupling_scheme(std::string_view s);

struct MaterialParams {
    double epsilon_mps = 0.801;
    double epsilon_cl = 0.497;
    double kappa_mps = 9.18e-12;  // m^2
    double kappa_cl = 8.82e-11;   // m^2
    double tau_mps = 1.199;
    TortuosityModel tortuosity_model_cl = TortuosityModel::SqrtPorosity;
    double tau_cl_explicit = 1.0;  // used with TortuosityModel::Explicit
    double d_free = 0.16e-4;       // m^2/s, O3 in air
    double r_p = 6.5e-6;           // m
    std::optional<double> pore_diameter_cl;  // explicit override of d_p
    double molar_mass_air = constants::molar_mass_air;
    double molar_mass_o3 = constants::molar_mass_o3;
    double temperature = 298.15;  // K
    double p_ref = 1.027e5;       // Pa
    CouplingScheme coupling = CouplingScheme::CorrectThenCouple;

    /// Throws ValidationError naming the offending field.
    void validate() const;

    double tau_cl() const;
    double f_pm_mps() const;
    double f_pm_cl() const;
    double pore_diameter() const;
    /// Effective diffusivity per layer under the configured coupling. Knudsen
    /// diffusion only enters the catalyst layer.
    double diffusivity_channel() const { return d_free; }
    double diffusivity_mps() const;
    double diffusivity_cl() const;
};

/// Quartic fit for air, valid on [t_min, t_max] K.
double air_viscosity(double temperature, double t_min = 200.0, double t_max = 1000.0);

/// Mixture molar mass of an O3/air binary from the O3 mass fraction.
double mixture_molar_mass(double omega_o3, double m_o3 = constants::molar_mass_o3,
                          double m_air = constants::molar_mass_air);

/// Mole fraction from mass fraction for the O3/air binary.
double mole_fraction(double omega_o3, double m_o3 = constants::molar_mass_o3,
                     double m_air = constants::molar_mass_air);
/// Mass fraction from mole fraction for the O3/air binary.
double mass_fraction(double chi_o3, double m_o3 = constants::molar_mass_o3,
                     double m_air = constants::molar_mass_air);

/// Ideal-gas density of the binary mixture.
double mixture_density(double p_abs, double temperature, double omega_o3,
                       double m_o3 = constants::molar_mass_o3,
                       double m_air = constants::molar_mass_air);

/// Dry air at 273.15 K and 1 atm.
double standard_density(double m_air = constants::molar_mass_air);

/// eps / tau.
double porous_correction(double epsilon, double tau);

/// sqrt_porosity: eps^(1/2); mq_standard: eps^(-1/3); explicit: passthrough.
double cl_tortuosity(TortuosityModel model, double epsilon, double explicit_tau = 1.0);

/// (d_p / 3) sqrt(8 R T / (pi M)).
double knudsen_diffusivity(double pore_diameter, double temperature, double molar_mass);

/// Hydraulic pore diameter of a particle bed, (2/3) eps/(1-eps) 2 r_p.
double pore_diameter(double epsilon, double r_p);

double coupled_diffusivity(double d_free, double f_pm, double d_knudsen, CouplingScheme scheme);

}  // namespace protocell
