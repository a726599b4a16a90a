#pragma once

#include "protocell/constants.hpp"

namespace protocell {

/// Adsorption-decomposition kinetics on the dye sites of the catalyst layer
/// (desorption neglected, activity ratio fixed at 1) and the first-order
/// homogeneous sink of the dilute formulation.
struct KineticsParams {
    double k1 = 100.0;      // adsorption, 1/s
    double k2 = 10.0;       // decomposition, 1/s
    double k_app = 256.15;  // apparent first-order constant, 1/s
    double gamma_dye = 3e-6 / 1e-4;  // 3 umol/cm^2 in mol/m^2
    double t_cl = 150e-6;
    double r_p = 6.5e-6;
    double epsilon_cl = 0.497;
    double molar_mass_o3 = constants::molar_mass_o3;

    void validate() const;

    double surface_area() const;       // A_v, 1/m
    double site_concentration() const; // Gamma_s*, mol/m^2
    double site_density() const { return surface_area() * site_concentration(); }  // mol/m^3
};

/// A_v = 3 eps / r_p.
double specific_surface_area(double epsilon_cl, double r_p);

/// Gamma_s* = Gamma_dye / (t_CL A_v).
double site_concentration(double gamma_dye, double t_cl, double a_v);

struct Coverage {
    double theta;
    double vacancy;   // 1 - theta, evaluated without cancellation
    bool degenerate;  // k1 = k2 = 0 with chi > 0
};

/// Closed-form steady coverage k1 chi / (k1 chi + k2).
Coverage coverage_steady_state(double k1, double k2, double chi);

/// Volumetric O3 mass sink (negative), -M A_v Gamma* k1 chi (1 - theta).
double beta_sink(const KineticsParams& p, double theta, double chi);
/// Same, with the vacancy carried by `c` so it stays accurate as theta -> 1.
double beta_sink(const KineticsParams& p, const Coverage& c, double chi);

/// A_v Gamma* k2 theta, mol/(m^3 s).
double decomposition_rate_density(const KineticsParams& p, double theta);

/// -k_app C, mol/(m^3 s).
double alpha_sink(double c_o3, double k_app);

}  // namespace protocell
