#include "protocell/properties.hpp"

#include <cmath>
#include <string>

#include "protocell/errors.hpp"

namespace protocell {

std::string_view to_string(TortuosityModel m) {
    switch (m) {
        case TortuosityModel::SqrtPorosity: return "sqrt_porosity";
        case TortuosityModel::MqStandard: return "mq_standard";
        case TortuosityModel::Explicit: return "explicit";
    }
    return "?";
}

std::string_view to_string(CouplingScheme s) {
    switch (s) {
        case CouplingScheme::CorrectThenCouple: return "correct_then_couple";
        case CouplingScheme::CoupleThenCorrect: return "couple_then_correct";
        case CouplingScheme::FreeOnly: return "free_only";
        case CouplingScheme::NoKnudsen: return "no_knudsen";
        case CouplingScheme::NoPorousCorrection: return "no_porous_correction";
    }
    return "?";
}

TortuosityModel parse_tortuosity_model(std::string_view s) {
    if (s == "sqrt_porosity") return TortuosityModel::SqrtPorosity;
    if (s == "mq_standard") return TortuosityModel::MqStandard;
    if (s == "explicit") return TortuosityModel::Explicit;
    throw ValidationError("tortuosity_model_cl", "unknown model '" + std::string(s) + "'");
}

CouplingScheme parse_coupling_scheme(std::string_view s) {
    for (auto c : {CouplingScheme::CorrectThenCouple, CouplingScheme::CoupleThenCorrect,
                   CouplingScheme::FreeOnly, CouplingScheme::NoKnudsen,
                   CouplingScheme::NoPorousCorrection})
        if (to_string(c) == s) return c;
    throw ValidationError("coupling_scheme", "unknown scheme '" + std::string(s) + "'");
}

void MaterialParams::validate() const {
    auto porosity = [](double e, const char* name) {
        if (!(e > 0.0 && e <= 1.0)) throw ValidationError(name, "porosity must lie in (0, 1]");
    };
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(name, "must be positive");
    };
    porosity(epsilon_mps, "epsilon_mps");
    porosity(epsilon_cl, "epsilon_cl");
    positive(kappa_mps, "kappa_mps");
    positive(kappa_cl, "kappa_cl");
    positive(tau_mps, "tau_mps");
    positive(d_free, "d_free");
    positive(r_p, "r_p");
    positive(molar_mass_air, "molar_mass_air");
    positive(molar_mass_o3, "molar_mass_o3");
    positive(temperature, "temperature");
    positive(p_ref, "p_ref");
    if (tortuosity_model_cl == TortuosityModel::Explicit) positive(tau_cl_explicit, "tau_cl");
    if (pore_diameter_cl) positive(*pore_diameter_cl, "pore_diameter_cl");
}

double MaterialParams::tau_cl() const {
    return cl_tortuosity(tortuosity_model_cl, epsilon_cl, tau_cl_explicit);
}

double MaterialParams::f_pm_mps() const { return porous_correction(epsilon_mps, tau_mps); }
double MaterialParams::f_pm_cl() const { return porous_correction(epsilon_cl, tau_cl()); }

double MaterialParams::pore_diameter() const {
    return pore_diameter_cl ? *pore_diameter_cl : protocell::pore_diameter(epsilon_cl, r_p);
}

double MaterialParams::diffusivity_mps() const {
    switch (coupling) {
        case CouplingScheme::FreeOnly:
        case CouplingScheme::NoPorousCorrection: return d_free;
        default: return f_pm_mps() * d_free;
    }
}

double MaterialParams::diffusivity_cl() const {
    const bool needs_knudsen =
        coupling != CouplingScheme::FreeOnly && coupling != CouplingScheme::NoKnudsen;
    const double dk =
        needs_knudsen ? knudsen_diffusivity(pore_diameter(), temperature, molar_mass_o3) : 1.0;
    return coupled_diffusivity(d_free, f_pm_cl(), dk, coupling);
}

double air_viscosity(double t, double t_min, double t_max) {
    if (!(t >= t_min && t <= t_max))
        throw RangeError("air_viscosity: temperature " + std::to_string(t) + " K outside [" +
                         std::to_string(t_min) + ", " + std::to_string(t_max) + "]");
    return -8.38278e-7 +
           t * (8.35717342e-8 + t * (-7.69429583e-11 + t * (4.6437266e-14 + t * -1.06585607e-17)));
}

double mixture_molar_mass(double omega, double m_o3, double m_air) {
    return 1.0 / (omega / m_o3 + (1.0 - omega) / m_air);
}

double mole_fraction(double omega, double m_o3, double m_air) {
    const double a = omega / m_o3;
    return a / (a + (1.0 - omega) / m_air);
}

double mass_fraction(double chi, double m_o3, double m_air) {
    const double a = chi * m_o3;
    return a / (a + (1.0 - chi) * m_air);
}

double mixture_density(double p_abs, double t, double omega, double m_o3, double m_air) {
    if (!(p_abs > 0.0)) throw ValidationError("p_abs", "absolute pressure must be positive");
    if (!(t > 0.0)) throw ValidationError("temperature", "must be positive");
    if (!(omega >= 0.0 && omega <= 1.0)) throw ValidationError("omega_o3", "must lie in [0, 1]");
    return p_abs * mixture_molar_mass(omega, m_o3, m_air) / (constants::gas_constant * t);
}

double standard_density(double m_air) {
    return constants::standard_pressure * m_air /
           (constants::gas_constant * constants::standard_temperature);
}

double porous_correction(double epsilon, double tau) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon", "must lie in (0, 1]");
    if (!(tau > 0.0)) throw ValidationError("tau", "must be positive");
    return epsilon / tau;
}

double cl_tortuosity(TortuosityModel model, double epsilon, double explicit_tau) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon", "must lie in (0, 1]");
    switch (model) {
        case TortuosityModel::SqrtPorosity: return std::sqrt(epsilon);
        case TortuosityModel::MqStandard: return std::pow(epsilon, -1.0 / 3.0);
        case TortuosityModel::Explicit: return explicit_tau;
    }
    return explicit_tau;
}

double knudsen_diffusivity(double d_p, double t, double m) {
    if (!(d_p > 0.0 && t > 0.0 && m > 0.0))
        throw ValidationError("knudsen_diffusivity", "inputs must be positive");
    return d_p / 3.0 * std::sqrt(8.0 * constants::gas_constant * t / (constants::pi * m));
}

double pore_diameter(double epsilon, double r_p) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ValidationError("epsilon_cl", "pore diameter needs porosity in (0, 1)");
    if (!(r_p > 0.0)) throw ValidationError("r_p", "must be positive");
    return 2.0 / 3.0 * epsilon / (1.0 - epsilon) * 2.0 * r_p;
}

double coupled_diffusivity(double d, double f, double dk, CouplingScheme scheme) {
    switch (scheme) {
        case CouplingScheme::CorrectThenCouple: return 1.0 / (1.0 / (f * d) + 1.0 / dk);
        case CouplingScheme::CoupleThenCorrect: return f / (1.0 / d + 1.0 / dk);
        case CouplingScheme::FreeOnly: return d;
        case CouplingScheme::NoKnudsen: return f * d;
        case CouplingScheme::NoPorousCorrection: return 1.0 / (1.0 / d + 1.0 / dk);
    }
    return d;
}

}  // namespace protocell
