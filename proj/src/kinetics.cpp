#include "protocell/kinetics.hpp"

#include <cmath>

#include "protocell/errors.hpp"

namespace protocell {

void KineticsParams::validate() const {
    if (!(k1 >= 0.0)) throw ValidationError("k1", "must be non-negative");
    if (!(k2 >= 0.0)) throw ValidationError("k2", "must be non-negative");
    if (!(k_app >= 0.0)) throw ValidationError("k_app", "must be non-negative");
    if (!(gamma_dye > 0.0)) throw ValidationError("gamma_dye", "must be positive");
    if (!(t_cl > 0.0)) throw ValidationError("t_cl", "must be positive");
    if (!(r_p > 0.0)) throw ValidationError("r_p", "must be positive");
    if (!(epsilon_cl > 0.0 && epsilon_cl <= 1.0))
        throw ValidationError("epsilon_cl", "must lie in (0, 1]");
}

double KineticsParams::surface_area() const { return specific_surface_area(epsilon_cl, r_p); }

double KineticsParams::site_concentration() const {
    return protocell::site_concentration(gamma_dye, t_cl, surface_area());
}

double specific_surface_area(double epsilon_cl, double r_p) {
    if (!(r_p > 0.0)) throw ValidationError("r_p", "must be positive");
    return 3.0 * epsilon_cl / r_p;
}

double site_concentration(double gamma_dye, double t_cl, double a_v) {
    if (!(t_cl > 0.0 && a_v > 0.0))
        throw ValidationError("site_concentration", "t_cl and A_v must be positive");
    return gamma_dye / (t_cl * a_v);
}

Coverage coverage_steady_state(double k1, double k2, double chi) {
    const double ads = k1 * chi;
    const double denom = ads + k2;
    if (denom <= 0.0) return {0.0, 1.0, chi > 0.0};
    return {ads / denom, k2 / denom, false};
}

double beta_sink(const KineticsParams& p, double theta, double chi) {
    return -p.molar_mass_o3 * p.site_density() * p.k1 * chi * (1.0 - theta);
}

double beta_sink(const KineticsParams& p, const Coverage& c, double chi) {
    return -p.molar_mass_o3 * p.site_density() * p.k1 * chi * c.vacancy;
}

double decomposition_rate_density(const KineticsParams& p, double theta) {
    return p.site_density() * p.k2 * theta;
}

double alpha_sink(double c_o3, double k_app) { return -k_app * c_o3; }

}  // namespace protocell
