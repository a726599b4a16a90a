#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "protocell/flow.hpp"
#include "protocell/geometry.hpp"
#include "protocell/solver.hpp"
#include "protocell/species.hpp"

namespace protocell {

// Field-level building blocks, shared with the outer loop.

/// Area-weighted mean chi over the inlet (the prescribed value) minus the
/// mean over the cells next to the outlet.
double delta_chi(const Mesh& mesh, const SpeciesState& species, double chi_in);
/// Inlet chi minus the flux-weighted (mixing-cup) outlet chi. Unlike the
/// area average, it closes the molar balance: lambda times dchi_bulk/chi_in
/// is one up to the carrier-flow change.
double delta_chi_bulk(const Solution& solution, const SpeciesOptions& options = {});
/// Integral of R_dec over the catalyst layer, mol/s.
double total_decomposition(const Mesh& mesh, const SpeciesState& species);
/// Integral of R_dec over the top faces of the catalyst layer.
double top_surface_decomposition(const Mesh& mesh, const SpeciesState& species);

struct ResponseRecord {
    Formulation formulation = Formulation::Beta;
    double q_ccm = 0.0;
    double k1 = 0.0, k2 = 0.0, k_app = 0.0;
    int sigma = 0;
    double dchi = 0.0;
    double dchi_bulk = 0.0;  // mixing-cup variant, not part of the CSV
    double rprime_raw = 0.0;   // surface integral of R_dec, mol/(m s)
    double rprime_norm = 0.0;  // rprime_raw / C_in, m^2/s
    std::optional<double> kprime;  // dchi / rprime_norm
    double r_total = 0.0;          // mol/s
    std::optional<double> lambda;  // Q C_in / R_total
    double lambda_prime = 0.0;     // dchi / chi_in
    double c_in = 0.0;             // mol/m^3 used for lambda and normalisation
    double dp = 0.0;               // Pa
    double p_in = 0.0;             // Pa, relative
    double dp_over_pin = 0.0;
    bool converged = false;
    int outer_iterations = 0;
    std::string fingerprint;
    std::string error;  // set for failed points
};

/// A record for a point whose solve failed: numbers are NaN.
ResponseRecord failed_record(Formulation f, double q_ccm, const KineticsParams& k, int sigma,
                             const std::string& error);

ResponseRecord scalar_responses(const Solution& solution);

using ResponseTable = std::vector<ResponseRecord>;

/// formulation,Q_ccm,k1,k2,dchi,Rprime_raw,Rprime_norm,Kprime,R_total,lambda,
/// lambda_prime,dP_Pa,Pin_Pa,dP_over_Pin,converged. Absent values are empty.
std::string response_csv(const ResponseTable& table);

struct LineProfile {
    std::string name;
    std::string coordinate;  // x, y or z
    std::vector<double> position;
    std::vector<double> value;
};

/// P_O3(x) and R_bar(x) on the CL top along the x line over the far-end
/// turns; U(x) and U(z) through the middle of the third section.
struct ProfileData {
    std::vector<LineProfile> lines;
    const LineProfile& line(const std::string& name) const;
};

ProfileData profiles(const Solution& solution);

/// Cell-centred values over the top cell layer of the catalyst layer.
struct SurfaceData {
    std::vector<double> x, y, area;
    std::vector<double> partial_pressure;  // Pa
    std::vector<double> r_bar;             // R_dec V_CL / R_total
    std::vector<double> r_dec;             // mol/(m^3 s)
};

SurfaceData surfaces(const Solution& solution);

/// Area fraction of the surface where (v - min)/(max - min) exceeds one half.
double plume_spread(const SurfaceData& s, const std::vector<double>& values);

/// R_dec V_CL / R_total per cell (zero outside the catalyst layer).
std::vector<double> r_bar_field(const Mesh& mesh, const SpeciesState& species);

struct FluxReport {
    // z-components integrated over the interfaces, mol/s (positive upwards).
    double ch_mps_convective = 0.0, ch_mps_diffusive = 0.0;
    double mps_cl_convective = 0.0, mps_cl_diffusive = 0.0;
    // Volume-averaged magnitudes of the cell-centred flux vectors, mol/(m^2 s).
    double mps_convective_mean = 0.0, mps_diffusive_mean = 0.0;
    double cl_convective_mean = 0.0, cl_diffusive_mean = 0.0;
    double mps_reaction = 0.0;  // always zero: no sink in the MPS
};

FluxReport flux_decomposition(const Solution& solution, const SpeciesOptions& options = {});

}  // namespace protocell
