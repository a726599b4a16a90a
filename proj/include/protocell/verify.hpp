#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "protocell/response.hpp"
#include "protocell/solver.hpp"

namespace protocell {

struct GridPoint {
    int sigma = 0;
    long long n_cells = 0;
    double h = 1.0;  // effective spacing relative to the finest member
    double value = 0.0;
};

/// Finest first. h_i = (N_finest / N_i)^(1/3).
struct GridSeries {
    std::string variable;
    double q_ccm = 0.0, k1 = 0.0, k2 = 0.0;
    std::vector<GridPoint> points;
};

/// Sorts by decreasing cell count and assigns effective spacings.
GridSeries make_series(std::string variable, std::vector<GridPoint> points, int dim = 3);

struct OrderResult {
    double p_real = 0.0;
    double p_imag = 0.0;
    bool oscillatory = false;  // eps32 / eps21 < 0
    bool exact = false;        // eps21 = 0: p undefined, f1 is the extrapolate
    int iterations = 0;
};

/// Observed order from three (h, f) points, finest first, for non-constant
/// refinement ratios: solves eps32/eps21 = r12^p (r23^p - 1)/(r12^p - 1) by
/// fixed-point iteration from p = 2 (tolerance 1e-10, 100 iterations), in
/// complex arithmetic when the ratio is negative. Throws ConvergenceError if
/// the iteration does not settle.
OrderResult observed_order(double h1, double f1, double h2, double f2, double h3, double f3);

/// f1 + (f2 - f1) / (1 - r12^p).
double richardson_extrapolate(double f1, double f2, double r12, double p);

/// F_s |f_extrap - f1|.
double gci(double f_extrap, double f1, double safety_factor = 1.25);

enum class ExtrapolationMethod { Gre, Moe12, Moe123 };
std::string_view to_string(ExtrapolationMethod m);

struct ExtrapolationResult {
    ExtrapolationMethod method = ExtrapolationMethod::Gre;
    double f1 = 0.0;  // finest-grid value
    double f_extrapolated = 0.0;
    std::optional<double> p_real, p_imag;  // GRE only
    bool oscillatory = false;
    bool exact = false;
    std::vector<double> coefficients;  // MOE: g1, g2[, g3]
    double safety_factor = 1.25;
    double error_estimate = 0.0;  // F_s |f_extrapolated - f1|

    double relative_error_percent() const;
};

/// GRE on three points, finest first.
ExtrapolationResult generalized_richardson(const std::vector<GridPoint>& points,
                                           double safety_factor = 1.25);

/// Fits f_k = f_exact + g1 h_k + g2 h_k^2 (+ g3 h_k^3) through 3 (or 4) points.
ExtrapolationResult mixed_order_extrapolate(const std::vector<GridPoint>& points, int max_order,
                                            double safety_factor = 1.25);

struct ScalingFit {
    double a = 0.0;  // offset
    double b = 0.0;  // slope
    double residual_norm = 0.0;
};

/// Least-squares y = a + b x over pairs.
ScalingFit geometry_scaling_fit(const std::vector<double>& reduced, const std::vector<double>& full);

/// Which sigmas feed which extrapolation. Empty lists select the default
/// policy: GRE on the three finest; MOE-12 and MOE-123 on the finest, the
/// coarsest and interior points closest to a log-uniform spread in h.
struct StudySpec {
    std::vector<int> sigmas{1, 2, 3, 4};
    std::vector<std::string> variables{"Kprime", "dP_over_Pin"};
    std::vector<int> gre_sigmas, moe12_sigmas, moe123_sigmas;
    double safety_factor = 1.25;
    bool stub = false;  // manufactured f = f_ex + C h^2 in place of the solver
};

/// Scalar of a record by its CSV column name; empty when absent or unknown.
std::optional<double> response_value(const ResponseRecord& r, const std::string& variable);
bool is_response_variable(const std::string& variable);

struct StudySample {
    long long n_cells = 0;
    std::vector<ResponseRecord> records;  // one per Q
};

using StudySolver = std::function<StudySample(int sigma)>;

/// Continuation over config.q_ccm on a mesh of the given sigma.
StudySolver model_study_solver(const ModelConfig& config);
/// Every variable equals f_exact + coefficient (sigma_max / sigma)^2 with
/// N = 1000 sigma^3, so h is sigma_max / sigma.
StudySolver stub_study_solver(const ModelConfig& config, int sigma_max, double f_exact = 1.0,
                              double coefficient = 0.5);

struct StudyRow {
    std::string variable;
    double q_ccm = 0.0;
    std::vector<int> sigmas;
    ExtrapolationResult result;
};

struct StudyReport {
    std::vector<GridSeries> series;
    std::vector<StudyRow> rows;
    std::vector<std::string> failures;
    std::vector<int> sigmas_used;
};

/// Runs the solver per sigma (failed sigmas are reported and dropped),
/// builds a series per (variable, Q) and applies GRE, MOE-12 and MOE-123
/// where enough points exist.
StudyReport convergence_study(const ModelConfig& config, const StudySpec& study,
                              const StudySolver& solver, int workers = 1,
                              const std::function<void(const std::string&)>& log = {});

/// variable,Q,method,f1,f_extrap,p_real,p_imag,oscillatory,error_band,relative_error_percent
std::string study_report_csv(const StudyReport& report);

/// Sigma selection for the default policy over ascending `available`.
std::vector<int> spanning_sigmas(const std::vector<int>& available, std::size_t count);

}  // namespace protocell
