#include "protocell/verify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <future>
#include <limits>
#include <map>
#include <set>

#include "protocell/errors.hpp"
#include "protocell/geometry.hpp"
#include "protocell/io.hpp"

namespace protocell {

GridSeries make_series(std::string variable, std::vector<GridPoint> points, int dim) {
    if (points.empty()) throw ValidationError("series", "is empty");
    std::stable_sort(points.begin(), points.end(),
                     [](const GridPoint& a, const GridPoint& b) { return a.n_cells > b.n_cells; });
    const long long finest = points.front().n_cells;
    for (auto& p : points) p.h = effective_refinement_factor(finest, p.n_cells, dim);
    GridSeries s;
    s.variable = std::move(variable);
    s.points = std::move(points);
    return s;
}

OrderResult observed_order(double h1, double f1, double h2, double f2, double h3, double f3) {
    using C = std::complex<double>;
    OrderResult out;
    const double e21 = f2 - f1, e32 = f3 - f2;
    if (e21 == 0.0) {
        out.exact = true;
        out.p_real = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    if (!(h1 > 0.0) || !(h2 > h1) || !(h3 > h2))
        throw ValidationError("h", "spacings must be positive and increasing, finest first");
    const double r12 = h2 / h1, r23 = h3 / h2;
    const double ratio = e32 / e21;
    out.oscillatory = ratio < 0.0;
    const C log_ratio = std::log(C(ratio, 0.0));
    const double ln12 = std::log(r12);

    auto map = [&](C p) {
        const C a = std::pow(C(r12), p) - 1.0;
        const C b = std::pow(C(r23), p) - 1.0;
        return (log_ratio + std::log(a) - std::log(b)) / ln12;
    };
    auto finish = [&](C p, int it) {
        out.p_real = p.real();
        out.p_imag = p.imag();
        out.iterations = it;
        return out;
    };
    constexpr double tol = 1e-10;
    constexpr int max_it = 100;
    C p(2.0, 0.0);
    for (int it = 1; it <= max_it; ++it) {
        const C next = map(p);
        if (!std::isfinite(next.real()) || !std::isfinite(next.imag())) break;
        if (std::abs(next - p) < tol) return finish(next, it);
        p = next;
    }
    // Slow contraction: Newton on p - map(p) from p = 2.
    p = C(2.0, 0.0);
    for (int it = 1; it <= max_it; ++it) {
        const C g = p - map(p);
        const C dp(1e-7, 0.0);
        const C dg = (dp - (map(p + dp) - map(p))) / dp;
        const C next = p - g / dg;
        if (!std::isfinite(next.real()) || !std::isfinite(next.imag())) break;
        if (std::abs(next - p) < tol) return finish(next, max_it + it);
        p = next;
    }
    throw ConvergenceError("observed order iteration did not converge", {p.real(), p.imag()});
}

double richardson_extrapolate(double f1, double f2, double r12, double p) {
    if (!(r12 > 1.0)) throw ValidationError("r12", "refinement ratio must exceed 1");
    // p = +inf is the limit of infinitely fast convergence.
    if (std::isnan(p) || p == -std::numeric_limits<double>::infinity())
        throw ValidationError("p", "order must not be NaN or -inf");
    const double rp = std::pow(r12, p);
    if (rp == 1.0) throw ValidationError("p", "r12^p = 1 makes the extrapolation singular");
    if (std::isinf(rp)) return f1;
    return f1 + (f2 - f1) / (1.0 - rp);
}

double gci(double f_extrap, double f1, double safety_factor) {
    if (!(safety_factor >= 1.0)) throw ValidationError("safety_factor", "must be >= 1");
    return safety_factor * std::abs(f_extrap - f1);
}

std::string_view to_string(ExtrapolationMethod m) {
    switch (m) {
        case ExtrapolationMethod::Gre: return "GRE";
        case ExtrapolationMethod::Moe12: return "MOE12";
        case ExtrapolationMethod::Moe123: return "MOE123";
    }
    return "?";
}

double ExtrapolationResult::relative_error_percent() const {
    if (error_estimate == 0.0) return 0.0;
    return f_extrapolated != 0.0 ? 100.0 * error_estimate / std::abs(f_extrapolated)
                                 : std::numeric_limits<double>::infinity();
}

ExtrapolationResult generalized_richardson(const std::vector<GridPoint>& pts, double safety_factor) {
    if (pts.size() != 3) throw ValidationError("points", "GRE needs exactly three points");
    ExtrapolationResult r;
    r.method = ExtrapolationMethod::Gre;
    r.safety_factor = safety_factor;
    r.f1 = pts[0].value;
    const OrderResult o =
        observed_order(pts[0].h, pts[0].value, pts[1].h, pts[1].value, pts[2].h, pts[2].value);
    r.oscillatory = o.oscillatory;
    r.exact = o.exact;
    if (o.exact) {
        r.f_extrapolated = r.f1;
    } else {
        r.p_real = o.p_real;
        r.p_imag = o.p_imag;
        r.f_extrapolated =
            richardson_extrapolate(pts[0].value, pts[1].value, pts[1].h / pts[0].h, o.p_real);
    }
    r.error_estimate = gci(r.f_extrapolated, r.f1, safety_factor);
    return r;
}

ExtrapolationResult mixed_order_extrapolate(const std::vector<GridPoint>& pts, int max_order,
                                            double safety_factor) {
    if (max_order != 2 && max_order != 3) throw ValidationError("orders", "must be {1,2} or {1,2,3}");
    const std::size_t n = static_cast<std::size_t>(max_order) + 1;
    if (pts.size() != n)
        throw ValidationError("points", "MOE needs " + std::to_string(n) + " points");
    ExtrapolationResult r;
    r.method = max_order == 2 ? ExtrapolationMethod::Moe12 : ExtrapolationMethod::Moe123;
    r.safety_factor = safety_factor;
    r.f1 = pts[0].value;
    const bool constant = std::all_of(pts.begin(), pts.end(),
                                      [&](const GridPoint& p) { return p.value == r.f1; });
    if (constant) {
        r.exact = true;
        r.f_extrapolated = r.f1;
        r.coefficients.assign(n - 1, 0.0);
        r.error_estimate = gci(r.f_extrapolated, r.f1, safety_factor);
        return r;
    }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if (pts[a].h == pts[b].h)
                throw ValidationError("h", "duplicated spacing makes the MOE system singular");
    Eigen::MatrixXd A(n, n);
    Eigen::VectorXd f(n);
    for (std::size_t k = 0; k < n; ++k) {
        double hp = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            A(k, j) = hp;
            hp *= pts[k].h;
        }
        f(k) = pts[k].value;
    }
    const Eigen::VectorXd x = A.fullPivLu().solve(f);
    r.f_extrapolated = x(0);
    for (std::size_t j = 1; j < n; ++j) r.coefficients.push_back(x(j));
    r.error_estimate = gci(r.f_extrapolated, r.f1, safety_factor);
    return r;
}

ScalingFit geometry_scaling_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ValidationError("pairs", "reduced and full lists differ in length");
    if (x.size() < 2) throw ValidationError("pairs", "need at least two pairs");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxx = 0.0, sxy = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        scale = std::max(scale, std::abs(x[i]));
    }
    if (!(sxx > 1e-24 * scale * scale * n) || scale == 0.0)
        throw ValidationError("reduced", "values have no spread");
    ScalingFit fit;
    fit.b = sxy / sxx;
    fit.a = my - fit.b * mx;
    double res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - fit.a - fit.b * x[i];
        res += e * e;
    }
    fit.residual_norm = std::sqrt(res);
    return fit;
}

namespace {

const std::vector<std::string>& variable_names() {
    static const std::vector<std::string> names{
        "dchi",         "Rprime_raw", "Rprime_norm", "Kprime",  "R_total",
        "lambda",       "lambda_prime", "dP_Pa",     "Pin_Pa",  "dP_over_Pin"};
    return names;
}

}  // namespace

bool is_response_variable(const std::string& v) {
    const auto& n = variable_names();
    return std::find(n.begin(), n.end(), v) != n.end();
}

std::optional<double> response_value(const ResponseRecord& r, const std::string& v) {
    std::optional<double> out;
    if (v == "dchi") out = r.dchi;
    else if (v == "Rprime_raw") out = r.rprime_raw;
    else if (v == "Rprime_norm") out = r.rprime_norm;
    else if (v == "Kprime") out = r.kprime;
    else if (v == "R_total") out = r.r_total;
    else if (v == "lambda") out = r.lambda;
    else if (v == "lambda_prime") out = r.lambda_prime;
    else if (v == "dP_Pa") out = r.dp;
    else if (v == "Pin_Pa") out = r.p_in;
    else if (v == "dP_over_Pin") out = r.dp_over_pin;
    if (out && !std::isfinite(*out)) out.reset();
    return out;
}

StudySolver model_study_solver(const ModelConfig& config) {
    return [config](int sigma) {
        ModelConfig c = config;
        c.sigma = sigma;
        Model model(c);
        const auto run = continuation_run(model);
        if (!run.complete)
            throw Error("Q=" + format_number(run.failed_q_ccm) + ": " + run.failure);
        StudySample s;
        s.n_cells = static_cast<long long>(model.mesh().cell_count());
        for (const auto& sol : run.solutions) s.records.push_back(scalar_responses(sol));
        return s;
    };
}

StudySolver stub_study_solver(const ModelConfig& config, int sigma_max, double f_exact,
                              double coefficient) {
    return [config, sigma_max, f_exact, coefficient](int sigma) {
        const double h = static_cast<double>(sigma_max) / sigma;
        const double v = f_exact + coefficient * h * h;
        StudySample s;
        s.n_cells = 1000LL * sigma * sigma * sigma;
        for (double q : config.q_ccm) {
            ResponseRecord r;
            r.formulation = config.formulation;
            r.q_ccm = q;
            r.k1 = config.kinetics.k1;
            r.k2 = config.kinetics.k2;
            r.sigma = sigma;
            r.dchi = r.rprime_raw = r.rprime_norm = r.r_total = r.lambda_prime = v;
            r.dp = r.p_in = r.dp_over_pin = r.c_in = v;
            r.kprime = v;
            r.lambda = v;
            r.converged = true;
            s.records.push_back(r);
        }
        return s;
    };
}

std::vector<int> spanning_sigmas(const std::vector<int>& available, std::size_t count) {
    std::vector<int> sorted = available;
    std::sort(sorted.begin(), sorted.end());
    if (count == 0 || sorted.size() < count) return {};
    if (count == 1) return {sorted.back()};
    std::vector<int> chosen{sorted.front(), sorted.back()};
    const double lo = std::log(sorted.front()), hi = std::log(sorted.back());
    for (std::size_t t = 1; t + 1 < count; ++t) {
        const double target = lo + (hi - lo) * static_cast<double>(t) / static_cast<double>(count - 1);
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int s : sorted) {
            if (std::find(chosen.begin(), chosen.end(), s) != chosen.end()) continue;
            const double d = std::abs(std::log(s) - target);
            if (d < best_d) {
                best_d = d;
                best = s;
            }
        }
        chosen.push_back(best);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

StudyReport convergence_study(const ModelConfig& config, const StudySpec& study,
                              const StudySolver& solver, int workers,
                              const std::function<void(const std::string&)>& log) {
    if (study.sigmas.size() < 3) throw ValidationError("study.sigma", "need at least three sigmas");
    std::set<int> unique(study.sigmas.begin(), study.sigmas.end());
    if (unique.size() != study.sigmas.size())
        throw ValidationError("study.sigma", "duplicate sigma");
    if (*unique.begin() < 1) throw ValidationError("study.sigma", "sigmas must be >= 1");
    if (study.variables.empty()) throw ValidationError("study.variables", "no variables selected");
    for (const auto& v : study.variables)
        if (!is_response_variable(v)) throw ValidationError("study.variables", "unknown variable '" + v + "'");
    if (!(study.safety_factor >= 1.0)) throw ValidationError("study.safety_factor", "must be >= 1");

    const std::vector<int> sigmas(unique.begin(), unique.end());
    std::map<int, StudySample> samples;
    StudyReport report;
    std::vector<std::optional<StudySample>> results(sigmas.size());
    std::vector<std::string> errors(sigmas.size());
    auto work = [&](std::size_t n) {
        try {
            results[n] = solver(sigmas[n]);
        } catch (const Error& e) {
            errors[n] = e.what();
        }
    };
    if (workers > 1) {
        std::vector<std::future<void>> jobs;
        for (std::size_t n = 0; n < sigmas.size(); ++n) {
            jobs.push_back(std::async(std::launch::async, work, n));
            if (jobs.size() >= static_cast<std::size_t>(workers)) {
                for (auto& j : jobs) j.get();
                jobs.clear();
            }
        }
        for (auto& j : jobs) j.get();
    } else {
        for (std::size_t n = 0; n < sigmas.size(); ++n) work(n);
    }
    for (std::size_t n = 0; n < sigmas.size(); ++n) {
        if (results[n]) {
            samples.emplace(sigmas[n], std::move(*results[n]));
            report.sigmas_used.push_back(sigmas[n]);
            if (log) log("sigma=" + std::to_string(sigmas[n]) + " solved");
        } else {
            report.failures.push_back("sigma=" + std::to_string(sigmas[n]) + ": " + errors[n]);
            if (log) log("sigma=" + std::to_string(sigmas[n]) + " failed: " + errors[n]);
        }
    }

    struct Plan {
        ExtrapolationMethod method;
        std::vector<int> sigmas;
    };
    const auto& used = report.sigmas_used;
    auto pick = [&](const std::vector<int>& explicit_set, std::size_t count, bool finest) {
        if (!explicit_set.empty()) {
            std::vector<int> s = explicit_set;
            std::sort(s.begin(), s.end());
            return s;
        }
        if (used.size() < count) return std::vector<int>{};
        if (finest) return std::vector<int>(used.end() - static_cast<long>(count), used.end());
        return spanning_sigmas(used, count);
    };
    std::vector<Plan> plans;
    if (auto s = pick(study.gre_sigmas, 3, true); !s.empty()) plans.push_back({ExtrapolationMethod::Gre, s});
    if (auto s = pick(study.moe12_sigmas, 3, false); !s.empty())
        plans.push_back({ExtrapolationMethod::Moe12, s});
    if (auto s = pick(study.moe123_sigmas, 4, false); !s.empty())
        plans.push_back({ExtrapolationMethod::Moe123, s});

    for (const auto& variable : study.variables) {
        for (double q : config.q_ccm) {
            std::vector<GridPoint> pts;
            for (const auto& [sigma, sample] : samples) {
                for (const auto& rec : sample.records) {
                    if (rec.q_ccm != q) continue;
                    if (auto v = response_value(rec, variable))
                        pts.push_back({sigma, sample.n_cells, 1.0, *v});
                }
            }
            if (pts.empty()) continue;
            GridSeries series = make_series(variable, pts);
            series.q_ccm = q;
            series.k1 = config.kinetics.k1;
            series.k2 = config.kinetics.k2;
            for (const auto& plan : plans) {
                std::vector<GridPoint> sel;
                for (const auto& p : series.points)
                    if (std::find(plan.sigmas.begin(), plan.sigmas.end(), p.sigma) != plan.sigmas.end())
                        sel.push_back(p);
                const std::string tag = variable + " Q=" + format_number(q) + " " +
                                        std::string(to_string(plan.method));
                if (sel.size() != plan.sigmas.size()) {
                    report.failures.push_back(tag + ": missing grid values");
                    continue;
                }
                try {
                    StudyRow row{variable, q, plan.sigmas,
                                 plan.method == ExtrapolationMethod::Gre
                                     ? generalized_richardson(sel, study.safety_factor)
                                     : mixed_order_extrapolate(
                                           sel, plan.method == ExtrapolationMethod::Moe12 ? 2 : 3,
                                           study.safety_factor)};
                    report.rows.push_back(std::move(row));
                } catch (const Error& e) {
                    report.failures.push_back(tag + ": " + e.what());
                }
            }
            report.series.push_back(std::move(series));
        }
    }
    return report;
}

std::string study_report_csv(const StudyReport& report) {
    CsvTable csv;
    csv.header = {"variable", "Q",          "method",      "f1",         "f_extrap",
                  "p_real",   "p_imag",     "oscillatory", "error_band", "relative_error_percent"};
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    for (const auto& row : report.rows) {
        const auto& r = row.result;
        csv.rows.push_back({row.variable, format_number(row.q_ccm), std::string(to_string(r.method)),
                            format_number(r.f1), format_number(r.f_extrapolated), opt(r.p_real),
                            opt(r.p_imag), r.oscillatory ? "1" : "0", format_number(r.error_estimate),
                            format_number(r.relative_error_percent())});
    }
    return csv.to_string();
}

}  // namespace protocell
