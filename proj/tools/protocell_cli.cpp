// protocell: command-line front end.
//
// Exit codes: 0 success, 1 other errors (I/O, dump mismatch), 2 config or
// argument error, 3 solver divergence or failed points, 4 cell budget exceeded.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "protocell/artifacts.hpp"
#include "protocell/config.hpp"
#include "protocell/errors.hpp"
#include "protocell/io.hpp"
#include "protocell/response.hpp"
#include "protocell/solver.hpp"
#include "protocell/sweep.hpp"
#include "protocell/verify.hpp"

namespace fs = std::filesystem;
using namespace protocell;

namespace {

enum ExitCode { kOk = 0, kError = 1, kConfig = 2, kDivergence = 3, kResource = 4 };

struct Options {
    std::string config_path;
    int workers = 1;
    bool dump_fields = false;
    std::string formulation;
    int sigma = 0;
    std::string out_dir = ".";
    std::vector<double> q_ccm;
    bool stub = false;
    std::string dump_path;
    std::string what = "all";
};

void progress(const std::string& line) { std::cerr << line << std::endl; }

RunConfig load(const Options& o) {
    RunConfig rc = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
    ModelConfig& m = rc.model;
    try {
        if (!o.formulation.empty()) m.formulation = parse_formulation(o.formulation);
    } catch (const Error& e) {
        throw ConfigError(e.what(), 0, "--formulation");
    }
    if (o.sigma > 0) m.sigma = o.sigma;
    if (!o.q_ccm.empty()) m.q_ccm = o.q_ccm;
    if (std::getenv("PROTOCELL_CELL_BUDGET")) m.cell_budget = cell_budget_from_env();
    if (o.stub) rc.study.stub = true;
    try {
        m.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what(), 0, e.field());
    }
    return rc;
}

class Outputs {
public:
    Outputs(const Options& o, std::string command, const RunConfig& rc) : dir_(o.out_dir) {
        manifest_.command = std::move(command);
        manifest_.config_fingerprint = fnv1a_hex(config_to_text(rc));
        manifest_.tool_version = std::string(tool_version());
        manifest_.started = utc_timestamp();
    }

    void write(const std::string& name, std::string_view contents) {
        write_file_atomic(dir_ / name, contents);
        manifest_.files.push_back(name);
    }

    void add_point(const ResponseRecord& r, const std::string& fingerprint) {
        manifest_.points.push_back(
            {r.q_ccm, r.formulation == Formulation::Alpha ? r.k_app : r.k1, r.k2, fingerprint,
             r.converged, r.outer_iterations, r.error});
    }

    void finish() {
        manifest_.finished = utc_timestamp();
        write_file_atomic(dir_ / "manifest.json", manifest_.to_json());
    }

private:
    fs::path dir_;
    RunManifest manifest_;
};

std::string point_fingerprint(const ModelConfig& m, const ResponseRecord& r) {
    if (!r.fingerprint.empty()) return r.fingerprint;
    ModelConfig c = m;
    if (c.formulation == Formulation::Alpha) {
        c.kinetics.k_app = r.k_app;
    } else {
        c.kinetics.k1 = r.k1;
        c.kinetics.k2 = r.k2;
    }
    return solution_fingerprint(c, r.q_ccm);
}

std::string dump_name(double q) { return "fields/Q" + format_number(q) + ".dump"; }

int cmd_mesh(const Options& o) {
    const RunConfig rc = load(o);
    const auto mesh = build_mesh(rc.model);
    std::cout << "geometry = " << to_string(rc.model.geometry_kind) << '\n' << mesh_summary(*mesh);
    return kOk;
}

int cmd_run(const Options& o) {
    const RunConfig rc = load(o);
    const ModelConfig& m = rc.model;
    Model model(m);
    Outputs out(o, "run", rc);
    ResponseTable table;
    std::optional<Solution> previous;
    for (double q : m.q_ccm) {
        try {
            Solution s = model.solve(q, previous ? &*previous : nullptr);
            table.push_back(scalar_responses(s));
            if (o.dump_fields) out.write(dump_name(q), field_dump_text(s, m));
            previous = std::move(s);
        } catch (const ResourceError&) {
            throw;
        } catch (const Error& e) {
            table.push_back(failed_record(m.formulation, q, m.kinetics, m.sigma, e.what()));
        }
        const auto& r = table.back();
        out.add_point(r, point_fingerprint(m, r));
        progress("Q=" + format_number(q) + " outer=" + std::to_string(r.outer_iterations) +
                 " converged=" + (r.converged ? "1" : "0") + (r.error.empty() ? "" : " error=" + r.error));
    }
    out.write("responses.csv", response_csv(table));
    out.finish();
    const bool ok = std::all_of(table.begin(), table.end(), [](const auto& r) { return r.converged; });
    return ok ? kOk : kDivergence;
}

int cmd_sweep(const Options& o) {
    const RunConfig rc = load(o);
    const ModelConfig& m = rc.model;
    // k2 has no meaning for Alpha; sweeping it would only repeat rows.
    const std::vector<double> k2 =
        m.formulation == Formulation::Alpha ? std::vector<double>{m.kinetics.k2} : rc.sweep.k2;
    const auto q = o.q_ccm.empty() ? rc.sweep.q_ccm : o.q_ccm;
    Outputs out(o, "sweep", rc);
    const ResponseTable table = parametric_sweep(m, rc.sweep.k1, k2, q, o.workers, progress);
    for (const auto& r : table) out.add_point(r, point_fingerprint(m, r));
    out.write("sweep.csv", response_csv(table));
    out.finish();
    const bool ok = std::all_of(table.begin(), table.end(), [](const auto& r) { return r.converged; });
    return ok ? kOk : kDivergence;
}

std::string series_csv(const StudyReport& report) {
    CsvTable t;
    t.header = {"variable", "Q", "sigma", "n_cells", "h", "value"};
    for (const auto& s : report.series)
        for (const auto& p : s.points)
            t.rows.push_back({s.variable, format_number(s.q_ccm), std::to_string(p.sigma), std::to_string(p.n_cells),
                              format_number(p.h), format_number(p.value)});
    return t.to_string();
}

int cmd_gci(const Options& o) {
    const RunConfig rc = load(o);
    const auto& sigmas = rc.study.sigmas;
    const int sigma_max = sigmas.empty() ? 1 : *std::max_element(sigmas.begin(), sigmas.end());
    const StudySolver solver =
        rc.study.stub ? stub_study_solver(rc.model, sigma_max) : model_study_solver(rc.model);
    Outputs out(o, "gci", rc);
    const StudyReport report = convergence_study(rc.model, rc.study, solver, o.workers, progress);
    for (const auto& f : report.failures) progress("failed: " + f);
    out.write("gci_report.csv", study_report_csv(report));
    out.write("gci_series.csv", series_csv(report));
    out.finish();
    return report.failures.empty() ? kOk : kDivergence;
}

std::string profile_csv(const LineProfile& p) {
    CsvTable t;
    t.header = {p.coordinate, p.name};
    for (std::size_t i = 0; i < p.position.size(); ++i)
        t.rows.push_back({format_number(p.position[i]), format_number(p.value[i])});
    return t.to_string();
}

std::string surface_csv(const SurfaceData& s, const std::string& name, const std::vector<double>& v) {
    CsvTable t;
    t.header = {"x", "y", name, "area"};
    for (std::size_t i = 0; i < s.x.size(); ++i)
        t.rows.push_back({format_number(s.x[i]), format_number(s.y[i]), format_number(v[i]), format_number(s.area[i])});
    return t.to_string();
}

// Thickness-averaged R_bar per CL column; its area mean is one.
std::vector<double> column_r_bar(const Solution& s, const SurfaceData& surf) {
    const Mesh& mesh = *s.mesh;
    const auto rbar = r_bar_field(mesh, s.species);
    std::vector<double> out;
    out.reserve(surf.x.size());
    for (int j = 0; j < mesh.ny(); ++j)
        for (int i = 0; i < mesh.nx(); ++i) {
            double sum = 0.0, depth = 0.0;
            for (int k = mesh.k_cl(); k < mesh.nz(); ++k) {
                sum += rbar[mesh.cell(i, j, k)] * mesh.width(2, k);
                depth += mesh.width(2, k);
            }
            out.push_back(sum / depth);
        }
    return out;
}

int cmd_extract(const Options& o) {
    if (o.what != "all" && o.what != "profiles" && o.what != "surfaces" && o.what != "flux")
        throw ConfigError("--what must be profiles, surfaces, flux or all", 0, "--what");
    const LoadedDump dump = load_field_dump(read_file(o.dump_path));
    if (!o.config_path.empty()) {
        const std::string expected = solution_fingerprint(load(o).model, dump.solution.q_ccm);
        if (expected != dump.solution.fingerprint)
            throw Error("dump fingerprint " + dump.solution.fingerprint + " does not match the config (" +
                        expected + ")");
    }
    const Solution& s = dump.solution;
    Outputs out(o, "extract", RunConfig{dump.config, {}, {}});
    if (o.what == "all" || o.what == "profiles")
        for (const auto& line : profiles(s).lines) out.write("profile_" + line.name + ".csv", profile_csv(line));
    if (o.what == "all" || o.what == "surfaces") {
        const SurfaceData surf = surfaces(s);
        out.write("surface_P_O3.csv", surface_csv(surf, "P_O3", surf.partial_pressure));
        out.write("surface_R_bar.csv", surface_csv(surf, "R_bar", surf.r_bar));
        out.write("surface_R_dec.csv", surface_csv(surf, "R_dec", surf.r_dec));
        out.write("surface_R_bar_column.csv", surface_csv(surf, "R_bar_column", column_r_bar(s, surf)));
    }
    if (o.what == "all" || o.what == "flux") {
        const FluxReport f = flux_decomposition(s, dump.config.species);
        CsvTable t;
        t.header = {"quantity", "value"};
        const std::pair<const char*, double> rows[] = {
            {"ch_mps_convective_mol_s", f.ch_mps_convective},
            {"ch_mps_diffusive_mol_s", f.ch_mps_diffusive},
            {"mps_cl_convective_mol_s", f.mps_cl_convective},
            {"mps_cl_diffusive_mol_s", f.mps_cl_diffusive},
            {"mps_convective_mean_mol_m2_s", f.mps_convective_mean},
            {"mps_diffusive_mean_mol_m2_s", f.mps_diffusive_mean},
            {"cl_convective_mean_mol_m2_s", f.cl_convective_mean},
            {"cl_diffusive_mean_mol_m2_s", f.cl_diffusive_mean},
            {"mps_reaction_mol_s", f.mps_reaction},
        };
        for (const auto& [name, v] : rows) t.rows.push_back({name, format_number(v)});
        out.write("flux.csv", t.to_string());
    }
    out.finish();
    return kOk;
}

void add_common(CLI::App* sub, Options& o, bool solver_flags) {
    sub->add_option("--config", o.config_path, "Config file (flat dotted keys)");
    sub->add_option("--formulation", o.formulation, "alpha or beta");
    sub->add_option("--sigma", o.sigma, "Mesh refinement level")->check(CLI::PositiveNumber);
    if (!solver_flags) return;
    sub->add_option("--out-dir", o.out_dir, "Output directory");
    sub->add_option("--workers", o.workers, "Concurrent points (0: hardware threads)")->check(CLI::NonNegativeNumber);
    sub->add_option("--Q", o.q_ccm, "Flow rates in ccm, overriding the config")->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Steady reactive-transport simulator for a serpentine fuel-cell cathode"};
    app.require_subcommand(1);
    Options o;

    auto* mesh = app.add_subcommand("mesh", "Print the mesh summary");
    add_common(mesh, o, false);

    auto* run = app.add_subcommand("run", "Solve the Q schedule and write responses.csv");
    add_common(run, o, true);
    run->add_flag("--dump-fields", o.dump_fields, "Write a field dump per Q under fields/");

    auto* sweep = app.add_subcommand("sweep", "Parametric (k1, k2, Q) sweep to sweep.csv");
    add_common(sweep, o, true);

    auto* gci = app.add_subcommand("gci", "Grid-convergence study to gci_report.csv");
    add_common(gci, o, true);
    gci->add_flag("--stub", o.stub, "Use the manufactured power-law solver");

    auto* extract = app.add_subcommand("extract", "Profiles, surfaces and flux CSVs from a field dump");
    extract->add_option("dump", o.dump_path, "Field dump written by run --dump-fields")->required();
    extract->add_option("--what", o.what, "profiles, surfaces, flux or all");
    extract->add_option("--config", o.config_path, "Check the dump against this config");
    extract->add_option("--out-dir", o.out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (mesh->parsed()) return cmd_mesh(o);
        if (run->parsed()) return cmd_run(o);
        if (sweep->parsed()) return cmd_sweep(o);
        if (gci->parsed()) return cmd_gci(o);
        if (extract->parsed()) return cmd_extract(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kConfig;
    } catch (const ResourceError& e) {
        std::cerr << "resource error: " << e.what() << '\n';
        return kResource;
    } catch (const DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return kDivergence;
    } catch (const ConvergenceError& e) {
        std::cerr << "not converged: " << e.what() << '\n';
        return kDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kError;
    }
    return kError;
}
