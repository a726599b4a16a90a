#include "protocell/config.hpp"

#include <charconv>
#include <functional>
#include <set>

#include "protocell/errors.hpp"
#include "protocell/io.hpp"

namespace protocell {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size())
        throw Error("expected a number, got '" + std::string(s) + "'");
    return v;
}

long long to_integer(std::string_view s) {
    s = trim(s);
    long long v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size())
        throw Error("expected an integer, got '" + std::string(s) + "'");
    return v;
}

bool to_bool(std::string_view s) {
    s = trim(s);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw Error("expected true or false, got '" + std::string(s) + "'");
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    while (true) {
        const auto c = s.find(',');
        const auto item = trim(s.substr(0, c));
        if (!item.empty()) out.push_back(item);
        if (c == std::string_view::npos) break;
        s = s.substr(c + 1);
    }
    return out;
}

std::vector<double> to_doubles(std::string_view s) {
    std::vector<double> v;
    for (auto item : split_list(s)) v.push_back(to_double(item));
    return v;
}

std::vector<int> to_ints(std::string_view s) {
    std::vector<int> v;
    for (auto item : split_list(s)) v.push_back(static_cast<int>(to_integer(item)));
    return v;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
    return s;
}

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
    return s;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

struct Key {
    std::string name;
    std::function<void(RunConfig&, std::string_view)> set;
    // Empty result: key omitted (unset optional).
    std::function<std::string(const RunConfig&)> get;
    bool model_key = true;
};

template <class T>
Key number_key(std::string name, T ModelConfig::*group, double T::*field) {
    return {std::move(name),
            [group, field](RunConfig& c, std::string_view v) { (c.model.*group).*field = to_double(v); },
            [group, field](const RunConfig& c) { return format_number((c.model.*group).*field); }};
}

Key geometry_key(std::string name, std::optional<double> GeometryOverrides::*field) {
    return {std::move(name),
            [field](RunConfig& c, std::string_view v) { c.model.geometry.*field = to_double(v); },
            [field](const RunConfig& c) {
                const auto& o = c.model.geometry.*field;
                return o ? format_number(*o) : std::string();
            }};
}

const std::vector<Key>& keys() {
    static const std::vector<Key> table = [] {
        using MC = ModelConfig;
        std::vector<Key> k;
        k.push_back({"model.formulation",
                     [](RunConfig& c, std::string_view v) { c.model.formulation = parse_formulation(v); },
                     [](const RunConfig& c) { return std::string(to_string(c.model.formulation)); }});
        k.push_back({"geometry.kind",
                     [](RunConfig& c, std::string_view v) { c.model.geometry_kind = parse_geometry_kind(v); },
                     [](const RunConfig& c) { return std::string(to_string(c.model.geometry_kind)); }});
        k.push_back(geometry_key("geometry.channel_width", &GeometryOverrides::channel_width));
        k.push_back(geometry_key("geometry.land_width", &GeometryOverrides::land_width));
        k.push_back(geometry_key("geometry.channel_depth", &GeometryOverrides::channel_depth));
        k.push_back(geometry_key("geometry.section_length", &GeometryOverrides::section_length));
        k.push_back({"geometry.n_sections",
                     [](RunConfig& c, std::string_view v) {
                         c.model.geometry.n_sections = static_cast<int>(to_integer(v));
                     },
                     [](const RunConfig& c) {
                         const auto& o = c.model.geometry.n_sections;
                         return o ? std::to_string(*o) : std::string();
                     }});
        k.push_back(geometry_key("geometry.mps_thickness", &GeometryOverrides::mps_thickness));
        k.push_back({"geometry.cl_thickness",
                     [](RunConfig& c, std::string_view v) {
                         c.model.geometry.cl_thickness = to_double(v);
                         c.model.kinetics.t_cl = *c.model.geometry.cl_thickness;
                     },
                     [](const RunConfig& c) {
                         const auto& o = c.model.geometry.cl_thickness;
                         return o ? format_number(*o) : std::string();
                     }});
        k.push_back(geometry_key("geometry.inlet_offset", &GeometryOverrides::inlet_offset));
        k.push_back({"mesh.sigma",
                     [](RunConfig& c, std::string_view v) { c.model.sigma = static_cast<int>(to_integer(v)); },
                     [](const RunConfig& c) { return std::to_string(c.model.sigma); }});
        k.push_back({"mesh.wall_graded",
                     [](RunConfig& c, std::string_view v) { c.model.wall_graded = to_bool(v); },
                     [](const RunConfig& c) { return bool_text(c.model.wall_graded); }});
        k.push_back({"mesh.cell_budget",
                     [](RunConfig& c, std::string_view v) {
                         const auto n = to_integer(v);
                         if (n <= 0) throw Error("must be positive");
                         c.model.cell_budget = static_cast<std::size_t>(n);
                     },
                     [](const RunConfig& c) { return std::to_string(c.model.cell_budget); }});
        k.push_back(number_key("materials.epsilon_mps", &MC::materials, &MaterialParams::epsilon_mps));
        k.push_back({"materials.epsilon_cl",
                     [](RunConfig& c, std::string_view v) {
                         c.model.materials.epsilon_cl = c.model.kinetics.epsilon_cl = to_double(v);
                     },
                     [](const RunConfig& c) { return format_number(c.model.materials.epsilon_cl); }});
        k.push_back(number_key("materials.kappa_mps", &MC::materials, &MaterialParams::kappa_mps));
        k.push_back(number_key("materials.kappa_cl", &MC::materials, &MaterialParams::kappa_cl));
        k.push_back(number_key("materials.tau_mps", &MC::materials, &MaterialParams::tau_mps));
        k.push_back({"materials.tortuosity_model_cl",
                     [](RunConfig& c, std::string_view v) {
                         c.model.materials.tortuosity_model_cl = parse_tortuosity_model(v);
                     },
                     [](const RunConfig& c) {
                         return std::string(to_string(c.model.materials.tortuosity_model_cl));
                     }});
        k.push_back(number_key("materials.tau_cl", &MC::materials, &MaterialParams::tau_cl_explicit));
        k.push_back(number_key("materials.d_free", &MC::materials, &MaterialParams::d_free));
        k.push_back({"materials.r_p",
                     [](RunConfig& c, std::string_view v) {
                         c.model.materials.r_p = c.model.kinetics.r_p = to_double(v);
                     },
                     [](const RunConfig& c) { return format_number(c.model.materials.r_p); }});
        k.push_back({"materials.pore_diameter_cl",
                     [](RunConfig& c, std::string_view v) { c.model.materials.pore_diameter_cl = to_double(v); },
                     [](const RunConfig& c) {
                         const auto& o = c.model.materials.pore_diameter_cl;
                         return o ? format_number(*o) : std::string();
                     }});
        k.push_back(number_key("materials.molar_mass_air", &MC::materials, &MaterialParams::molar_mass_air));
        k.push_back({"materials.molar_mass_o3",
                     [](RunConfig& c, std::string_view v) {
                         c.model.materials.molar_mass_o3 = c.model.kinetics.molar_mass_o3 = to_double(v);
                     },
                     [](const RunConfig& c) { return format_number(c.model.materials.molar_mass_o3); }});
        k.push_back(number_key("materials.temperature", &MC::materials, &MaterialParams::temperature));
        k.push_back(number_key("materials.p_ref", &MC::materials, &MaterialParams::p_ref));
        k.push_back({"transport.coupling_scheme",
                     [](RunConfig& c, std::string_view v) { c.model.materials.coupling = parse_coupling_scheme(v); },
                     [](const RunConfig& c) { return std::string(to_string(c.model.materials.coupling)); }});
        k.push_back({"transport.pressure_diffusion",
                     [](RunConfig& c, std::string_view v) { c.model.species.pressure_diffusion = to_bool(v); },
                     [](const RunConfig& c) { return bool_text(c.model.species.pressure_diffusion); }});
        k.push_back(number_key("kinetics.k1", &MC::kinetics, &KineticsParams::k1));
        k.push_back(number_key("kinetics.k2", &MC::kinetics, &KineticsParams::k2));
        k.push_back(number_key("kinetics.k_app", &MC::kinetics, &KineticsParams::k_app));
        k.push_back(number_key("kinetics.gamma_dye", &MC::kinetics, &KineticsParams::gamma_dye));
        k.push_back({"inlet.chi_o3", [](RunConfig& c, std::string_view v) { c.model.chi_in = to_double(v); },
                     [](const RunConfig& c) { return format_number(c.model.chi_in); }});
        k.push_back({"inlet.c_o3", [](RunConfig& c, std::string_view v) { c.model.c_in = to_double(v); },
                     [](const RunConfig& c) { return format_number(c.model.c_in); }});
        k.push_back({"outlet.p_out", [](RunConfig& c, std::string_view v) { c.model.p_out = to_double(v); },
                     [](const RunConfig& c) { return format_number(c.model.p_out); }});
        k.push_back({"run.Q_ccm", [](RunConfig& c, std::string_view v) { c.model.q_ccm = to_doubles(v); },
                     [](const RunConfig& c) { return join(c.model.q_ccm); }});
        k.push_back({"solver.tolerance",
                     [](RunConfig& c, std::string_view v) { c.model.outer_tolerance = to_double(v); },
                     [](const RunConfig& c) { return format_number(c.model.outer_tolerance); }});
        k.push_back({"solver.max_outer_iterations",
                     [](RunConfig& c, std::string_view v) {
                         c.model.max_outer_iterations = static_cast<int>(to_integer(v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.model.max_outer_iterations); }});
        k.push_back({"solver.divergence_window",
                     [](RunConfig& c, std::string_view v) {
                         c.model.divergence_window = static_cast<int>(to_integer(v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.model.divergence_window); }});
        k.push_back(number_key("flow.relax_velocity", &MC::flow, &FlowOptions::relax_velocity));
        k.push_back(number_key("flow.relax_pressure", &MC::flow, &FlowOptions::relax_pressure));
        k.push_back(number_key("flow.tolerance", &MC::flow, &FlowOptions::tolerance));
        k.push_back({"flow.max_iterations",
                     [](RunConfig& c, std::string_view v) {
                         c.model.flow.max_iterations = static_cast<int>(to_integer(v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.model.flow.max_iterations); }});
        k.push_back(number_key("species.tolerance", &MC::species, &SpeciesOptions::tolerance));
        k.push_back({"species.max_iterations",
                     [](RunConfig& c, std::string_view v) {
                         c.model.species.max_iterations = static_cast<int>(to_integer(v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.model.species.max_iterations); }});

        // Sweep and study settings do not change a single solution, so they
        // stay out of the fingerprint text.
        auto extra = [&k](std::string name, std::function<void(RunConfig&, std::string_view)> set,
                          std::function<std::string(const RunConfig&)> get) {
            k.push_back({std::move(name), std::move(set), std::move(get), false});
        };
        extra("sweep.k1", [](RunConfig& c, std::string_view v) { c.sweep.k1 = to_doubles(v); },
              [](const RunConfig& c) { return join(c.sweep.k1); });
        extra("sweep.k2", [](RunConfig& c, std::string_view v) { c.sweep.k2 = to_doubles(v); },
              [](const RunConfig& c) { return join(c.sweep.k2); });
        extra("sweep.Q_ccm", [](RunConfig& c, std::string_view v) { c.sweep.q_ccm = to_doubles(v); },
              [](const RunConfig& c) { return join(c.sweep.q_ccm); });
        extra("study.sigma", [](RunConfig& c, std::string_view v) { c.study.sigmas = to_ints(v); },
              [](const RunConfig& c) { return join(c.study.sigmas); });
        extra("study.variables",
              [](RunConfig& c, std::string_view v) {
                  c.study.variables.clear();
                  for (auto item : split_list(v)) c.study.variables.emplace_back(item);
              },
              [](const RunConfig& c) { return join(c.study.variables); });
        extra("study.gre_sigma", [](RunConfig& c, std::string_view v) { c.study.gre_sigmas = to_ints(v); },
              [](const RunConfig& c) { return join(c.study.gre_sigmas); });
        extra("study.moe12_sigma",
              [](RunConfig& c, std::string_view v) { c.study.moe12_sigmas = to_ints(v); },
              [](const RunConfig& c) { return join(c.study.moe12_sigmas); });
        extra("study.moe123_sigma",
              [](RunConfig& c, std::string_view v) { c.study.moe123_sigmas = to_ints(v); },
              [](const RunConfig& c) { return join(c.study.moe123_sigmas); });
        extra("study.stub", [](RunConfig& c, std::string_view v) { c.study.stub = to_bool(v); },
              [](const RunConfig& c) { return bool_text(c.study.stub); });
        extra("study.safety_factor",
              [](RunConfig& c, std::string_view v) { c.study.safety_factor = to_double(v); },
              [](const RunConfig& c) { return format_number(c.study.safety_factor); });
        return k;
    }();
    return table;
}

const Key* find_key(std::string_view name) {
    for (const auto& k : keys())
        if (k.name == name) return &k;
    return nullptr;
}

std::string render(const RunConfig& c, bool model_only) {
    std::string out;
    for (const auto& k : keys()) {
        if (model_only && !k.model_key) continue;
        const std::string v = k.get(c);
        if (v.empty()) continue;
        out += k.name + " = " + v + "\n";
    }
    return out;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
    RunConfig c;
    std::set<std::string, std::less<>> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("expected 'key = value', got '" + std::string(line) + "'", line_no,
                              std::string(line));
        const std::string key(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        const Key* k = find_key(key);
        if (!k) throw ConfigError("unknown key '" + key + "'", line_no, key);
        if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'", line_no, key);
        try {
            k->set(c, value);
        } catch (const Error& e) {
            throw ConfigError(key + ": " + e.what(), line_no, key);
        }
    }
    try {
        c.model.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what(), 0, e.field());
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text);
}

std::string config_to_text(const RunConfig& config) { return render(config, false); }

std::string config_to_text(const ModelConfig& config) {
    RunConfig c;
    c.model = config;
    return render(c, true);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : keys()) out.push_back(k.name);
    return out;
}

}  // namespace protocell
