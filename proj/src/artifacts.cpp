#include "protocell/artifacts.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <map>
#include <sstream>

#include <json.hpp>

#include "protocell/config.hpp"
#include "protocell/errors.hpp"
#include "protocell/io.hpp"

#ifndef PROTOCELL_VERSION
#define PROTOCELL_VERSION "0.0.0"
#endif

namespace protocell {

std::string_view tool_version() { return PROTOCELL_VERSION; }

std::string mesh_fingerprint(const Mesh& mesh) {
    std::string blob;
    for (int d = 0; d < 3; ++d) {
        blob += std::to_string(mesh.n(d)) + ';';
        for (double x : mesh.faces(d)) blob += format_number(x) + ',';
    }
    for (Region r : mesh.tags()) blob += static_cast<char>('0' + static_cast<int>(r));
    return fnv1a_hex(blob);
}

namespace {

const char* kMagic = "PROTOCELL_FIELD_DUMP";
const char* kLocation[] = {"FACE_X", "FACE_Y", "FACE_Z"};

void put_field(std::ostringstream& os, const std::string& name, const char* location,
               const std::vector<double>& v) {
    os << "FIELD " << name << ' ' << location << ' ' << v.size() << '\n';
    for (double x : v) os << format_number(x) << '\n';
}

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    std::string_view next() {
        if (pos_ >= text_.size()) throw Error("field dump: unexpected end at line " + std::to_string(line_));
        const auto end = text_.find('\n', pos_);
        const auto stop = end == std::string_view::npos ? text_.size() : end;
        std::string_view out = text_.substr(pos_, stop - pos_);
        pos_ = stop + 1;
        ++line_;
        return out;
    }
    bool done() const { return pos_ >= text_.size(); }
    int line() const { return line_; }

    /// "KEY value..." with the expected key; returns the remainder.
    std::string expect(std::string_view key) {
        const std::string_view l = next();
        if (l.substr(0, key.size()) != key || (l.size() > key.size() && l[key.size()] != ' '))
            throw Error("field dump line " + std::to_string(line_) + ": expected " + std::string(key));
        return l.size() > key.size() ? std::string(l.substr(key.size() + 1)) : std::string();
    }

    double number() { return parse_number(next()); }

    double parse_number(std::string_view s) const {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw Error("field dump line " + std::to_string(line_) + ": bad number '" + std::string(s) + "'");
        return v;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 0;
};

long long to_count(const std::string& s) {
    try {
        return std::stoll(s);
    } catch (const std::exception&) {
        throw Error("field dump: bad count '" + s + "'");
    }
}

}  // namespace

std::string field_dump_text(const Solution& s, const ModelConfig& config) {
    const Mesh& mesh = *s.mesh;
    std::ostringstream os;
    os << kMagic << " 1\n"
       << "FINGERPRINT " << s.fingerprint << '\n'
       << "MESH_FINGERPRINT " << mesh_fingerprint(mesh) << '\n'
       << "FORMULATION " << to_string(s.formulation) << '\n'
       << "Q_CCM " << format_number(s.q_ccm) << '\n'
       << "CONVERGED " << (s.converged ? 1 : 0) << '\n'
       << "OUTER_ITERATIONS " << s.outer_iterations << '\n'
       << "FLOW_ITERATIONS " << s.flow_iterations << '\n'
       << "SPECIES_INLET_VALUE " << format_number(s.species.inlet_value) << '\n'
       << "SPECIES_ITERATIONS " << s.species.iterations << '\n'
       << "SPECIES_CLIPPED " << s.species.clipped << '\n'
       << "SPECIES_DEGENERATE " << (s.species.degenerate_kinetics ? 1 : 0) << '\n';

    ModelConfig c = config;
    c.q_ccm = {s.q_ccm};
    c.kinetics = s.kinetics;
    c.formulation = s.formulation;
    const std::string text = config_to_text(c);
    os << "CONFIG " << std::count(text.begin(), text.end(), '\n') << '\n' << text;

    os << "DIMENSIONS " << mesh.nx() << ' ' << mesh.ny() << ' ' << mesh.nz() << '\n'
       << "ORIGIN " << format_number(mesh.faces(0).front()) << ' ' << format_number(mesh.faces(1).front())
       << ' ' << format_number(mesh.faces(2).front()) << '\n'
       << "SPACING nonuniform\n";
    const char* axis[] = {"X_FACES", "Y_FACES", "Z_FACES"};
    for (int d = 0; d < 3; ++d) {
        os << axis[d] << ' ' << mesh.faces(d).size() << '\n';
        for (double x : mesh.faces(d)) os << format_number(x) << '\n';
    }

    std::vector<double> region(mesh.cell_count());
    for (std::size_t i = 0; i < region.size(); ++i) region[i] = static_cast<int>(mesh.region(i));
    put_field(os, "region", "CELL", region);
    put_field(os, "pressure", "CELL", s.flow.pressure);
    put_field(os, "density", "CELL", s.flow.density);
    const std::pair<const char*, const std::vector<double>*> species[] = {
        {"omega", &s.species.omega},
        {"chi", &s.species.chi},
        {"concentration", &s.species.concentration},
        {"partial_pressure", &s.species.partial_pressure},
        {"theta", &s.species.theta},
        {"r_dec", &s.species.r_dec},
        {"sink", &s.species.sink},
    };
    for (const auto& [name, v] : species)
        if (!v->empty()) put_field(os, name, "CELL", *v);
    // Cell-centred velocity for viewers; ignored on load.
    std::array<std::vector<double>, 3> uc;
    for (auto& v : uc) v.resize(mesh.cell_count());
    for (std::size_t i = 0; i < mesh.cell_count(); ++i) {
        const auto u = cell_velocity(mesh, s.flow, i);
        for (int d = 0; d < 3; ++d) uc[d][i] = u[d];
    }
    put_field(os, "cell_velocity_x", "CELL", uc[0]);
    put_field(os, "cell_velocity_y", "CELL", uc[1]);
    put_field(os, "cell_velocity_z", "CELL", uc[2]);
    const char* comp[] = {"x", "y", "z"};
    for (int d = 0; d < 3; ++d) put_field(os, std::string("velocity_") + comp[d], kLocation[d], s.flow.velocity[d]);
    for (int d = 0; d < 3; ++d)
        put_field(os, std::string("mass_flux_") + comp[d], kLocation[d], s.flow.mass_flux[d]);
    return os.str();
}

std::string field_dump_fingerprint(std::string_view text) {
    LineReader in(text);
    if (in.expect(kMagic) != "1") throw Error("field dump: unsupported version");
    return in.expect("FINGERPRINT");
}

LoadedDump load_field_dump(std::string_view text) {
    LineReader in(text);
    if (in.expect(kMagic) != "1") throw Error("field dump: unsupported version");
    LoadedDump out;
    Solution& s = out.solution;
    s.fingerprint = in.expect("FINGERPRINT");
    const std::string mesh_fp = in.expect("MESH_FINGERPRINT");
    s.formulation = parse_formulation(in.expect("FORMULATION"));
    s.q_ccm = in.parse_number(in.expect("Q_CCM"));
    s.converged = in.expect("CONVERGED") == "1";
    s.outer_iterations = static_cast<int>(to_count(in.expect("OUTER_ITERATIONS")));
    s.flow_iterations = static_cast<int>(to_count(in.expect("FLOW_ITERATIONS")));
    s.species.inlet_value = in.parse_number(in.expect("SPECIES_INLET_VALUE"));
    s.species.iterations = static_cast<int>(to_count(in.expect("SPECIES_ITERATIONS")));
    s.species.clipped = static_cast<std::size_t>(to_count(in.expect("SPECIES_CLIPPED")));
    s.species.degenerate_kinetics = in.expect("SPECIES_DEGENERATE") == "1";

    const long long n_config = to_count(in.expect("CONFIG"));
    std::string config_text;
    for (long long i = 0; i < n_config; ++i) config_text += std::string(in.next()) + '\n';
    out.config = parse_config(config_text).model;
    // The budget in the dump may differ from the one in force now.
    out.config.cell_budget = std::max(out.config.cell_budget, cell_budget_from_env());
    if (solution_fingerprint(out.config, s.q_ccm) != s.fingerprint)
        throw Error("field dump: fingerprint does not match the embedded config");

    s.mesh = build_mesh(out.config);
    const Mesh& mesh = *s.mesh;
    if (mesh_fingerprint(mesh) != mesh_fp)
        throw Error("field dump: mesh mismatch (dump " + mesh_fp + ", rebuilt " + mesh_fingerprint(mesh) + ")");
    s.materials = out.config.materials;
    s.kinetics = out.config.kinetics;
    s.chi_in = out.config.chi_in;
    s.c_in = out.config.c_in;
    s.p_out = out.config.p_out;
    s.flow.converged = s.converged;
    s.flow.iterations = s.flow_iterations;

    std::istringstream dims(in.expect("DIMENSIONS"));
    int nx = 0, ny = 0, nz = 0;
    dims >> nx >> ny >> nz;
    if (nx != mesh.nx() || ny != mesh.ny() || nz != mesh.nz()) throw Error("field dump: dimension mismatch");
    in.expect("ORIGIN");
    in.expect("SPACING");
    for (const char* axis : {"X_FACES", "Y_FACES", "Z_FACES"}) {
        const long long n = to_count(in.expect(axis));
        for (long long i = 0; i < n; ++i) in.number();
    }

    std::map<std::string, std::vector<double>*> targets{
        {"pressure", &s.flow.pressure},
        {"density", &s.flow.density},
        {"omega", &s.species.omega},
        {"chi", &s.species.chi},
        {"concentration", &s.species.concentration},
        {"partial_pressure", &s.species.partial_pressure},
        {"theta", &s.species.theta},
        {"r_dec", &s.species.r_dec},
        {"sink", &s.species.sink},
        {"velocity_x", &s.flow.velocity[0]},
        {"velocity_y", &s.flow.velocity[1]},
        {"velocity_z", &s.flow.velocity[2]},
        {"mass_flux_x", &s.flow.mass_flux[0]},
        {"mass_flux_y", &s.flow.mass_flux[1]},
        {"mass_flux_z", &s.flow.mass_flux[2]},
    };
    while (!in.done()) {
        const std::string l = in.expect("FIELD");
        std::istringstream hs(l);
        std::string name, location;
        long long count = -1;
        hs >> name >> location >> count;
        std::size_t expected = mesh.cell_count();
        for (int d = 0; d < 3; ++d)
            if (location == kLocation[d]) expected = mesh.face_count(d);
        if (count < 0 || static_cast<std::size_t>(count) != expected)
            throw Error("field dump: field '" + name + "' has " + std::to_string(count) + " values, expected " +
                        std::to_string(expected));
        std::vector<double> values(static_cast<std::size_t>(count));
        for (auto& v : values) v = in.number();
        if (const auto it = targets.find(name); it != targets.end()) *it->second = std::move(values);
    }
    for (const char* required : {"pressure", "density", "chi", "r_dec", "velocity_x", "velocity_y", "velocity_z",
                                 "mass_flux_x", "mass_flux_y", "mass_flux_z"})
        if (targets.at(required)->empty()) throw Error(std::string("field dump: missing field ") + required);
    return out;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config_fingerprint"] = config_fingerprint;
    j["tool_version"] = tool_version;
    j["started"] = started;
    j["finished"] = finished;
    j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : points) {
        nlohmann::ordered_json e;
        e["Q_ccm"] = p.q_ccm;
        e["k1"] = p.k1;
        e["k2"] = p.k2;
        e["fingerprint"] = p.fingerprint;
        e["converged"] = p.converged;
        e["outer_iterations"] = p.outer_iterations;
        if (!p.error.empty()) e["error"] = p.error;
        j["points"].push_back(std::move(e));
    }
    j["files"] = files;
    return j.dump(2) + '\n';
}

}  // namespace protocell
