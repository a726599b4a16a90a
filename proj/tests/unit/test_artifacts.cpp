#include <gtest/gtest.h>

#include <json.hpp>

#include "protocell/artifacts.hpp"
#include "protocell/config.hpp"
#include "protocell/errors.hpp"
#include "protocell/response.hpp"

using namespace protocell;

namespace {

struct Fixture {
    ModelConfig config;
    Solution solution;
    std::string text;
};

const Fixture& fixture() {
    static const Fixture f = [] {
        Fixture out;
        out.config.sigma = 1;
        out.config.q_ccm = {250};
        out.solution = segregated_solve(out.config, 250);
        out.text = field_dump_text(out.solution, out.config);
        return out;
    }();
    return f;
}

std::string replace_line(std::string text, const std::string& prefix, const std::string& line) {
    const auto pos = text.find("\n" + prefix);
    const auto end = text.find('\n', pos + 1);
    return text.replace(pos + 1, end - pos - 1, line);
}

}  // namespace

TEST(FieldDump, HeaderDescribesTheGrid) {
    const auto& f = fixture();
    const Mesh& m = *f.solution.mesh;
    EXPECT_EQ(f.text.rfind("PROTOCELL_FIELD_DUMP 1\n", 0), 0u);
    EXPECT_NE(f.text.find("DIMENSIONS " + std::to_string(m.nx()) + ' ' + std::to_string(m.ny()) + ' ' +
                          std::to_string(m.nz()) + '\n'),
              std::string::npos);
    EXPECT_NE(f.text.find("\nORIGIN 0 0 0\n"), std::string::npos);
    EXPECT_NE(f.text.find("\nFIELD chi CELL " + std::to_string(m.cell_count()) + '\n'), std::string::npos);
    EXPECT_EQ(field_dump_fingerprint(f.text), f.solution.fingerprint);
}

TEST(FieldDump, RoundTripRestoresFieldsBitwise) {
    const auto& f = fixture();
    const LoadedDump back = load_field_dump(f.text);
    const Solution& s = back.solution;
    EXPECT_EQ(s.fingerprint, f.solution.fingerprint);
    EXPECT_EQ(s.flow.pressure, f.solution.flow.pressure);
    EXPECT_EQ(s.flow.mass_flux, f.solution.flow.mass_flux);
    EXPECT_EQ(s.flow.velocity, f.solution.flow.velocity);
    EXPECT_EQ(s.species.chi, f.solution.species.chi);
    EXPECT_EQ(s.species.omega, f.solution.species.omega);
    EXPECT_EQ(s.species.r_dec, f.solution.species.r_dec);
    EXPECT_EQ(config_to_text(back.config), config_to_text(ModelConfig(f.config)));

    const auto a = scalar_responses(f.solution), b = scalar_responses(s);
    EXPECT_EQ(response_csv({a}), response_csv({b}));
    EXPECT_EQ(field_dump_text(s, back.config), f.text);
}

TEST(FieldDump, DetectsMeshMismatch) {
    const auto& f = fixture();
    EXPECT_THROW(load_field_dump(replace_line(f.text, "MESH_FINGERPRINT", "MESH_FINGERPRINT 0000000000000000")),
                 Error);
    // A different mesh parameter changes the fingerprint too.
    EXPECT_THROW(load_field_dump(replace_line(f.text, "mesh.sigma", "mesh.sigma = 2")), Error);
}

TEST(FieldDump, RejectsTruncatedAndForeignFiles) {
    const auto& f = fixture();
    EXPECT_THROW(load_field_dump(f.text.substr(0, f.text.size() / 2)), Error);
    EXPECT_THROW(load_field_dump("hello\n"), Error);
}

TEST(Manifest, JsonListsPointsAndFiles) {
    RunManifest m;
    m.command = "run";
    m.config_fingerprint = "abc";
    m.tool_version = std::string(tool_version());
    m.started = utc_timestamp();
    m.finished = m.started;
    m.points.push_back({250, 100, 10, "f1", true, 3, ""});
    m.points.push_back({300, 100, 10, "f2", false, 200, "diverged"});
    m.files = {"responses.csv"};
    const auto j = nlohmann::json::parse(m.to_json());
    EXPECT_EQ(j["points"].size(), 2u);
    EXPECT_EQ(j["points"][1]["error"], "diverged");
    EXPECT_FALSE(j["points"][0].contains("error"));
    EXPECT_EQ(j["files"][0], "responses.csv");
    EXPECT_EQ(m.started.size(), 20u);
}
