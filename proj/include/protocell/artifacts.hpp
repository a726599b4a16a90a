#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "protocell/solver.hpp"

namespace protocell {

std::string_view tool_version();

/// Hash of dimensions, face coordinates and region tags.
std::string mesh_fingerprint(const Mesh& mesh);

/// Plain-text structured-points dump of a solution.
///
///     PROTOCELL_FIELD_DUMP 1
///     FINGERPRINT <hex>            solution fingerprint
///     MESH_FINGERPRINT <hex>
///     FORMULATION beta|alpha
///     Q_CCM <value>
///     ... scalar header lines ...
///     CONFIG <n>                   followed by n lines of model config
///     DIMENSIONS nx ny nz
///     ORIGIN x0 y0 z0
///     SPACING nonuniform
///     X_FACES <nx+1>               followed by one coordinate per line
///     Y_FACES <ny+1>
///     Z_FACES <nz+1>
///     FIELD <name> <CELL|FACE_X|FACE_Y|FACE_Z> <count>
///     <count values, one per line>
///
/// Cell fields are ordered x fastest, then y, then z. Face field d has
/// n(d)+1 entries along axis d.
std::string field_dump_text(const Solution& solution, const ModelConfig& config);

struct LoadedDump {
    ModelConfig config;
    Solution solution;
};

/// Rebuilds the mesh from the embedded config and restores the fields.
/// Throws Error when the rebuilt mesh or the recomputed fingerprint does
/// not match the header.
LoadedDump load_field_dump(std::string_view text);

/// Reads only the header fingerprint.
std::string field_dump_fingerprint(std::string_view text);

struct ManifestPoint {
    double q_ccm = 0.0;
    double k1 = 0.0, k2 = 0.0;
    std::string fingerprint;
    bool converged = false;
    int outer_iterations = 0;
    std::string error;
};

struct RunManifest {
    std::string command;
    std::string config_fingerprint;
    std::string tool_version;
    std::string started, finished;  // UTC, ISO 8601
    std::vector<ManifestPoint> points;
    std::vector<std::string> files;

    std::string to_json() const;
};

std::string utc_timestamp();

}  // namespace protocell
