#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace protocell {

enum class Region : std::uint8_t { Channel = 0, LandSolid = 1, Mps = 2, Cl = 3 };

std::string_view to_string(Region r);

enum class GeometryKind { Reduced, Full };

std::string_view to_string(GeometryKind k);
GeometryKind parse_geometry_kind(std::string_view s);

/// Serpentine channel over two porous layers. Lengths in metres.
///
/// Layout: straight sections run along y and are stacked along x, separated
/// by lands; z points from the channel bottom up through the macroporous
/// substrate (MPS) into the catalyst layer (CL). The porous footprint is the
/// serpentine footprint grown by `inlet_offset` in x and y, with the
/// serpentine centred in it.
struct GeometrySpec {
    double channel_width = 0.8e-3;
    double land_width = 1.6e-3;
    double channel_depth = 1.0e-3;
    double section_length = 22.4e-3;
    int n_sections = 10;
    double mps_thickness = 190e-6;
    double cl_thickness = 150e-6;
    double inlet_offset = 4.7752e-3;

    /// Throws ValidationError naming the first offending field.
    void validate() const;

    double serpentine_width() const {
        return n_sections * channel_width + (n_sections - 1) * land_width;
    }
    double porous_width_x() const { return serpentine_width() + inlet_offset; }
    double porous_width_y() const { return section_length + inlet_offset; }
    double total_thickness() const { return channel_depth + mps_thickness + cl_thickness; }

    friend bool operator==(const GeometrySpec&, const GeometrySpec&) = default;
};

struct GeometryOverrides {
    std::optional<double> channel_width;
    std::optional<double> land_width;
    std::optional<double> channel_depth;
    std::optional<double> section_length;
    std::optional<int> n_sections;
    std::optional<double> mps_thickness;
    std::optional<double> cl_thickness;
    std::optional<double> inlet_offset;
};

/// Table defaults with 4 (reduced) or 10 (full) sections, then overrides.
GeometrySpec build_geometry(GeometryKind kind, const GeometryOverrides& overrides = {});

enum class FaceKind : std::uint8_t { Wall = 0, Interior = 1, Inlet = 2, Outlet = 3, Symmetry = 4 };

inline constexpr std::size_t kDefaultCellBudget = 5'000'000;

/// Reads PROTOCELL_CELL_BUDGET, falling back to kDefaultCellBudget.
std::size_t cell_budget_from_env();

/// Cell-index extents of one straight section (half-open ranges).
struct SectionCells {
    int i0, i1;  // x
    int j0, j1;  // y, section proper without lead-in
};

/// Structured Cartesian discretization of a GeometrySpec.
///
/// Faces are addressed per normal direction d in {0,1,2}; face (d,i,j,k) sits
/// on the low side of cell (i,j,k) along d, so direction d has n_d + 1 face
/// layers. Cells tagged LandSolid are excluded from every solve.
class Mesh {
public:
    int nx() const { return n_[0]; }
    int ny() const { return n_[1]; }
    int nz() const { return n_[2]; }
    int n(int d) const { return n_[d]; }
    std::size_t cell_count() const { return tags_.size(); }
    int sigma() const { return sigma_; }
    bool wall_graded() const { return wall_graded_; }
    const GeometrySpec& spec() const { return spec_; }

    std::size_t cell(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(n_[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(n_[1]) * k);
    }
    std::array<int, 3> cell_ijk(std::size_t c) const;
    Region region(std::size_t c) const { return tags_[c]; }
    Region region(int i, int j, int k) const { return tags_[cell(i, j, k)]; }
    bool active(std::size_t c) const { return tags_[c] != Region::LandSolid; }
    const std::vector<Region>& tags() const { return tags_; }

    /// Face coordinates along axis d (n(d)+1 values).
    const std::vector<double>& faces(int d) const { return faces_[d]; }
    const std::vector<double>& centers(int d) const { return centers_[d]; }
    double width(int d, int idx) const { return faces_[d][idx + 1] - faces_[d][idx]; }
    double volume(std::size_t c) const;

    std::size_t face_count(int d) const { return face_kind_[d].size(); }
    std::array<int, 3> face_dims(int d) const {
        std::array<int, 3> dims = n_;
        dims[d] += 1;
        return dims;
    }
    std::size_t face(int d, int i, int j, int k) const {
        const auto dims = face_dims(d);
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
    }
    std::array<int, 3> face_ijk(int d, std::size_t f) const;
    FaceKind face_kind(int d, std::size_t f) const { return face_kind_[d][f]; }
    const std::vector<FaceKind>& face_kinds(int d) const { return face_kind_[d]; }
    /// Area of face (d, *, j, k) etc.; only the two transverse widths matter.
    double face_area(int d, int i, int j, int k) const;

    // Layer boundaries in z cell index: channel [0,k_mps), MPS [k_mps,k_cl),
    // CL [k_cl,nz).
    int k_mps() const { return k_mps_; }
    int k_cl() const { return k_cl_; }

    const std::vector<SectionCells>& sections() const { return sections_; }
    int lead_cells() const { return lead_cells_; }
    /// Inlet and outlet boundary faces in direction y.
    const std::vector<std::size_t>& inlet_faces() const { return inlet_faces_; }
    const std::vector<std::size_t>& outlet_faces() const { return outlet_faces_; }
    double inlet_area() const { return inlet_area_; }
    double outlet_area() const { return outlet_area_; }

    std::size_t count(Region r) const { return counts_[static_cast<int>(r)]; }
    double region_volume(Region r) const;

    friend Mesh generate_mesh(const GeometrySpec&, int, bool, std::size_t);
    friend Mesh make_box_mesh(const struct BoxMeshSpec&);
    friend void classify_faces(Mesh&);

private:
    Mesh() = default;

    GeometrySpec spec_;
    int sigma_ = 1;
    bool wall_graded_ = false;
    std::array<int, 3> n_{};
    std::array<std::vector<double>, 3> faces_;
    std::array<std::vector<double>, 3> centers_;
    std::vector<Region> tags_;
    std::array<std::vector<FaceKind>, 3> face_kind_;
    int k_mps_ = 0, k_cl_ = 0;
    std::vector<SectionCells> sections_;
    int lead_cells_ = 0;
    std::vector<std::size_t> inlet_faces_, outlet_faces_;
    double inlet_area_ = 0.0, outlet_area_ = 0.0;
    std::array<std::size_t, 4> counts_{};
};

/// In-plane spacing is channel_width/(2 sigma); each of the three z-layers
/// gets sigma cells. With `wall_graded`, the channel layer's cells shrink
/// geometrically (ratio 1.5, three cells) toward its bottom and top walls.
/// Throws ResourceError when the cell count exceeds `cell_budget`.
Mesh generate_mesh(const GeometrySpec& spec, int sigma, bool wall_graded,
                   std::size_t cell_budget = kDefaultCellBudget);

/// Straight box used by verification problems: inflow over the whole y = 0
/// face, pressure outlet over the whole y = L face. Lateral boundaries are
/// no-slip walls unless flagged as symmetry planes.
struct BoxMeshSpec {
    std::array<int, 3> cells{8, 8, 8};
    std::array<double, 3> length{1e-3, 1e-3, 1e-3};
    Region fill = Region::Channel;
    bool symmetry_x = false;
    bool symmetry_z = false;
};

Mesh make_box_mesh(const BoxMeshSpec& spec);

/// Relative z-widths of the channel layer cells (sum 1).
std::vector<double> channel_layer_weights(int sigma, bool wall_graded);

/// (n_finer / n_coarser)^(1/dim).
double effective_refinement_factor(long long n_finer, long long n_coarser, int dim);

/// Analytic serpentine length: n sections plus n-1 land-bridging turns.
double analytic_serpentine_length(const GeometrySpec& spec);
/// Rasterized counterpart: planform area of the non-lead-in channel cells
/// divided by the channel width.
double rasterized_serpentine_length(const Mesh& mesh);
/// Analytic channel volume including the inlet/outlet lead-ins of length
/// inlet_offset/2.
double analytic_channel_volume(const GeometrySpec& spec);

/// True when the channel cells of the channel layer form one 4-connected
/// planform component touching both the inlet and outlet faces.
bool channel_is_connected(const Mesh& mesh);

/// Key-value text block: N, per-region counts, spacings, layer layout.
std::string mesh_summary(const Mesh& mesh);

}  // namespace protocell
