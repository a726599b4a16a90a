#include "protocell/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <queue>
#include <sstream>

#include "protocell/errors.hpp"

namespace protocell {

std::string_view to_string(Region r) {
    switch (r) {
        case Region::Channel: return "CHANNEL";
        case Region::LandSolid: return "LAND_SOLID";
        case Region::Mps: return "MPS";
        case Region::Cl: return "CL";
    }
    return "?";
}

std::string_view to_string(GeometryKind k) {
    return k == GeometryKind::Reduced ? "reduced" : "full";
}

GeometryKind parse_geometry_kind(std::string_view s) {
    if (s == "reduced") return GeometryKind::Reduced;
    if (s == "full") return GeometryKind::Full;
    throw ValidationError("geometry.kind", "expected 'reduced' or 'full', got '" +
                                               std::string(s) + "'");
}

void GeometrySpec::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ValidationError(name, "must be a positive length");
    };
    positive(channel_width, "channel_width");
    positive(land_width, "land_width");
    positive(channel_depth, "channel_depth");
    positive(section_length, "section_length");
    positive(mps_thickness, "mps_thickness");
    positive(cl_thickness, "cl_thickness");
    positive(inlet_offset, "inlet_offset");
    if (n_sections < 2) throw ValidationError("n_sections", "need at least 2 sections");
    if (section_length < 2.0 * channel_width)
        throw ValidationError("section_length", "must be at least twice the channel width");
}

GeometrySpec build_geometry(GeometryKind kind, const GeometryOverrides& o) {
    GeometrySpec s;
    s.n_sections = kind == GeometryKind::Reduced ? 4 : 10;
    if (o.channel_width) s.channel_width = *o.channel_width;
    if (o.land_width) s.land_width = *o.land_width;
    if (o.channel_depth) s.channel_depth = *o.channel_depth;
    if (o.section_length) s.section_length = *o.section_length;
    if (o.n_sections) s.n_sections = *o.n_sections;
    if (o.mps_thickness) s.mps_thickness = *o.mps_thickness;
    if (o.cl_thickness) s.cl_thickness = *o.cl_thickness;
    if (o.inlet_offset) s.inlet_offset = *o.inlet_offset;
    s.validate();
    return s;
}

std::size_t cell_budget_from_env() {
    if (const char* env = std::getenv("PROTOCELL_CELL_BUDGET")) {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return kDefaultCellBudget;
}

std::array<int, 3> Mesh::cell_ijk(std::size_t c) const {
    const int i = static_cast<int>(c % n_[0]);
    const std::size_t r = c / n_[0];
    return {i, static_cast<int>(r % n_[1]), static_cast<int>(r / n_[1])};
}

std::array<int, 3> Mesh::face_ijk(int d, std::size_t f) const {
    const auto dims = face_dims(d);
    const int i = static_cast<int>(f % dims[0]);
    const std::size_t r = f / dims[0];
    return {i, static_cast<int>(r % dims[1]), static_cast<int>(r / dims[1])};
}

double Mesh::volume(std::size_t c) const {
    const auto [i, j, k] = cell_ijk(c);
    return width(0, i) * width(1, j) * width(2, k);
}

double Mesh::face_area(int d, int i, int j, int k) const {
    const std::array<int, 3> idx{i, j, k};
    double a = 1.0;
    for (int t = 0; t < 3; ++t)
        if (t != d) a *= width(t, idx[t]);
    return a;
}

double Mesh::region_volume(Region r) const {
    double v = 0.0;
    for (std::size_t c = 0; c < tags_.size(); ++c)
        if (tags_[c] == r) v += volume(c);
    return v;
}

std::vector<double> channel_layer_weights(int sigma, bool wall_graded) {
    std::vector<double> w(static_cast<std::size_t>(sigma), 1.0);
    if (wall_graded) {
        for (int k = 0; k < sigma; ++k) {
            const int from_wall = std::min(k, sigma - 1 - k);
            w[k] = std::pow(1.5, std::min(from_wall, 2));
        }
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= total;
    return w;
}

namespace {

std::vector<double> uniform_faces(int n, double length) {
    std::vector<double> f(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) f[i] = length * i / n;
    return f;
}

int cells_for(double length, double pitch) {
    return std::max(1, static_cast<int>(std::lround(length / pitch)));
}

}  // namespace

// Interior where both neighbours are active, Wall otherwise; boundary
// conditions are stamped on afterwards.
void classify_faces(Mesh& m) {
    for (int d = 0; d < 3; ++d) {
        const auto dims = m.face_dims(d);
        auto& kinds = m.face_kind_[d];
        kinds.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], FaceKind::Wall);
        for (int k = 0; k < dims[2]; ++k)
            for (int j = 0; j < dims[1]; ++j)
                for (int i = 0; i < dims[0]; ++i) {
                    std::array<int, 3> hi{i, j, k};
                    std::array<int, 3> lo = hi;
                    lo[d] -= 1;
                    if (lo[d] < 0 || hi[d] >= m.n_[d]) continue;
                    if (m.active(m.cell(lo[0], lo[1], lo[2])) && m.active(m.cell(hi[0], hi[1], hi[2])))
                        kinds[m.face(d, i, j, k)] = FaceKind::Interior;
                }
    }
}

Mesh generate_mesh(const GeometrySpec& spec, int sigma, bool wall_graded,
                   std::size_t cell_budget) {
    spec.validate();
    if (sigma < 1) throw ValidationError("sigma", "must be >= 1");

    const double pitch = spec.channel_width / (2.0 * sigma);
    const int cw = 2 * sigma;
    const int lw = cells_for(spec.land_width, pitch);
    const int lc = cells_for(spec.section_length, pitch);
    // The lead-in is truncated to whole cells so the serpentine always fits
    // inside the porous footprint.
    const int lead = static_cast<int>(std::floor(0.5 * spec.inlet_offset / pitch + 1e-9));
    const int ns = spec.n_sections;

    const int nx = ns * cw + (ns - 1) * lw + 2 * lead;
    const int ny = lc + 2 * lead;
    const int nz = 3 * sigma;
    const std::size_t total = static_cast<std::size_t>(nx) * ny * nz;
    if (total > cell_budget) throw ResourceError(total, cell_budget);

    Mesh m;
    m.spec_ = spec;
    m.sigma_ = sigma;
    m.wall_graded_ = wall_graded;
    m.n_ = {nx, ny, nz};
    m.faces_[0] = uniform_faces(nx, nx * pitch);
    m.faces_[1] = uniform_faces(ny, ny * pitch);

    auto& zf = m.faces_[2];
    zf.assign(1, 0.0);
    for (double w : channel_layer_weights(sigma, wall_graded))
        zf.push_back(zf.back() + w * spec.channel_depth);
    zf.back() = spec.channel_depth;
    for (int k = 1; k <= sigma; ++k) zf.push_back(spec.channel_depth + spec.mps_thickness * k / sigma);
    zf.back() = spec.channel_depth + spec.mps_thickness;
    for (int k = 1; k <= sigma; ++k)
        zf.push_back(spec.channel_depth + spec.mps_thickness + spec.cl_thickness * k / sigma);
    zf.back() = spec.total_thickness();

    for (int d = 0; d < 3; ++d) {
        const auto& f = m.faces_[d];
        m.centers_[d].resize(f.size() - 1);
        for (std::size_t i = 0; i + 1 < f.size(); ++i) m.centers_[d][i] = 0.5 * (f[i] + f[i + 1]);
    }

    m.k_mps_ = sigma;
    m.k_cl_ = 2 * sigma;
    m.lead_cells_ = lead;

    // Planform channel mask.
    std::vector<char> plan(static_cast<std::size_t>(nx) * ny, 0);
    auto mark = [&](int i0, int i1, int j0, int j1) {
        for (int j = j0; j < j1; ++j)
            for (int i = i0; i < i1; ++i) plan[static_cast<std::size_t>(j) * nx + i] = 1;
    };
    for (int s = 0; s < ns; ++s) {
        const int i0 = lead + s * (cw + lw);
        m.sections_.push_back({i0, i0 + cw, lead, lead + lc});
        mark(i0, i0 + cw, lead, lead + lc);
        if (s + 1 < ns) {
            // Even sections flow +y and turn at the far end; odd ones turn
            // back at the near end.
            const int j0 = (s % 2 == 0) ? lead + lc - cw : lead;
            mark(i0 + cw, i0 + cw + lw, j0, j0 + cw);
        }
    }
    const auto& first = m.sections_.front();
    const auto& last = m.sections_.back();
    const bool outlet_high = (ns % 2 == 1);
    mark(first.i0, first.i1, 0, lead);
    if (outlet_high)
        mark(last.i0, last.i1, lead + lc, ny);
    else
        mark(last.i0, last.i1, 0, lead);

    m.tags_.resize(total);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                Region r;
                if (k < m.k_mps_)
                    r = plan[static_cast<std::size_t>(j) * nx + i] ? Region::Channel : Region::LandSolid;
                else if (k < m.k_cl_)
                    r = Region::Mps;
                else
                    r = Region::Cl;
                m.tags_[m.cell(i, j, k)] = r;
                ++m.counts_[static_cast<int>(r)];
            }

    classify_faces(m);

    auto& ykinds = m.face_kind_[1];
    for (int k = 0; k < m.k_mps_; ++k) {
        for (int i = first.i0; i < first.i1; ++i) {
            const auto f = m.face(1, i, 0, k);
            ykinds[f] = FaceKind::Inlet;
            m.inlet_faces_.push_back(f);
            m.inlet_area_ += m.face_area(1, i, 0, k);
        }
        for (int i = last.i0; i < last.i1; ++i) {
            const auto f = m.face(1, i, outlet_high ? ny : 0, k);
            ykinds[f] = FaceKind::Outlet;
            m.outlet_faces_.push_back(f);
            m.outlet_area_ += m.face_area(1, i, outlet_high ? ny - 1 : 0, k);
        }
    }
    return m;
}

Mesh make_box_mesh(const BoxMeshSpec& spec) {
    for (int d = 0; d < 3; ++d) {
        if (spec.cells[d] < 1) throw ValidationError("cells", "each axis needs at least one cell");
        if (!(spec.length[d] > 0.0)) throw ValidationError("length", "must be positive");
    }
    if (spec.fill == Region::LandSolid) throw ValidationError("fill", "box must be fluid-filled");
    Mesh m;
    m.n_ = spec.cells;
    m.spec_.n_sections = 1;
    m.spec_.channel_width = spec.length[0];
    m.spec_.section_length = spec.length[1];
    m.spec_.channel_depth = spec.length[2];
    for (int d = 0; d < 3; ++d) {
        m.faces_[d] = uniform_faces(spec.cells[d], spec.length[d]);
        m.centers_[d].resize(spec.cells[d]);
        for (int i = 0; i < spec.cells[d]; ++i)
            m.centers_[d][i] = 0.5 * (m.faces_[d][i] + m.faces_[d][i + 1]);
    }
    const int nz = spec.cells[2];
    m.k_mps_ = spec.fill == Region::Channel ? nz : 0;
    m.k_cl_ = spec.fill == Region::Cl ? 0 : nz;
    m.sections_.push_back({0, spec.cells[0], 0, spec.cells[1]});
    m.tags_.assign(static_cast<std::size_t>(spec.cells[0]) * spec.cells[1] * nz, spec.fill);
    m.counts_[static_cast<int>(spec.fill)] = m.tags_.size();
    classify_faces(m);

    auto stamp_symmetry = [&](int d) {
        const auto dims = m.face_dims(d);
        for (int k = 0; k < dims[2]; ++k)
            for (int j = 0; j < dims[1]; ++j)
                for (int i = 0; i < dims[0]; ++i) {
                    const std::array<int, 3> idx{i, j, k};
                    if (idx[d] == 0 || idx[d] == m.n_[d])
                        m.face_kind_[d][m.face(d, i, j, k)] = FaceKind::Symmetry;
                }
    };
    if (spec.symmetry_x) stamp_symmetry(0);
    if (spec.symmetry_z) stamp_symmetry(2);

    const int ny = spec.cells[1];
    for (int k = 0; k < nz; ++k)
        for (int i = 0; i < spec.cells[0]; ++i) {
            const auto fin = m.face(1, i, 0, k);
            const auto fout = m.face(1, i, ny, k);
            m.face_kind_[1][fin] = FaceKind::Inlet;
            m.face_kind_[1][fout] = FaceKind::Outlet;
            m.inlet_faces_.push_back(fin);
            m.outlet_faces_.push_back(fout);
            m.inlet_area_ += m.face_area(1, i, 0, k);
            m.outlet_area_ += m.face_area(1, i, ny - 1, k);
        }
    return m;
}

double effective_refinement_factor(long long n_finer, long long n_coarser, int dim) {
    if (dim < 1 || dim > 3) throw ValidationError("dim", "must be 1, 2 or 3");
    if (n_coarser < 1) throw ValidationError("n_coarser", "must be >= 1");
    if (n_finer < n_coarser)
        throw ValidationError("n_finer", "finer mesh must have at least as many cells as the coarser");
    return std::pow(static_cast<double>(n_finer) / static_cast<double>(n_coarser), 1.0 / dim);
}

double analytic_serpentine_length(const GeometrySpec& spec) {
    return spec.n_sections * spec.section_length + (spec.n_sections - 1) * spec.land_width;
}

double rasterized_serpentine_length(const Mesh& mesh) {
    double area = 0.0;
    const int lead = mesh.lead_cells();
    const int ny = mesh.ny();
    for (int j = lead; j < ny - lead; ++j)
        for (int i = 0; i < mesh.nx(); ++i)
            if (mesh.region(i, j, 0) == Region::Channel) area += mesh.width(0, i) * mesh.width(1, j);
    return area / mesh.spec().channel_width;
}

double analytic_channel_volume(const GeometrySpec& spec) {
    const double length = analytic_serpentine_length(spec) + spec.inlet_offset;
    return length * spec.channel_width * spec.channel_depth;
}

bool channel_is_connected(const Mesh& mesh) {
    const int nx = mesh.nx(), ny = mesh.ny();
    if (mesh.inlet_faces().empty() || mesh.outlet_faces().empty()) return false;
    std::vector<char> seen(static_cast<std::size_t>(nx) * ny, 0);
    std::queue<std::pair<int, int>> q;
    const auto start = mesh.face_ijk(1, mesh.inlet_faces().front());
    q.emplace(start[0], 0);
    seen[start[0]] = 1;
    std::size_t reached = 0;
    while (!q.empty()) {
        auto [i, j] = q.front();
        q.pop();
        ++reached;
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int n = 0; n < 4; ++n) {
            const int a = i + di[n], b = j + dj[n];
            if (a < 0 || b < 0 || a >= nx || b >= ny) continue;
            const auto idx = static_cast<std::size_t>(b) * nx + a;
            if (seen[idx] || mesh.region(a, b, 0) != Region::Channel) continue;
            seen[idx] = 1;
            q.emplace(a, b);
        }
    }
    std::size_t channel_plan = 0;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            if (mesh.region(i, j, 0) == Region::Channel) ++channel_plan;
    for (auto f : mesh.outlet_faces()) {
        const auto ijk = mesh.face_ijk(1, f);
        const int j = ijk[1] == ny ? ny - 1 : 0;
        if (!seen[static_cast<std::size_t>(j) * nx + ijk[0]]) return false;
    }
    return reached == channel_plan;
}

std::string mesh_summary(const Mesh& mesh) {
    std::ostringstream os;
    os.precision(17);
    os << "sigma = " << mesh.sigma() << '\n'
       << "wall_graded = " << (mesh.wall_graded() ? "true" : "false") << '\n'
       << "n_sections = " << mesh.spec().n_sections << '\n'
       << "nx = " << mesh.nx() << '\n'
       << "ny = " << mesh.ny() << '\n'
       << "nz = " << mesh.nz() << '\n'
       << "N = " << mesh.cell_count() << '\n';
    for (Region r : {Region::Channel, Region::LandSolid, Region::Mps, Region::Cl})
        os << "count." << to_string(r) << " = " << mesh.count(r) << '\n';
    os << "dx = " << mesh.width(0, 0) << '\n' << "dy = " << mesh.width(1, 0) << '\n';
    os << "dz.channel =";
    for (int k = 0; k < mesh.k_mps(); ++k) os << ' ' << mesh.width(2, k);
    os << "\ndz.mps = " << mesh.width(2, mesh.k_mps()) << '\n'
       << "dz.cl = " << mesh.width(2, mesh.k_cl()) << '\n'
       << "z_layers.channel = " << mesh.k_mps() << '\n'
       << "z_layers.mps = " << mesh.k_cl() - mesh.k_mps() << '\n'
       << "z_layers.cl = " << mesh.nz() - mesh.k_cl() << '\n'
       << "lead_cells = " << mesh.lead_cells() << '\n'
       << "inlet_faces = " << mesh.inlet_faces().size() << '\n'
       << "outlet_faces = " << mesh.outlet_faces().size() << '\n';
    return os.str();
}

}  // namespace protocell
