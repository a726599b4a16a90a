#include "protocell/flow.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <algorithm>
#include <boost/range/begin.hpp>
#include <boost/range/end.hpp>
#include <boost/range/iterator_range.hpp>
#include <amgcl/adapter/crs_tuple.hpp>
#include <amgcl/amg.hpp>
#include <amgcl/backend/builtin.hpp>
#include <amgcl/coarsening/smoothed_aggregation.hpp>
#include <amgcl/make_solver.hpp>
#include <amgcl/relaxation/spai0.hpp>
#include <amgcl/solver/cg.hpp>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "protocell/constants.hpp"
#include "protocell/errors.hpp"
#include "protocell/io.hpp"

namespace protocell {

void FlowBC::validate() const {
    if (!(q_std >= 0.0) || !std::isfinite(q_std)) throw ValidationError("Q", "must be non-negative");
    if (!std::isfinite(p_out)) throw ValidationError("p_out", "must be finite");
}

void FlowOptions::validate() const {
    if (!(relax_velocity > 0.0 && relax_velocity <= 1.0))
        throw ValidationError("relax_velocity", "must lie in (0, 1]");
    if (!(relax_pressure > 0.0 && relax_pressure <= 1.0))
        throw ValidationError("relax_pressure", "must lie in (0, 1]");
    if (!(tolerance > 0.0)) throw ValidationError("tolerance", "must be positive");
    if (max_iterations < 1) throw ValidationError("max_iterations", "must be >= 1");
}

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using AmgBackend = amgcl::backend::builtin<double>;
using PressureSolver =
    amgcl::make_solver<amgcl::amg<AmgBackend, amgcl::coarsening::smoothed_aggregation,
                                  amgcl::relaxation::spai0>,
                       amgcl::solver::cg<AmgBackend>>;

auto crs_view(const SpMat& m) {
    const int* ptr = m.outerIndexPtr();
    const int* col = m.innerIndexPtr();
    const double* val = m.valuePtr();
    const auto n = static_cast<std::size_t>(m.rows());
    return boost::make_tuple(n, boost::make_iterator_range(ptr, ptr + n + 1),
                             boost::make_iterator_range(col, col + m.nonZeros()),
                             boost::make_iterator_range(val, val + m.nonZeros()));
}
using Index32 = std::int32_t;

enum SlotKind : std::uint8_t { kUnknown, kKnown, kZero, kSkip };

struct Slot {
    Index32 ref = -1;             // unknown row (kUnknown) or face in the same direction (kKnown)
    Index32 flux[2] = {-1, -1};   // faces of direction flux_dir carrying the CV-face mass flux
    double cond = 0.0;            // mu_eff A / distance
    std::int8_t sign = 1;         // +1 when the slot lies on the +axis side
    std::uint8_t kind = kSkip;
    std::uint8_t flux_dir = 0;
    Index32 pos = -1;             // CSR value position for kUnknown
};

struct Row {
    Index32 face = -1;
    Index32 cell_lo = -1, cell_hi = -1;
    double area = 0.0;            // pressure-force area
    double half_lo = 0.0, half_hi = 0.0;
    double inv_eps2_lo = 0.0, inv_eps2_hi = 0.0;
    double inv_eps2 = 1.0;        // CV mean of 1/eps^2
    double darcy = 0.0;           // sum of mu/kappa over the CV halves
    Index32 pos_diag = -1;
    Slot slot[6];
};

struct Direction {
    std::vector<Row> rows;
    std::vector<Index32> unknown_of_face;
    SpMat matrix;
    Eigen::VectorXd rhs, x, ap_relaxed;
    // Continuity CSR positions per row: (lo,lo), (lo,hi), (hi,lo), (hi,hi).
    std::vector<std::array<Index32, 4>> ppos;
};

Index32 find_position(const SpMat& m, int row, int col) {
    const int* inner = m.innerIndexPtr();
    const int b = m.outerIndexPtr()[row], e = m.outerIndexPtr()[row + 1];
    const int* it = std::lower_bound(inner + b, inner + e, col);
    if (it == inner + e || *it != col) throw Error("flow: sparsity pattern lookup failed");
    return static_cast<Index32>(it - inner);
}

bool open_boundary(FaceKind k) { return k == FaceKind::Symmetry || k == FaceKind::Outlet; }

}  // namespace

struct FlowSolver::Impl {
    const Mesh* mesh;
    MaterialParams materials;
    FlowOptions options;
    double mu;
    std::vector<double> mu_eff;     // mu/eps per cell
    std::vector<double> inv_kappa;  // 0 in the channel
    std::vector<double> inv_eps2;
    std::vector<Index32> pcell;     // active-cell index or -1
    std::vector<std::size_t> active_cells;
    std::array<Direction, 3> dirs;
    SpMat pmatrix;
    std::vector<Index32> pdiag;
    Eigen::VectorXd pb, px;
    std::unique_ptr<PressureSolver> amg;
    int amg_age = 0;        // SIMPLE iterations since the hierarchy was built
    std::size_t last_pressure_iterations = 0;

    Impl(const Mesh& m, const MaterialParams& mat, FlowOptions opt)
        : mesh(&m), materials(mat), options(opt), mu(air_viscosity(mat.temperature)) {
        materials.validate();
        options.validate();
        setup_cells();
        for (int d = 0; d < 3; ++d) setup_direction(d);
        setup_pressure();
    }

    void setup_cells() {
        const auto n = mesh->cell_count();
        mu_eff.assign(n, mu);
        inv_kappa.assign(n, 0.0);
        inv_eps2.assign(n, 1.0);
        pcell.assign(n, -1);
        for (std::size_t c = 0; c < n; ++c) {
            const Region r = mesh->region(c);
            if (r == Region::LandSolid) continue;
            pcell[c] = static_cast<Index32>(active_cells.size());
            active_cells.push_back(c);
            double eps = 1.0, kappa = 0.0;
            if (r == Region::Mps) eps = materials.epsilon_mps, kappa = materials.kappa_mps;
            if (r == Region::Cl) eps = materials.epsilon_cl, kappa = materials.kappa_cl;
            mu_eff[c] = mu / eps;
            inv_eps2[c] = 1.0 / (eps * eps);
            inv_kappa[c] = kappa > 0.0 ? 1.0 / kappa : 0.0;
        }
    }

    // Mean effective viscosity over the CV of a face of direction d.
    double cv_mu(const Row& r) const {
        double num = 0.0, den = 0.0;
        if (r.cell_lo >= 0) num += mu_eff[r.cell_lo] * r.half_lo, den += r.half_lo;
        if (r.cell_hi >= 0) num += mu_eff[r.cell_hi] * r.half_hi, den += r.half_hi;
        return num / den;
    }

    void setup_direction(int d) {
        const Mesh& m = *mesh;
        Direction& D = dirs[d];
        const auto nf = m.face_count(d);
        D.unknown_of_face.assign(nf, -1);
        const auto& kinds = m.face_kinds(d);
        for (std::size_t f = 0; f < nf; ++f)
            if (kinds[f] == FaceKind::Interior || kinds[f] == FaceKind::Outlet) {
                D.unknown_of_face[f] = static_cast<Index32>(D.rows.size());
                D.rows.emplace_back();
                D.rows.back().face = static_cast<Index32>(f);
            }

        const int t1 = (d + 1) % 3, t2 = (d + 2) % 3;
        // First pass: geometry of each row.
        for (auto& r : D.rows) {
            const auto ijk = m.face_ijk(d, r.face);
            r.area = m.face_area(d, ijk[0], ijk[1], ijk[2]);
            if (ijk[d] - 1 >= 0) {
                auto lo = ijk;
                lo[d] -= 1;
                const auto c = m.cell(lo[0], lo[1], lo[2]);
                if (m.active(c)) {
                    r.cell_lo = static_cast<Index32>(c);
                    r.half_lo = 0.5 * m.volume(c);
                }
            }
            if (ijk[d] < m.n(d)) {
                const auto c = m.cell(ijk[0], ijk[1], ijk[2]);
                if (m.active(c)) {
                    r.cell_hi = static_cast<Index32>(c);
                    r.half_hi = 0.5 * m.volume(c);
                }
            }
            double vol = 0.0, ie = 0.0;
            if (r.cell_lo >= 0) {
                r.inv_eps2_lo = inv_eps2[r.cell_lo];
                r.darcy += mu * inv_kappa[r.cell_lo] * r.half_lo;
                vol += r.half_lo;
                ie += r.half_lo * r.inv_eps2_lo;
            }
            if (r.cell_hi >= 0) {
                r.inv_eps2_hi = inv_eps2[r.cell_hi];
                r.darcy += mu * inv_kappa[r.cell_hi] * r.half_hi;
                vol += r.half_hi;
                ie += r.half_hi * r.inv_eps2_hi;
            }
            r.inv_eps2 = ie / vol;
        }

        // Second pass: neighbour slots.
        for (auto& r : D.rows) {
            const auto ijk = m.face_ijk(d, r.face);
            const double mu_here = cv_mu(r);

            // Along d.
            for (int side = 0; side < 2; ++side) {
                Slot& s = r.slot[side];
                s.sign = side == 0 ? -1 : 1;
                s.flux_dir = static_cast<std::uint8_t>(d);
                const Index32 cell = side == 0 ? r.cell_lo : r.cell_hi;
                if (cell < 0) {
                    s.kind = kSkip;
                    continue;
                }
                auto g_ijk = ijk;
                g_ijk[d] += side == 0 ? -1 : 1;
                const auto g = m.face(d, g_ijk[0], g_ijk[1], g_ijk[2]);
                const auto cijk = m.cell_ijk(cell);
                const double dist = m.width(d, cijk[d]);
                s.cond = mu_eff[cell] * r.area / dist;
                s.flux[0] = r.face;
                s.flux[1] = static_cast<Index32>(g);
                const FaceKind gk = m.face_kind(d, g);
                if (gk == FaceKind::Interior || gk == FaceKind::Outlet) {
                    s.kind = kUnknown;
                    s.ref = D.unknown_of_face[g];
                } else if (gk == FaceKind::Inlet) {
                    s.kind = kKnown;
                    s.ref = static_cast<Index32>(g);
                } else {
                    s.kind = kZero;
                }
            }

            // Transverse.
            int slot_index = 2;
            for (int t : {t1, t2}) {
                const int o = 3 - d - t;
                const double cv_len = (r.cell_lo >= 0 ? 0.5 * m.width(d, ijk[d] - 1) : 0.0) +
                                      (r.cell_hi >= 0 ? 0.5 * m.width(d, ijk[d]) : 0.0);
                const double cv_area = cv_len * m.width(o, ijk[o]);
                for (int side = -1; side <= 1; side += 2, ++slot_index) {
                    Slot& s = r.slot[slot_index];
                    s.sign = static_cast<std::int8_t>(side);
                    s.flux_dir = static_cast<std::uint8_t>(t);
                    int q = 0;
                    FaceKind boundary_kind = FaceKind::Wall;
                    bool any_open = false;
                    for (Index32 cell : {r.cell_lo, r.cell_hi}) {
                        if (cell < 0) continue;
                        auto cijk = m.cell_ijk(cell);
                        if (side > 0) cijk[t] += 1;
                        const auto tf = m.face(t, cijk[0], cijk[1], cijk[2]);
                        s.flux[q++] = static_cast<Index32>(tf);
                        boundary_kind = m.face_kind(t, tf);
                        any_open = any_open || open_boundary(boundary_kind);
                    }
                    auto n_ijk = ijk;
                    n_ijk[t] += side;
                    if (n_ijk[t] < 0 || n_ijk[t] >= m.n(t)) {
                        if (any_open) {
                            s.kind = kSkip;
                        } else {
                            s.kind = kZero;
                            s.cond = mu_here * cv_area / (0.5 * m.width(t, ijk[t]));
                        }
                        continue;
                    }
                    const auto g = m.face(d, n_ijk[0], n_ijk[1], n_ijk[2]);
                    const FaceKind gk = m.face_kind(d, g);
                    const double full = std::abs(m.centers(t)[n_ijk[t]] - m.centers(t)[ijk[t]]);
                    if (gk == FaceKind::Interior || gk == FaceKind::Outlet || gk == FaceKind::Inlet) {
                        // Effective viscosity of the neighbouring CV.
                        double num = 0.0, den = 0.0;
                        for (int side_d = 0; side_d < 2; ++side_d) {
                            auto c = n_ijk;
                            if (side_d == 0) c[d] -= 1;
                            if (c[d] < 0 || c[d] >= m.n(d)) continue;
                            const auto cc = m.cell(c[0], c[1], c[2]);
                            if (!m.active(cc)) continue;
                            const double w = m.width(d, c[d]);
                            num += mu_eff[cc] * w;
                            den += w;
                        }
                        const double mu_there = den > 0.0 ? num / den : mu_here;
                        const double mu_face = 2.0 * mu_here * mu_there / (mu_here + mu_there);
                        s.cond = mu_face * cv_area / full;
                        if (gk == FaceKind::Inlet) {
                            s.kind = kKnown;
                            s.ref = static_cast<Index32>(g);
                        } else {
                            s.kind = kUnknown;
                            s.ref = D.unknown_of_face[g];
                        }
                        continue;
                    }
                    // Neighbour face is a wall; it is a solid block when none
                    // of its adjacent cells are active.
                    bool touches_fluid = false;
                    for (int side_d = 0; side_d < 2; ++side_d) {
                        auto c = n_ijk;
                        if (side_d == 0) c[d] -= 1;
                        if (c[d] < 0 || c[d] >= m.n(d)) continue;
                        if (m.active(m.cell(c[0], c[1], c[2]))) touches_fluid = true;
                    }
                    s.kind = kZero;
                    s.cond = mu_here * cv_area / (touches_fluid ? full : 0.5 * m.width(t, ijk[t]));
                }
            }
        }

        // Sparsity pattern.
        std::vector<Eigen::Triplet<double, int>> trip;
        trip.reserve(D.rows.size() * 7);
        for (std::size_t i = 0; i < D.rows.size(); ++i) {
            trip.emplace_back(static_cast<int>(i), static_cast<int>(i), 0.0);
            for (const auto& s : D.rows[i].slot)
                if (s.kind == kUnknown) trip.emplace_back(static_cast<int>(i), s.ref, 0.0);
        }
        const int n = static_cast<int>(D.rows.size());
        D.matrix.resize(n, n);
        D.matrix.setFromTriplets(trip.begin(), trip.end());
        D.matrix.makeCompressed();
        for (int i = 0; i < n; ++i) {
            auto& r = D.rows[i];
            r.pos_diag = find_position(D.matrix, i, i);
            for (auto& s : r.slot)
                if (s.kind == kUnknown) s.pos = find_position(D.matrix, i, s.ref);
        }
        D.rhs.setZero(n);
        D.x.setZero(n);
        D.ap_relaxed.setOnes(n);
    }

    void setup_pressure() {
        const int n = static_cast<int>(active_cells.size());
        std::vector<Eigen::Triplet<double, int>> trip;
        for (int i = 0; i < n; ++i) trip.emplace_back(i, i, 0.0);
        for (int d = 0; d < 3; ++d)
            for (const auto& r : dirs[d].rows)
                if (r.cell_lo >= 0 && r.cell_hi >= 0) {
                    trip.emplace_back(pcell[r.cell_lo], pcell[r.cell_hi], 0.0);
                    trip.emplace_back(pcell[r.cell_hi], pcell[r.cell_lo], 0.0);
                }
        pmatrix.resize(n, n);
        pmatrix.setFromTriplets(trip.begin(), trip.end());
        pmatrix.makeCompressed();
        pdiag.resize(n);
        for (int i = 0; i < n; ++i) pdiag[i] = find_position(pmatrix, i, i);
        for (int d = 0; d < 3; ++d) {
            auto& D = dirs[d];
            D.ppos.assign(D.rows.size(), {-1, -1, -1, -1});
            for (std::size_t k = 0; k < D.rows.size(); ++k) {
                const auto& r = D.rows[k];
                const int lo = r.cell_lo >= 0 ? pcell[r.cell_lo] : -1;
                const int hi = r.cell_hi >= 0 ? pcell[r.cell_hi] : -1;
                auto& p = D.ppos[k];
                if (lo >= 0) p[0] = pdiag[lo];
                if (hi >= 0) p[3] = pdiag[hi];
                if (lo >= 0 && hi >= 0) {
                    p[1] = find_position(pmatrix, lo, hi);
                    p[2] = find_position(pmatrix, hi, lo);
                }
            }
        }
        pb.setZero(n);
        px.setZero(n);
    }

    // AMG-preconditioned CG. The hierarchy is rebuilt when it ages or when
    // the Krylov iteration count degrades; in between the new matrix is
    // solved with the old preconditioner.
    void solve_pressure() {
        const auto A = crs_view(pmatrix);
        if (!amg || amg_age >= 20 || last_pressure_iterations > 25) {
            PressureSolver::params prm;
            prm.precond.coarse_enough = 500;
            prm.solver.tol = options.pressure_linear_tolerance;
            prm.solver.maxiter = static_cast<std::size_t>(options.linear_max_iterations);
            amg = std::make_unique<PressureSolver>(A, prm);
            amg_age = 0;
        }
        ++amg_age;
        amgcl::backend::crs<double> current(A);
        // Mass imbalances are tiny in kg/s; normalize so the Krylov solver's
        // absolute floor never short-circuits the solve.
        const double scale = pb.cwiseAbs().maxCoeff();
        px.setZero();
        if (!(scale > 0.0)) return;
        std::vector<double> rhs(pb.data(), pb.data() + pb.size());
        for (auto& v : rhs) v /= scale;
        std::vector<double> x(rhs.size(), 0.0);
        std::size_t iters = 0;
        double err = 0.0;
        boost::tie(iters, err) = (*amg)(current, rhs, x);
        last_pressure_iterations = iters;
        for (std::size_t i = 0; i < x.size(); ++i) px[static_cast<Eigen::Index>(i)] = scale * x[i];
    }

    double face_density(const FlowField& f, const Row& r) const {
        if (r.cell_lo >= 0 && r.cell_hi >= 0) return 0.5 * (f.density[r.cell_lo] + f.density[r.cell_hi]);
        return f.density[r.cell_lo >= 0 ? r.cell_lo : r.cell_hi];
    }

    void update_density(FlowField& f, std::span<const double> omega) const {
        const double rt = constants::gas_constant * materials.temperature;
        for (auto c : active_cells) {
            const double w = omega.empty() ? 0.0 : std::clamp(omega[c], 0.0, 1.0);
            const double mm = mixture_molar_mass(w, materials.molar_mass_o3, materials.molar_mass_air);
            const double pa = f.pressure[c] + materials.p_ref;
            if (!(pa > 0.0)) throw ConvergenceError("flow: absolute pressure became non-positive", {});
            f.density[c] = pa * mm / rt;
        }
    }

    void apply_inlet(FlowField& f, const FlowBC& bc) const {
        const Mesh& m = *mesh;
        const double total = standard_density(materials.molar_mass_air) * bc.q_std;
        for (auto face : m.inlet_faces()) {
            const auto ijk = m.face_ijk(1, face);
            const double a = m.face_area(1, ijk[0], ijk[1], ijk[2]);
            const double mf = total * a / m.inlet_area();
            const auto c = m.cell(ijk[0], 0, ijk[2]);
            f.mass_flux[1][face] = mf;
            f.velocity[1][face] = mf / (f.density[c] * a);
        }
    }

    double source_at(std::span<const double> s, Index32 c) const {
        return (s.empty() || c < 0) ? 0.0 : s[c];
    }

    // Assemble and solve momentum for direction d; returns (residual, norm).
    std::pair<double, double> momentum(int d, FlowField& f, const FlowBC& bc,
                                       std::span<const double> src) {
        Direction& D = dirs[d];
        const double alpha = options.relax_velocity;
        double* val = D.matrix.valuePtr();
        const auto& u = f.velocity[d];
        double resid = 0.0, norm = 0.0;
        const int n = static_cast<int>(D.rows.size());
        for (int i = 0; i < n; ++i) {
            const Row& r = D.rows[i];
            double ap = r.darcy;
            double b = 0.0;
            for (const Slot& s : r.slot) {
                if (s.kind == kSkip) continue;
                const auto& mf = f.mass_flux[s.flux_dir];
                double flux = 0.0;
                for (Index32 ff : s.flux)
                    if (ff >= 0) flux += 0.5 * mf[ff];
                const double outward = s.sign * flux;
                const double a = s.cond + std::max(-outward, 0.0) * r.inv_eps2;
                ap += a;
                if (s.kind == kUnknown)
                    val[s.pos] = -a;
                else if (s.kind == kKnown)
                    b += a * u[s.ref];
            }
            ap -= source_at(src, r.cell_lo) * r.inv_eps2_lo * r.half_lo +
                  source_at(src, r.cell_hi) * r.inv_eps2_hi * r.half_hi;
            const double p_lo = r.cell_lo >= 0 ? f.pressure[r.cell_lo] : bc.p_out;
            const double p_hi = r.cell_hi >= 0 ? f.pressure[r.cell_hi] : bc.p_out;
            b += (p_lo - p_hi) * r.area;
            const double u0 = u[r.face];
            // Residual of the unrelaxed equation at the current iterate.
            double lhs = ap * u0;
            for (const Slot& s : r.slot)
                if (s.kind == kUnknown) lhs += val[s.pos] * u[D.rows[s.ref].face];
            resid += std::abs(b - lhs);
            norm += std::abs(ap * u0);
            const double apr = ap / alpha;
            val[r.pos_diag] = apr;
            D.rhs[i] = b + (1.0 - alpha) * apr * u0;
            D.ap_relaxed[i] = apr;
            D.x[i] = u0;
        }
        Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>> solver;
        solver.setTolerance(options.momentum_linear_tolerance);
        solver.setMaxIterations(options.linear_max_iterations);
        solver.compute(D.matrix);
        // Solve for the correction so the tolerance is relative to the
        // current residual rather than to the full right-hand side.
        const Eigen::VectorXd r0 = D.rhs - D.matrix * D.x;
        Eigen::VectorXd x = D.x;
        if (r0.squaredNorm() > 0.0) x += solver.solve(r0);
        if (!x.allFinite()) throw ConvergenceError("flow: momentum solve produced non-finite values", {});
        auto& uu = f.velocity[d];
        for (int i = 0; i < n; ++i) uu[D.rows[i].face] = x[i];
        return {resid, norm};
    }

    void refresh_mass_flux(FlowField& f) const {
        for (int d = 0; d < 3; ++d)
            for (const auto& r : dirs[d].rows)
                f.mass_flux[d][r.face] = face_density(f, r) * f.velocity[d][r.face] * r.area;
    }

    // Net mass inflow plus source per active cell, kg/s.
    void continuity_rhs(const FlowField& f, std::span<const double> src, Eigen::VectorXd& b) const {
        const Mesh& m = *mesh;
        b.setZero(static_cast<Eigen::Index>(active_cells.size()));
        for (std::size_t i = 0; i < active_cells.size(); ++i) {
            const auto c = active_cells[i];
            if (!src.empty()) b[i] = src[c] * m.volume(c);
        }
        for (int d = 0; d < 3; ++d)
            for (const auto& r : dirs[d].rows) {
                const double mf = f.mass_flux[d][r.face];
                if (r.cell_lo >= 0) b[pcell[r.cell_lo]] -= mf;
                if (r.cell_hi >= 0) b[pcell[r.cell_hi]] += mf;
            }
        for (auto face : m.inlet_faces()) {
            const auto ijk = m.face_ijk(1, face);
            b[pcell[m.cell(ijk[0], 0, ijk[2])]] += f.mass_flux[1][face];
        }
    }

    std::pair<double, double> simple_iteration(FlowField& f, const FlowBC& bc,
                                               std::span<const double> src,
                                               std::span<const double> omega) {
        update_density(f, omega);
        apply_inlet(f, bc);
        double resid = 0.0, norm = 0.0;
        for (int d = 0; d < 3; ++d) {
            const auto [r, n] = momentum(d, f, bc, src);
            resid += r;
            norm += n;
        }
        refresh_mass_flux(f);
        continuity_rhs(f, src, pb);

        double* val = pmatrix.valuePtr();
        std::fill(val, val + pmatrix.nonZeros(), 0.0);
        for (int d = 0; d < 3; ++d) {
            const auto& D = dirs[d];
            for (std::size_t k = 0; k < D.rows.size(); ++k) {
                const auto& r = D.rows[k];
                const double a = face_density(f, r) * r.area * r.area / D.ap_relaxed[k];
                const auto& p = D.ppos[k];
                if (p[0] >= 0) val[p[0]] += a;
                if (p[3] >= 0) val[p[3]] += a;
                if (p[1] >= 0) val[p[1]] -= a, val[p[2]] -= a;
            }
        }
        solve_pressure();
        if (!px.allFinite()) throw ConvergenceError("flow: pressure correction produced non-finite values", {});

        for (int d = 0; d < 3; ++d) {
            const auto& D = dirs[d];
            auto& u = f.velocity[d];
            for (std::size_t k = 0; k < D.rows.size(); ++k) {
                const auto& r = D.rows[k];
                const double plo = r.cell_lo >= 0 ? px[pcell[r.cell_lo]] : 0.0;
                const double phi = r.cell_hi >= 0 ? px[pcell[r.cell_hi]] : 0.0;
                u[r.face] += r.area / D.ap_relaxed[k] * (plo - phi);
            }
        }
        for (std::size_t i = 0; i < active_cells.size(); ++i)
            f.pressure[active_cells[i]] += options.relax_pressure * px[i];
        refresh_mass_flux(f);

        const double scale = bc.q_std > 0.0 ? standard_density(materials.molar_mass_air) * bc.q_std
                                            : 1.0;
        const double continuity = pb.lpNorm<1>() / scale;
        const double momentum = norm > 0.0 ? resid / norm : resid;
        return {continuity, momentum};
    }
};

FlowSolver::FlowSolver(const Mesh& mesh, const MaterialParams& materials, FlowOptions options)
    : impl_(std::make_unique<Impl>(mesh, materials, options)) {}
FlowSolver::~FlowSolver() = default;
FlowSolver::FlowSolver(FlowSolver&&) noexcept = default;
FlowSolver& FlowSolver::operator=(FlowSolver&&) noexcept = default;

const Mesh& FlowSolver::mesh() const { return *impl_->mesh; }
const FlowOptions& FlowSolver::options() const { return impl_->options; }

FlowField FlowSolver::initial_field(const FlowBC& bc, std::span<const double> omega) const {
    const Mesh& m = *impl_->mesh;
    FlowField f;
    for (int d = 0; d < 3; ++d) {
        f.velocity[d].assign(m.face_count(d), 0.0);
        f.mass_flux[d].assign(m.face_count(d), 0.0);
    }
    f.pressure.assign(m.cell_count(), 0.0);
    for (auto c : impl_->active_cells) f.pressure[c] = bc.p_out;
    f.density.assign(m.cell_count(), 0.0);
    impl_->update_density(f, omega);
    impl_->apply_inlet(f, bc);
    return f;
}

bool FlowSolver::iterate(FlowField& field, const FlowBC& bc, std::span<const double> mass_source,
                         std::span<const double> omega, int max_iterations) {
    bc.validate();
    const Mesh& m = *impl_->mesh;
    if (!mass_source.empty() && mass_source.size() != m.cell_count())
        throw ValidationError("mass_source", "size does not match the mesh");
    if (!omega.empty() && omega.size() != m.cell_count())
        throw ValidationError("omega", "size does not match the mesh");
    const bool no_source =
        mass_source.empty() ||
        std::all_of(mass_source.begin(), mass_source.end(), [](double s) { return s == 0.0; });
    if (bc.q_std == 0.0) {
        if (!no_source)
            throw ValidationError("mass_source",
                                  "mass-balance violation: nonzero source with zero inflow");
        field = initial_field(bc, omega);
        field.history.push_back({field.iterations, 0.0, 0.0});
        field.converged = true;
        return true;
    }
    const double tol = impl_->options.tolerance;
    for (int it = 0; it < max_iterations; ++it) {
        const auto [cont, mom] = impl_->simple_iteration(field, bc, mass_source, omega);
        ++field.iterations;
        field.history.push_back({field.iterations, cont, mom});
        if (!std::isfinite(cont) || !std::isfinite(mom))
            throw ConvergenceError("flow: residuals became non-finite", {});
        field.converged = cont <= tol && mom <= tol;
        if (field.converged) return true;
    }
    return false;
}

FlowField FlowSolver::solve(const FlowBC& bc, std::span<const double> mass_source,
                            std::span<const double> omega, const FlowField* initial) {
    // A fresh hierarchy keeps the result independent of earlier solves.
    impl_->amg.reset();
    impl_->amg_age = 0;
    impl_->last_pressure_iterations = 0;
    FlowField f = initial ? *initial : initial_field(bc, omega);
    f.converged = false;
    if (!iterate(f, bc, mass_source, omega, impl_->options.max_iterations)) {
        std::vector<double> hist;
        hist.reserve(f.history.size());
        for (const auto& h : f.history) hist.push_back(h.continuity);
        throw ConvergenceError("flow: no convergence within " +
                                   std::to_string(impl_->options.max_iterations) + " iterations",
                               std::move(hist));
    }
    return f;
}

FlowField solve_flow(const Mesh& mesh, const MaterialParams& materials, const FlowBC& bc,
                     std::span<const double> mass_source, const FlowOptions& options,
                     const FlowField* initial) {
    FlowSolver solver(mesh, materials, options);
    return solver.solve(bc, mass_source, {}, initial);
}

std::vector<double> mass_source_from_sink(const Mesh& mesh, std::span<const double> sink,
                                          std::size_t* masked) {
    if (sink.size() != mesh.cell_count())
        throw ValidationError("sink", "size does not match the mesh");
    std::vector<double> s(sink.begin(), sink.end());
    std::size_t count = 0;
    for (std::size_t c = 0; c < s.size(); ++c)
        if (mesh.region(c) != Region::Cl && s[c] != 0.0) {
            s[c] = 0.0;
            ++count;
        }
    if (masked) *masked = count;
    return s;
}

double inlet_mass_flow(const Mesh& mesh, const FlowField& field) {
    double m = 0.0;
    for (auto f : mesh.inlet_faces()) m += field.mass_flux[1][f];
    return m;
}

double outlet_mass_flow(const Mesh& mesh, const FlowField& field) {
    double m = 0.0;
    for (auto f : mesh.outlet_faces()) {
        const auto ijk = mesh.face_ijk(1, f);
        m += ijk[1] == 0 ? -field.mass_flux[1][f] : field.mass_flux[1][f];
    }
    return m;
}

double global_mass_imbalance(const Mesh& mesh, const FlowField& field,
                             std::span<const double> mass_source, double q_std) {
    double s = 0.0;
    if (!mass_source.empty())
        for (std::size_t c = 0; c < mesh.cell_count(); ++c) s += mass_source[c] * mesh.volume(c);
    const double net = inlet_mass_flow(mesh, field) - outlet_mass_flow(mesh, field) + s;
    const double scale = q_std > 0.0 ? standard_density() * q_std : 1.0;
    return std::abs(net) / scale;
}

std::vector<double> continuity_residuals(const Mesh& mesh, const FlowField& field,
                                         std::span<const double> mass_source) {
    std::vector<double> r(mesh.cell_count(), 0.0);
    for (int d = 0; d < 3; ++d) {
        const auto dims = mesh.face_dims(d);
        for (int k = 0; k < dims[2]; ++k)
            for (int j = 0; j < dims[1]; ++j)
                for (int i = 0; i < dims[0]; ++i) {
                    const std::array<int, 3> hi{i, j, k};
                    const double mf = field.mass_flux[d][mesh.face(d, i, j, k)];
                    if (mf == 0.0) continue;
                    if (hi[d] < mesh.n(d)) r[mesh.cell(i, j, k)] -= mf;
                    if (hi[d] > 0) {
                        auto lo = hi;
                        lo[d] -= 1;
                        r[mesh.cell(lo[0], lo[1], lo[2])] += mf;
                    }
                }
    }
    if (!mass_source.empty())
        for (std::size_t c = 0; c < r.size(); ++c) r[c] -= mass_source[c] * mesh.volume(c);
    return r;
}

std::array<double, 3> cell_velocity(const Mesh& mesh, const FlowField& field, std::size_t cell) {
    const auto ijk = mesh.cell_ijk(cell);
    std::array<double, 3> v{};
    for (int d = 0; d < 3; ++d) {
        auto up = ijk;
        up[d] += 1;
        v[d] = 0.5 * (field.velocity[d][mesh.face(d, ijk[0], ijk[1], ijk[2])] +
                      field.velocity[d][mesh.face(d, up[0], up[1], up[2])]);
    }
    return v;
}

namespace {

double mean_boundary_pressure(const Mesh& mesh, const FlowField& field,
                              const std::vector<std::size_t>& faces) {
    double num = 0.0, den = 0.0;
    for (auto f : faces) {
        const auto ijk = mesh.face_ijk(1, f);
        const int j = ijk[1] == mesh.ny() ? mesh.ny() - 1 : ijk[1];
        const double a = mesh.face_area(1, ijk[0], j, ijk[2]);
        num += a * field.pressure[mesh.cell(ijk[0], j, ijk[2])];
        den += a;
    }
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace

double mean_inlet_pressure(const Mesh& mesh, const FlowField& field) {
    return mean_boundary_pressure(mesh, field, mesh.inlet_faces());
}

double mean_outlet_pressure(const Mesh& mesh, const FlowField& field) {
    return mean_boundary_pressure(mesh, field, mesh.outlet_faces());
}

std::string residual_history_csv(const FlowField& field) {
    std::ostringstream os;
    os << "iteration,continuity,momentum\n";
    for (const auto& h : field.history)
        os << h.iteration << ',' << format_number(h.continuity) << ',' << format_number(h.momentum)
           << '\n';
    return os.str();
}

}  // namespace protocell
