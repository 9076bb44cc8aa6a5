#include "homog/dns.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>

namespace homog {

namespace {

// Structural key for vertices shared between cells: vertical grid line,
// horizontal grid line, or lattice corner. Exact identification, no
// floating-point matching.
struct SharedKey {
    char type;  // 'C', 'V', 'H'
    int k1, k2;
    bool operator<(const SharedKey& o) const {
        if (type != o.type) return type < o.type;
        if (k1 != o.k1) return k1 < o.k1;
        return k2 < o.k2;
    }
};

}  // namespace

DnsField solve_full(const DnsProblem& p) {
    if (p.N < 4) throw ValidationError("DNS needs N >= 4 cells per side");
    if (p.resolution_per_cell < 6)
        throw ValidationError("DNS resolution_per_cell must be at least 6");
    if (p.mode == DnsMode::Standard) {
        for (const auto& v : p.rho.variables())
            if (v == "X1" || v == "X2")
                throw ValidationError("standard DNS mode expects a slow-only charge density");
    } else {
        // The rho/delta scaling requires zero cell mean in the fast variable;
        // spot-check a 3x3 sample of cell anchors.
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 3; ++i) {
                const Vec2 anchor{(i + 0.5) / 3.0, (j + 0.5) / 3.0};
                const double mean = square_integral(
                    [&](Vec2 X) { return eval_xX(p.rho, anchor, X); });
                if (std::abs(mean) > 1e-8)
                    throw NumericalError(
                        "large-charge DNS: cell mean of rho at x = (" +
                        std::to_string(anchor.x) + ", " + std::to_string(anchor.y) +
                        ") is " + std::to_string(mean) + ", expected 0");
            }
    }
    const int N = p.N, nc = p.resolution_per_cell;
    const double delta = 1.0 / N;

    // Per-cell meshes cached by radius (a(x) often varies in one coordinate).
    std::map<double, CellMesh> cache;
    auto cell_mesh_for = [&](double a, int I, int J) -> const CellMesh& {
        auto it = cache.find(a);
        if (it != cache.end()) return it->second;
        try {
            return cache.emplace(a, build_cell_mesh_n(CellGeometry(a), nc)).first->second;
        } catch (const std::exception& e) {
            throw GeometryError("DNS cell (" + std::to_string(I) + "," + std::to_string(J) +
                                "): " + e.what());
        }
    };

    DnsField out;
    out.N = N;
    std::map<SharedKey, int> shared;
    std::vector<int> local_to_global;

    for (int J = 0; J < N; ++J) {
        for (int I = 0; I < N; ++I) {
            const Vec2 center{(I + 0.5) * delta, (J + 0.5) * delta};
            const double a = p.a_of_x.evaluate({{"x1", center.x}, {"x2", center.y}});
            const CellMesh& cm = cell_mesh_for(a, I, J);
            const Vec2 origin{I * delta, J * delta};

            local_to_global.assign(cm.mesh.vertices.size(), -1);
            for (std::size_t v = 0; v < cm.mesh.vertices.size(); ++v) {
                const Vec2& lv = cm.mesh.vertices[v];
                const bool lx0 = lv.x == 0.0, lx1 = lv.x == 1.0;
                const bool ly0 = lv.y == 0.0, ly1 = lv.y == 1.0;
                auto fresh = [&]() {
                    out.mesh.vertices.push_back(origin + delta * lv);
                    return static_cast<int>(out.mesh.vertices.size()) - 1;
                };
                int gid;
                if ((lx0 || lx1) && (ly0 || ly1)) {
                    const SharedKey key{'C', I + (lx1 ? 1 : 0), J + (ly1 ? 1 : 0)};
                    auto [it, inserted] = shared.try_emplace(key, -1);
                    if (inserted) it->second = fresh();
                    gid = it->second;
                } else if (lx0 || lx1) {
                    const int gy = static_cast<int>(std::lround(lv.y * nc));
                    const SharedKey key{'V', I + (lx1 ? 1 : 0), J * nc + gy};
                    auto [it, inserted] = shared.try_emplace(key, -1);
                    if (inserted) it->second = fresh();
                    gid = it->second;
                } else if (ly0 || ly1) {
                    const int gx = static_cast<int>(std::lround(lv.x * nc));
                    const SharedKey key{'H', J + (ly1 ? 1 : 0), I * nc + gx};
                    auto [it, inserted] = shared.try_emplace(key, -1);
                    if (inserted) it->second = fresh();
                    gid = it->second;
                } else {
                    gid = fresh();
                }
                local_to_global[v] = gid;
            }
            for (const Triangle& T : cm.mesh.triangles) {
                out.mesh.triangles.push_back({{local_to_global[T.v[0]], local_to_global[T.v[1]],
                                               local_to_global[T.v[2]]},
                                              T.region});
                out.owner_cell.push_back(J * N + I);
            }
        }
    }

    const std::size_t n_verts = out.mesh.vertices.size();
    if (n_verts > 2'000'000)
        throw ValidationError("DNS unknown count " + std::to_string(n_verts) +
                              " exceeds the desk-scale guard of 2e6");

    // Outer Dirichlet data.
    std::map<int, double> dirichlet;
    for (std::size_t v = 0; v < n_verts; ++v) {
        const Vec2& x = out.mesh.vertices[v];
        if (std::abs(x.x) < 1e-12 || std::abs(x.x - 1.0) < 1e-12 || std::abs(x.y) < 1e-12 ||
            std::abs(x.y - 1.0) < 1e-12) {
            dirichlet[static_cast<int>(v)] =
                p.boundary_value.evaluate({{"x1", x.x}, {"x2", x.y}});
        }
    }

    const double eps_e = p.eps_e, eps_i = p.eps_i;
    const TriMesh* mesh_ptr = &out.mesh;
    const TriCoefficient coef = [mesh_ptr, eps_e, eps_i](int t) {
        return mesh_ptr->triangles[t].region == Region::Interior ? eps_i : eps_e;
    };
    const FieldExpr rho = p.rho;
    PointSource source;
    if (p.mode == DnsMode::Standard) {
        source = [rho](const Vec2& x) { return rho.evaluate({{"x1", x.x}, {"x2", x.y}}); };
    } else {
        source = [rho, delta, N](const Vec2& x) {
            const int I = std::clamp(static_cast<int>(x.x * N), 0, N - 1);
            const int J = std::clamp(static_cast<int>(x.y * N), 0, N - 1);
            const Vec2 X{(x.x - I * delta) / delta, (x.y - J * delta) / delta};
            return eval_xX(rho, x, X) / delta;
        };
    }

    AssembledSystem sys = assemble_p1(out.mesh, nullptr, coef, source, {}, dirichlet);
    std::vector<double> u;
    const CgResult cg = pcg(sys.A, sys.rhs, u, 1e-10, 400000, /*deflate=*/false);
    out.phi = expand_solution(sys.dofs, u);
    out.unknowns = sys.dofs.n_unknowns;
    out.rel_residual = cg.rel_residual;
    out.iterations = cg.iterations;
    return out;
}

std::vector<double> cell_average(const DnsField& f) {
    const std::size_t cells = static_cast<std::size_t>(f.N) * f.N;
    std::vector<double> sum(cells, 0.0), area(cells, 0.0);
    for (std::size_t t = 0; t < f.mesh.triangles.size(); ++t) {
        const Triangle& T = f.mesh.triangles[t];
        const double A = f.mesh.triangle_area(static_cast<int>(t));
        const std::size_t c = static_cast<std::size_t>(f.owner_cell[t]);
        sum[c] += A / 3.0 * (f.phi[T.v[0]] + f.phi[T.v[1]] + f.phi[T.v[2]]);
        area[c] += A;
    }
    std::vector<double> avg(cells);
    for (std::size_t c = 0; c < cells; ++c) avg[c] = sum[c] / area[c];
    return avg;
}

ConvergenceReport convergence_study(const ConvergenceOptions& opts) {
    if (opts.Ns.size() < 2) throw ValidationError("convergence study needs >= 2 deltas");
    for (std::size_t i = 1; i < opts.Ns.size(); ++i)
        if (opts.Ns[i] <= opts.Ns[i - 1])
            throw ValidationError("convergence study Ns must be increasing");

    TableOptions topts = opts.table;
    if (opts.base.mode == DnsMode::Standard) topts.with_xi = false;  // only eps_iso needed
    const auto table = std::make_shared<const EffectiveTable>(build_effective_table(topts));

    MacroProblem mp;
    mp.a_of_x = opts.base.a_of_x;
    mp.table = table;
    mp.rho = opts.base.rho;
    mp.boundary_value = opts.base.boundary_value;
    mp.grid_n = opts.macro_grid_n;
    mp.rho_mode = opts.base.mode == DnsMode::Standard ? RhoMode::CellAverage
                                                      : RhoMode::FluxDivergence;
    if (mp.rho_mode == RhoMode::CellAverage) {
        mp.reference_mesh =
            std::make_shared<const CellMesh>(build_cell_mesh(CellGeometry(0.25), 0.05));
    }
    const MacroSolution phi0 = solve_homogenized(mp);

    ConvergenceReport rep;
    for (const int N : opts.Ns) {
        DnsProblem dp = opts.base;
        dp.N = N;
        const auto t0 = std::chrono::steady_clock::now();
        const DnsField fine = solve_full(dp);
        const std::vector<double> avg = cell_average(fine);
        const double delta = 1.0 / N;
        double err2 = 0.0;
        for (int J = 0; J < N; ++J)
            for (int I = 0; I < N; ++I) {
                const Vec2 c{(I + 0.5) * delta, (J + 0.5) * delta};
                const double d = avg[static_cast<std::size_t>(J) * N + I] - phi0.interpolate(c);
                err2 += d * d * delta * delta;
            }
        const auto t1 = std::chrono::steady_clock::now();
        rep.delta_values.push_back(delta);
        rep.errors.push_back(std::sqrt(err2));
        rep.unknowns.push_back(fine.unknowns);
        rep.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    rep.slope = fit_loglog_slope(rep.delta_values, rep.errors);
    return rep;
}

void write_convergence_csv(std::ostream& os, const ConvergenceReport& rep) {
    os << "delta,error_L2,unknowns,seconds\n" << std::setprecision(17);
    for (std::size_t i = 0; i < rep.delta_values.size(); ++i)
        os << rep.delta_values[i] << ',' << rep.errors[i] << ',' << rep.unknowns[i] << ','
           << rep.seconds[i] << "\n";
}

}  // namespace homog
