#include "homog/msint.hpp"

#include <cmath>
#include <iomanip>

namespace homog {

namespace {

constexpr double kFdStep = 1e-5;

Vec2 slow_directional(const FluxField& flux, const Vec2& x, const Vec2& X) {
    // (X . grad_x) Q: central differences in each slow coordinate.
    const Vec2 dx1 = (flux.eval({x.x + kFdStep, x.y}, X) - flux.eval({x.x - kFdStep, x.y}, X)) /
                     (2.0 * kFdStep);
    const Vec2 dx2 = (flux.eval({x.x, x.y + kFdStep}, X) - flux.eval({x.x, x.y - kFdStep}, X)) /
                     (2.0 * kFdStep);
    return dx1 * X.x + dx2 * X.y;
}

double fast_divergence(const FluxField& flux, const Vec2& x, const Vec2& X) {
    const double d1 = (flux.eval(x, {X.x + kFdStep, X.y}).x - flux.eval(x, {X.x - kFdStep, X.y}).x) /
                      (2.0 * kFdStep);
    const double d2 = (flux.eval(x, {X.x, X.y + kFdStep}).y - flux.eval(x, {X.x, X.y - kFdStep}).y) /
                      (2.0 * kFdStep);
    return d1 + d2;
}

double prefactor(double delta, int p) {
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= delta;
    return r;
}

void check_quad_matches(const CellGeometry& geom, const BoundaryQuadrature& quad) {
    if (quad.points.empty() || std::abs(level_set(geom, quad.points.front())) > 1e-9)
        throw ValidationError("boundary quadrature does not lie on the given geometry");
}

// True-boundary point at angle theta: radius from the pointwise fixed point
// r = a(x_hat + delta (c + r rhat)), plus the tangent data the normal needs.
struct TruePoint {
    Vec2 P;        // fast coordinates of the boundary point
    Vec2 dP;       // dP/dtheta
    Vec2 x;        // slow position x_hat + delta P
};

TruePoint true_boundary_point(const FieldExpr& a_of_x, const Vec2& x_hat, double delta,
                              double theta) {
    const Vec2 c = CellGeometry::center();
    const Vec2 rhat{std::cos(theta), std::sin(theta)};
    const Vec2 that{-std::sin(theta), std::cos(theta)};
    auto radius_at = [&](double r) {
        const Vec2 x = x_hat + delta * (c + r * rhat);
        return a_of_x.evaluate({{"x1", x.x}, {"x2", x.y}});
    };
    double r = radius_at(0.0);
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
        const double next = radius_at(r);
        if (std::abs(next - r) < 1e-14) {
            r = next;
            converged = true;
            break;
        }
        r = next;
    }
    if (!converged)
        throw NumericalError("true-boundary fixed point failed to converge (delta too large "
                             "or radius field too steep)");
    TruePoint tp;
    tp.P = c + r * rhat;
    tp.x = x_hat + delta * tp.P;
    const Bindings b = {{"x1", tp.x.x}, {"x2", tp.x.y}};
    const Vec2 grad_a{a_of_x.gradient_fd("x1", b, kFdStep), a_of_x.gradient_fd("x2", b, kFdStep)};
    // Implicit differentiation of r(theta) = a(x_hat + delta P(theta)).
    const double denom = 1.0 - delta * grad_a.dot(rhat);
    if (std::abs(denom) < 1e-8)
        throw NumericalError("true-boundary tangent singular (delta |grad a| ~ 1)");
    const double dr = delta * r * grad_a.dot(that) / denom;
    tp.dP = dr * rhat + r * that;
    return tp;
}

}  // namespace

FluxField FluxField::from_expressions(const FieldExpr& q1, const FieldExpr& q2) {
    FluxField f;
    f.eval = [q1, q2](const Vec2& x, const Vec2& X) {
        return Vec2{eval_xX(q1, x, X), eval_xX(q2, x, X)};
    };
    return f;
}

FluxField FluxField::from_cell_solution(std::shared_ptr<const CellSolution> sol, int component) {
    if (!sol || !sol->has_psi())
        throw ValidationError("discrete flux requires a Psi cell solution");
    auto mesh = sol->spec.mesh;
    auto locator = std::make_shared<PointLocator>(mesh->mesh);
    const Vec2 ek = component == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    const CellGeometry geom = sol->spec.geom;
    FluxField f;
    f.eval = [sol, mesh, locator, ek, component, geom](const Vec2&, const Vec2& X) {
        // Exterior one-sided evaluation: nudge boundary points outward.
        Vec2 p = X;
        if (std::abs(level_set(geom, X)) < 1e-9)
            p = X + 1e-7 * normal0(geom, X);
        const auto hit = locator->locate(p, Region::Exterior);
        if (!hit) throw NumericalError("discrete flux evaluation outside the exterior mesh");
        const Vec2 g = tri_gradient(mesh->mesh, hit->first, sol->psi[component]);
        return g + ek;
    };
    return f;
}

double ms_form_correct(const FluxField& flux, const CellGeometry& geom, const Vec2& x_hat,
                       double delta, const BoundaryQuadrature& quad, int measure_exponent) {
    if (!(delta > 0.0 && delta <= 0.2))
        throw ValidationError("delta must lie in (0, 0.2]");
    check_quad_matches(geom, quad);
    double integral = 0.0;
    for (std::size_t i = 0; i < quad.points.size(); ++i) {
        const Vec2& X = quad.points[i];
        const Vec2 q0 = flux.eval(x_hat, X);
        const Vec2 slow = slow_directional(flux, x_hat, X);
        const double divq = fast_divergence(flux, x_hat, X);
        const Vec2 xv = quad.velocity[i].left_mul(X);
        const double bracket =
            (q0 + delta * slow).dot(quad.normals0[i]) + delta * divq * xv.dot(quad.normals0[i]);
        integral += quad.weights[i] * bracket;
    }
    return prefactor(delta, measure_exponent) * integral;
}

double ms_form_naive(const FluxField& flux, const CellGeometry& geom, const Vec2& x_hat,
                     double delta, const BoundaryQuadrature& quad, int measure_exponent) {
    if (!(delta > 0.0 && delta <= 0.2))
        throw ValidationError("delta must lie in (0, 0.2]");
    check_quad_matches(geom, quad);
    double integral = 0.0;
    for (std::size_t i = 0; i < quad.points.size(); ++i) {
        const Vec2& X = quad.points[i];
        const Vec2 q0 = flux.eval(x_hat, X);
        const Vec2 slow = slow_directional(flux, x_hat, X);
        const Vec2 n = quad.normals0[i] + delta * quad.normals1[i];
        integral += quad.weights[i] * (q0 + delta * slow).dot(n);
    }
    return prefactor(delta, measure_exponent) * integral;
}

double discrepancy_term(const FluxField& flux, const CellGeometry& geom, const Vec2& x_hat,
                        const BoundaryQuadrature& quad) {
    check_quad_matches(geom, quad);
    double s = 0.0;
    for (std::size_t i = 0; i < quad.points.size(); ++i)
        s += quad.weights[i] * flux.eval(x_hat, quad.points[i]).dot(quad.normals1[i]);
    return s;
}

double velocity_term(const FluxField& flux, const CellGeometry& geom, const Vec2& x_hat,
                     const BoundaryQuadrature& quad) {
    check_quad_matches(geom, quad);
    double s = 0.0;
    for (std::size_t i = 0; i < quad.points.size(); ++i) {
        const Vec2& X = quad.points[i];
        const Vec2 xv = quad.velocity[i].left_mul(X);
        s += quad.weights[i] * fast_divergence(flux, x_hat, X) * xv.dot(quad.normals0[i]);
    }
    return s;
}

double open_curve_form(const FluxField& flux, const Arc& arc, const Vec2& x_hat, double delta,
                       int nodes_per_panel, int measure_exponent) {
    if (!(arc.theta_end > arc.theta_start))
        throw ValidationError("open_curve_form: degenerate arc");
    const BoundaryQuadrature quad =
        arc_quadrature(arc.geom, arc.theta_start, arc.theta_end, nodes_per_panel);
    double integral = 0.0;
    for (std::size_t i = 0; i < quad.points.size(); ++i) {
        const Vec2& X = quad.points[i];
        const Vec2 q0 = flux.eval(x_hat, X);
        const Vec2 slow = slow_directional(flux, x_hat, X);
        const double divq = fast_divergence(flux, x_hat, X);
        const Vec2 xv = quad.velocity[i].left_mul(X);
        integral += quad.weights[i] *
                    ((q0 + delta * slow).dot(quad.normals0[i]) +
                     delta * divq * xv.dot(quad.normals0[i]));
    }
    // Endpoint (Gamma-analog) contributions: delta * sign * [(X.V) x Q].
    auto endpoint = [&](double theta) {
        const Vec2 n0{std::cos(theta), std::sin(theta)};
        const Vec2 X = CellGeometry::center() + arc.geom.a * n0;
        const Vec2 xv = Mat2::outer(arc.geom.grad_a, n0).left_mul(X);
        return xv.cross(flux.eval(x_hat, X));
    };
    integral += delta * kGammaEndpointSign * (endpoint(arc.theta_end) - endpoint(arc.theta_start));
    return prefactor(delta, measure_exponent) * integral;
}

double brute_force(const FluxField& flux, const FieldExpr& a_of_x, const Vec2& x_hat,
                   double delta, int n_quad, int measure_exponent) {
    if (n_quad < 512) throw ValidationError("brute_force: need n_quad >= 512");
    if (!(delta > 0.0 && delta <= 0.2))
        throw ValidationError("delta must lie in (0, 0.2]");
    double integral = 0.0;
    const double dtheta = 2.0 * kPi / n_quad;
    for (int i = 0; i < n_quad; ++i) {
        const TruePoint tp = true_boundary_point(a_of_x, x_hat, delta, dtheta * i);
        const Vec2 q = flux.eval(tp.x, tp.P);
        // n dS = (dP2, -dP1) dtheta for the counter-clockwise parametrization.
        integral += dtheta * (q.x * tp.dP.y - q.y * tp.dP.x);
    }
    return prefactor(delta, measure_exponent) * integral;
}

double brute_force_arc(const FluxField& flux, const FieldExpr& a_of_x, const Vec2& x_hat,
                       double delta, double theta_start, double theta_end, int nodes_per_panel,
                       int measure_exponent) {
    if (!(theta_end > theta_start)) throw ValidationError("brute_force_arc: degenerate arc");
    nodes_per_panel = std::min(std::max(nodes_per_panel, 8), 32);
    const int panels =
        std::max(1, static_cast<int>(std::ceil((theta_end - theta_start) / (kPi / 8.0))));
    std::vector<double> nodes, weights;
    gauss_legendre(nodes_per_panel, nodes, weights);
    double integral = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double t0 = theta_start + (theta_end - theta_start) * p / panels;
        const double t1 = theta_start + (theta_end - theta_start) * (p + 1) / panels;
        const double half = 0.5 * (t1 - t0), mid = 0.5 * (t1 + t0);
        for (int i = 0; i < nodes_per_panel; ++i) {
            const TruePoint tp = true_boundary_point(a_of_x, x_hat, delta, mid + half * nodes[i]);
            const Vec2 q = flux.eval(tp.x, tp.P);
            integral += weights[i] * half * (q.x * tp.dP.y - q.y * tp.dP.x);
        }
    }
    return prefactor(delta, measure_exponent) * integral;
}

MsIntReport order_study(const FluxField& flux, const OrderStudyOptions& opts) {
    if (opts.deltas.size() < 3)
        throw ValidationError("order_study: need at least 3 delta values");
    const Bindings b = {{"x1", opts.x_hat.x}, {"x2", opts.x_hat.y}};
    const double a0 = opts.a_of_x.evaluate(b);
    const Vec2 grad_a{opts.a_of_x.gradient_fd("x1", b, kFdStep),
                      opts.a_of_x.gradient_fd("x2", b, kFdStep)};
    const CellGeometry geom(a0, grad_a);

    MsIntReport rep;
    rep.measure_exponent = opts.measure_exponent;
    rep.delta_values = opts.deltas;

    if (!opts.arc) {
        const BoundaryQuadrature quad = boundary_quadrature(geom, opts.n_quad);
        rep.discrepancy = discrepancy_term(flux, geom, opts.x_hat, quad);
        for (const double d : opts.deltas) {
            rep.correct_values.push_back(
                ms_form_correct(flux, geom, opts.x_hat, d, quad, opts.measure_exponent));
            rep.naive_values.push_back(
                ms_form_naive(flux, geom, opts.x_hat, d, quad, opts.measure_exponent));
            rep.oracle_values.push_back(brute_force(flux, opts.a_of_x, opts.x_hat, d,
                                                    std::max(512, opts.n_quad),
                                                    opts.measure_exponent));
        }
    } else {
        const Arc arc{geom, opts.arc->first, opts.arc->second};
        const BoundaryQuadrature quad =
            arc_quadrature(geom, arc.theta_start, arc.theta_end, 12);
        rep.discrepancy = discrepancy_term(flux, geom, opts.x_hat, quad);
        for (const double d : opts.deltas) {
            const double correct =
                open_curve_form(flux, arc, opts.x_hat, d, 12, opts.measure_exponent);
            rep.correct_values.push_back(correct);
            // The naive form on the arc: same integrand recipe, no endpoint term.
            double naive = 0.0;
            for (std::size_t i = 0; i < quad.points.size(); ++i) {
                const Vec2& X = quad.points[i];
                const Vec2 q0 = flux.eval(opts.x_hat, X);
                const Vec2 slow = slow_directional(flux, opts.x_hat, X);
                naive += quad.weights[i] *
                         (q0 + d * slow).dot(quad.normals0[i] + d * quad.normals1[i]);
            }
            rep.naive_values.push_back(prefactor(d, opts.measure_exponent) * naive);
            rep.oracle_values.push_back(brute_force_arc(flux, opts.a_of_x, opts.x_hat, d,
                                                        arc.theta_start, arc.theta_end, 12,
                                                        opts.measure_exponent));
        }
    }
    for (std::size_t i = 0; i < opts.deltas.size(); ++i) {
        const double scale = prefactor(opts.deltas[i], opts.measure_exponent);
        rep.correct_residuals.push_back(
            std::abs(rep.correct_values[i] - rep.oracle_values[i]) / scale);
        rep.naive_residuals.push_back(
            std::abs(rep.naive_values[i] - rep.oracle_values[i]) / scale);
    }
    rep.slope_correct = fit_loglog_slope(rep.delta_values, rep.correct_residuals);
    rep.slope_naive = fit_loglog_slope(rep.delta_values, rep.naive_residuals);
    return rep;
}

void write_msint_csv(std::ostream& os, const MsIntReport& report) {
    os << "delta,correct,naive,oracle,res_correct,res_naive\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < report.delta_values.size(); ++i) {
        os << report.delta_values[i] << ',' << report.correct_values[i] << ','
           << report.naive_values[i] << ',' << report.oracle_values[i] << ','
           << report.correct_residuals[i] << ',' << report.naive_residuals[i] << "\n";
    }
    os << "slope_correct=" << report.slope_correct << ",slope_naive=" << report.slope_naive
       << ",discrepancy=" << report.discrepancy << "\n";
}

}  // namespace homog
