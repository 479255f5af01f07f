#include "ptloop/integrator.hpp"

#include "ptloop/csv.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ptloop {

void IntegratorConfig::validate() const {
    if (!(rtol > 0.0) || !(atol > 0.0)) {
        throw std::invalid_argument("IntegratorConfig: tolerances must be positive");
    }
    if (max_steps < 1) {
        throw std::invalid_argument("IntegratorConfig: max_steps must be >= 1");
    }
    if (!(initial_step > 0.0)) {
        throw std::invalid_argument("IntegratorConfig: initial_step must be positive");
    }
}

IntegratorConfig IntegratorConfig::scaled_tolerances(double factor) const {
    if (!(factor > 0.0)) {
        throw std::invalid_argument("IntegratorConfig: tolerance factor must be positive");
    }
    IntegratorConfig out = *this;
    out.rtol *= factor;
    out.atol *= factor;
    return out;
}

PatientState Trajectory::state_at(std::size_t k) const {
    if (k >= states.size()) {
        throw std::out_of_range("Trajectory::state_at: index out of range");
    }
    return {variant, states[k]};
}

namespace {

// Trapezoidal/BDF2 composite step: the trapezoidal stage advances by
// gamma h, the BDF2 stage to the full step.  gamma = 2 - sqrt(2) makes both
// implicit stages share the iteration matrix I - d h J with d = gamma/2,
// and renders the pair L-stable.
const double kGamma = 2.0 - std::sqrt(2.0);
const double kD = kGamma / 2.0;                          // == (1-gamma)/(2-gamma)
const double kBdfY = 1.0 / (kGamma * (2.0 - kGamma));    // weight of the stage value
const double kBdfYn = (1.0 - kGamma) * (1.0 - kGamma) / (kGamma * (2.0 - kGamma));
// Difference to the embedded third-order solution, est = h (e1 f_n + e2 f_g + e3 f_1).
const double kE1 = (std::sqrt(2.0) - 1.0) / 3.0;
const double kE2 = -1.0 / 3.0;
const double kE3 = (2.0 - std::sqrt(2.0)) / 3.0;

constexpr double kJacobianRelStep = 1e-7;
constexpr double kNewtonTol = 1e-7; // in error-norm units (1.0 = local tolerance)
constexpr int kNewtonMaxIter = 40;
constexpr double kMinStep = 1e-6; // seconds

struct Stepper {
    Variant variant;
    const InputSignals* u;
    const NoiseFunction* w;
    const ModelParameters* p;
    double rtol, atol;
    int n;

    Vec scale; // sc_i = atol + rtol |y_i|, frozen at the step start

    Vec eval(double t, const Vec& y) const {
        return rhs(PatientState(variant, y), u->rates(t), (*w)(t), *p);
    }

    void update_scale(const Vec& y) {
        scale = (atol + rtol * y.array().abs()).matrix();
    }

    double scaled_norm(const Vec& v) const {
        return std::sqrt(v.cwiseQuotient(scale).squaredNorm() / n);
    }

    Mat fd_jacobian(double t, const Vec& y, const Vec& fy) const {
        Mat J(n, n);
        Vec yp = y;
        for (int j = 0; j < n; ++j) {
            const double delta = kJacobianRelStep * std::max(std::abs(y[j]), 1e-2);
            yp[j] = y[j] + delta;
            J.col(j) = (eval(t, yp) - fy) / delta;
            yp[j] = y[j];
        }
        return J;
    }

    /**
     * Solves y = rhs_const + c h f(t, y) by simplified Newton with the
     * prefactored iteration matrix.  Returns false if the iteration fails to
     * contract; on success iterates until the update stagnates near machine
     * precision, so the step map stays smooth under tiny input perturbations
     * (the estimator differentiates it by finite differences).
     */
    bool solve_stage(const Eigen::PartialPivLU<Mat>& lu, double t, double ch,
                     const Vec& rhs_const, Vec& y) const {
        double previous = -1.0;
        for (int iter = 0; iter < kNewtonMaxIter; ++iter) {
            const Vec f = eval(t, y);
            const Vec residual = y - ch * f - rhs_const;
            const Vec dy = lu.solve(residual);
            y -= dy;
            if (!y.allFinite()) return false;
            const double norm = scaled_norm(dy);
            if (norm < kNewtonTol) return true;
            if (previous >= 0.0) {
                if (norm >= previous) {
                    // Stagnation at rounding level is success; divergence is not.
                    return previous < 1e-3;
                }
                const double rate = norm / previous;
                if (iter >= 6 && rate > 0.95) return norm < 1e-3;
            }
            previous = norm;
        }
        return previous >= 0.0 && previous < 1e-3;
    }

    /**
     * One TR-BDF2 attempt from (t, y) with step h.  Outputs the new state and
     * the filtered error-norm estimate; false if a stage iteration failed.
     */
    bool attempt(double t, const Vec& y, const Vec& fy, const Mat& J, double h, Vec& y_new,
                 double& err_norm) const {
        Mat M = -kD * h * J;
        M.diagonal().array() += 1.0;
        const Eigen::PartialPivLU<Mat> lu(M);

        // Trapezoidal stage to t + gamma h.
        const double tg = t + kGamma * h;
        Vec yg = y;
        if (!solve_stage(lu, tg, kD * h, y + kD * h * fy, yg)) return false;
        const Vec fg = eval(tg, yg);

        // BDF2 stage to t + h, started from the linear extrapolant.
        const double t1 = t + h;
        y_new = yg + ((1.0 - kGamma) / kGamma) * (yg - y);
        if (!solve_stage(lu, t1, kD * h, kBdfY * yg - kBdfYn * y, y_new)) return false;
        const Vec f1 = eval(t1, y_new);

        // Embedded error, filtered through the iteration matrix so the stiff
        // components are not overestimated.
        const Vec est = h * (kE1 * fy + kE2 * fg + kE3 * f1);
        const Vec err = lu.solve(est);
        Vec sc_pair = scale;
        for (int i = 0; i < n; ++i) {
            sc_pair[i] = atol + rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        }
        err_norm = std::sqrt(err.cwiseQuotient(sc_pair).squaredNorm() / n);
        return std::isfinite(err_norm);
    }
};

[[noreturn]] void fail_at(const char* what, double t) {
    throw std::runtime_error(std::string("integrate: ") + what + " at t = " +
                             std::to_string(t) + " s");
}

/**
 * Advances y over the span [t, t + h] of a frozen grid.  When the stage
 * iteration fails to contract the span is bisected: grids are recorded along
 * a quiet reference trajectory, and a single recorded step can be too long
 * for the Newton predictor once the replayed noise excites the dynamics.
 */
void replay_span(Stepper& stepper, double t, double h, Vec& y) {
    stepper.update_scale(y);
    const Vec fy = stepper.eval(t, y);
    if (fy.allFinite()) {
        const Mat J = stepper.fd_jacobian(t, y, fy);
        Vec y_new(stepper.n);
        double err_norm = 0.0;
        if (stepper.attempt(t, y, fy, J, h, y_new, err_norm) && y_new.allFinite()) {
            y = y_new;
            return;
        }
    }
    if (h < 2.0 * kMinStep) fail_at("replay stage iteration failed", t);
    const double half = 0.5 * h;
    replay_span(stepper, t, half, y);
    replay_span(stepper, t + half, half, y);
}

/// Integrates one smooth segment (no dose onsets inside) with error control.
void integrate_segment(Stepper& stepper, double t0, double t1, Vec& y, double& h,
                       const IntegratorConfig& cfg, long& steps_taken, StepGrid* grid) {
    double t = t0;
    while (t < t1) {
        if (steps_taken >= cfg.max_steps) fail_at("max internal steps exceeded", t);
        h = std::min(h, t1 - t);
        if (h < kMinStep) fail_at("step size underflow", t);

        stepper.update_scale(y);
        const Vec fy = stepper.eval(t, y);
        if (!fy.allFinite()) fail_at("non-finite right-hand side", t);
        const Mat J = stepper.fd_jacobian(t, y, fy);

        bool accepted = false;
        while (!accepted) {
            // An exact-cap step ends the segment; comparing after the cap
            // avoids a rounding-level sliver step at the boundary.
            const bool hits_end = (h == t1 - t);
            Vec y_new(stepper.n);
            double err_norm = 0.0;
            const bool ok = stepper.attempt(t, y, fy, J, h, y_new, err_norm);
            if (ok && err_norm <= 1.0) {
                t = hits_end ? t1 : t + h;
                y = y_new;
                ++steps_taken;
                if (grid != nullptr) grid->times.push_back(t);
                const double factor =
                    err_norm > 0.0 ? 0.9 * std::pow(err_norm, -1.0 / 3.0) : 5.0;
                h *= std::clamp(factor, 0.2, 5.0);
                accepted = true;
            } else {
                h *= ok ? std::clamp(0.9 * std::pow(err_norm, -1.0 / 3.0), 0.1, 0.5) : 0.5;
                if (h < kMinStep) fail_at("step size underflow", t);
            }
        }
        if (!y.allFinite()) fail_at("non-finite state", t);
    }
}

} // namespace

PatientState integrate(const PatientState& x0, double t0, double t1, const InputSignals& u,
                       const NoiseFunction& w, const ModelParameters& p,
                       const IntegratorConfig& cfg, StepGrid* grid) {
    cfg.validate();
    if (!(t1 > t0)) {
        throw std::invalid_argument("integrate: need t1 > t0");
    }
    if (!x0.x.allFinite()) {
        throw std::invalid_argument("integrate: non-finite initial state");
    }

    Stepper stepper{.variant = x0.variant, .u = &u,         .w = &w,
                    .p = &p,               .rtol = cfg.rtol, .atol = cfg.atol,
                    .n = x0.dim()};

    Vec y = x0.x;
    double h = cfg.initial_step;
    long steps_taken = 0;
    if (grid != nullptr) {
        grid->times.clear();
        grid->times.push_back(t0);
    }

    // The right-hand side is smooth except at dose onsets; restarting there
    // keeps the error expansion valid on every internal step.
    std::vector<double> breaks = u.onsets_between(t0, t1);
    breaks.push_back(t1);
    double segment_start = t0;
    for (double segment_end : breaks) {
        integrate_segment(stepper, segment_start, segment_end, y, h, cfg, steps_taken, grid);
        segment_start = segment_end;
    }
    return {x0.variant, y};
}

PatientState integrate(const PatientState& x0, double t0, double t1, const InputSignals& u,
                       const ProcessNoise& w, const ModelParameters& p,
                       const IntegratorConfig& cfg, StepGrid* grid) {
    require_same_variant(x0.variant, w.variant, "integrate");
    return integrate(
        x0, t0, t1, u, [&w](double) { return w; }, p, cfg, grid);
}

PatientState step_map(const PatientState& x, const InputSignals& u, double t0,
                      const ProcessNoise& w, const ModelParameters& p,
                      const IntegratorConfig& cfg, StepGrid* grid) {
    return integrate(x, t0, t0 + kSampleSeconds, u, w, p, cfg, grid);
}

PatientState replay(const PatientState& x0, const InputSignals& u, const ProcessNoise& w,
                    const ModelParameters& p, const StepGrid& grid) {
    require_same_variant(x0.variant, w.variant, "replay");
    if (grid.times.size() < 2) {
        throw std::invalid_argument("replay: grid needs at least two boundaries");
    }
    NoiseFunction wf = [&w](double) { return w; };
    // Replay reuses the step sequence but re-solves the implicit stages, so
    // the result is a smooth function of (x0, w) on the frozen grid.  The
    // tolerances only set the Newton scaling here; use the defaults.
    const IntegratorConfig cfg;
    Stepper stepper{.variant = x0.variant, .u = &u,         .w = &wf,
                    .p = &p,               .rtol = cfg.rtol, .atol = cfg.atol,
                    .n = x0.dim()};

    Vec y = x0.x;
    for (std::size_t i = 0; i + 1 < grid.times.size(); ++i) {
        const double t = grid.times[i];
        const double h = grid.times[i + 1] - t;
        if (!(h > 0.0)) {
            throw std::invalid_argument("replay: grid times must increase");
        }
        replay_span(stepper, t, h, y);
        if (!y.allFinite()) fail_at("non-finite state in replay", t);
    }
    return {x0.variant, y};
}

void step_sensitivities(const PatientState& x, const InputSignals& u, const ProcessNoise& w,
                        const ModelParameters& p, const StepGrid& grid, double rel_step,
                        Mat& A, Mat& B) {
    const int n = x.dim();
    const int nw = noise_dim(x.variant);
    const Vec base = replay(x, u, w, p, grid).x;

    A.resize(n, n);
    PatientState xp = x;
    for (int j = 0; j < n; ++j) {
        const double delta = rel_step * std::max(std::abs(x.x[j]), 1e-2);
        xp.x[j] = x.x[j] + delta;
        A.col(j) = (replay(xp, u, w, p, grid).x - base) / delta;
        xp.x[j] = x.x[j];
    }

    B.resize(n, nw);
    ProcessNoise wp = w;
    for (int j = 0; j < nw; ++j) {
        const double delta = rel_step * std::max(std::abs(w.w[j]), 1e-2);
        wp.w[j] = w.w[j] + delta;
        B.col(j) = (replay(x, u, wp, p, grid).x - base) / delta;
        wp.w[j] = w.w[j];
    }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    csv::Table table;
    table.header = {"t_seconds", "step_index"};
    const int n = state_dim(traj.variant);
    const char* names[] = {"t4_th", "t4", "t3p", "t3c", "tsh", "tshc", "mmi_th"};
    for (int i = 0; i < n; ++i) table.header.emplace_back(names[i]);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        std::vector<double> row = {traj.times[k], static_cast<double>(k)};
        for (int i = 0; i < n; ++i) row.push_back(traj.states[k][i]);
        table.rows.push_back(std::move(row));
    }
    csv::write_table(path, table);
}

Trajectory read_trajectory_csv(const std::string& path, Variant variant) {
    const csv::Table table = csv::read_table(path);
    const int n = state_dim(variant);
    if (table.header.size() != static_cast<std::size_t>(n) + 2) {
        throw std::runtime_error("trajectory CSV '" + path + "' has " +
                                 std::to_string(table.header.size()) + " columns, expected " +
                                 std::to_string(n + 2));
    }
    Trajectory traj;
    traj.variant = variant;
    for (const std::vector<double>& row : table.rows) {
        traj.times.push_back(row[0]);
        Vec x(n);
        for (int i = 0; i < n; ++i) x[i] = row[2 + i];
        traj.states.push_back(std::move(x));
    }
    return traj;
}

} // namespace ptloop
