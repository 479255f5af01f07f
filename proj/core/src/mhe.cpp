#include "ptloop/mhe.hpp"

#include "ptloop/csv.hpp"
#include "ptloop/model.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace ptloop {

namespace {

/// Noise components that stay free decision variables.  w_LT3 is pinned to
/// zero for the hypo variant: the scenarios never prescribe LT3, so its
/// misreport factor carries no information and would only pad the NLP.
std::vector<int> free_noise_components(Variant v) {
    if (v == Variant::hypo) return {0, 1, 2, 4};
    return {0, 1, 2, 3};
}

Eigen::VectorXd json_vector(const nlohmann::json& node, const std::string& key,
                            Eigen::Index expected) {
    if (!node.is_array() || static_cast<Eigen::Index>(node.size()) != expected) {
        throw std::invalid_argument("estimator config: '" + key + "' must be an array of " +
                                    std::to_string(expected) + " numbers");
    }
    Eigen::VectorXd out(expected);
    for (Eigen::Index i = 0; i < expected; ++i) {
        if (!node[static_cast<std::size_t>(i)].is_number()) {
            throw std::invalid_argument("estimator config: '" + key + "' holds a non-number");
        }
        out[i] = node[static_cast<std::size_t>(i)].get<double>();
    }
    return out;
}

double json_number(const nlohmann::json& value, const std::string& key) {
    if (!value.is_number()) {
        throw std::invalid_argument("estimator config: value of '" + key + "' is not a number");
    }
    return value.get<double>();
}

} // namespace

void SolverSettings::validate() const {
    if (max_iterations < 1) {
        throw std::invalid_argument("SolverSettings: max_iterations must be >= 1");
    }
    if (!(gradient_tolerance > 0.0) || !(cost_tolerance > 0.0)) {
        throw std::invalid_argument("SolverSettings: tolerances must be positive");
    }
    if (!(penalty_weight > 0.0)) {
        throw std::invalid_argument("SolverSettings: penalty_weight must be positive");
    }
    if (!(fd_step > 0.0)) {
        throw std::invalid_argument("SolverSettings: fd_step must be positive");
    }
    if (!(initial_lambda > 0.0)) {
        throw std::invalid_argument("SolverSettings: initial_lambda must be positive");
    }
}

void EstimatorConfig::validate() const {
    const int n = state_dim(variant);
    const int nw = noise_dim(variant);
    if (P_diag.size() != n) {
        throw std::invalid_argument("EstimatorConfig: P_diag must have the state dimension");
    }
    if (Q_diag.size() != nw + kOutputDim) {
        throw std::invalid_argument("EstimatorConfig: Q_diag must have noise + output dimension");
    }
    if (prior.size() != n) {
        throw std::invalid_argument("EstimatorConfig: prior must have the state dimension");
    }
    if ((P_diag.array() < 0.0).any() || (Q_diag.array() < 0.0).any() ||
        (R_diag.array() < 0.0).any()) {
        throw std::invalid_argument("EstimatorConfig: weights must be nonnegative");
    }
    if (!(eta > 0.0) || !(eta < 1.0)) {
        throw std::invalid_argument("EstimatorConfig: eta must lie in (0, 1)");
    }
    if (horizon < 1) {
        throw std::invalid_argument("EstimatorConfig: horizon must be >= 1");
    }
    solver.validate();
    integrator.validate();
}

EstimatorConfig default_estimator_config(Variant variant) {
    EstimatorConfig cfg;
    cfg.variant = variant;
    cfg.horizon = 20;
    if (variant == Variant::hypo) {
        cfg.P_diag = (Eigen::VectorXd(6) << 1, 0.1, 1, 1, 1, 1).finished();
        cfg.Q_diag = (Eigen::VectorXd(8) << 10, 1, 1, 0, 1, 1e3, 1e3, 100).finished();
        cfg.R_diag = Eigen::Vector3d(500, 500, 100);
        cfg.eta = 0.7;
        cfg.prior = (Eigen::VectorXd(6) << 0.2, 1.5, 3, 1.5, 2, 2).finished();
    } else {
        cfg.P_diag = (Eigen::VectorXd(7) << 100, 0.1, 1, 1, 1, 1, 100).finished();
        cfg.Q_diag = (Eigen::VectorXd(7) << 10, 1, 1, 10, 1e3, 1e3, 100).finished();
        cfg.R_diag = Eigen::Vector3d(250, 250, 1e3);
        cfg.eta = 0.8;
        cfg.prior = (Eigen::VectorXd(7) << 7, 3, 7, 2, 2, 2.5, 1).finished();
    }
    return cfg;
}

EstimatorConfig estimator_config_from_json(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("estimator config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw std::invalid_argument("estimator config: expected a JSON object");
    }
    if (!doc.contains("variant")) {
        throw std::invalid_argument("estimator config: missing 'variant'");
    }
    EstimatorConfig cfg =
        default_estimator_config(variant_from_string(doc.at("variant").get<std::string>()));
    const int n = state_dim(cfg.variant);
    const int nw = noise_dim(cfg.variant);

    for (const auto& [key, value] : doc.items()) {
        if (key == "variant") {
            continue;
        } else if (key == "P_diag") {
            cfg.P_diag = json_vector(value, key, n);
        } else if (key == "Q_diag") {
            cfg.Q_diag = json_vector(value, key, nw + kOutputDim);
        } else if (key == "R_diag") {
            cfg.R_diag = json_vector(value, key, kOutputDim);
        } else if (key == "prior") {
            cfg.prior = json_vector(value, key, n);
        } else if (key == "eta") {
            cfg.eta = json_number(value, key);
        } else if (key == "horizon") {
            cfg.horizon = static_cast<int>(json_number(value, key));
        } else if (key == "solver") {
            if (!value.is_object()) {
                throw std::invalid_argument("estimator config: 'solver' must be an object");
            }
            for (const auto& [skey, svalue] : value.items()) {
                if (skey == "max_iterations") {
                    cfg.solver.max_iterations = static_cast<int>(json_number(svalue, skey));
                } else if (skey == "gradient_tolerance") {
                    cfg.solver.gradient_tolerance = json_number(svalue, skey);
                } else if (skey == "cost_tolerance") {
                    cfg.solver.cost_tolerance = json_number(svalue, skey);
                } else if (skey == "penalty_weight") {
                    cfg.solver.penalty_weight = json_number(svalue, skey);
                } else if (skey == "fd_step") {
                    cfg.solver.fd_step = json_number(svalue, skey);
                } else if (skey == "initial_lambda") {
                    cfg.solver.initial_lambda = json_number(svalue, skey);
                } else {
                    throw std::invalid_argument("estimator config: unknown solver key '" + skey +
                                                "'");
                }
            }
        } else if (key == "integrator") {
            if (!value.is_object()) {
                throw std::invalid_argument("estimator config: 'integrator' must be an object");
            }
            for (const auto& [ikey, ivalue] : value.items()) {
                if (ikey == "rtol") {
                    cfg.integrator.rtol = json_number(ivalue, ikey);
                } else if (ikey == "atol") {
                    cfg.integrator.atol = json_number(ivalue, ikey);
                } else if (ikey == "max_steps") {
                    cfg.integrator.max_steps = static_cast<int>(json_number(ivalue, ikey));
                } else if (ikey == "initial_step") {
                    cfg.integrator.initial_step = json_number(ivalue, ikey);
                } else {
                    throw std::invalid_argument("estimator config: unknown integrator key '" +
                                                ikey + "'");
                }
            }
        } else {
            throw std::invalid_argument("estimator config: unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

EstimatorConfig load_estimator_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open estimator config '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return estimator_config_from_json(text.str());
}

std::string estimator_config_to_json(const EstimatorConfig& cfg) {
    cfg.validate();
    auto to_array = [](const auto& v) {
        std::vector<double> out(v.data(), v.data() + v.size());
        return out;
    };
    nlohmann::json doc;
    doc["variant"] = to_string(cfg.variant);
    doc["P_diag"] = to_array(cfg.P_diag);
    doc["Q_diag"] = to_array(cfg.Q_diag);
    doc["R_diag"] = to_array(cfg.R_diag);
    doc["eta"] = cfg.eta;
    doc["horizon"] = cfg.horizon;
    doc["prior"] = to_array(cfg.prior);
    doc["solver"] = {{"max_iterations", cfg.solver.max_iterations},
                     {"gradient_tolerance", cfg.solver.gradient_tolerance},
                     {"cost_tolerance", cfg.solver.cost_tolerance},
                     {"penalty_weight", cfg.solver.penalty_weight},
                     {"fd_step", cfg.solver.fd_step},
                     {"initial_lambda", cfg.solver.initial_lambda}};
    doc["integrator"] = {{"rtol", cfg.integrator.rtol},
                         {"atol", cfg.integrator.atol},
                         {"max_steps", cfg.integrator.max_steps},
                         {"initial_step", cfg.integrator.initial_step}};
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Window solver
// ---------------------------------------------------------------------------

struct detail::WindowSolver::Impl {
    MheWindow win;
    EstimatorConfig cfg;
    ModelParameters params;
    IntegratorConfig tight; ///< solver-internal tolerances (10x tighter)
    ConstraintSets sets;

    int n = 0;     ///< state dimension
    int nw = 0;    ///< process-noise dimension
    int nfree = 0; ///< free components per w_j
    int m = 0;     ///< window length M_k
    long k0 = 0;   ///< first window step k - m

    std::vector<int> free_w;   ///< indices of the free noise components
    std::vector<long> sampled; ///< sampled steps in [k0, k], ascending

    // Decision-vector layout: x0 | w-blocks | v-blocks.
    int w_off = 0;
    int v_off = 0;
    int dim = 0;

    // Residual-row layout: prior | w | v | output | X penalty | Y penalty.
    int row_w = 0;
    int row_v = 0;
    int row_y = 0;
    int row_x_pen = 0;
    int row_y_pen = 0;
    int rows = 0;

    std::vector<StepGrid> grids; ///< frozen per window step
    Eigen::VectorXd z_solution;

    Impl(const MheWindow& window, const EstimatorConfig& config, const ModelParameters& p);

    [[nodiscard]] double discount(int jj) const { return std::pow(cfg.eta, m - jj); }
    [[nodiscard]] ProcessNoise noise_at(const Eigen::VectorXd& z, int jj) const;
    [[nodiscard]] std::vector<Vec> rollout(const Eigen::VectorXd& z, bool frozen) const;
    void assemble(const Eigen::VectorXd& z, const std::vector<Vec>& xs, Eigen::VectorXd& r,
                  Eigen::MatrixXd* J, double* cost, double* violation) const;
    [[nodiscard]] Eigen::VectorXd projected_gradient(const Eigen::VectorXd& z,
                                                     const Eigen::VectorXd& g) const;
    [[nodiscard]] Eigen::VectorXd pack_cold() const;
    [[nodiscard]] Eigen::VectorXd clamp(const Eigen::VectorXd& z) const;
    [[nodiscard]] MheSolution finish(const Eigen::VectorXd& z, int iterations,
                                     bool converged) const;
};

detail::WindowSolver::Impl::Impl(const MheWindow& window, const EstimatorConfig& config,
                                 const ModelParameters& p)
    : win(window), cfg(config), params(p) {
    cfg.validate();
    params.validate();
    require_same_variant(win.variant, cfg.variant, "WindowSolver");
    if (win.k < 0 || win.m < 0 || win.m > win.k) {
        throw std::invalid_argument("WindowSolver: need 0 <= m <= k");
    }
    if (win.m > 0 && win.inputs == nullptr) {
        throw std::invalid_argument("WindowSolver: inputs must be set for a nonempty window");
    }
    n = state_dim(win.variant);
    nw = noise_dim(win.variant);
    if (win.prior.size() != n) {
        throw std::invalid_argument("WindowSolver: prior must have the state dimension");
    }
    free_w = free_noise_components(win.variant);
    nfree = static_cast<int>(free_w.size());
    m = win.m;
    k0 = win.k - m;
    for (const auto& [j, meas] : win.measurements) {
        if (j < k0 || j > win.k) {
            throw std::invalid_argument("WindowSolver: measurement step outside the window");
        }
        sampled.push_back(j);
    }
    sets = constraint_sets(win.variant);
    tight = cfg.integrator.scaled_tolerances(0.1);

    const int ns = static_cast<int>(sampled.size());
    w_off = n;
    v_off = n + m * nfree;
    dim = v_off + kOutputDim * ns;

    row_w = n;
    row_v = row_w + m * nfree;
    row_y = row_v + kOutputDim * ns;
    row_x_pen = row_y + kOutputDim * ns;
    row_y_pen = row_x_pen + (m + 1) * n;
    rows = row_y_pen + kOutputDim * ns;

    // Freeze the integration grids along the zero-noise prior rollout; the
    // same grids then define the objective for every iterate of this window.
    grids.resize(static_cast<std::size_t>(m));
    PatientState x(win.variant, Vec(win.prior));
    const ProcessNoise w0 = ProcessNoise::zero(win.variant);
    for (int jj = 0; jj < m; ++jj) {
        x = step_map(x, *win.inputs, static_cast<double>(k0 + jj) * kSampleSeconds, w0, params,
                     tight, &grids[static_cast<std::size_t>(jj)]);
    }
}

ProcessNoise detail::WindowSolver::Impl::noise_at(const Eigen::VectorXd& z, int jj) const {
    Vec w = Vec::Zero(nw);
    for (int c = 0; c < nfree; ++c) {
        w[free_w[static_cast<std::size_t>(c)]] = z[w_off + jj * nfree + c];
    }
    return {win.variant, std::move(w)};
}

std::vector<Vec> detail::WindowSolver::Impl::rollout(const Eigen::VectorXd& z,
                                                     bool frozen) const {
    std::vector<Vec> xs(static_cast<std::size_t>(m) + 1);
    xs[0] = z.head(n);
    PatientState x(win.variant, xs[0]);
    for (int jj = 0; jj < m; ++jj) {
        const ProcessNoise w = noise_at(z, jj);
        if (frozen) {
            x = replay(x, *win.inputs, w, params, grids[static_cast<std::size_t>(jj)]);
        } else {
            x = step_map(x, *win.inputs, static_cast<double>(k0 + jj) * kSampleSeconds, w, params,
                         tight);
        }
        xs[static_cast<std::size_t>(jj) + 1] = x.x;
    }
    return xs;
}

void detail::WindowSolver::Impl::assemble(const Eigen::VectorXd& z, const std::vector<Vec>& xs,
                                          Eigen::VectorXd& r, Eigen::MatrixXd* J, double* cost,
                                          double* violation) const {
    const auto& meas_idx = measured_indices();
    const double sqrt_rho = std::sqrt(cfg.solver.penalty_weight);
    const int nxw = n + m * nfree;

    r.setZero(rows);

    // Rollout sensitivities T_j = d x_j / d (x0, w) from chained per-step
    // finite differences; only needed when the Jacobian is requested.
    std::vector<Eigen::MatrixXd> T;
    if (J != nullptr) {
        J->setZero(rows, dim);
        T.assign(static_cast<std::size_t>(m) + 1, Eigen::MatrixXd::Zero(n, nxw));
        T[0].leftCols(n).setIdentity();
        Mat A;
        Mat B;
        for (int jj = 0; jj < m; ++jj) {
            const ProcessNoise w = noise_at(z, jj);
            step_sensitivities(PatientState(win.variant, xs[static_cast<std::size_t>(jj)]),
                               *win.inputs, w, params, grids[static_cast<std::size_t>(jj)],
                               cfg.solver.fd_step, A, B);
            T[static_cast<std::size_t>(jj) + 1].noalias() = A * T[static_cast<std::size_t>(jj)];
            for (int c = 0; c < nfree; ++c) {
                T[static_cast<std::size_t>(jj) + 1].col(n + jj * nfree + c) +=
                    B.col(free_w[static_cast<std::size_t>(c)]);
            }
        }
    }

    double worst = 0.0;

    // Prior residual.
    const double cp = std::sqrt(2.0 * discount(0));
    for (int i = 0; i < n; ++i) {
        const double wgt = cp * std::sqrt(cfg.P_diag[i]);
        r[i] = wgt * (z[i] - win.prior[i]);
        if (J != nullptr) {
            (*J)(i, i) = wgt;
        }
    }

    // Process-noise residuals (the terminal w_k is pinned to zero).
    for (int jj = 0; jj < m; ++jj) {
        const double d = 2.0 * discount(jj);
        for (int c = 0; c < nfree; ++c) {
            const int row = row_w + jj * nfree + c;
            const int col = w_off + jj * nfree + c;
            const double wgt = std::sqrt(d * cfg.Q_diag[free_w[static_cast<std::size_t>(c)]]);
            r[row] = wgt * z[col];
            if (J != nullptr) {
                (*J)(row, col) = wgt;
            }
        }
    }

    // Measurement-noise and output residuals at the sampled steps.
    for (int s = 0; s < static_cast<int>(sampled.size()); ++s) {
        const long j = sampled[static_cast<std::size_t>(s)];
        const int jj = static_cast<int>(j - k0);
        const double d = discount(jj);
        const Eigen::Vector3d v = z.segment<3>(v_off + 3 * s);
        const Eigen::Vector3d& y = win.measurements.at(j).y;
        for (int c = 0; c < kOutputDim; ++c) {
            const int vrow = row_v + 3 * s + c;
            const int vcol = v_off + 3 * s + c;
            const double vwgt = std::sqrt(2.0 * d * cfg.Q_diag[nw + c]);
            r[vrow] = vwgt * v[c];
            if (J != nullptr) {
                (*J)(vrow, vcol) = vwgt;
            }

            const int yrow = row_y + 3 * s + c;
            const double ywgt = std::sqrt(d * cfg.R_diag[c]);
            r[yrow] = ywgt * (xs[static_cast<std::size_t>(jj)][meas_idx[static_cast<std::size_t>(
                                  c)]] +
                              v[c] - y[c]);
            if (J != nullptr) {
                J->block(yrow, 0, 1, nxw) =
                    ywgt *
                    T[static_cast<std::size_t>(jj)].row(meas_idx[static_cast<std::size_t>(c)]);
                (*J)(yrow, vcol) += ywgt;
            }
        }
    }

    // Exterior penalty: state box along the whole rollout.
    for (int jj = 0; jj <= m; ++jj) {
        for (int i = 0; i < n; ++i) {
            const double val = xs[static_cast<std::size_t>(jj)][i];
            const double lo = sets.X.lower()[i];
            const double up = sets.X.upper()[i];
            double excess = 0.0;
            double sign = 0.0;
            if (val < lo) {
                excess = lo - val;
                sign = -1.0;
            } else if (val > up) {
                excess = val - up;
                sign = 1.0;
            }
            if (excess == 0.0) {
                continue;
            }
            worst = std::max(worst, excess);
            const int row = row_x_pen + jj * n + i;
            r[row] = sqrt_rho * excess;
            if (J != nullptr) {
                J->block(row, 0, 1, nxw) =
                    (sign * sqrt_rho) * T[static_cast<std::size_t>(jj)].row(i);
            }
        }
    }

    // Exterior penalty: output box at the sampled steps.
    for (int s = 0; s < static_cast<int>(sampled.size()); ++s) {
        const long j = sampled[static_cast<std::size_t>(s)];
        const int jj = static_cast<int>(j - k0);
        const Eigen::Vector3d v = z.segment<3>(v_off + 3 * s);
        for (int c = 0; c < kOutputDim; ++c) {
            const double yhat =
                xs[static_cast<std::size_t>(jj)][meas_idx[static_cast<std::size_t>(c)]] + v[c];
            const double lo = sets.Y.lower()[c];
            const double up = sets.Y.upper()[c];
            double excess = 0.0;
            double sign = 0.0;
            if (yhat < lo) {
                excess = lo - yhat;
                sign = -1.0;
            } else if (yhat > up) {
                excess = yhat - up;
                sign = 1.0;
            }
            if (excess == 0.0) {
                continue;
            }
            worst = std::max(worst, excess);
            const int row = row_y_pen + 3 * s + c;
            r[row] = sqrt_rho * excess;
            if (J != nullptr) {
                J->block(row, 0, 1, nxw) =
                    (sign * sqrt_rho) *
                    T[static_cast<std::size_t>(jj)].row(meas_idx[static_cast<std::size_t>(c)]);
                (*J)(row, v_off + 3 * s + c) += sign * sqrt_rho;
            }
        }
    }

    if (cost != nullptr) {
        *cost = r.head(row_x_pen).squaredNorm();
    }
    if (violation != nullptr) {
        *violation = worst;
    }
}

Eigen::VectorXd detail::WindowSolver::Impl::projected_gradient(const Eigen::VectorXd& z,
                                                               const Eigen::VectorXd& g) const {
    Eigen::VectorXd pg = g;
    const auto apply_box = [&](int col, double lo, double up) {
        if (z[col] <= lo) {
            pg[col] = std::min(g[col], 0.0);
        } else if (z[col] >= up) {
            pg[col] = std::max(g[col], 0.0);
        }
    };
    for (int jj = 0; jj < m; ++jj) {
        for (int c = 0; c < nfree; ++c) {
            const int i = free_w[static_cast<std::size_t>(c)];
            apply_box(w_off + jj * nfree + c, sets.W.lower()[i], sets.W.upper()[i]);
        }
    }
    for (int s = 0; s < static_cast<int>(sampled.size()); ++s) {
        for (int c = 0; c < kOutputDim; ++c) {
            apply_box(v_off + 3 * s + c, sets.V.lower()[c], sets.V.upper()[c]);
        }
    }
    return pg;
}

Eigen::VectorXd detail::WindowSolver::Impl::pack_cold() const {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(dim);
    z.head(n) = win.prior;
    return z;
}

Eigen::VectorXd detail::WindowSolver::Impl::clamp(const Eigen::VectorXd& z) const {
    Eigen::VectorXd out = z;
    for (int jj = 0; jj < m; ++jj) {
        for (int c = 0; c < nfree; ++c) {
            const int i = free_w[static_cast<std::size_t>(c)];
            const int col = w_off + jj * nfree + c;
            out[col] = std::clamp(z[col], sets.W.lower()[i], sets.W.upper()[i]);
        }
    }
    for (int s = 0; s < static_cast<int>(sampled.size()); ++s) {
        for (int c = 0; c < kOutputDim; ++c) {
            const int col = v_off + 3 * s + c;
            out[col] = std::clamp(z[col], sets.V.lower()[c], sets.V.upper()[c]);
        }
    }
    return out;
}

MheSolution detail::WindowSolver::Impl::finish(const Eigen::VectorXd& z, int iterations,
                                               bool converged) const {
    MheSolution sol;
    sol.solved = true;
    sol.converged = converged;
    sol.iterations = iterations;
    sol.k = win.k;
    sol.k_start = k0;
    sol.x0 = z.head(n);
    for (int jj = 0; jj < m; ++jj) {
        sol.w_hat[k0 + jj] = noise_at(z, jj).w;
    }
    sol.w_hat[win.k] = Vec::Zero(nw);
    for (int s = 0; s < static_cast<int>(sampled.size()); ++s) {
        sol.v_hat[sampled[static_cast<std::size_t>(s)]] = z.segment<3>(v_off + 3 * s);
    }

    // Published states come from a fresh adaptive rollout so that downstream
    // consumers see the same step map the estimator equations refer to, not
    // the frozen solver grid.
    std::vector<Vec> xs;
    try {
        xs = rollout(z, /*frozen=*/false);
    } catch (const std::runtime_error&) {
        xs = rollout(z, /*frozen=*/true);
        sol.converged = false;
    }
    Eigen::VectorXd r;
    double cost = 0.0;
    double violation = 0.0;
    assemble(z, xs, r, nullptr, &cost, &violation);
    sol.states = std::move(xs);
    sol.estimate = sol.states.back();
    sol.cost = cost;
    sol.max_violation = violation;
    return sol;
}

detail::WindowSolver::WindowSolver(const MheWindow& window, const EstimatorConfig& cfg,
                                   const ModelParameters& p)
    : impl_(std::make_unique<Impl>(window, cfg, p)) {}

detail::WindowSolver::~WindowSolver() = default;

int detail::WindowSolver::decision_dim() const { return impl_->dim; }

Eigen::VectorXd detail::WindowSolver::cold_start() const { return impl_->pack_cold(); }

Eigen::VectorXd detail::WindowSolver::pack_warm_start(const MheSolution& previous) const {
    const Impl& im = *impl_;
    Eigen::VectorXd z = im.pack_cold();
    const long last = previous.k_start + static_cast<long>(previous.states.size()) - 1;
    if (!previous.states.empty() && im.k0 >= previous.k_start && im.k0 <= last) {
        z.head(im.n) = previous.states[static_cast<std::size_t>(im.k0 - previous.k_start)];
    }
    for (int jj = 0; jj < im.m; ++jj) {
        const auto it = previous.w_hat.find(im.k0 + jj);
        if (it == previous.w_hat.end() || it->second.size() != im.nw) {
            continue;
        }
        for (int c = 0; c < im.nfree; ++c) {
            z[im.w_off + jj * im.nfree + c] = it->second[im.free_w[static_cast<std::size_t>(c)]];
        }
    }
    for (int s = 0; s < static_cast<int>(im.sampled.size()); ++s) {
        const auto it = previous.v_hat.find(im.sampled[static_cast<std::size_t>(s)]);
        if (it != previous.v_hat.end()) {
            z.segment<3>(im.v_off + 3 * s) = it->second;
        }
    }
    return im.clamp(z);
}

Eigen::VectorXd detail::WindowSolver::project(const Eigen::VectorXd& z) const {
    if (z.size() != impl_->dim) {
        throw std::invalid_argument("WindowSolver::project: wrong decision dimension");
    }
    return impl_->clamp(z);
}

double detail::WindowSolver::objective(const Eigen::VectorXd& z) const {
    if (z.size() != impl_->dim) {
        throw std::invalid_argument("WindowSolver::objective: wrong decision dimension");
    }
    const std::vector<Vec> xs = impl_->rollout(z, /*frozen=*/true);
    Eigen::VectorXd r;
    impl_->assemble(z, xs, r, nullptr, nullptr, nullptr);
    return r.squaredNorm();
}

Eigen::VectorXd detail::WindowSolver::gradient(const Eigen::VectorXd& z) const {
    if (z.size() != impl_->dim) {
        throw std::invalid_argument("WindowSolver::gradient: wrong decision dimension");
    }
    const std::vector<Vec> xs = impl_->rollout(z, /*frozen=*/true);
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    impl_->assemble(z, xs, r, &J, nullptr, nullptr);
    return 2.0 * J.transpose() * r;
}

MheSolution detail::WindowSolver::solve(const Eigen::VectorXd* warm_start) {
    Impl& im = *impl_;
    const SolverSettings& opt = im.cfg.solver;

    // Start from the better of the zero-noise prior rollout and the shifted
    // warm start, so the final cost can never exceed the cold candidate's.
    Eigen::VectorXd z = im.pack_cold();
    std::vector<Vec> xs = im.rollout(z, /*frozen=*/true);
    Eigen::VectorXd r;
    im.assemble(z, xs, r, nullptr, nullptr, nullptr);
    double f = r.squaredNorm();

    if (warm_start != nullptr) {
        if (warm_start->size() != im.dim) {
            throw std::invalid_argument("WindowSolver::solve: warm start has wrong dimension");
        }
        const Eigen::VectorXd zw = im.clamp(*warm_start);
        try {
            std::vector<Vec> xsw = im.rollout(zw, /*frozen=*/true);
            Eigen::VectorXd rw;
            im.assemble(zw, xsw, rw, nullptr, nullptr, nullptr);
            const double fw = rw.squaredNorm();
            if (fw < f) {
                z = zw;
                xs = std::move(xsw);
                r = std::move(rw);
                f = fw;
            }
        } catch (const std::runtime_error&) {
            // unusable warm start; keep the cold one
        }
    }

    Eigen::MatrixXd J;
    im.assemble(z, xs, r, &J, nullptr, nullptr);
    bool converged =
        im.projected_gradient(z, 2.0 * J.transpose() * r).lpNorm<Eigen::Infinity>() <=
        opt.gradient_tolerance * (1.0 + f);

    double lambda = opt.initial_lambda;
    int iter = 0;
    while (!converged && iter < opt.max_iterations) {
        ++iter;
        const Eigen::VectorXd g = J.transpose() * r;
        Eigen::MatrixXd H = J.transpose() * J;
        const Eigen::VectorXd scale = H.diagonal().cwiseMax(1e-12);
        H.diagonal() += lambda * scale;
        const Eigen::VectorXd dz = H.ldlt().solve(-g);
        const Eigen::VectorXd z_trial = im.clamp(z + dz);

        double f_trial = std::numeric_limits<double>::infinity();
        std::vector<Vec> xs_trial;
        Eigen::VectorXd r_trial;
        try {
            xs_trial = im.rollout(z_trial, /*frozen=*/true);
            im.assemble(z_trial, xs_trial, r_trial, nullptr, nullptr, nullptr);
            f_trial = r_trial.squaredNorm();
        } catch (const std::runtime_error&) {
            // divergent trial rollout counts as a rejected step
        }

        if (f_trial < f) {
            const double decrease = f - f_trial;
            z = z_trial;
            xs = std::move(xs_trial);
            r = std::move(r_trial);
            f = f_trial;
            lambda = std::max(lambda / 3.0, 1e-12);
            im.assemble(z, xs, r, &J, nullptr, nullptr);
            const Eigen::VectorXd pg = im.projected_gradient(z, 2.0 * J.transpose() * r);
            if (pg.lpNorm<Eigen::Infinity>() <= opt.gradient_tolerance * (1.0 + f) ||
                decrease <= opt.cost_tolerance * (1.0 + f)) {
                converged = true;
            }
        } else {
            lambda *= 4.0;
            if (lambda > 1e12) {
                break; // no acceptable step left at this iterate
            }
        }
    }

    im.z_solution = z;
    return im.finish(z, iter, converged);
}

const Eigen::VectorXd& detail::WindowSolver::solution_point() const {
    if (impl_->z_solution.size() == 0) {
        throw std::logic_error("WindowSolver::solution_point: solve() has not run");
    }
    return impl_->z_solution;
}

// ---------------------------------------------------------------------------
// Free functions
// ---------------------------------------------------------------------------

double mhe_cost(const MheWindow& window, const EstimatorConfig& cfg, const ModelParameters& p,
                const Vec& x0, const std::vector<Vec>& w,
                const std::map<long, Eigen::Vector3d>& v) {
    cfg.validate();
    p.validate();
    require_same_variant(window.variant, cfg.variant, "mhe_cost");
    const int n = state_dim(window.variant);
    const int nw = noise_dim(window.variant);
    const int m = window.m;
    const long k0 = window.k - m;
    if (window.m < 0 || window.m > window.k) {
        throw std::invalid_argument("mhe_cost: need 0 <= m <= k");
    }
    if (x0.size() != n) {
        throw std::invalid_argument("mhe_cost: x0 must have the state dimension");
    }
    if (static_cast<int>(w.size()) != m + 1) {
        throw std::invalid_argument("mhe_cost: w must cover every window step k-m..k");
    }
    if (m > 0 && window.inputs == nullptr) {
        throw std::invalid_argument("mhe_cost: inputs must be set for a nonempty window");
    }
    const IntegratorConfig tight = cfg.integrator.scaled_tolerances(0.1);

    std::vector<Vec> xs(static_cast<std::size_t>(m) + 1);
    xs[0] = x0;
    PatientState state(window.variant, x0);
    for (int jj = 0; jj < m; ++jj) {
        if (w[static_cast<std::size_t>(jj)].size() != nw) {
            throw std::invalid_argument("mhe_cost: wrong process-noise dimension");
        }
        const ProcessNoise wj(window.variant, w[static_cast<std::size_t>(jj)]);
        state = step_map(state, *window.inputs, static_cast<double>(k0 + jj) * kSampleSeconds, wj,
                         p, tight);
        xs[static_cast<std::size_t>(jj) + 1] = state.x;
    }

    double cost = 0.0;
    const double eta_m = std::pow(cfg.eta, m);
    for (int i = 0; i < n; ++i) {
        const double dx = x0[i] - window.prior[i];
        cost += 2.0 * eta_m * cfg.P_diag[i] * dx * dx;
    }
    for (int jj = 0; jj <= m; ++jj) {
        if (w[static_cast<std::size_t>(jj)].size() != nw) {
            throw std::invalid_argument("mhe_cost: wrong process-noise dimension");
        }
        const double d = std::pow(cfg.eta, m - jj);
        for (int c = 0; c < nw; ++c) {
            const double wc = w[static_cast<std::size_t>(jj)][c];
            cost += 2.0 * d * cfg.Q_diag[c] * wc * wc;
        }
    }
    const auto& meas_idx = measured_indices();
    for (const auto& [j, meas] : window.measurements) {
        if (j < k0 || j > window.k) {
            throw std::invalid_argument("mhe_cost: measurement step outside the window");
        }
        const double d = std::pow(cfg.eta, static_cast<double>(window.k - j));
        Eigen::Vector3d vj = Eigen::Vector3d::Zero();
        if (const auto it = v.find(j); it != v.end()) {
            vj = it->second;
        }
        for (int c = 0; c < kOutputDim; ++c) {
            cost += 2.0 * d * cfg.Q_diag[nw + c] * vj[c] * vj[c];
            const double res =
                xs[static_cast<std::size_t>(j - k0)][meas_idx[static_cast<std::size_t>(c)]] +
                vj[c] - meas.y[c];
            cost += d * cfg.R_diag[c] * res * res;
        }
    }
    return cost;
}

MheSolution solve_window(const MheWindow& window, const EstimatorConfig& cfg,
                         const ModelParameters& p, const MheSolution* warm) {
    detail::WindowSolver solver(window, cfg, p);
    if (warm == nullptr) {
        return solver.solve();
    }
    const Eigen::VectorXd z_warm = solver.pack_warm_start(*warm);
    return solver.solve(&z_warm);
}

std::vector<EstimateStep> estimate_stream(const SamplingSet& Ks,
                                          const std::map<long, Measurement>& measurements,
                                          const InputSignals& inputs, long n_steps,
                                          const EstimatorConfig& cfg, const ModelParameters& p) {
    cfg.validate();
    p.validate();
    if (n_steps < 0) {
        throw std::invalid_argument("estimate_stream: n_steps must be nonnegative");
    }

    std::vector<EstimateStep> out;
    out.reserve(static_cast<std::size_t>(n_steps) + 1);
    std::vector<Vec> published;
    published.reserve(static_cast<std::size_t>(n_steps) + 1);
    MheSolution last;
    bool have_last = false;

    for (long k = 0; k <= n_steps; ++k) {
        EstimateStep step;
        step.step = k;
        bool done = false;

        if (Ks.contains(k)) {
            MheWindow win;
            win.variant = cfg.variant;
            win.k = k;
            win.m = static_cast<int>(std::min<long>(k, cfg.horizon));
            win.inputs = &inputs;
            const long k0 = k - win.m;
            for (auto it = measurements.lower_bound(k0);
                 it != measurements.end() && it->first <= k; ++it) {
                if (Ks.contains(it->first)) {
                    win.measurements.emplace(*it);
                }
            }
            win.prior = (k0 == 0) ? Vec(cfg.prior) : published[static_cast<std::size_t>(k0)];
            try {
                MheSolution sol = solve_window(win, cfg, p, have_last ? &last : nullptr);
                step.solved = true;
                step.converged = sol.converged;
                step.cost = sol.cost;
                step.max_violation = sol.max_violation;
                step.x = sol.estimate;
                last = std::move(sol);
                have_last = true;
                done = true;
            } catch (const std::runtime_error&) {
                // window rollout failed to integrate: open-loop fallback below
            }
        }

        if (!done) {
            if (k == 0) {
                step.x = cfg.prior;
            } else {
                const PatientState prev(cfg.variant, published[static_cast<std::size_t>(k - 1)]);
                try {
                    step.x = step_map(prev, inputs, static_cast<double>(k - 1) * kSampleSeconds,
                                      ProcessNoise::zero(cfg.variant), p, cfg.integrator)
                                 .x;
                } catch (const std::runtime_error&) {
                    step.x = prev.x; // hold the last estimate rather than abort
                }
            }
        }

        published.push_back(step.x);
        out.push_back(std::move(step));
    }
    return out;
}

void write_estimates_csv(const std::string& path, const std::vector<EstimateStep>& steps) {
    csv::Table table;
    table.header = {"step", "solved_flag", "converged_flag", "cost", "max_violation"};
    const int n = steps.empty() ? 0 : static_cast<int>(steps.front().x.size());
    const char* names[] = {"t4_th", "t4", "t3p", "t3c", "tsh", "tshc", "mmi_th"};
    for (int i = 0; i < n; ++i) {
        table.header.emplace_back(names[i]);
    }
    for (const auto& s : steps) {
        std::vector<double> row = {static_cast<double>(s.step), s.solved ? 1.0 : 0.0,
                                   s.converged ? 1.0 : 0.0, s.cost, s.max_violation};
        for (int i = 0; i < n; ++i) {
            row.push_back(s.x[i]);
        }
        table.rows.push_back(std::move(row));
    }
    csv::write_table(path, table);
}

} // namespace ptloop
