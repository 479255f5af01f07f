#include "ptloop/detectability.hpp"

#include "ptloop/dosing.hpp"
#include "ptloop/model.hpp"
#include "ptloop/parameters.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ptloop {

namespace {

void require_psd(const Eigen::MatrixXd& M, const char* name, bool strict) {
    if (M.rows() != M.cols()) {
        throw std::invalid_argument(std::string("IossCertificate: ") + name + " is not square");
    }
    if (!M.isApprox(M.transpose(), 1e-12)) {
        throw std::invalid_argument(std::string("IossCertificate: ") + name +
                                    " is not symmetric");
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
    const double min_eig = eig.eigenvalues().minCoeff();
    const double floor = strict ? 1e-12 : -1e-10;
    if (min_eig < floor) {
        throw std::invalid_argument(std::string("IossCertificate: ") + name +
                                    (strict ? " is not positive definite"
                                            : " is not positive semidefinite"));
    }
}

double weighted_sq_norm(const Eigen::VectorXd& v, const Eigen::MatrixXd& M) {
    return v.dot(M * v);
}

} // namespace

void IossCertificate::validate(Variant variant) const {
    const int n = state_dim(variant);
    const int nd = noise_dim(variant) + kOutputDim;
    if (P1.rows() != n || P2.rows() != n) {
        throw std::invalid_argument("IossCertificate: P1/P2 must be " + std::to_string(n) +
                                    "-dimensional for " + to_string(variant));
    }
    if (Qbar.rows() != nd) {
        throw std::invalid_argument("IossCertificate: Q must be " + std::to_string(nd) +
                                    "-dimensional for " + to_string(variant));
    }
    require_psd(P1, "P1", true);
    require_psd(P2, "P2", true);
    require_psd(Qbar, "Q", false);
    require_psd(Rbar, "R", false);
    if (!(eta >= 0.0 && eta < 1.0)) {
        throw std::invalid_argument("IossCertificate: eta must lie in [0, 1)");
    }
}

IossCertificate default_certificate(Variant variant, Scheme scheme) {
    IossCertificate cert;
    const int n = state_dim(variant);
    const int nd = noise_dim(variant) + kOutputDim;
    cert.P1 = Eigen::MatrixXd::Identity(n, n);
    cert.P2 = 2e3 * Eigen::MatrixXd::Identity(n, n);
    double r = 0.0;
    if (variant == Variant::hypo) {
        cert.eta = 0.95;
        cert.Qbar = 0.5 * Eigen::MatrixXd::Identity(nd, nd);
        switch (scheme) {
            case Scheme::a: r = 0.5; break;
            case Scheme::b: r = 5e2; break;
            case Scheme::c: r = 5e3; break;
            case Scheme::d: r = 1e5; break;
        }
    } else {
        cert.eta = 0.96;
        cert.Qbar = 5.0 * Eigen::MatrixXd::Identity(nd, nd);
        switch (scheme) {
            case Scheme::a: r = 20.0; break;
            case Scheme::b: r = 3e3; break;
            case Scheme::c: r = 5e4; break;
            case Scheme::d: r = 2e6; break;
        }
    }
    cert.Rbar = r * Eigen::Matrix3d::Identity();
    return cert;
}

TrajectoryPair sample_pair(SplitMix64& rng, Variant variant, long horizon_steps,
                           const ModelParameters& p, const IntegratorConfig& cfg) {
    if (horizon_steps < 1) {
        throw std::invalid_argument("sample_pair: horizon must be >= 1 step");
    }
    const std::uint64_t seed = rng.state();
    const ConstraintSets sets = constraint_sets(variant);
    const int n = state_dim(variant);
    const int nw = noise_dim(variant);

    // Shared input: one uniformly drawn daily dose over the scenario's
    // admissible range (L-T4 up to 40 ug for hypo, MMI up to 35 mg for hyper).
    const int days = static_cast<int>((horizon_steps * kSampleSeconds) / kDaySeconds) + 1;
    InputSignals inputs;
    if (variant == Variant::hypo) {
        DoseSchedule doses(Medication::lt4);
        for (int day = 0; day < days; ++day) doses.set(day, rng.uniform(0.0, 40.0));
        inputs = make_input_signals(p, nullptr, &doses, nullptr);
    } else {
        DoseSchedule doses(Medication::mmi);
        for (int day = 0; day < days; ++day) doses.set(day, rng.uniform(0.0, 35.0));
        inputs = make_input_signals(p, nullptr, nullptr, &doses);
    }

    TrajectoryPair pair;
    pair.variant = variant;
    pair.seed = seed;
    pair.x.reserve(horizon_steps + 1);
    pair.xt.reserve(horizon_steps + 1);
    pair.x.push_back(sets.X.sample(rng).head(n));
    pair.xt.push_back(sets.X.sample(rng).head(n));

    try {
        for (long k = 0; k < horizon_steps; ++k) {
            const Eigen::VectorXd w1 = sets.W.sample(rng);
            const Eigen::VectorXd v1 = sets.V.sample(rng);
            const Eigen::VectorXd w2 = sets.W.sample(rng);
            const Eigen::VectorXd v2 = sets.V.sample(rng);
            Vec omega1(nw + kOutputDim), omega2(nw + kOutputDim);
            omega1 << w1, v1;
            omega2 << w2, v2;
            pair.omega.push_back(omega1);
            pair.omegat.push_back(omega2);

            const PatientState s1(variant, pair.x.back());
            const PatientState s2(variant, pair.xt.back());
            pair.y.push_back(output(s1, v1).y);
            pair.yt.push_back(output(s2, v2).y);

            const double t0 = static_cast<double>(k) * kSampleSeconds;
            const ProcessNoise pw1(variant, Vec(w1));
            const ProcessNoise pw2(variant, Vec(w2));
            pair.x.push_back(step_map(s1, inputs, t0, pw1, p, cfg).x);
            pair.xt.push_back(step_map(s2, inputs, t0, pw2, p, cfg).x);
        }
    } catch (const std::exception& e) {
        throw std::runtime_error("sample_pair: integration failed for pair seed " +
                                 std::to_string(seed) + ": " + e.what());
    }
    return pair;
}

IossSides iioss_sides(const TrajectoryPair& pair, const IossCertificate& cert,
                      const SamplingSet& K) {
    cert.validate(pair.variant);
    const long H = pair.horizon();
    IossSides sides;
    sides.lhs.reserve(H + 1);
    sides.rhs.reserve(H + 1);

    const Eigen::VectorXd dx0 = pair.x[0] - pair.xt[0];
    sides.lhs.push_back(weighted_sq_norm(dx0, cert.P1));
    double rhs = weighted_sq_norm(dx0, cert.P2);
    sides.rhs.push_back(rhs);

    for (long k = 0; k < H; ++k) {
        // rhs_{k+1} = eta rhs_k + |domega_k|_Q^2 + [k sampled] |dy_k|_R^2.
        double fresh = weighted_sq_norm(pair.omega[k] - pair.omegat[k], cert.Qbar);
        if (K.contains(k)) {
            fresh += weighted_sq_norm(pair.y[k] - pair.yt[k], cert.Rbar);
        }
        rhs = cert.eta * rhs + fresh;
        sides.rhs.push_back(rhs);
        const Eigen::VectorXd dx = pair.x[k + 1] - pair.xt[k + 1];
        sides.lhs.push_back(weighted_sq_norm(dx, cert.P1));
    }
    return sides;
}

IossSides iioss_sides_direct(const TrajectoryPair& pair, const IossCertificate& cert,
                             const SamplingSet& K) {
    cert.validate(pair.variant);
    const long H = pair.horizon();
    IossSides sides;
    const Eigen::VectorXd dx0 = pair.x[0] - pair.xt[0];
    const double init = weighted_sq_norm(dx0, cert.P2);
    for (long k = 0; k <= H; ++k) {
        const Eigen::VectorXd dx = pair.x[k] - pair.xt[k];
        sides.lhs.push_back(weighted_sq_norm(dx, cert.P1));
        double rhs = init * std::pow(cert.eta, static_cast<double>(k));
        for (long j = 0; j < k; ++j) {
            const double discount = std::pow(cert.eta, static_cast<double>(k - j - 1));
            rhs += discount * weighted_sq_norm(pair.omega[j] - pair.omegat[j], cert.Qbar);
            if (K.contains(j)) {
                rhs += discount * weighted_sq_norm(pair.y[j] - pair.yt[j], cert.Rbar);
            }
        }
        sides.rhs.push_back(rhs);
    }
    return sides;
}

VerifyReport verify(int n_pairs, const IossCertificate& cert, Scheme scheme, int start_index,
                    long horizon, std::uint64_t base_seed, Variant variant,
                    const ModelParameters& p, const IntegratorConfig& cfg) {
    if (n_pairs < 1) {
        throw std::invalid_argument("verify: need at least one pair");
    }
    cert.validate(variant);
    const SamplingSet K = realize(scheme, start_index, horizon);
    const SplitMix64 root(base_seed);

    VerifyReport report;
    report.scheme = scheme;
    report.start_index = start_index;
    report.n_pairs = n_pairs;
    report.horizon = horizon;
    report.base_seed = base_seed;

    for (int i = 0; i < n_pairs; ++i) {
        SplitMix64 stream = root.split(static_cast<std::uint64_t>(i));
        const TrajectoryPair pair = sample_pair(stream, variant, horizon, p, cfg);
        const IossSides sides = iioss_sides(pair, cert, K);
        for (long k = 0; k <= pair.horizon(); ++k) {
            const double lhs = sides.lhs[k];
            const double rhs = sides.rhs[k];
            if (lhs > rhs * (1.0 + 1e-9)) {
                ++report.violations;
            }
            const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? HUGE_VAL : 0.0);
            if (ratio > report.max_ratio) {
                report.max_ratio = ratio;
                report.worst_pair_seed = pair.seed;
                report.worst_step = k;
            }
        }
    }
    return report;
}

std::string VerifyReport::to_json() const {
    nlohmann::json doc;
    doc["scheme"] = ptloop::to_string(scheme);
    doc["i"] = start_index;
    doc["n_pairs"] = n_pairs;
    doc["horizon"] = horizon;
    doc["violations"] = violations;
    doc["max_ratio"] = max_ratio;
    doc["seeds"] = {{"base", base_seed}, {"worst_pair", worst_pair_seed}};
    doc["worst_step"] = worst_step;
    return doc.dump(2);
}

void write_verify_report(const std::string& path, const VerifyReport& report) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write report '" + path + "'");
    }
    out << report.to_json() << '\n';
}

} // namespace ptloop
