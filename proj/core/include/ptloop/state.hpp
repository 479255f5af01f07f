#pragma once

#include <Eigen/Core>

#include <string>

namespace ptloop {

/// @brief Disease variant of the pituitary-thyroid loop model.
enum class Variant { hypo, hyper };

/// @brief State dimension: 6 for hypo, 7 for hyper (adds thyroidal MMI).
[[nodiscard]] constexpr int state_dim(Variant v) { return v == Variant::hypo ? 6 : 7; }

/// @brief Process-noise dimension: (w_GD1, w_GT3, w_TRH, w_LT3, w_LT4) for
///        hypo, (w_GD1, w_GT3, w_TRH, w_MMI) for hyper.
[[nodiscard]] constexpr int noise_dim(Variant v) { return v == Variant::hypo ? 5 : 4; }

/// @brief Measured-output dimension (peripheral T4, T3, TSH).
inline constexpr int kOutputDim = 3;

/// @brief Discretization period T_d = 8 h, in seconds.
inline constexpr double kSampleSeconds = 28800.0;

/// @brief One day in seconds; doses are taken at t_i = 86400 * day_index.
inline constexpr double kDaySeconds = 86400.0;

[[nodiscard]] std::string to_string(Variant v);
[[nodiscard]] Variant variant_from_string(const std::string& name);

/// @brief Stack-allocated dynamic vector, large enough for any state here.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 8, 1>;
/// @brief Stack-allocated dynamic matrix for per-step Jacobians.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 8, 8>;

/**
 * @brief Hormone-concentration state of one virtual patient.
 *
 * Components are carried in the model's scaled units:
 *   T4,th (1e-12 mol/l), T4 (1e-7 mol/l), T3p (1e-9 mol/l), T3c (1e-8 mol/l),
 *   TSH (mIU/l), TSHc (mIU/l), and for the hyper variant MMI,th (1e-5 mol/l).
 */
struct PatientState {
    Variant variant = Variant::hypo;
    Vec x;

    PatientState() : x(Vec::Zero(6)) {}
    PatientState(Variant v, Vec values);

    [[nodiscard]] int dim() const { return static_cast<int>(x.size()); }

    [[nodiscard]] double t4_th() const { return x[0]; }
    [[nodiscard]] double t4() const { return x[1]; }
    [[nodiscard]] double t3p() const { return x[2]; }
    [[nodiscard]] double t3c() const { return x[3]; }
    [[nodiscard]] double tsh() const { return x[4]; }
    [[nodiscard]] double tshc() const { return x[5]; }
    /// @brief Thyroidal MMI concentration; throws std::logic_error for hypo states.
    [[nodiscard]] double mmi_th() const;

    /// @brief True if every component is nonnegative.
    [[nodiscard]] bool nonnegative() const { return (x.array() >= 0.0).all(); }
};

/// @brief Throws std::invalid_argument unless both variants agree.
void require_same_variant(Variant a, Variant b, const char* context);

/**
 * @brief Per-step process noise w.
 *
 * Hypo order: (w_GD1, w_GT3, w_TRH, w_LT3, w_LT4);
 * hyper order: (w_GD1, w_GT3, w_TRH, w_MMI).  All components dimensionless.
 */
struct ProcessNoise {
    Variant variant = Variant::hypo;
    Vec w;

    ProcessNoise() : w(Vec::Zero(5)) {}
    ProcessNoise(Variant v, Vec values);

    /// @brief All-zero noise for @p v.
    static ProcessNoise zero(Variant v) { return {v, Vec::Zero(noise_dim(v))}; }

    [[nodiscard]] double w_gd1() const { return w[0]; }
    [[nodiscard]] double w_gt3() const { return w[1]; }
    [[nodiscard]] double w_trh() const { return w[2]; }
    [[nodiscard]] double w_lt3() const;
    [[nodiscard]] double w_lt4() const;
    [[nodiscard]] double w_mmi() const;
};

/**
 * @brief One blood-sample measurement: peripheral T4 (1e-7 mol/l),
 *        T3p (1e-9 mol/l) and TSH (mIU/l), plus the noise that produced it.
 */
struct Measurement {
    Eigen::Vector3d y = Eigen::Vector3d::Zero();
    Eigen::Vector3d v = Eigen::Vector3d::Zero();

    [[nodiscard]] double t4_meas() const { return y[0]; }
    [[nodiscard]] double t3p_meas() const { return y[1]; }
    [[nodiscard]] double tsh_meas() const { return y[2]; }
};

} // namespace ptloop
