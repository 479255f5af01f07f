#include "ptloop/model.hpp"

#include <cmath>
#include <stdexcept>

namespace ptloop {

namespace {

/**
 * TPO activity with a smooth odd extension of m^(1/c2) to m < 0.  Adaptive
 * implicit solvers probe trial states with tiny negative components; the
 * extension keeps the right-hand side finite and C^1 there instead of
 * producing NaN from a fractional power of a negative number.
 */
double tpo_activity_extended(double mmi_th, const ModelParameters& p) {
    const double m = 1e-5 * mmi_th;
    const double root = std::copysign(std::pow(std::abs(m), 1.0 / p.c2), m);
    return p.c0 / (1.0 + std::exp(-p.c1 * (-root + p.c3)));
}

} // namespace

DerivedQuantities derived_quantities(const PatientState& x, const ModelParameters& p) {
    DerivedQuantities d;
    d.ft4 = 1e-7 * x.t4() / (1.0 + p.K_41 * p.TBG + p.K_42 * p.TBPA);
    d.ft3 = 1e-9 * x.t3p() / (1.0 + p.K_30 * p.TBG);
    d.t3n = 1e-8 * x.t3c() / (1.0 + p.K_31 * p.IBS);
    if (x.variant == Variant::hyper) {
        d.tpo_a = tpo_activity(x.mmi_th(), p);
    }
    return d;
}

double tpo_activity(double mmi_th, const ModelParameters& p) {
    if (mmi_th < 0.0) {
        throw std::invalid_argument("tpo_activity: negative MMI concentration");
    }
    return tpo_activity_extended(mmi_th, p);
}

double tpo_activity(const PatientState& x, const ModelParameters& p) {
    if (x.variant != Variant::hyper) {
        throw std::invalid_argument("tpo_activity: hypo states carry no MMI pool");
    }
    return tpo_activity(x.mmi_th(), p);
}

Vec rhs(const PatientState& x, const InputRates& u, const ProcessNoise& w,
        const ModelParameters& p) {
    require_same_variant(x.variant, w.variant, "rhs");
    if (u.u_lt3 < 0.0 || u.u_lt4 < 0.0 || u.u_mmi < 0.0) {
        throw std::invalid_argument("rhs: negative input rate");
    }

    const double T4th = x.t4_th();
    const double T4 = x.t4();
    const double T3p = x.t3p();
    const double T3c = x.t3c();
    const double TSH = x.tsh();
    const double TSHc = x.tshc();

    // Free-hormone fractions (mol/l); inlined rather than taken from
    // derived_quantities so trial states with tiny negative components
    // evaluate without precondition checks.
    const double FT4 = 1e-7 * T4 / (1.0 + p.K_41 * p.TBG + p.K_42 * p.TBPA);
    const double T3N = 1e-8 * T3c / (1.0 + p.K_31 * p.IBS);

    // Noise enters multiplicatively on the uncertain gains and disturbances.
    const double GD1 = p.G_D1 * (1.0 + w.w_gd1());
    const double GT3 = p.G_T3 * (1.0 + w.w_gt3());
    const double TRHe = p.TRH * (1.0 + w.w_trh());

    // Deiodination of thyroidal T4 is driven by the TSH-saturated pool
    // z = T4th TSH/(TSH + k_Dio); the 1e12 factors bridge the scaled units.
    const double z = T4th * TSH / (TSH + p.k_Dio);
    const double S1 = z / (z + 1e12 * p.K_M1);
    const double S2 = z / (z + 1e12 * p.K_M2);
    const double mct8 = T4th / (1e12 * p.K_MCT8 + T4th);

    const bool hyper = x.variant == Variant::hyper;
    double GT = p.G_T_nom * p.G_T_co;
    if (hyper) GT *= tpo_activity_extended(x.mmi_th(), p);

    Vec f(x.dim());
    f[0] = 1e12 * p.alpha_th *
               (GT * TSH / (TSH + p.D_T) - p.G_MCT8 * mct8 - GD1 * S1 - p.G_D2 * S2) -
           p.beta_th * T4th;

    double t4_supply = p.G_MCT8 * mct8;
    if (!hyper) t4_supply += u.u_lt4 * (1.0 - w.w_lt4());
    f[1] = 1e7 * p.alpha_T * t4_supply - p.beta_T * T4;

    double t3_supply = GD1 * S1 + p.G_D2 * FT4 / (FT4 + p.K_M2) + p.G_D2 * S2 +
                       GD1 * FT4 / (FT4 + p.K_M1) + GT3 * TSH / (p.D_T + TSH);
    if (!hyper) t3_supply += u.u_lt3 * (1.0 - w.w_lt3());
    f[2] = 1e9 * p.alpha_31 * t3_supply - p.beta_31 * T3p;

    f[3] = 1e8 * p.alpha_32 * p.G_D2 * FT4 / (FT4 + p.K_M2) - p.beta_32 * T3c;

    const double trh_sat = TRHe / (TRHe + p.D_H);
    const double pituitary = (1.0 + p.S_S * TSHc / (TSHc + p.D_S)) *
                             (1.0 + p.L_S * p.G_R * T3N / (T3N + p.D_R));
    f[4] = p.alpha_S * p.G_H * trh_sat / pituitary - p.beta_S * TSH;
    f[5] = p.alpha_S2 * p.G_H * trh_sat / pituitary - p.beta_S2 * TSHc;

    if (hyper) {
        f[6] = 1e5 * u.u_mmi * (1.0 - w.w_mmi()) - p.beta_M_th * x.mmi_th();
    }
    return f;
}

Measurement output(const PatientState& x, const Eigen::Vector3d& v) {
    Measurement m;
    m.v = v;
    m.y << x.t4() + v[0], x.t3p() + v[1], x.tsh() + v[2];
    return m;
}

} // namespace ptloop
