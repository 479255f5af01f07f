#pragma once

#include "ptloop/state.hpp"

#include <string>

namespace ptloop {

/**
 * @brief Fixed physiological parameters of the pituitary-thyroid loop model.
 *
 * Units follow the convention that every gain G_* is in mol/s (mIU/s for G_H),
 * every alpha_* is a volume factor in 1/l, every beta_* a clearance rate in
 * 1/s, and binding/Michaelis constants are in mol/l (converted from the
 * nmol/umol values they are usually quoted in).  Concentration states remain
 * in their scaled units (see PatientState); the 1e7/1e9/... prefactors inside
 * the dynamics perform the bridging.
 *
 * The L-T3/L-T4 pharmacokinetic rates k_13..k_34 are not part of the core
 * parameter set of the loop model; defaults here are placeholder values chosen
 * to give textbook absorption profiles (T4: ~75% absorbed, peak ~2.7 h;
 * T3: ~95% absorbed, peak ~2.0 h) and can be overridden from configuration.
 */
struct ModelParameters {
    // Plasma binding proteins (mol/l)
    double TBG = 300e-9;
    double TBPA = 4.5e-6;
    double IBS = 8e-6;

    // Hypothalamus / pituitary axis
    double TRH = 6.9;        ///< nmol/s (only the ratio with D_H matters)
    double G_H = 817.0;      ///< mIU/s
    double D_H = 47.0;       ///< nmol/s
    double alpha_S = 0.4;    ///< 1/l
    double beta_S = 2.3e-4;  ///< 1/s
    double L_S = 2.92e6;     ///< l/mol
    double alpha_S2 = 2.6e5; ///< 1/l
    double beta_S2 = 140.0;  ///< 1/s
    double D_R = 100e-12;    ///< mol/l
    double G_R = 1.0;        ///< mol/s
    double S_S = 100.0;      ///< l/mIU
    double D_S = 50.0;       ///< mIU/l

    // Thyroid gland
    double G_T_nom = 3.4e-12; ///< mol/s
    double G_T_co = 1.0;      ///< dimensionless activity scaling
    double D_T = 2.75;        ///< mIU/l
    double alpha_th = 250.0;  ///< 1/l
    double beta_th = 4.4e-6;  ///< 1/s
    double G_MCT8 = 1.94e-6;  ///< mol/s
    double K_MCT8 = 4.7e-6;   ///< mol/l

    // Peripheral T4 pool
    double alpha_T = 0.1;   ///< 1/l
    double beta_T = 1.1e-6; ///< 1/s

    // Deiodinases
    double G_D1 = 1.98e-8;  ///< mol/s
    double K_M1 = 500e-9;   ///< mol/l
    double G_D2 = 4.3e-15;  ///< mol/s
    double K_M2 = 1e-9;     ///< mol/l
    double k_Dio = 1.0;     ///< mIU/l
    double G_T3 = 2.05e-13; ///< mol/s, direct TSH-stimulated T3 secretion

    // Peripheral / central T3 pools
    double alpha_31 = 2.6e-2; ///< 1/l
    double beta_31 = 8e-6;    ///< 1/s
    double alpha_32 = 1.3e5;  ///< 1/l
    double beta_32 = 8.3e-4;  ///< 1/s

    // Binding constants (l/mol)
    double K_30 = 2e9;
    double K_31 = 2e9;
    double K_41 = 2e10;
    double K_42 = 2e8;

    // MMI action on thyroid peroxidase and thyroidal MMI kinetics
    double c0 = 0.97;           ///< dimensionless, TPO activity ceiling
    double c1 = 1.47e4;         ///< dimensionless, sigmoid steepness
    double c2 = 1.36;           ///< dimensionless, concentration exponent
    double c3 = 3.23e-4;        ///< dimensionless, sigmoid midpoint offset
    double G_M_th = 1.92e-12;   ///< mol/s
    double K_M_th = 7.28e-7;    ///< mol/l
    double alpha_M_th = 250.0;  ///< 1/l
    double beta_M_th = 6.42e-6; ///< 1/s

    // MMI oral pharmacokinetics
    double f_b = 0.93;  ///< bioavailable fraction
    double k_a = 1.02;  ///< 1/h, absorption
    double k_e = 0.106; ///< 1/h, elimination
    double V = 281.0;   ///< distribution volume (l)

    // L-T3 gut-compartment rates (1/s); placeholder defaults, see struct docs
    double k_13 = 2.2e-4;
    double k_23 = 4.0e-6;
    double k_33 = 7.6e-5;
    // L-T4 gut-compartment rates (1/s); placeholder defaults, see struct docs
    double k_14 = 1.6e-4;
    double k_24 = 1.5e-5;
    double k_34 = 4.5e-5;

    /// @brief Throws std::domain_error if any rate/gain that must be positive is not.
    void validate() const;
};

/**
 * @brief Default parameter set for @p variant.
 *
 * G_T,co is 0.1 for the hypothyroid patient (underactive thyroid) and 7 for
 * the hyperthyroid patient (overactive thyroid); all other values are the
 * fixed defaults of ModelParameters.
 */
[[nodiscard]] ModelParameters default_parameters(Variant variant);

/// @brief Defaults with G_T,co = 1, modeling a healthy individual.
[[nodiscard]] ModelParameters healthy_parameters();

/**
 * @brief Applies overrides from a JSON object keyed by parameter name.
 *
 * Keys match the member names of ModelParameters ("beta_S", "G_T3", "k_a",
 * ...).  Unknown keys and non-numeric values raise std::invalid_argument
 * naming the offending key; the returned set is validate()d.
 */
[[nodiscard]] ModelParameters apply_overrides_json(const ModelParameters& base,
                                                   const std::string& json_text);

/// @brief Reads a JSON override file via apply_overrides_json.
[[nodiscard]] ModelParameters load_parameters_file(const ModelParameters& base,
                                                   const std::string& path);

} // namespace ptloop
