#include "ptloop/parameters.hpp"

#include <json.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ptloop {

namespace {

using FieldMap = std::map<std::string, double ModelParameters::*>;

const FieldMap& field_map() {
    static const FieldMap fields = {
        {"TBG", &ModelParameters::TBG},
        {"TBPA", &ModelParameters::TBPA},
        {"IBS", &ModelParameters::IBS},
        {"TRH", &ModelParameters::TRH},
        {"G_H", &ModelParameters::G_H},
        {"D_H", &ModelParameters::D_H},
        {"alpha_S", &ModelParameters::alpha_S},
        {"beta_S", &ModelParameters::beta_S},
        {"L_S", &ModelParameters::L_S},
        {"alpha_S2", &ModelParameters::alpha_S2},
        {"beta_S2", &ModelParameters::beta_S2},
        {"D_R", &ModelParameters::D_R},
        {"G_R", &ModelParameters::G_R},
        {"S_S", &ModelParameters::S_S},
        {"D_S", &ModelParameters::D_S},
        {"G_T_nom", &ModelParameters::G_T_nom},
        {"G_T_co", &ModelParameters::G_T_co},
        {"D_T", &ModelParameters::D_T},
        {"alpha_th", &ModelParameters::alpha_th},
        {"beta_th", &ModelParameters::beta_th},
        {"G_MCT8", &ModelParameters::G_MCT8},
        {"K_MCT8", &ModelParameters::K_MCT8},
        {"alpha_T", &ModelParameters::alpha_T},
        {"beta_T", &ModelParameters::beta_T},
        {"G_D1", &ModelParameters::G_D1},
        {"K_M1", &ModelParameters::K_M1},
        {"G_D2", &ModelParameters::G_D2},
        {"K_M2", &ModelParameters::K_M2},
        {"k_Dio", &ModelParameters::k_Dio},
        {"G_T3", &ModelParameters::G_T3},
        {"alpha_31", &ModelParameters::alpha_31},
        {"beta_31", &ModelParameters::beta_31},
        {"alpha_32", &ModelParameters::alpha_32},
        {"beta_32", &ModelParameters::beta_32},
        {"K_30", &ModelParameters::K_30},
        {"K_31", &ModelParameters::K_31},
        {"K_41", &ModelParameters::K_41},
        {"K_42", &ModelParameters::K_42},
        {"c0", &ModelParameters::c0},
        {"c1", &ModelParameters::c1},
        {"c2", &ModelParameters::c2},
        {"c3", &ModelParameters::c3},
        {"G_M_th", &ModelParameters::G_M_th},
        {"K_M_th", &ModelParameters::K_M_th},
        {"alpha_M_th", &ModelParameters::alpha_M_th},
        {"beta_M_th", &ModelParameters::beta_M_th},
        {"f_b", &ModelParameters::f_b},
        {"k_a", &ModelParameters::k_a},
        {"k_e", &ModelParameters::k_e},
        {"V", &ModelParameters::V},
        {"k_13", &ModelParameters::k_13},
        {"k_23", &ModelParameters::k_23},
        {"k_33", &ModelParameters::k_33},
        {"k_14", &ModelParameters::k_14},
        {"k_24", &ModelParameters::k_24},
        {"k_34", &ModelParameters::k_34},
    };
    return fields;
}

void require_positive(double value, const char* name) {
    if (!(value > 0.0)) {
        throw std::domain_error(std::string("ModelParameters: ") + name +
                                " must be strictly positive, got " + std::to_string(value));
    }
}

} // namespace

void ModelParameters::validate() const {
    for (const auto& [name, member] : field_map()) {
        require_positive(this->*member, name.c_str());
    }
}

ModelParameters default_parameters(Variant variant) {
    ModelParameters p;
    p.G_T_co = variant == Variant::hypo ? 0.1 : 7.0;
    return p;
}

ModelParameters healthy_parameters() {
    ModelParameters p;
    p.G_T_co = 1.0;
    return p;
}

ModelParameters apply_overrides_json(const ModelParameters& base, const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("parameter overrides: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw std::invalid_argument("parameter overrides: expected a JSON object");
    }
    ModelParameters result = base;
    const FieldMap& fields = field_map();
    for (const auto& [key, value] : doc.items()) {
        auto it = fields.find(key);
        if (it == fields.end()) {
            throw std::invalid_argument("parameter overrides: unknown parameter '" + key + "'");
        }
        if (!value.is_number()) {
            throw std::invalid_argument("parameter overrides: value of '" + key +
                                        "' is not a number");
        }
        result.*(it->second) = value.get<double>();
    }
    result.validate();
    return result;
}

ModelParameters load_parameters_file(const ModelParameters& base, const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open parameter file '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return apply_overrides_json(base, text.str());
}

} // namespace ptloop
