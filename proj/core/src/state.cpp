#include "ptloop/state.hpp"

#include <stdexcept>

namespace ptloop {

std::string to_string(Variant v) {
    return v == Variant::hypo ? "hypo" : "hyper";
}

Variant variant_from_string(const std::string& name) {
    if (name == "hypo") return Variant::hypo;
    if (name == "hyper") return Variant::hyper;
    throw std::invalid_argument("unknown variant '" + name + "' (expected 'hypo' or 'hyper')");
}

PatientState::PatientState(Variant v, Vec values) : variant(v), x(std::move(values)) {
    if (x.size() != state_dim(v)) {
        throw std::invalid_argument("PatientState: " + to_string(v) + " state needs " +
                                    std::to_string(state_dim(v)) + " components, got " +
                                    std::to_string(x.size()));
    }
}

double PatientState::mmi_th() const {
    if (variant != Variant::hyper) {
        throw std::logic_error("PatientState::mmi_th: hypo states carry no thyroidal MMI pool");
    }
    return x[6];
}

void require_same_variant(Variant a, Variant b, const char* context) {
    if (a != b) {
        throw std::invalid_argument(std::string(context) + ": variant mismatch (" +
                                    to_string(a) + " vs " + to_string(b) + ")");
    }
}

ProcessNoise::ProcessNoise(Variant v, Vec values) : variant(v), w(std::move(values)) {
    if (w.size() != noise_dim(v)) {
        throw std::invalid_argument("ProcessNoise: " + to_string(v) + " noise needs " +
                                    std::to_string(noise_dim(v)) + " components, got " +
                                    std::to_string(w.size()));
    }
}

double ProcessNoise::w_lt3() const {
    if (variant != Variant::hypo) {
        throw std::logic_error("ProcessNoise::w_lt3: only hypo noise carries w_LT3");
    }
    return w[3];
}

double ProcessNoise::w_lt4() const {
    if (variant != Variant::hypo) {
        throw std::logic_error("ProcessNoise::w_lt4: only hypo noise carries w_LT4");
    }
    return w[4];
}

double ProcessNoise::w_mmi() const {
    if (variant != Variant::hyper) {
        throw std::logic_error("ProcessNoise::w_mmi: only hyper noise carries w_MMI");
    }
    return w[3];
}

} // namespace ptloop
