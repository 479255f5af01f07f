#include "ptloop/dosing.hpp"

#include "ptloop/csv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ptloop {

namespace {

// Molar masses (g/mol) used to convert dose amounts to mol.
constexpr double kMolarMassT3 = 650.97;
constexpr double kMolarMassT4 = 776.87;
constexpr double kMolarMassMmi = 114.17;

constexpr double kSecondsPerHour = 3600.0;

} // namespace

std::string to_string(Medication m) {
    switch (m) {
        case Medication::lt3: return "lt3";
        case Medication::lt4: return "lt4";
        case Medication::mmi: return "mmi";
    }
    throw std::logic_error("to_string: invalid Medication");
}

Medication medication_from_string(const std::string& name) {
    if (name == "lt3") return Medication::lt3;
    if (name == "lt4") return Medication::lt4;
    if (name == "mmi") return Medication::mmi;
    throw std::invalid_argument("unknown medication '" + name +
                                "' (expected 'lt3', 'lt4' or 'mmi')");
}

double max_daily_dose(Medication m) {
    switch (m) {
        case Medication::lt3: return 30.0;  // ug
        case Medication::lt4: return 400.0; // ug
        case Medication::mmi: return 35.0;  // mg
    }
    throw std::logic_error("max_daily_dose: invalid Medication");
}

void DoseSchedule::set(int day, double amount) {
    if (day < 0) {
        throw std::invalid_argument("DoseSchedule: negative day index " + std::to_string(day));
    }
    if (amount < 0.0 || amount > max_daily_dose(kind_)) {
        throw std::invalid_argument("DoseSchedule: " + to_string(kind_) + " dose " +
                                    std::to_string(amount) + " outside [0, " +
                                    std::to_string(max_daily_dose(kind_)) + "]");
    }
    auto it = std::lower_bound(doses_.begin(), doses_.end(), day,
                               [](const Dose& d, int value) { return d.day < value; });
    if (it != doses_.end() && it->day == day) {
        it->amount = amount;
    } else {
        doses_.insert(it, Dose{day, amount});
    }
}

double DoseSchedule::amount_on(int day) const {
    auto it = std::lower_bound(doses_.begin(), doses_.end(), day,
                               [](const Dose& d, int value) { return d.day < value; });
    return (it != doses_.end() && it->day == day) ? it->amount : 0.0;
}

DoseSchedule DoseSchedule::with_skipped(int first_day, int last_day) const {
    DoseSchedule out = *this;
    for (Dose& d : out.doses_) {
        if (d.day >= first_day && d.day <= last_day) d.amount = 0.0;
    }
    return out;
}

DoseSchedule DoseSchedule::constant(Medication kind, int first_day, int last_day,
                                    double amount) {
    if (last_day < first_day) {
        throw std::invalid_argument("DoseSchedule::constant: empty day range");
    }
    DoseSchedule s(kind);
    for (int day = first_day; day <= last_day; ++day) s.set(day, amount);
    return s;
}

std::vector<DoseSchedule> load_schedules_csv(const std::string& path) {
    // medication is encoded numerically (0 = lt3, 1 = lt4, 2 = mmi) so the
    // file stays a purely numeric table.
    const csv::Table table = csv::read_table(path);
    const std::size_t day_col = table.column("day_index");
    const std::size_t amount_col = table.column("dose_amount");
    const std::size_t med_col = table.column("medication");
    std::vector<DoseSchedule> schedules;
    auto schedule_for = [&schedules](Medication kind) -> DoseSchedule& {
        for (DoseSchedule& s : schedules) {
            if (s.kind() == kind) return s;
        }
        schedules.emplace_back(kind);
        return schedules.back();
    };
    for (const std::vector<double>& row : table.rows) {
        const double med = row[med_col];
        if (med != 0.0 && med != 1.0 && med != 2.0) {
            throw std::runtime_error("dose CSV: medication code " + std::to_string(med) +
                                     " is not 0 (lt3), 1 (lt4) or 2 (mmi)");
        }
        const auto kind = static_cast<Medication>(static_cast<int>(med));
        schedule_for(kind).set(static_cast<int>(row[day_col]), row[amount_col]);
    }
    return schedules;
}

void write_schedules_csv(const std::string& path, const std::vector<DoseSchedule>& schedules) {
    csv::Table table;
    table.header = {"day_index", "dose_amount", "medication"};
    for (const DoseSchedule& s : schedules) {
        for (const Dose& d : s.doses()) {
            table.rows.push_back({static_cast<double>(d.day), d.amount,
                                  static_cast<double>(static_cast<int>(s.kind()))});
        }
    }
    csv::write_table(path, table);
}

AbsorptionSignal::AbsorptionSignal(std::vector<Pulse> pulses) : pulses_(std::move(pulses)) {
    std::sort(pulses_.begin(), pulses_.end(),
              [](const Pulse& a, const Pulse& b) { return a.onset < b.onset; });
}

double AbsorptionSignal::operator()(double t) const {
    double value = 0.0;
    for (const Pulse& pulse : pulses_) {
        if (pulse.onset > t) break; // sorted: no later pulse contributes
        const double age = t - pulse.onset;
        if (age > kPruneSeconds) continue;
        value += pulse.amplitude * (std::exp(-pulse.slow * age) - std::exp(-pulse.fast * age));
    }
    return value;
}

std::vector<double> AbsorptionSignal::onsets_between(double t0, double t1) const {
    std::vector<double> onsets;
    for (const Pulse& pulse : pulses_) {
        if (pulse.onset > t0 && pulse.onset < t1) onsets.push_back(pulse.onset);
        if (pulse.onset >= t1) break;
    }
    return onsets;
}

AbsorptionSignal lt_signal(const DoseSchedule& s, const ModelParameters& p) {
    double k1 = 0.0, k2 = 0.0, k3 = 0.0, molar_mass = 0.0;
    switch (s.kind()) {
        case Medication::lt3:
            k1 = p.k_13;
            k2 = p.k_23;
            k3 = p.k_33;
            molar_mass = kMolarMassT3;
            break;
        case Medication::lt4:
            k1 = p.k_14;
            k2 = p.k_24;
            k3 = p.k_34;
            molar_mass = kMolarMassT4;
            break;
        case Medication::mmi:
            throw std::invalid_argument("lt_signal: MMI schedules use mmi_plasma");
    }
    const double slow = k2 + k3;
    if (k1 == slow) {
        throw std::invalid_argument("lt_signal: degenerate rates k_1 == k_2 + k_3");
    }
    const double gain = k3 * k1 / (k1 - slow);
    std::vector<AbsorptionSignal::Pulse> pulses;
    pulses.reserve(s.doses().size());
    for (const Dose& d : s.doses()) {
        if (d.amount == 0.0) continue;
        const double mol = d.amount * 1e-6 / molar_mass; // ug -> mol
        pulses.push_back({d.day * kDaySeconds, gain * mol, slow, k1});
    }
    return AbsorptionSignal(std::move(pulses));
}

AbsorptionSignal mmi_plasma(const DoseSchedule& s, const ModelParameters& p) {
    if (s.kind() != Medication::mmi) {
        throw std::invalid_argument("mmi_plasma: expected an MMI schedule");
    }
    const double ka = p.k_a / kSecondsPerHour; // 1/h -> 1/s, done once here
    const double ke = p.k_e / kSecondsPerHour;
    if (ka == ke) {
        throw std::invalid_argument("mmi_plasma: degenerate rates k_a == k_e");
    }
    const double gain = p.f_b * ka / (p.V * (ka - ke));
    std::vector<AbsorptionSignal::Pulse> pulses;
    pulses.reserve(s.doses().size());
    for (const Dose& d : s.doses()) {
        if (d.amount == 0.0) continue;
        const double mol = d.amount * 1e-3 / kMolarMassMmi; // mg -> mol
        pulses.push_back({d.day * kDaySeconds, gain * mol, ke, ka});
    }
    return AbsorptionSignal(std::move(pulses));
}

double mmi_absorption(double plasma_value, const ModelParameters& p) {
    return p.alpha_M_th * p.G_M_th * plasma_value / (p.K_M_th + plasma_value);
}

InputRates InputSignals::rates(double t) const {
    InputRates u;
    u.u_lt3 = lt3(t);
    u.u_lt4 = lt4(t);
    const double plasma = mmi_pl(t);
    u.u_mmi = mmi_gain * plasma / (mmi_km + plasma);
    return u;
}

std::vector<double> InputSignals::onsets_between(double t0, double t1) const {
    std::vector<double> onsets = lt3.onsets_between(t0, t1);
    for (double t : lt4.onsets_between(t0, t1)) onsets.push_back(t);
    for (double t : mmi_pl.onsets_between(t0, t1)) onsets.push_back(t);
    std::sort(onsets.begin(), onsets.end());
    onsets.erase(std::unique(onsets.begin(), onsets.end()), onsets.end());
    return onsets;
}

InputSignals make_input_signals(const ModelParameters& p, const DoseSchedule* lt3,
                                const DoseSchedule* lt4, const DoseSchedule* mmi) {
    InputSignals u;
    u.mmi_gain = p.alpha_M_th * p.G_M_th;
    u.mmi_km = p.K_M_th;
    if (lt3 != nullptr) u.lt3 = lt_signal(*lt3, p);
    if (lt4 != nullptr) u.lt4 = lt_signal(*lt4, p);
    if (mmi != nullptr) u.mmi_pl = mmi_plasma(*mmi, p);
    return u;
}

WindowedSignal::WindowedSignal(const AbsorptionSignal& base, long k, double period)
    : base_(&base), offset_(static_cast<double>(k) * period), period_(period) {
    if (k < 0) {
        throw std::invalid_argument("window: negative step index");
    }
}

double WindowedSignal::operator()(double tau) const {
    if (tau < 0.0 || tau > period_) {
        throw std::domain_error("windowed signal evaluated outside [0, T_d]");
    }
    return (*base_)(offset_ + tau);
}

WindowedSignal window(const AbsorptionSignal& s, long k, double period) {
    return {s, k, period};
}

} // namespace ptloop
