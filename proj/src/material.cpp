#include "hotemboss/material.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "hotemboss/errors.hpp"
#include "hotemboss/json_reader.hpp"

namespace hotemboss::material {

PronySeries::PronySeries(double long_term, std::vector<PronyTerm> terms)
    : long_term_(long_term), terms_(std::move(terms)) {
    if (!(long_term_ >= 0.0) || !std::isfinite(long_term_)) {
        throw ValidationError("Prony series: long-term modulus must be finite and >= 0");
    }
    for (const auto& t : terms_) {
        if (!(t.weight > 0.0) || !std::isfinite(t.weight)) {
            throw ValidationError("Prony series: every weight must be > 0");
        }
        if (!(t.relaxation_time > 0.0)) {
            throw ValidationError("Prony series: every relaxation time must be > 0");
        }
    }
    std::stable_sort(terms_.begin(), terms_.end(),
                     [](const PronyTerm& a, const PronyTerm& b) { return a.relaxation_time < b.relaxation_time; });
    if (!(instantaneous() > 0.0)) {
        throw ValidationError("Prony series: instantaneous modulus must be > 0");
    }
}

double PronySeries::instantaneous() const noexcept { return long_term_ + weight_sum(); }

double PronySeries::weight_sum() const noexcept {
    double s = 0.0;
    for (const auto& t : terms_) {
        s += t.weight;
    }
    return s;
}

double PronySeries::value(double reduced_time) const noexcept {
    double g = long_term_;
    for (const auto& t : terms_) {
        g += t.weight * std::exp(-reduced_time / t.relaxation_time);
    }
    return g;
}

double PronySeries::max_relaxation_time() const noexcept {
    return terms_.empty() ? 0.0 : terms_.back().relaxation_time;
}

PronySeries PronySeries::normalized() const {
    const double sum = weight_sum();
    if (!(sum > 0.0)) {
        throw ValidationError("cannot normalize a Prony series without terms");
    }
    std::vector<PronyTerm> out = terms_;
    for (auto& t : out) {
        t.weight /= sum;
    }
    PronySeries p;
    p.long_term_ = 0.0;
    p.terms_ = std::move(out);
    return p;
}

double shift_factor(double temperature, const WlfShift& shift) {
    const double dt = temperature - shift.t_ref;
    if (!(dt > -shift.c2 + kWlfGuard)) {
        std::ostringstream msg;
        msg << "WLF shift singular: T = " << temperature << " K is at or below t_ref - c2 = "
            << shift.t_ref - shift.c2 << " K";
        throw SingularTemperatureError(msg.str());
    }
    return std::pow(10.0, shift.c1 * dt / (shift.c2 + dt));
}

double reduced_time_increment(double t_old, double t_new, double dt, const WlfShift& shift) {
    if (!(dt >= 0.0)) {
        throw ValidationError("reduced_time_increment: dt must be >= 0");
    }
    const double phi_old = shift_factor(t_old, shift);
    if (t_old == t_new) {
        return phi_old * dt;
    }
    return dt * 0.5 * (phi_old + shift_factor(t_new, shift));
}

ExpansionTable::ExpansionTable(std::vector<double> temperatures, std::vector<double> coefficients)
    : temperatures_(std::move(temperatures)), coefficients_(std::move(coefficients)) {
    if (temperatures_.empty() || temperatures_.size() != coefficients_.size()) {
        throw ValidationError("expansion table: need matching, non-empty temperature and coefficient lists");
    }
    for (std::size_t i = 0; i < temperatures_.size(); ++i) {
        if (!std::isfinite(temperatures_[i]) || !std::isfinite(coefficients_[i])) {
            throw ValidationError("expansion table: non-finite entry");
        }
        if (i > 0 && !(temperatures_[i] > temperatures_[i - 1])) {
            throw ValidationError("expansion table: temperatures must be strictly increasing");
        }
    }
}

bool ExpansionTable::contains(double temperature) const noexcept {
    if (temperatures_.size() == 1) {
        return std::isfinite(temperature);
    }
    constexpr double slack = 1e-9;
    return temperature >= temperatures_.front() - slack && temperature <= temperatures_.back() + slack;
}

void ExpansionTable::check_range(double temperature) const {
    if (!contains(temperature)) {
        std::ostringstream msg;
        msg << "temperature " << temperature << " K outside expansion table [" << temperatures_.front() << ", "
            << temperatures_.back() << "] K";
        throw TableRangeError(msg.str());
    }
}

double ExpansionTable::value(double temperature) const {
    check_range(temperature);
    if (temperatures_.size() == 1 || temperature <= temperatures_.front()) {
        return coefficients_.front();
    }
    if (temperature >= temperatures_.back()) {
        return coefficients_.back();
    }
    const auto it = std::upper_bound(temperatures_.begin(), temperatures_.end(), temperature);
    const std::size_t hi = static_cast<std::size_t>(it - temperatures_.begin());
    const std::size_t lo = hi - 1;
    const double w = (temperature - temperatures_[lo]) / (temperatures_[hi] - temperatures_[lo]);
    return coefficients_[lo] + w * (coefficients_[hi] - coefficients_[lo]);
}

double ExpansionTable::integral(double from, double to) const {
    check_range(from);
    check_range(to);
    if (from == to) {
        return 0.0;
    }
    if (temperatures_.size() == 1) {
        return coefficients_.front() * (to - from);
    }
    const double sign = to > from ? 1.0 : -1.0;
    const double lo = std::min(from, to);
    const double hi = std::max(from, to);
    // Walk the segments overlapping [lo, hi]; trapezoids are exact for a linear interpolant.
    double sum = 0.0;
    double a = lo;
    while (a < hi) {
        auto it = std::upper_bound(temperatures_.begin(), temperatures_.end(), a);
        double b = (it == temperatures_.end()) ? hi : std::min(hi, *it);
        if (b <= a) {
            b = hi;
        }
        sum += 0.5 * (value(a) + value(b)) * (b - a);
        a = b;
    }
    return sign * sum;
}

void MaterialCard::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw ValidationError(std::string("material card: ") + what);
        }
    };
    require(density > 0.0, "density must be > 0");
    require(heat_capacity > 0.0, "heat capacity must be > 0");
    require(conductivity > 0.0, "conductivity must be > 0");
    require(glass_transition > 0.0, "glass transition temperature must be > 0");
    require(shear_relaxation.instantaneous() > 0.0, "shear relaxation needs a positive instantaneous modulus");
    require(bulk_relaxation.instantaneous() > 0.0, "bulk relaxation needs a positive instantaneous modulus");
    require(volume_relaxation.long_term() == 0.0, "volume relaxation must have no long-term term");
    require(std::abs(volume_relaxation.weight_sum() - 1.0) <= 1e-12, "volume relaxation weights must sum to 1");
    require(shift.c2 > 0.0, "WLF c2 must be > 0");
    require(std::isfinite(shift.c1) && std::isfinite(shift.t_ref), "WLF constants must be finite");
    require(!expansion.liquid.temperatures().empty() && !expansion.glassy.temperatures().empty(),
            "thermal expansion tables are required");
}

namespace {

PronySeries read_prony(const nlohmann::json& j, const std::string& context) {
    JsonReader r(j, context);
    const double long_term = r.get_or<double>("long_term_modulus_Pa", 0.0);
    const auto moduli = r.get_or<std::vector<double>>("moduli_Pa", {});
    const auto times = r.get_or<std::vector<double>>("relaxation_times_s", {});
    r.finish();
    if (moduli.size() != times.size()) {
        throw ConfigError(context + ": moduli_Pa and relaxation_times_s differ in length");
    }
    std::vector<PronyTerm> terms;
    for (std::size_t i = 0; i < moduli.size(); ++i) {
        terms.push_back({moduli[i], times[i]});
    }
    return PronySeries(long_term, std::move(terms));
}

ExpansionTable read_table(const nlohmann::json& j, const std::string& context) {
    JsonReader r(j, context);
    if (r.has("coefficient_per_K")) {
        const double alpha = r.get<double>("coefficient_per_K");
        r.finish();
        return ExpansionTable::constant(alpha);
    }
    auto temps = r.temperatures("temperatures");
    auto coeffs = r.get<std::vector<double>>("coefficients_per_K");
    r.finish();
    return ExpansionTable(std::move(temps), std::move(coeffs));
}

nlohmann::json prony_to_json(const PronySeries& p) {
    nlohmann::json j;
    j["long_term_modulus_Pa"] = p.long_term();
    std::vector<double> m, t;
    for (const auto& term : p.terms()) {
        m.push_back(term.weight);
        t.push_back(term.relaxation_time);
    }
    j["moduli_Pa"] = m;
    j["relaxation_times_s"] = t;
    return j;
}

nlohmann::json table_to_json(const ExpansionTable& t) {
    if (t.temperatures().size() == 1) {
        return {{"coefficient_per_K", t.coefficients().front()}};
    }
    return {{"temperatures_K", t.temperatures()}, {"coefficients_per_K", t.coefficients()}};
}

}  // namespace

MaterialCard material_card_from_json(const nlohmann::json& doc) {
    JsonReader r(doc, "material card");
    MaterialCard card;
    card.name = r.get_or<std::string>("name", "");
    card.density = r.positive("density_kg_m3");
    card.heat_capacity = r.positive("heat_capacity_J_kgK");
    card.conductivity = r.positive("conductivity_W_mK");
    card.glass_transition = r.temperature("glass_transition");
    card.shear_relaxation = read_prony(r.raw("shear_relaxation"), "material card: shear_relaxation");

    const bool has_spectrum = r.has("bulk_relaxation");
    const bool has_elastic = r.has("bulk_modulus_Pa");
    if (has_spectrum == has_elastic) {
        throw ConfigError("material card: give exactly one of bulk_relaxation or bulk_modulus_Pa");
    }
    card.bulk_relaxation = has_spectrum ? read_prony(r.raw("bulk_relaxation"), "material card: bulk_relaxation")
                                        : PronySeries(r.positive("bulk_modulus_Pa"), {});

    if (auto vr = r.optional_raw("volume_relaxation")) {
        JsonReader v(*vr, "material card: volume_relaxation");
        const auto w = v.get<std::vector<double>>("weights");
        const auto t = v.get<std::vector<double>>("relaxation_times_s");
        v.finish();
        if (w.size() != t.size()) {
            throw ConfigError("material card: volume_relaxation weights and times differ in length");
        }
        std::vector<PronyTerm> terms;
        for (std::size_t i = 0; i < w.size(); ++i) {
            terms.push_back({w[i], t[i]});
        }
        card.volume_relaxation = PronySeries(0.0, std::move(terms));
    } else {
        card.volume_relaxation = card.shear_relaxation.normalized();
    }

    {
        JsonReader w(r.raw("wlf"), "material card: wlf");
        card.shift.c1 = w.get<double>("c1");
        card.shift.c2 = w.get<double>("c2_K");
        card.shift.t_ref = w.temperature("reference_temperature");
        w.finish();
    }
    {
        JsonReader e(r.raw("thermal_expansion"), "material card: thermal_expansion");
        card.expansion.liquid = read_table(e.raw("liquid"), "material card: thermal_expansion.liquid");
        card.expansion.glassy = read_table(e.raw("glassy"), "material card: thermal_expansion.glassy");
        e.finish();
    }
    r.finish();
    card.validate();
    return card;
}

MaterialCard load_material_card(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open material card " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return material_card_from_json(doc);
}

nlohmann::json material_card_to_json(const MaterialCard& card) {
    nlohmann::json j;
    j["name"] = card.name;
    j["density_kg_m3"] = card.density;
    j["heat_capacity_J_kgK"] = card.heat_capacity;
    j["conductivity_W_mK"] = card.conductivity;
    j["glass_transition_K"] = card.glass_transition;
    j["shear_relaxation"] = prony_to_json(card.shear_relaxation);
    j["bulk_relaxation"] = prony_to_json(card.bulk_relaxation);
    std::vector<double> w, t;
    for (const auto& term : card.volume_relaxation.terms()) {
        w.push_back(term.weight);
        t.push_back(term.relaxation_time);
    }
    j["volume_relaxation"] = {{"weights", w}, {"relaxation_times_s", t}};
    j["wlf"] = {{"c1", card.shift.c1}, {"c2_K", card.shift.c2}, {"reference_temperature_K", card.shift.t_ref}};
    j["thermal_expansion"] = {{"liquid", table_to_json(card.expansion.liquid)},
                              {"glassy", table_to_json(card.expansion.glassy)}};
    return j;
}

PointState initial_point_state(const MaterialCard& card, double initial_temperature) {
    PointState s;
    s.fictive_temperature = initial_temperature;
    s.initial_temperature = initial_temperature;
    s.last_temperature = initial_temperature;
    s.deviatoric_internal.assign(card.shear_relaxation.size(), Tensor3::Zero());
    s.volumetric_internal.assign(card.bulk_relaxation.size(), 0.0);
    s.fictive_internal.assign(card.volume_relaxation.size(), 0.0);
    return s;
}

TermFactors term_factors(double dxi, double relaxation_time) noexcept {
    const double x = dxi / relaxation_time;
    if (x < 1e-8) {
        return {std::exp(-x), 1.0 - 0.5 * x};
    }
    return {std::exp(-x), -std::expm1(-x) / x};
}

double update_fictive_temperature(PointState& state, double t_new, double dxi, const MaterialCard& card) {
    if (!(dxi >= 0.0)) {
        throw ValidationError("update_fictive_temperature: reduced-time increment must be >= 0");
    }
    const auto& terms = card.volume_relaxation.terms();
    const double dT = t_new - state.last_temperature;
    double memory = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto f = term_factors(dxi, terms[i].relaxation_time);
        state.fictive_internal[i] = f.decay * state.fictive_internal[i] + terms[i].weight * f.ramp * dT;
        memory += state.fictive_internal[i];
    }
    state.fictive_temperature = t_new - memory;
    state.last_temperature = t_new;
    state.reduced_time += dxi;
    return state.fictive_temperature;
}

double thermal_strain(double temperature, double fictive_temperature, double initial_temperature,
                      const MaterialCard& card) {
    return card.expansion.liquid.integral(initial_temperature, fictive_temperature) +
           card.expansion.glassy.integral(fictive_temperature, temperature);
}

Tensor3 deviatoric_part(const Tensor3& t) { return t - (t.trace() / 3.0) * Tensor3::Identity(); }

double mean_part(const Tensor3& t) { return t.trace() / 3.0; }

IncrementalResponse incremental_response(const PointState& state, double dxi, const MaterialCard& card) {
    IncrementalResponse r;
    const auto& shear = card.shear_relaxation;
    const auto& bulk = card.bulk_relaxation;

    r.shear_modulus = shear.long_term();
    r.deviatoric_history = 2.0 * shear.long_term() * deviatoric_part(state.strain);
    for (std::size_t i = 0; i < shear.size(); ++i) {
        const auto f = term_factors(dxi, shear.terms()[i].relaxation_time);
        r.shear_modulus += shear.terms()[i].weight * f.ramp;
        r.deviatoric_history += f.decay * state.deviatoric_internal[i];
    }

    r.bulk_modulus = bulk.long_term();
    r.spherical_history = 3.0 * bulk.long_term() * (mean_part(state.strain) - state.thermal_strain);
    for (std::size_t i = 0; i < bulk.size(); ++i) {
        const auto f = term_factors(dxi, bulk.terms()[i].relaxation_time);
        r.bulk_modulus += bulk.terms()[i].weight * f.ramp;
        r.spherical_history += f.decay * state.volumetric_internal[i];
    }
    return r;
}

StressResult stress_update(PointState& state, const Tensor3& d_dev, double d_mean, double d_thermal, double dxi,
                           const MaterialCard& card) {
    if (!(dxi >= 0.0)) {
        throw ValidationError("stress_update: reduced-time increment must be >= 0");
    }
    const auto& shear = card.shear_relaxation;
    const auto& bulk = card.bulk_relaxation;
    const double driving = d_mean - d_thermal;

    for (std::size_t i = 0; i < shear.size(); ++i) {
        const auto f = term_factors(dxi, shear.terms()[i].relaxation_time);
        Tensor3& q = state.deviatoric_internal[i];
        q = f.decay * q + (2.0 * shear.terms()[i].weight * f.ramp) * d_dev;
        // Keep the stored tensor exactly trace-free against round-off drift.
        q -= (q.trace() / 3.0) * Tensor3::Identity();
    }
    for (std::size_t i = 0; i < bulk.size(); ++i) {
        const auto f = term_factors(dxi, bulk.terms()[i].relaxation_time);
        state.volumetric_internal[i] = f.decay * state.volumetric_internal[i] + 3.0 * bulk.terms()[i].weight * f.ramp * driving;
    }
    state.strain += d_dev + d_mean * Tensor3::Identity();
    state.thermal_strain += d_thermal;
    return current_stress(state, card);
}

StressResult current_stress(const PointState& state, const MaterialCard& card) {
    StressResult out;
    out.deviatoric = 2.0 * card.shear_relaxation.long_term() * deviatoric_part(state.strain);
    for (const auto& q : state.deviatoric_internal) {
        out.deviatoric += q;
    }
    out.spherical = 3.0 * card.bulk_relaxation.long_term() * (mean_part(state.strain) - state.thermal_strain);
    for (double p : state.volumetric_internal) {
        out.spherical += p;
    }
    return out;
}

}  // namespace hotemboss::material
