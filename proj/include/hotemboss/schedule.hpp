#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "hotemboss/errors.hpp"

namespace hotemboss {

/// Piecewise-linear function of time, held constant outside its knots.
class Schedule {
public:
    Schedule() = default;
    explicit Schedule(double constant) : knots_{{0.0, constant}} {}
    explicit Schedule(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots)) {
        if (knots_.empty()) {
            throw ValidationError("schedule needs at least one (time, value) pair");
        }
        for (std::size_t i = 1; i < knots_.size(); ++i) {
            if (!(knots_[i].first > knots_[i - 1].first)) {
                throw ValidationError("schedule times must be strictly increasing");
            }
        }
    }

    double at(double t) const noexcept {
        if (knots_.empty()) {
            return 0.0;
        }
        if (t <= knots_.front().first) {
            return knots_.front().second;
        }
        if (t >= knots_.back().first) {
            return knots_.back().second;
        }
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                                         [](double v, const auto& k) { return v < k.first; });
        const auto& [t1, v1] = *it;
        const auto& [t0, v0] = *(it - 1);
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
    }

    double end_time() const noexcept { return knots_.empty() ? 0.0 : knots_.back().first; }
    double min_value() const noexcept {
        double m = knots_.empty() ? 0.0 : knots_.front().second;
        for (const auto& k : knots_) m = std::min(m, k.second);
        return m;
    }
    double max_value() const noexcept {
        double m = knots_.empty() ? 0.0 : knots_.front().second;
        for (const auto& k : knots_) m = std::max(m, k.second);
        return m;
    }
    const std::vector<std::pair<double, double>>& knots() const noexcept { return knots_; }

private:
    std::vector<std::pair<double, double>> knots_;
};

}  // namespace hotemboss
