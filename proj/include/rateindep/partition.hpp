#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rateindep/errors.hpp"

namespace rateindep {

struct Partition {
    std::vector<double> times;  // 0 = t_0 < ... < t_N = T

    std::size_t steps() const { return times.size() - 1; }
    double horizon() const { return times.back(); }
    double tau(std::size_t k) const { return times[k + 1] - times[k]; }
    double fineness() const {
        double m = 0.0;
        for (std::size_t k = 0; k + 1 < times.size(); ++k) m = std::max(m, times[k + 1] - times[k]);
        return m;
    }

    static Partition uniform(double T, std::size_t n, const std::vector<double>& required = {}) {
        if (!(T > 0.0) || n < 1) throw Error(ErrorCode::BadConfig, "partition needs T > 0 and n >= 1");
        std::vector<double> pts;
        pts.reserve(n + 1 + required.size());
        for (std::size_t k = 0; k <= n; ++k) pts.push_back(T * double(k) / double(n));
        for (double t : required)
            if (t > 0.0 && t < T) pts.push_back(t);
        std::sort(pts.begin(), pts.end());
        std::vector<double> out;
        double tol = 1e-12 * T;
        for (double t : pts)
            if (out.empty() || t - out.back() > tol) out.push_back(t);
        out.back() = T;
        Partition p{std::move(out)};
        return p;
    }

    // Fineness at most delta, load breakpoints included as nodes.
    static Partition with_fineness(double T, double delta, const std::vector<double>& required = {}) {
        if (!(delta > 0.0) || T / delta > 5e6)
            throw Error(ErrorCode::BadConfig, "partition fineness would need more than 5e6 steps");
        auto n = static_cast<std::size_t>(std::ceil(T / delta));
        return uniform(T, std::max<std::size_t>(1, n), required);
    }

    Partition rescaled(double factor) const {
        Partition p = *this;
        for (auto& t : p.times) t *= factor;
        return p;
    }
};

}  // namespace rateindep
