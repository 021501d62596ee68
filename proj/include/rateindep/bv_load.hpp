#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "rateindep/errors.hpp"
#include "rateindep/linalg.hpp"
#include "rateindep/spd_operator.hpp"

namespace rateindep {

enum class Side { At, Left, Right };
enum class JumpValue { Left, Right, Explicit };

// Piecewise constant/affine regulated load on [0,T]. Segments tile the
// horizon; one-sided limits exist everywhere by construction. The value AT an
// interior breakpoint is a designation (default: right limit, cadlag).
class BVLoad {
  public:
    struct Segment {
        double t0, t1;
        Vec base;   // value at t0
        Vec slope;  // value(t) = base + (t - t0) * slope
        Vec at(double t) const {
            Vec v = base;
            axpy(t - t0, slope, v);
            return v;
        }
    };

    struct Designation {
        JumpValue kind = JumpValue::Right;
        Vec explicit_value;  // used when kind == Explicit
    };

    BVLoad(double horizon, std::vector<Segment> segments,
           std::vector<Designation> interior = {})
        : T_(horizon), segs_(std::move(segments)), desig_(std::move(interior)) {
        if (segs_.empty() || !(T_ > 0.0)) throw Error(ErrorCode::BadConfig, "load needs a positive horizon");
        if (std::abs(segs_.front().t0) > 0.0 || std::abs(segs_.back().t1 - T_) > 1e-14 * (1.0 + T_))
            throw Error(ErrorCode::BadConfig, "load segments must tile [0,T]");
        for (std::size_t i = 0; i + 1 < segs_.size(); ++i)
            if (!(segs_[i].t1 > segs_[i].t0) || std::abs(segs_[i].t1 - segs_[i + 1].t0) > 1e-14 * (1.0 + T_))
                throw Error(ErrorCode::BadConfig, "load segments must be increasing and contiguous");
        if (!(segs_.back().t1 > segs_.back().t0))
            throw Error(ErrorCode::BadConfig, "load segments must be increasing and contiguous");
        if (desig_.empty()) desig_.assign(segs_.size() - 1, Designation{});
        if (desig_.size() != segs_.size() - 1)
            throw Error(ErrorCode::BadConfig, "one designation per interior breakpoint required");
        dim_ = static_cast<int>(segs_.front().base.size());
    }

    static BVLoad constant(double T, Vec c) {
        Vec zero(c.size(), 0.0);
        return BVLoad(T, {Segment{0.0, T, std::move(c), std::move(zero)}});
    }

    static BVLoad ramp(double T, const Vec& from, const Vec& to) {
        Vec slope = to;
        for (std::size_t i = 0; i < slope.size(); ++i) slope[i] = (to[i] - from[i]) / T;
        return BVLoad(T, {Segment{0.0, T, from, slope}});
    }

    static BVLoad step(double T, double t_jump, const Vec& before, const Vec& after,
                       JumpValue at_jump = JumpValue::Right) {
        Vec zero(before.size(), 0.0);
        std::vector<Segment> segs{Segment{0.0, t_jump, before, zero}, Segment{t_jump, T, after, zero}};
        return BVLoad(T, std::move(segs), {Designation{at_jump, {}}});
    }

    int dim() const { return dim_; }
    double horizon() const { return T_; }
    const std::vector<Segment>& segments() const { return segs_; }
    const std::vector<Designation>& designations() const { return desig_; }

    Vec eval(double t, Side side = Side::At) const {
        const double tol = 1e-12 * (1.0 + T_);
        if (t < -tol || t > T_ + tol) throw Error(ErrorCode::DomainMismatch, "time outside horizon");
        t = std::clamp(t, 0.0, T_);
        if (side == Side::Left && t <= 0.0) throw Error(ErrorCode::DomainMismatch, "left limit needs t > 0");
        if (side == Side::Right && t >= T_) throw Error(ErrorCode::DomainMismatch, "right limit needs t < T");
        auto bp = interior_breakpoint(t);
        switch (side) {
            case Side::Left:
                return bp ? segs_[*bp].at(segs_[*bp].t1) : segs_[segment_index(t)].at(t);
            case Side::Right:
                return bp ? segs_[*bp + 1].at(segs_[*bp + 1].t0) : segs_[segment_index(t)].at(t);
            case Side::At:
            default:
                if (!bp) return segs_[segment_index(t)].at(t);
                switch (desig_[*bp].kind) {
                    case JumpValue::Left: return segs_[*bp].at(segs_[*bp].t1);
                    case JumpValue::Explicit: return desig_[*bp].explicit_value;
                    case JumpValue::Right:
                    default: return segs_[*bp + 1].at(segs_[*bp + 1].t0);
                }
        }
    }

    // Total variation on [a,b] in the dual metric of V, including jump
    // excursions through the designated breakpoint values.
    double variation(const SpdOperator& V, double a, double b) const {
        const double tol = 1e-12 * (1.0 + T_);
        if (a < -tol || b > T_ + tol || a > b + tol) throw Error(ErrorCode::DomainMismatch, "time outside horizon");
        a = std::clamp(a, 0.0, T_);
        b = std::clamp(b, 0.0, T_);
        if (b <= a) return 0.0;
        double var = 0.0;
        for (const auto& s : segs_) {
            double lo = std::max(a, s.t0), hi = std::min(b, s.t1);
            if (hi > lo) var += V.dual_norm(s.slope) * (hi - lo);
        }
        for (std::size_t i = 0; i + 1 < segs_.size(); ++i) {
            double tb = segs_[i].t1;
            if (tb < a - tol || tb > b + tol) continue;
            Vec left = segs_[i].at(tb);
            Vec right = segs_[i + 1].at(tb);
            Vec at = eval(tb, Side::At);
            if (tb > a + tol) var += V.dual_norm(at - left);
            if (tb < b - tol) var += V.dual_norm(right - at);
        }
        return var;
    }

    double variation(const SpdOperator& V) const { return variation(V, 0.0, T_); }

    // sup_t |l(t)|_V*; the dual norm is convex along each affine segment, so
    // segment endpoints and designated values suffice.
    double sup_norm(const SpdOperator& V) const {
        double m = 0.0;
        for (const auto& s : segs_) {
            m = std::max(m, V.dual_norm(s.at(s.t0)));
            m = std::max(m, V.dual_norm(s.at(s.t1)));
        }
        for (std::size_t i = 0; i + 1 < segs_.size(); ++i)
            m = std::max(m, V.dual_norm(eval(segs_[i].t1, Side::At)));
        return m;
    }

    std::vector<double> breakpoints() const {
        std::vector<double> b{0.0};
        for (const auto& s : segs_) b.push_back(s.t1);
        return b;
    }

    std::vector<double> jump_times(double tol = 1e-14) const {
        std::vector<double> out;
        for (std::size_t i = 0; i + 1 < segs_.size(); ++i) {
            double tb = segs_[i].t1;
            Vec left = segs_[i].at(tb);
            Vec right = segs_[i + 1].at(tb);
            Vec at = eval(tb, Side::At);
            if (norm_inf(right - left) > tol || norm_inf(at - left) > tol || norm_inf(at - right) > tol)
                out.push_back(tb);
        }
        return out;
    }

    // Load with time dilated by `factor`: same path traversed on [0, factor*T].
    BVLoad rescaled_time(double factor) const {
        std::vector<Segment> segs;
        segs.reserve(segs_.size());
        for (const auto& s : segs_) {
            Vec slope = s.slope;
            for (auto& x : slope) x /= factor;
            segs.push_back(Segment{s.t0 * factor, s.t1 * factor, s.base, slope});
        }
        return BVLoad(T_ * factor, std::move(segs), desig_);
    }

  private:
    // first segment with t < t1 (last one for t at the horizon)
    std::size_t segment_index(double t) const {
        std::size_t lo = 0, hi = segs_.size() - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (t < segs_[mid].t1)
                hi = mid;
            else
                lo = mid + 1;
        }
        return lo;
    }

    std::optional<std::size_t> interior_breakpoint(double t) const {
        const double tol = 1e-12 * (1.0 + T_);
        std::size_t i = segment_index(t);
        if (i + 1 < segs_.size() && std::abs(segs_[i].t1 - t) <= tol) return i;
        if (i > 0 && std::abs(segs_[i - 1].t1 - t) <= tol) return i - 1;
        return std::nullopt;
    }

    double T_;
    std::vector<Segment> segs_;
    std::vector<Designation> desig_;
    int dim_ = 0;
};

}  // namespace rateindep
