#include "eitmem/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "eitmem/errors.hpp"

namespace eitmem {

namespace {

// Fritsch-Carlson monotone slopes.
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> h(n - 1), d(n - 1), m(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x[i + 1] - x[i];
        d[i] = (y[i + 1] - y[i]) / h[i];
    }
    if (n == 2) {
        m[0] = m[1] = d[0];
        return m;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0) continue;
        const double w1 = 2 * h[i] + h[i - 1], w2 = h[i] + 2 * h[i - 1];
        m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double s = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0) s = 0;
        else if (d0 * d1 <= 0 && std::abs(s) > std::abs(3 * d0)) s = 3 * d0;
        return s;
    };
    m[0] = end_slope(h[0], h[1], d[0], d[1]);
    m[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    return m;
}

}  // namespace

const char* to_string(ScheduleQuantity q) {
    switch (q) {
        case ScheduleQuantity::rabi: return "rabi";
        case ScheduleQuantity::cot_theta: return "cot_theta";
        case ScheduleQuantity::cos_theta: return "cos_theta";
        case ScheduleQuantity::cos2_theta: return "cos2_theta";
    }
    return "?";
}

ScheduleQuantity quantity_from_string(const std::string& s) {
    if (s == "rabi") return ScheduleQuantity::rabi;
    if (s == "cot_theta") return ScheduleQuantity::cot_theta;
    if (s == "cos_theta") return ScheduleQuantity::cos_theta;
    if (s == "cos2_theta" || s == "group_velocity") return ScheduleQuantity::cos2_theta;
    throw ValidationError("unknown schedule quantity '" + s + "'");
}

void ControlSchedule::check_value(double v) const {
    if (!std::isfinite(v)) throw ValidationError("schedule value must be finite");
    switch (quantity_) {
        case ScheduleQuantity::rabi:
        case ScheduleQuantity::cot_theta:
            if (v < 0) throw ValidationError(std::string(to_string(quantity_)) + " must be >= 0");
            break;
        case ScheduleQuantity::cos_theta:
        case ScheduleQuantity::cos2_theta:
            if (v < 0 || v > 1)
                throw ValidationError(std::string(to_string(quantity_)) + " must lie in [0, 1]");
            break;
    }
}

ControlSchedule ControlSchedule::constant(ScheduleQuantity q, double value, ScheduleDomain d) {
    ControlSchedule s;
    s.kind_ = ScheduleKind::constant;
    s.quantity_ = q;
    s.domain_ = d;
    s.a0_ = s.a1_ = value;
    s.check_value(value);
    return s;
}

ControlSchedule ControlSchedule::tanh_ramp(ScheduleQuantity q, double from, double to,
                                           double center, double rate, ScheduleDomain d) {
    ControlSchedule s;
    s.kind_ = ScheduleKind::tanh_ramp;
    s.quantity_ = q;
    s.domain_ = d;
    s.a0_ = from;
    s.a1_ = to;
    s.x1_ = center;
    s.rate_ = rate;
    s.check_value(from);
    s.check_value(to);
    if (!(rate > 0) || !std::isfinite(center)) throw ValidationError("tanh_ramp: rate must be > 0");
    return s;
}

ControlSchedule ControlSchedule::tanh_pulse_pair(ScheduleQuantity q, double outer, double inner,
                                                 double x1, double x2, double rate,
                                                 ScheduleDomain d) {
    ControlSchedule s;
    s.kind_ = ScheduleKind::tanh_pulse_pair;
    s.quantity_ = q;
    s.domain_ = d;
    s.a0_ = outer;
    s.a1_ = inner;
    s.x1_ = x1;
    s.x2_ = x2;
    s.rate_ = rate;
    s.check_value(outer);
    s.check_value(inner);
    if (!(rate > 0)) throw ValidationError("tanh_pulse_pair: rate must be > 0");
    if (!(x2 > x1)) throw ValidationError("tanh_pulse_pair: need x2 > x1");
    return s;
}

ControlSchedule ControlSchedule::tabulated(ScheduleQuantity q, std::vector<double> xs,
                                           std::vector<double> ys, ScheduleDomain d) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw ValidationError("tabulated schedule needs >= 2 matching knots");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1])) throw ValidationError("tabulated abscissae must increase strictly");
    ControlSchedule s;
    s.kind_ = ScheduleKind::tabulated;
    s.quantity_ = q;
    s.domain_ = d;
    for (double y : ys) s.check_value(y);
    s.slopes_ = pchip_slopes(xs, ys);
    s.xs_ = std::move(xs);
    s.ys_ = std::move(ys);
    return s;
}

double ControlSchedule::raw(double x) const {
    switch (kind_) {
        case ScheduleKind::constant: return a0_;
        case ScheduleKind::tanh_ramp: return a0_ + (a1_ - a0_) * 0.5 * (1 + std::tanh(rate_ * (x - x1_)));
        case ScheduleKind::tanh_pulse_pair:
            return a0_ - (a0_ - a1_) * 0.5 * (std::tanh(rate_ * (x - x1_)) - std::tanh(rate_ * (x - x2_)));
        case ScheduleKind::tabulated: {
            if (x <= xs_.front()) return ys_.front();
            if (x >= xs_.back()) return ys_.back();
            const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
            const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
            const double h = xs_[i + 1] - xs_[i], t = (x - xs_[i]) / h;
            const double t2 = t * t, t3 = t2 * t;
            return (2 * t3 - 3 * t2 + 1) * ys_[i] + (t3 - 2 * t2 + t) * h * slopes_[i] +
                   (-2 * t3 + 3 * t2) * ys_[i + 1] + (t3 - t2) * h * slopes_[i + 1];
        }
    }
    return 0.0;
}

double ControlSchedule::rabi(double x, double gN2) const {
    const double v = raw(x);
    switch (quantity_) {
        case ScheduleQuantity::rabi: return v;
        case ScheduleQuantity::cot_theta: return std::sqrt(gN2) * v;
        case ScheduleQuantity::cos_theta:
            if (v >= 1) throw DomainError("cos(theta) = 1 needs an infinite control field");
            return std::sqrt(gN2) * v / std::sqrt(1 - v * v);
        case ScheduleQuantity::cos2_theta:
            if (v >= 1) throw DomainError("cos^2(theta) = 1 needs an infinite control field");
            return std::sqrt(gN2 * v / (1 - v));
    }
    return 0.0;
}

double ControlSchedule::theta(double x, double gN2) const {
    const double v = raw(x);
    switch (quantity_) {
        case ScheduleQuantity::rabi:
            if (v == 0 && gN2 == 0) throw DomainError("mixing angle undefined for Omega = gN2 = 0");
            return std::atan2(std::sqrt(gN2), v);
        case ScheduleQuantity::cot_theta: return std::atan2(1.0, v);
        case ScheduleQuantity::cos_theta: return std::acos(std::clamp(v, 0.0, 1.0));
        case ScheduleQuantity::cos2_theta: return std::acos(std::sqrt(std::clamp(v, 0.0, 1.0)));
    }
    return 0.0;
}

double ControlSchedule::cos2_theta(double x, double gN2) const {
    const double v = raw(x);
    switch (quantity_) {
        case ScheduleQuantity::rabi:
            if (v == 0 && gN2 == 0) throw DomainError("mixing angle undefined for Omega = gN2 = 0");
            return v * v / (v * v + gN2);
        case ScheduleQuantity::cot_theta: return v * v / (1 + v * v);
        case ScheduleQuantity::cos_theta: return v * v;
        case ScheduleQuantity::cos2_theta: return v;
    }
    return 0.0;
}

bool ControlSchedule::smooth_near(double x, double radius) const {
    if (kind_ != ScheduleKind::tabulated) return true;
    for (std::size_t i = 1; i + 1 < xs_.size(); ++i)
        if (std::abs(x - xs_[i]) <= radius) return false;
    return true;
}

std::vector<double> ControlSchedule::features() const {
    switch (kind_) {
        case ScheduleKind::constant: return {};
        case ScheduleKind::tanh_ramp: return {x1_};
        case ScheduleKind::tanh_pulse_pair: return {x1_, x2_};
        case ScheduleKind::tabulated: return {xs_.begin() + 1, xs_.end() - 1};
    }
    return {};
}

std::string ControlSchedule::describe() const {
    std::ostringstream os;
    os << to_string(quantity_) << "(" << (domain_ == ScheduleDomain::time ? "t" : "z") << ") ";
    switch (kind_) {
        case ScheduleKind::constant: os << "= " << a0_; break;
        case ScheduleKind::tanh_ramp:
            os << "tanh ramp " << a0_ << " -> " << a1_ << " at " << x1_ << " rate " << rate_;
            break;
        case ScheduleKind::tanh_pulse_pair:
            os << "tanh pair " << a0_ << " -> " << a1_ << " on [" << x1_ << ", " << x2_ << "] rate "
               << rate_;
            break;
        case ScheduleKind::tabulated: os << "tabulated, " << xs_.size() << " knots"; break;
    }
    return os.str();
}

}  // namespace eitmem
