#pragma once

#include <string>
#include <vector>

namespace eitmem {

enum class ScheduleKind { constant, tanh_ramp, tanh_pulse_pair, tabulated };

/// Which physical quantity the curve describes. cos2_theta doubles as
/// v_gr / c.
enum class ScheduleQuantity { rabi, cot_theta, cos_theta, cos2_theta };

enum class ScheduleDomain { time, space };

/// A control curve in time or space. The raw curve is one of four shapes:
///   constant          a0
///   tanh_ramp         a0 + (a1 - a0) * 0.5 * (1 + tanh(rate (x - x1)))
///   tanh_pulse_pair   a0 - (a0 - a1) * 0.5 * (tanh(rate (x - x1)) - tanh(rate (x - x2)))
///   tabulated         monotone piecewise-cubic (Fritsch-Carlson) through the
///                     knots, clamped to the end values outside
/// and is interpreted through `quantity` to give Omega, theta and cos^2 theta
/// for a medium with collective coupling gN2.
class ControlSchedule {
public:
    static ControlSchedule constant(ScheduleQuantity q, double value,
                                    ScheduleDomain d = ScheduleDomain::time);
    static ControlSchedule tanh_ramp(ScheduleQuantity q, double from, double to, double center,
                                     double rate, ScheduleDomain d = ScheduleDomain::time);
    static ControlSchedule tanh_pulse_pair(ScheduleQuantity q, double outer, double inner,
                                           double x1, double x2, double rate,
                                           ScheduleDomain d = ScheduleDomain::time);
    static ControlSchedule tabulated(ScheduleQuantity q, std::vector<double> xs,
                                     std::vector<double> ys,
                                     ScheduleDomain d = ScheduleDomain::time);

    ScheduleKind kind() const { return kind_; }
    ScheduleQuantity quantity() const { return quantity_; }
    ScheduleDomain domain() const { return domain_; }

    /// The raw curve value in units of `quantity`.
    double raw(double x) const;

    double rabi(double x, double gN2) const;
    /// Mixing angle in [0, pi/2] with tan^2 theta = gN2 / Omega^2.
    double theta(double x, double gN2) const;
    double cos2_theta(double x, double gN2) const;

    /// False if x lies within `radius` of a point where the curve is only
    /// once differentiable (interior knots of a tabulated curve).
    bool smooth_near(double x, double radius) const;

    /// Interior knots (tabulated) or centers of the tanh shapes.
    std::vector<double> features() const;

    std::string describe() const;

private:
    ControlSchedule() = default;
    void check_value(double v) const;

    ScheduleKind kind_ = ScheduleKind::constant;
    ScheduleQuantity quantity_ = ScheduleQuantity::rabi;
    ScheduleDomain domain_ = ScheduleDomain::time;
    double a0_ = 0, a1_ = 0, x1_ = 0, x2_ = 0, rate_ = 1;
    std::vector<double> xs_, ys_, slopes_;
};

const char* to_string(ScheduleQuantity q);
ScheduleQuantity quantity_from_string(const std::string& s);

}  // namespace eitmem
