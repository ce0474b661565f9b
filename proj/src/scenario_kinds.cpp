#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <numbers>
#include <set>
#include <sstream>

#include "eitmem/cavity.hpp"
#include "eitmem/collective.hpp"
#include "eitmem/errors.hpp"
#include "eitmem/medium.hpp"
#include "eitmem/polariton.hpp"
#include "eitmem/scenario_file.hpp"
#include "eitmem/solver.hpp"

namespace eitmem {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// Strict reader for one JSON object: every key must be consumed.
class Params {
public:
    Params(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ValidationError(where_ + ": expected an object");
    }

    double num(const std::string& k, double def) {
        const json* v = take(k);
        if (!v) return def;
        if (!v->is_number()) throw ValidationError(path(k) + ": expected a number");
        const double x = v->get<double>();
        if (!std::isfinite(x)) throw ValidationError(path(k) + ": must be finite");
        return x;
    }

    double positive(const std::string& k, double def) {
        const double x = num(k, def);
        if (!(x > 0)) throw ValidationError(path(k) + ": must be > 0");
        return x;
    }

    long integer(const std::string& k, long def, long lo, long hi) {
        const json* v = take(k);
        if (!v) return def;
        if (!v->is_number_integer()) throw ValidationError(path(k) + ": expected an integer");
        const long x = v->get<long>();
        if (x < lo || x > hi)
            throw ValidationError(path(k) + ": must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return x;
    }

    std::vector<double> list(const std::string& k, std::vector<double> def) {
        const json* v = take(k);
        if (!v) return def;
        if (!v->is_array() || v->empty()) throw ValidationError(path(k) + ": expected a non-empty array of numbers");
        std::vector<double> out;
        for (const auto& e : *v) {
            if (!e.is_number()) throw ValidationError(path(k) + ": expected a non-empty array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::string str(const std::string& k, const std::string& def) {
        const json* v = take(k);
        if (!v) return def;
        if (!v->is_string()) throw ValidationError(path(k) + ": expected a string");
        return v->get<std::string>();
    }

    const json* object(const std::string& k) {
        const json* v = take(k);
        if (v && !v->is_object()) throw ValidationError(path(k) + ": expected an object");
        return v;
    }

    std::string path(const std::string& k) const { return where_ + "." + k; }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!used_.count(k)) throw ValidationError(path(k) + ": unknown key");
    }

private:
    const json* take(const std::string& k) {
        used_.insert(k);
        const auto it = j_.find(k);
        return it == j_.end() ? nullptr : &*it;
    }

    const json& j_;
    std::string where_;
    std::set<std::string> used_;
};

struct ControlDefaults {
    std::string shape = "pulse_pair";
    std::string quantity = "cot_theta";
    double outer = 100, inner = 0, x1 = 15, x2 = 125, rate = 0.1;
};

ControlSchedule read_control(const json* j, const std::string& where, const ControlDefaults& d, ScheduleDomain dom) {
    static const json empty = json::object();
    Params p(j ? *j : empty, where);
    const std::string shape = p.str("shape", d.shape);
    ScheduleQuantity q;
    const std::string qs = p.str("quantity", d.quantity);
    try {
        q = quantity_from_string(qs);
    } catch (const Error&) {
        throw ValidationError(p.path("quantity") + ": unknown quantity '" + qs + "'");
    }
    ControlSchedule out = ControlSchedule::constant(q, 1.0, dom);
    if (shape == "constant") {
        out = ControlSchedule::constant(q, p.num("value", d.outer), dom);
    } else if (shape == "ramp") {
        const double from = p.num("from", d.outer), to = p.num("to", d.inner);
        out = ControlSchedule::tanh_ramp(q, from, to, p.num("center", d.x1), p.positive("rate", d.rate), dom);
    } else if (shape == "pulse_pair") {
        const double outer = p.num("outer", d.outer), inner = p.num("inner", d.inner);
        const double x1 = p.num("x1", d.x1), x2 = p.num("x2", d.x2);
        if (!(x2 > x1)) throw ValidationError(where + ": need x2 > x1");
        out = ControlSchedule::tanh_pulse_pair(q, outer, inner, x1, x2, p.positive("rate", d.rate), dom);
    } else if (shape == "tabulated") {
        auto xs = p.list("x", {});
        auto ys = p.list("y", {});
        out = ControlSchedule::tabulated(q, std::move(xs), std::move(ys), dom);
    } else {
        throw ValidationError(p.path("shape") + ": expected constant, ramp, pulse_pair or tabulated");
    }
    p.finish();
    return out;
}

// ---------------------------------------------------------------- stop family

struct StopDefaults {
    double alpha = 2000, etakc = 10, z_min = -60, z_max = 140, width = 10, t_end = 150;
    long nz = 4000;
    ControlDefaults control;
    std::vector<double> snapshots{0, 15, 30, 45, 60, 90, 105, 120, 135, 150};
};

struct StopConfig {
    Scenario sc;
    long csv_stride = 1;
};

StopConfig read_stop(Params& p, const StopDefaults& d) {
    StopConfig cfg;
    const double gamma = p.positive("gamma", 1.0);
    cfg.sc.medium = MediumParams::from_scales(p.positive("etakc_over_gamma", d.etakc), p.positive("alpha", d.alpha), gamma);
    const double z_min = p.num("z_min", d.z_min), z_max = p.num("z_max", d.z_max);
    if (!(z_max > z_min)) throw ValidationError(p.path("z_max") + ": must exceed z_min");
    const long nz = p.integer("nz", d.nz, 64, 1 << 22);
    const double t_end = p.positive("t_end", d.t_end);
    cfg.sc.grid = Grid::unit_cfl(z_min, z_max, static_cast<std::size_t>(nz), t_end);
    GaussianPulse pulse;
    pulse.center = p.num("pulse_center", 0.0);
    pulse.width = p.positive("pulse_width", d.width);
    cfg.sc.pulse = pulse;
    cfg.sc.control = read_control(p.object("control"), p.path("control"), d.control, ScheduleDomain::time);
    cfg.sc.snapshot_times = p.list("snapshot_times", d.snapshots);
    cfg.csv_stride = p.integer("csv_stride", 4, 1, 1 << 20);
    cfg.sc.validate();
    return cfg;
}

double energy(const std::vector<cplx>& f) {
    double s = 0;
    for (const auto& v : f) s += std::norm(v);
    return s;
}

double peak(const std::vector<cplx>& f) {
    double m = 0;
    for (const auto& v : f) m = std::max(m, std::abs(v));
    return m;
}

std::string pair_csv(const std::string& header, const std::vector<double>& t, const Grid& g,
                     const std::vector<std::vector<const std::vector<cplx>*>>& cols, long stride) {
    std::ostringstream os;
    os << header << '\n';
    for (std::size_t k = 0; k < t.size(); ++k) {
        for (std::size_t i = 0; i < g.nz; i += static_cast<std::size_t>(stride)) {
            os << fmt(t[k]) << ',' << fmt(g.z(i));
            for (const auto* c : cols[k]) os << ',' << fmt((*c)[i].real()) << ',' << fmt((*c)[i].imag());
            os << '\n';
        }
    }
    return os.str();
}

void add_margins(ScenarioOutput& out, const AdiabaticityReport& rep) {
    for (const Margin* m : {&rep.propagation, &rep.rotation, &rep.bandwidth, &rep.switching}) {
        out.add("polariton.margin_" + m->name, m->value, std::max(1e-9, 0.05 * m->value));
        out.add("polariton.margin_" + m->name + "_pass", m->pass ? 1 : 0, 0);
        out.margin_log.push_back(m->name + " " + fmt(m->value) + (m->pass ? " pass" : " FAIL") + " (threshold " +
                                 fmt(kMarginThreshold) + ")");
    }
    out.margin_log.push_back("propagation_simplified " + fmt(rep.propagation_simplified));
    out.add("polariton.margins_all_pass", rep.all_pass ? 1 : 0, 0);
}

ScenarioOutput run_stop(const StopConfig& cfg) {
    const Scenario& sc = cfg.sc;
    const Grid& g = *sc.grid;
    const double gN2 = sc.medium.gN2();
    const RunResult r = run(sc);
    ScenarioOutput out;

    const auto& s0 = r.snapshots.front();
    const double th0 = sc.theta(0, s0.t);
    const auto Psi0 = to_polariton(s0.E, s0.S, th0).Psi;
    const double n0 = energy(Psi0);
    const double c0 = r.diagnostics.front().polariton_centroid;

    double max_err = 0, drift = 0, phi_ratio = 0, centroid_err = 0;
    std::vector<PolaritonState> pols;
    std::vector<std::vector<cplx>> analytic;
    std::vector<double> times;
    for (std::size_t k = 0; k < r.snapshots.size(); ++k) {
        const auto& s = r.snapshots[k];
        const double th = sc.theta(0, s.t);
        pols.push_back(to_polariton(s.E, s.S, th, s.t));
        auto Ea = advect_dark(Psi0, g.z_min, g.dz, *sc.control, gN2, g.c, s.t);
        for (auto& v : Ea) v *= std::cos(th);
        if (s.t > 0) max_err = std::max(max_err, rel_l2(s.E, Ea));
        analytic.push_back(std::move(Ea));
        drift = std::max(drift, std::abs(energy(pols.back().Psi) / n0 - 1));
        phi_ratio = std::max(phi_ratio, peak(pols.back().Phi) / peak(pols.back().Psi));
        const double expect = c0 + dark_shift(*sc.control, gN2, g.c, 0, s.t);
        centroid_err = std::max(centroid_err, std::abs(r.diagnostics[k].polariton_centroid - expect));
        times.push_back(s.t);
    }
    out.add("solver.field_rel_l2_max", max_err, 0.01);
    out.add("solver.round_trip_amplitude_ratio", peak(r.snapshots.back().E) / peak(s0.E), 0.01);
    out.add("solver.max_weak_probe", r.max_weak_probe, std::max(1e-9, 0.05 * r.max_weak_probe));
    out.add("polariton.number_drift", drift, 0.005);
    out.add("polariton.phi_over_psi_max", phi_ratio, 0.01);
    out.add("polariton.centroid_error_max", centroid_err, 2 * g.dz);
    add_margins(out, adiabaticity_report(sc));

    std::vector<std::vector<const std::vector<cplx>*>> fcols, scols, pcols;
    for (std::size_t k = 0; k < times.size(); ++k) {
        fcols.push_back({&r.snapshots[k].E, &analytic[k]});
        scols.push_back({&r.snapshots[k].S, &r.snapshots[k].P});
        pcols.push_back({&pols[k].Psi, &pols[k].Phi});
    }
    out.files.push_back({"field.csv", pair_csv("t,z,re_E,im_E,re_E_dark,im_E_dark", times, g, fcols, cfg.csv_stride)});
    out.files.push_back({"spin.csv", pair_csv("t,z,re_S,im_S,re_P,im_P", times, g, scols, cfg.csv_stride)});
    out.files.push_back(
        {"polariton.csv", pair_csv("t,z,re_Psi,im_Psi,re_Phi,im_Phi", times, g, pcols, cfg.csv_stride)});
    out.files.push_back({"diagnostics.json", diagnostics_json(r)});
    return out;
}

// ---------------------------------------------------------------- sudden switch

StopDefaults sudden_defaults() {
    StopDefaults d;
    d.control.x1 = 50;
    d.control.x2 = 90;
    d.control.rate = 20;
    d.snapshots = {0, 50, 70, 90, 150};
    return d;
}

ScenarioOutput run_sudden(const StopConfig& cfg) {
    const Scenario& sc = cfg.sc;
    const RunResult r = run(sc);
    ScenarioOutput out;
    const auto& first = r.snapshots.front();
    const auto& last = r.snapshots.back();
    const double ratio = energy(last.E) / energy(first.E);
    const double amp = peak(last.E) / peak(first.E);
    out.add("solver.retrieved_energy_ratio", ratio, std::max(1e-4, 0.05 * ratio));
    out.add("solver.retrieved_amplitude_ratio", amp, 0.01);
    out.add("solver.retrieved_amplitude_deficit", 1 - amp, 0.01);
    add_margins(out, adiabaticity_report(sc));

    std::vector<double> times;
    std::vector<std::vector<const std::vector<cplx>*>> cols;
    for (const auto& s : r.snapshots) {
        times.push_back(s.t);
        cols.push_back({&s.E, &s.S});
    }
    out.files.push_back({"field.csv", pair_csv("t,z,re_E,im_E,re_S,im_S", times, *sc.grid, cols, cfg.csv_stride)});
    return out;
}

ScenarioOutput run_audit(const StopConfig& cfg) {
    ScenarioOutput out;
    const auto rep = adiabaticity_report(cfg.sc);
    add_margins(out, rep);
    out.add("polariton.pulse_length", rep.L_p, 1e-6 * rep.L_p);
    out.add("polariton.pulse_duration", rep.T_p, 1e-6 * rep.T_p);
    return out;
}

// ---------------------------------------------------------------- road block

struct RoadConfig {
    Scenario sc;
    double v0 = 0, l0 = 0, block_end = 0;
    double tracking_factor = 10;
    int n_samples = 30;
    long csv_stride = 1;
};

RoadConfig read_road(Params& p) {
    RoadConfig cfg;
    const double gamma = p.positive("gamma", 1.0);
    cfg.sc.medium = MediumParams::from_scales(p.positive("etakc_over_gamma", 10), p.positive("alpha", 20), gamma);
    cfg.v0 = p.positive("v0", 0.8);
    if (cfg.v0 >= 1) throw ValidationError(p.path("v0") + ": must be < 1");
    const double z1 = p.num("block_start", 40);
    const double len = p.positive("block_length", 80);
    const double w = p.positive("ramp_width", 10);
    cfg.block_end = z1 + len;
    cfg.l0 = p.positive("pulse_width", 8);
    const double dz = p.positive("dz", 0.05);
    const double z_min = p.num("z_min", -6 * cfg.l0), z_max = p.num("z_max", cfg.block_end + 20);
    if (!(z_max > cfg.block_end) || !(z_min < -2 * cfg.l0))
        throw ValidationError(p.path("z_max") + ": grid must contain the pulse and the block");
    const double t_end = p.positive("t_end", 220);
    cfg.n_samples = static_cast<int>(p.integer("samples", 30, 2, 10000));
    cfg.tracking_factor = p.positive("tracking_factor", 10);
    cfg.csv_stride = p.integer("csv_stride", 4, 1, 1 << 20);
    p.finish();

    const auto nz = static_cast<std::size_t>(std::llround((z_max - z_min) / dz));
    cfg.sc.grid = Grid::unit_cfl(z_min, z_min + nz * dz, nz, t_end);
    cfg.sc.control = ControlSchedule::tanh_pulse_pair(ScheduleQuantity::cos2_theta, cfg.v0, 0.0, z1, cfg.block_end,
                                                      1.0 / w, ScheduleDomain::space);
    cfg.sc.pulse = GaussianPulse{0, cfg.l0, 1};
    for (int k = 0; k <= cfg.n_samples; ++k) cfg.sc.snapshot_times.push_back(t_end * k / cfg.n_samples);
    cfg.sc.validate();
    return cfg;
}

ScenarioOutput run_road(const RoadConfig& cfg) {
    const Scenario& sc = cfg.sc;
    const Grid& g = *sc.grid;
    const double gN2 = sc.medium.gN2();
    const RunResult r = run(sc);
    const double dw_p = cfg.v0 / cfg.l0;

    auto total = [&](const FieldState& s, bool beyond) {
        double acc = 0;
        for (std::size_t i = 0; i < g.nz; ++i)
            if (!beyond || g.z(i) > cfg.block_end) acc += std::norm(s.E[i]) + std::norm(s.S[i]) + std::norm(s.P[i]);
        return acc;
    };
    const double tot0 = total(r.snapshots.front(), false);
    const auto& d0 = r.diagnostics.front();
    const double v_ref = sc.control->cos2_theta(d0.centroid, gN2);

    std::ostringstream track;
    track << "t,centroid,width_ratio,velocity_ratio,bandwidth_ratio,in_window\n";
    double max_err = 0, v_last = 1, band_final = 0;
    bool inside = true;
    for (const auto& d : r.diagnostics) {
        const double wr = d.rms_width / d0.rms_width;
        const double vr = sc.control->cos2_theta(d.centroid, gN2) / v_ref;
        const double band = transparency_width(sc.control->rabi(d.centroid, gN2), sc.medium) / dw_p;
        inside = inside && band >= cfg.tracking_factor;
        if (inside) {
            max_err = std::max(max_err, std::abs(wr / vr - 1));
            v_last = vr;
        }
        band_final = band;
        track << fmt(d.t) << ',' << fmt(d.centroid) << ',' << fmt(wr) << ',' << fmt(vr) << ',' << fmt(band) << ','
              << (inside ? 1 : 0) << '\n';
    }

    ScenarioOutput out;
    out.add("solver.compression_tracking_error", max_err, 0.01);
    out.add("solver.velocity_ratio_at_window_end", v_last, 0.02);
    out.add("solver.final_bandwidth_ratio", band_final, std::max(1e-3, 0.05 * band_final));
    out.add("solver.transmitted_fraction", total(r.snapshots.back(), true) / tot0, 0.01);
    out.add("solver.remaining_excitation", total(r.snapshots.back(), false) / tot0, 0.01);
    out.add("solver.max_weak_probe", r.max_weak_probe, std::max(1e-9, 0.05 * r.max_weak_probe));
    out.files.push_back({"compression.csv", track.str()});
    std::vector<double> times;
    std::vector<std::vector<const std::vector<cplx>*>> cols;
    for (const auto& s : r.snapshots) {
        times.push_back(s.t);
        cols.push_back({&s.E, &s.S});
    }
    out.files.push_back({"field.csv", pair_csv("t,z,re_E,im_E,re_S,im_S", times, g, cols, cfg.csv_stride)});
    return out;
}

// ---------------------------------------------------------------- spectrum

struct SpectrumConfig {
    MediumParams medium = MediumParams::vacuum();
    std::vector<double> velocities;
    long points = 4001;
    double span = 2;
};

SpectrumConfig read_spectrum(Params& p) {
    SpectrumConfig cfg;
    cfg.medium = MediumParams::from_scales(p.positive("etakc_over_gamma", 10), p.positive("alpha", 20),
                                           p.positive("gamma", 1.0));
    cfg.velocities = p.list("group_velocities", {0.0035, 0.0075, 0.016, 0.035});
    for (double v : cfg.velocities)
        if (!(v > 0 && v < 1)) throw ValidationError(p.path("group_velocities") + ": entries must lie in (0, 1)");
    cfg.points = p.integer("points", 40001, 101, 10000001);
    cfg.span = p.positive("span", 2);
    p.finish();
    return cfg;
}

ScenarioOutput run_spectrum(const SpectrumConfig& cfg) {
    const MediumParams& m = cfg.medium;
    std::ostringstream csv;
    csv << "v_gr,omega_c,delta,transmission\n";
    std::vector<double> lv, lw;
    double t0_dev = 0;
    ScenarioOutput out;
    for (double v : cfg.velocities) {
        // v_gr = Omega^2 / (Omega^2 + gN2) for c = 1.
        const double om = std::sqrt(m.gN2() * v / (m.c() - v));
        const double half = cfg.span * transparency_width(om, m);
        std::vector<double> grid(static_cast<std::size_t>(cfg.points));
        for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = -half + 2 * half * i / (grid.size() - 1);
        const auto T = transmission_spectrum(grid, om, m);
        const auto T0 = transmission_spectrum({0.0}, om, m);
        t0_dev = std::max(t0_dev, std::abs(T0[0] - 1));
        const double w = fwhm(grid, T);
        lv.push_back(std::log(group_quantities(om, m).v_gr));
        lw.push_back(std::log(w));
        out.add("medium.fwhm_v" + fmt(v), w, 1e-6 * w);
        const std::size_t stride = std::max<std::size_t>(1, grid.size() / 2000);
        for (std::size_t i = 0; i < grid.size(); i += stride)
            csv << fmt(v) << ',' << fmt(om) << ',' << fmt(grid[i]) << ',' << fmt(T[i]) << '\n';
    }
    double slope = 1;
    if (lv.size() >= 2) {
        const double mx = std::accumulate(lv.begin(), lv.end(), 0.0) / lv.size();
        const double my = std::accumulate(lw.begin(), lw.end(), 0.0) / lw.size();
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < lv.size(); ++i) {
            sxy += (lv[i] - mx) * (lw[i] - my);
            sxx += (lv[i] - mx) * (lv[i] - mx);
        }
        slope = sxy / sxx;
    }
    out.add("medium.fwhm_velocity_slope", slope, 0.01);
    out.add("medium.fwhm_slope_error", std::abs(slope - 1), 0.01);
    out.add("medium.transmission_at_resonance_deviation", t0_dev, 1e-10);
    out.files.push_back({"spectrum.csv", csv.str()});
    return out;
}

// ---------------------------------------------------------------- cavity

struct CavityConfig {
    double g = 1, gamma = 1;
    int n = 1;
    std::vector<double> X;
};

CavityConfig read_cavity(Params& p) {
    CavityConfig cfg;
    cfg.g = p.positive("g", 1);
    cfg.gamma = p.positive("gamma", 1);
    cfg.n = static_cast<int>(p.integer("n", 1, 0, 1000));
    cfg.X = p.list("adiabaticity", {1, 10, 100});
    for (double x : cfg.X)
        if (!(x > 0)) throw ValidationError(p.path("adiabaticity") + ": entries must be > 0");
    p.finish();
    return cfg;
}

ScenarioOutput run_cavity(const CavityConfig& cfg) {
    ScenarioOutput out;
    std::ostringstream csv;
    csv << "X,T,pop_c,pop_b,norm2,max_dark_residual\n";
    double prev = 2, residual = 0;
    bool monotone = true;
    std::vector<double> xs = cfg.X;
    std::sort(xs.begin(), xs.end());
    for (double X : xs) {
        const auto r = stirap_transfer(cfg.g, cfg.gamma, cfg.n, X);
        const double infid = 1 - r.pop_c;
        monotone = monotone && infid < prev;
        prev = infid;
        residual = std::max(residual, r.max_dark_residual);
        out.add("cavity.fidelity_X" + fmt(X), r.pop_c, 1e-3);
        csv << fmt(X) << ',' << fmt(r.T) << ',' << fmt(r.pop_c) << ',' << fmt(r.pop_b) << ',' << fmt(r.norm2) << ','
            << fmt(r.max_dark_residual) << '\n';
    }
    out.add("cavity.infidelity_monotone", monotone ? 1 : 0, 0);
    out.add("cavity.max_dark_residual", residual, 1e-12);
    out.files.push_back({"stirap.csv", csv.str()});
    return out;
}

// ---------------------------------------------------------------- collective

struct MemoryConfig {
    std::vector<int> atoms;
    double p = 0.01;
    int n = 1;
    long trials = 4000;
    std::vector<int> leak_atoms;
};

std::vector<int> int_list(Params& p, const std::string& k, std::vector<double> def, int lo, int hi) {
    std::vector<int> out;
    for (double v : p.list(k, std::move(def))) {
        if (v != std::floor(v) || v < lo || v > hi)
            throw ValidationError(p.path(k) + ": entries must be integers in [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + "]");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

MemoryConfig read_memory(Params& p) {
    MemoryConfig cfg;
    cfg.atoms = int_list(p, "atoms", {6, 12}, 2, kMaxExactAtoms);
    cfg.p = p.num("flip_probability", 0.01);
    if (!(cfg.p >= 0 && cfg.p <= 1)) throw ValidationError(p.path("flip_probability") + ": must lie in [0, 1]");
    cfg.n = static_cast<int>(p.integer("excitations", 1, 0, kMaxExactAtoms - 1));
    cfg.trials = p.integer("trials", 4000, 100, 100000000);
    cfg.leak_atoms = int_list(p, "leak_atoms", {4, 6, 8, 10, 12}, 2, kMaxExactAtoms);
    for (int N : cfg.atoms)
        if (cfg.n >= N) throw ValidationError(p.path("excitations") + ": must be below every atom number");
    for (int N : cfg.leak_atoms)
        if (cfg.n >= N) throw ValidationError(p.path("excitations") + ": must be below every atom number");
    p.finish();
    return cfg;
}

ScenarioOutput run_memory(const MemoryConfig& cfg, std::uint64_t seed) {
    ScenarioOutput out;
    json results = json::array();
    double lo = -1e300, hi = 1e300;
    for (int N : cfg.atoms) {
        const auto r = decoherence_fidelity(N, cfg.p, cfg.n, cfg.trials, seed);
        const std::string s = "_N" + std::to_string(N);
        out.add("collective.mean_fidelity" + s, r.mean_fidelity, 1e-12);
        out.add("collective.ci_half_width" + s, r.ci_half_width, 1e-12);
        lo = std::max(lo, r.mean_fidelity - r.ci_half_width);
        hi = std::min(hi, r.mean_fidelity + r.ci_half_width);
        results.push_back(json::parse(r.to_json()));
    }
    out.add("collective.confidence_intervals_overlap", lo <= hi ? 1 : 0, 0);
    std::ostringstream leak;
    leak << "N,leak,expected\n";
    for (int N : cfg.leak_atoms) {
        const double l = forced_flip_leak(N, cfg.n);
        out.add("collective.flip_leak_N" + std::to_string(N), l, 1e-12);
        leak << N << ',' << fmt(l) << ',' << fmt((cfg.n + 1.0) / N) << '\n';
    }
    out.files.push_back({"decoherence.json", results.dump(2) + "\n"});
    out.files.push_back({"flip_leak.csv", leak.str()});
    return out;
}

}  // namespace

void ScenarioOutput::add(const std::string& name, double value, double tol) {
    metrics[name] = value;
    tolerances[name] = tol;
}

const std::vector<ScenarioKindInfo>& scenario_kinds() {
    static const std::vector<ScenarioKindInfo> kinds{
        {"spectrum", "EIT transmission curves per group velocity; FWHM scaling"},
        {"roadblock", "pulse decelerated by a space-dependent control; compression and transmission"},
        {"stop", "stop and retrieve by a time-dependent control; field vs dark-polariton solution"},
        {"sudden-switch", "abrupt control switching; retrieved energy and amplitude"},
        {"cavity-stirap", "single-mode cavity transfer |b,n+1> -> |c,n> by adiabatic passage"},
        {"memory-decoherence", "collective dark-state fidelity under random spin flips"},
        {"adiabaticity-audit", "adiabaticity margins of a stop-type scenario without running it"},
    };
    return kinds;
}

namespace {

template <class F>
auto with_params(const ScenarioFile& f, F&& body) {
    Params p(f.params, "params");
    return body(p);
}

StopConfig stop_like(Params& p, const StopDefaults& d) {
    auto cfg = read_stop(p, d);
    p.finish();
    return cfg;
}

}  // namespace

void validate_params(const ScenarioFile& f) {
    with_params(f, [&](Params& p) {
        if (f.kind == "stop" || f.kind == "adiabaticity-audit") stop_like(p, StopDefaults{});
        else if (f.kind == "sudden-switch") stop_like(p, sudden_defaults());
        else if (f.kind == "roadblock") read_road(p);
        else if (f.kind == "spectrum") read_spectrum(p);
        else if (f.kind == "cavity-stirap") read_cavity(p);
        else if (f.kind == "memory-decoherence") read_memory(p);
        else throw ValidationError("kind: unknown scenario kind '" + f.kind + "'");
        return 0;
    });
}

ScenarioOutput execute(const ScenarioFile& f) {
    return with_params(f, [&](Params& p) -> ScenarioOutput {
        if (f.kind == "stop") return run_stop(stop_like(p, StopDefaults{}));
        if (f.kind == "adiabaticity-audit") return run_audit(stop_like(p, StopDefaults{}));
        if (f.kind == "sudden-switch") return run_sudden(stop_like(p, sudden_defaults()));
        if (f.kind == "roadblock") return run_road(read_road(p));
        if (f.kind == "spectrum") return run_spectrum(read_spectrum(p));
        if (f.kind == "cavity-stirap") return run_cavity(read_cavity(p));
        if (f.kind == "memory-decoherence") return run_memory(read_memory(p), f.seed);
        throw ValidationError("kind: unknown scenario kind '" + f.kind + "'");
    });
}

}  // namespace eitmem
