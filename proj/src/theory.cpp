#include "icut/theory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "icut/core.hpp"
#include "icut/rng.hpp"

namespace icut::theory {

namespace {

void check_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(std::string(name) + " must lie in [0, 1]");
}

}  // namespace

ErrorRates subset_error_rates(double alpha_noisy, double gamma_noisy, double lambda0, double lambda1) {
    check_unit(alpha_noisy, "alpha");
    check_unit(gamma_noisy, "gamma");
    check_unit(lambda0, "lambda0");
    check_unit(lambda1, "lambda1");
    const double a_num = alpha_noisy * (1.0 - lambda0);
    const double a_den = a_num + (1.0 - alpha_noisy) * lambda1;
    const double g_num = gamma_noisy * (1.0 - lambda1);
    const double g_den = g_num + (1.0 - gamma_noisy) * lambda0;
    if (a_den == 0.0 || g_den == 0.0) throw Error("degenerate channel");
    return {a_num / a_den, g_num / g_den};
}

CorollaryCheck check_corollary(double alpha, double gamma, double lambda0, double lambda1) {
    CorollaryCheck out;
    out.precondition_met = lambda0 + lambda1 >= 1.0;
    try {
        out.subset = subset_error_rates(alpha, gamma, lambda0, lambda1);
    } catch (const Error&) {
        out.subset = {std::nan(""), std::nan("")};
        return out;
    }
    out.alpha_margin = alpha - out.subset.alpha;
    out.gamma_margin = gamma - out.subset.gamma;
    // Equality case lambda0 + lambda1 = 1 may land a rounding step below zero.
    constexpr double slack = 1e-12;
    out.holds = out.alpha_margin >= -slack && out.gamma_margin >= -slack;
    return out;
}

double bound_proxy(double m, double nonabstain_rate, double min_class_rate, double alpha_s, double gamma_s,
                   double vc, double delta) {
    if (!(alpha_s >= 0.0 && gamma_s >= 0.0) || alpha_s + gamma_s >= 1.0)
        throw Error("bound proxy: requires alpha_S + gamma_S < 1");
    if (!(nonabstain_rate > 0.0 && nonabstain_rate <= 1.0) || !(min_class_rate > 0.0 && min_class_rate <= 1.0))
        throw Error("bound proxy: rates must lie in (0, 1]");
    if (!(m > 0.0) || !(vc >= 0.0) || !(delta > 0.0 && delta < 1.0))
        throw Error("bound proxy: requires m > 0, vc >= 0, 0 < delta < 1");
    return (1.0 / (1.0 - alpha_s - gamma_s)) *
           std::sqrt((vc + std::log(1.0 / delta)) / (m * nonabstain_rate * min_class_rate));
}

BallVolume unit_ball_log_volume(int d) {
    if (d < 1) throw Error("unit ball volume: d must be at least 1");
    const double half = 0.5 * d;
    BallVolume out;
    out.log_volume = half * std::log(std::numbers::pi) - std::lgamma(half + 1.0);
    const double v = std::exp(out.log_volume);
    if (std::isnormal(v)) out.volume = v;
    return out;
}

std::string_view to_string(WindowMode m) {
    switch (m) {
        case WindowMode::plain: return "plain";
        case WindowMode::orthogonal: return "orthogonal";
        case WindowMode::permutation: return "permutation";
    }
    return "?";
}

WindowMode parse_window_mode(std::string_view s) {
    for (auto m : {WindowMode::plain, WindowMode::orthogonal, WindowMode::permutation})
        if (to_string(m) == s) return m;
    throw Error("unknown window mode '" + std::string(s) + "'");
}

void WindowParams::validate() const {
    if (!(n > 0.0)) throw Error("window: n must be positive");
    if (!(nu > 0.0 && nu < 1.0)) throw Error("window: nu must lie in (0, 1)");
    if (!(rho > 0.0 && rho <= 1.0)) throw Error("window: rho must lie in (0, 1]");
    if (!(delta > 0.0) || !(omega > 0.0) || !(p0 > 0.0) || !(kl1 > 0.0) || !(beta > 0.0))
        throw Error("window: delta, omega, p0, Kl1 and beta must be positive");
}

FeasibilityReport feasibility_window(const WindowParams& params, std::span<const int> d_range) {
    params.validate();
    if (d_range.empty()) throw Error("window: empty dimension range");
    const double log_conf = 2.0 * std::log(std::log(1.0 / params.nu));
    auto log_lower = [&](int d) {
        return std::log(params.kl1) + std::log(static_cast<double>(d)) + log_conf +
               params.rho / (params.rho + d) * std::log(params.n);
    };
    auto log_upper = [&](int d) {
        return std::log(params.omega) + unit_ball_log_volume(d).log_volume + std::log(params.p0) +
               d * std::log(params.delta) + std::log(params.n);
    };

    FeasibilityReport report;
    report.mode = params.mode;
    for (int d : d_range) {
        if (d < 1) throw Error("window: dimensions must be at least 1");
        WindowRow row;
        row.d = d;
        switch (params.mode) {
            case WindowMode::plain:
                row.log_lower = log_lower(d);
                row.log_upper = log_upper(d);
                break;
            case WindowMode::orthogonal:
                // The norm maps every input to R, so the d = 1 window applies.
                row.log_lower = log_lower(1);
                row.log_upper = log_upper(1);
                break;
            case WindowMode::permutation:
                row.log_lower = log_lower(d);
                row.log_upper = log_upper(d) + std::lgamma(d + 1.0);
                break;
        }
        row.feasible = row.log_lower <= row.log_upper;
        if (!row.feasible && (!report.threshold || d < *report.threshold)) report.threshold = d;
        report.rows.push_back(row);
    }
    return report;
}

bool Prop1Report::within(double sigmas) const {
    return abs_deviation.alpha <= sigmas * sigma.alpha && abs_deviation.gamma <= sigmas * sigma.gamma;
}

Prop1Report validate_prop1_monte_carlo(double alpha, double gamma, double lambda0, double lambda1,
                                       std::size_t trials, std::uint64_t seed) {
    if (trials < 10000) throw Error("prop1 monte carlo: at least 1e4 trials");
    if (!(alpha >= 0.0 && alpha < 0.5) || !(gamma >= 0.0 && gamma < 0.5))
        throw Error("prop1 monte carlo: alpha and gamma must lie in [0, 1/2) under balanced priors");
    Prop1Report report;
    report.predicted = subset_error_rates(alpha, gamma, lambda0, lambda1);

    // Noisy channel implied by alpha, gamma and P(y = 1) = 1/2.
    const double q1 = (0.5 - gamma) / (1.0 - alpha - gamma);  // P(yhat = 1)
    const double flip0 = 2.0 * alpha * q1;                    // P(yhat = 1 | y = 0)
    const double flip1 = 2.0 * gamma * (1.0 - q1);            // P(yhat = 0 | y = 1)

    constexpr std::size_t chunk = 1 << 16;
    const std::size_t chunks = (trials + chunk - 1) / chunk;
    std::size_t a_cell = 0, a_bad = 0, g_cell = 0, g_bad = 0;
    const auto nchunks = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static) reduction(+ : a_cell, a_bad, g_cell, g_bad)
    for (std::ptrdiff_t c = 0; c < nchunks; ++c) {
        auto rng = make_stream(seed, StreamTag::monte_carlo, static_cast<std::uint64_t>(c));
        const std::size_t begin = static_cast<std::size_t>(c) * chunk;
        const std::size_t end = std::min(trials, begin + chunk);
        for (std::size_t t = begin; t < end; ++t) {
            const int y = uniform01(rng) < 0.5 ? 0 : 1;
            const int yhat = y == 0 ? (uniform01(rng) < flip0 ? 1 : 0) : (uniform01(rng) < flip1 ? 0 : 1);
            const int knn = y == 0 ? (uniform01(rng) < lambda0 ? 0 : 1) : (uniform01(rng) < lambda1 ? 1 : 0);
            if (yhat == 1 && knn == 1) {
                ++a_cell;
                a_bad += y == 0;
            } else if (yhat == 0 && knn == 0) {
                ++g_cell;
                g_bad += y == 1;
            }
        }
    }
    if (a_cell == 0 || g_cell == 0) throw Error("insufficient trials");
    report.cell_alpha = a_cell;
    report.cell_gamma = g_cell;
    report.empirical = {static_cast<double>(a_bad) / static_cast<double>(a_cell),
                        static_cast<double>(g_bad) / static_cast<double>(g_cell)};
    const auto& p = report.predicted;
    report.sigma = {std::sqrt(p.alpha * (1.0 - p.alpha) / static_cast<double>(a_cell)),
                    std::sqrt(p.gamma * (1.0 - p.gamma) / static_cast<double>(g_cell))};
    report.abs_deviation = {std::abs(report.empirical.alpha - p.alpha), std::abs(report.empirical.gamma - p.gamma)};
    return report;
}

SortedDensityReport check_sorted_density(int d, std::size_t trials, int bins, std::uint64_t seed) {
    if (d < 1 || d > 3) throw Error("sorted density: d must be 1, 2 or 3");
    if (bins < 1) throw Error("sorted density: bins must be positive");
    const double factor = std::tgamma(d + 1.0);
    std::size_t cells = 1;
    for (int i = 0; i < d; ++i) cells *= static_cast<std::size_t>(bins);
    const double p_cell = factor / static_cast<double>(cells);
    const double expected = static_cast<double>(trials) * p_cell;
    if (expected < 25.0) throw Error("sorted density: bins too fine for trials");

    constexpr std::size_t chunk = 1 << 15;
    const std::size_t chunks = (trials + chunk - 1) / chunk;
    std::vector<std::size_t> counts(cells, 0);
#pragma omp parallel
    {
        std::vector<std::size_t> local(cells, 0);
        double x[3];
#pragma omp for schedule(static)
        for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
            auto rng = make_stream(seed, StreamTag::monte_carlo, static_cast<std::uint64_t>(c));
            const std::size_t begin = static_cast<std::size_t>(c) * chunk;
            const std::size_t end = std::min(trials, begin + chunk);
            for (std::size_t t = begin; t < end; ++t) {
                for (int i = 0; i < d; ++i) x[i] = uniform01(rng);
                std::sort(x, x + d);
                std::size_t cell = 0;
                for (int i = 0; i < d; ++i)
                    cell = cell * static_cast<std::size_t>(bins) +
                           std::min(static_cast<std::size_t>(x[i] * bins), static_cast<std::size_t>(bins - 1));
                ++local[cell];
            }
        }
#pragma omp critical
        for (std::size_t i = 0; i < cells; ++i) counts[i] += local[i];
    }

    SortedDensityReport report;
    report.d = d;
    report.factor = factor;
    report.pass = true;
    const double sigma = std::sqrt(expected * (1.0 - p_cell));
    for (std::size_t cell = 0; cell < cells; ++cell) {
        std::vector<int> idx(static_cast<std::size_t>(d));
        std::size_t rest = cell;
        for (int i = d - 1; i >= 0; --i) {
            idx[static_cast<std::size_t>(i)] = static_cast<int>(rest % static_cast<std::size_t>(bins));
            rest /= static_cast<std::size_t>(bins);
        }
        // Only cells strictly inside y1 < y2 < ... < yd carry the full d! density.
        if (std::ranges::adjacent_find(idx, std::greater_equal<int>{}) != idx.end()) continue;
        DensityBin bin;
        bin.cell = idx;
        bin.expected = expected;
        bin.observed = static_cast<double>(counts[cell]);
        bin.z = sigma > 0.0 ? (bin.observed - expected) / sigma : 0.0;
        bin.pass = std::abs(bin.z) <= 4.0;
        report.pass = report.pass && bin.pass;
        report.bins.push_back(std::move(bin));
    }
    if (report.bins.empty()) throw Error("sorted density: no cell lies inside the ordered region");
    return report;
}

}  // namespace icut::theory
