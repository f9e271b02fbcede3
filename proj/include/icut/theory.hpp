#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace icut::theory {

struct ErrorRates {
    double alpha = 0.0;
    double gamma = 0.0;
};

/// Error rates of the subset retained by a k-NN agreement filter with
/// class-wise accuracies lambda0, lambda1, under balanced true priors.
ErrorRates subset_error_rates(double alpha_noisy, double gamma_noisy, double lambda0, double lambda1);

struct CorollaryCheck {
    bool precondition_met = false;  // lambda0 + lambda1 >= 1
    ErrorRates subset;
    double alpha_margin = 0.0;      // alpha_noisy - alpha_S
    double gamma_margin = 0.0;
    bool holds = false;             // both margins >= 0
};

CorollaryCheck check_corollary(double alpha, double gamma, double lambda0, double lambda1);

/// Structural factor of the subset generalisation bound:
/// 1/(1 - a - g) * sqrt((vc + ln(1/delta)) / (m * nonabstain * min_class)).
/// Comparative only; constants and log factors are dropped.
double bound_proxy(double m, double nonabstain_rate, double min_class_rate, double alpha_s,
                   double gamma_s, double vc, double delta);

struct BallVolume {
    double log_volume = 0.0;
    std::optional<double> volume;  // absent when exp(log_volume) is not a normal double
};

/// Volume of the unit ball in R^d via log-gamma.
BallVolume unit_ball_log_volume(int d);

enum class WindowMode { plain, orthogonal, permutation };
std::string_view to_string(WindowMode m);
WindowMode parse_window_mode(std::string_view s);

struct WindowParams {
    double n = 1e6;
    double nu = 0.05;
    double rho = 1.0;
    double delta = 0.1;
    double omega = 1.0;
    double p0 = 1.0;
    double kl1 = 1.0;
    double beta = 1.0;  // Tsybakov exponent; carried for reporting only
    WindowMode mode = WindowMode::plain;

    void validate() const;
};

struct WindowRow {
    int d = 0;
    double log_lower = 0.0;
    double log_upper = 0.0;
    bool feasible = false;
};

struct FeasibilityReport {
    WindowMode mode = WindowMode::plain;
    std::vector<WindowRow> rows;
    std::optional<int> threshold;  // smallest infeasible d in the range
};

/// L(d) = Kl1 d ln^2(1/nu) n^(rho/(rho+d)); U(d) = omega V_d p0 Delta^d n.
/// Orthogonal mode freezes both at d = 1; permutation mode multiplies U by d!.
FeasibilityReport feasibility_window(const WindowParams& params, std::span<const int> d_range);

struct Prop1Report {
    ErrorRates predicted;
    ErrorRates empirical;
    ErrorRates sigma;           // binomial standard error in each conditioning cell
    ErrorRates abs_deviation;
    std::size_t cell_alpha = 0; // samples with yhat = 1, knn = 1
    std::size_t cell_gamma = 0; // samples with yhat = 0, knn = 0

    bool within(double sigmas) const;
};

/// Simulates y ~ Bernoulli(1/2) and two channels yhat, y_knn that are
/// conditionally independent given y, then compares the retained cells'
/// error rates with subset_error_rates. Requires alpha, gamma < 1/2 so the
/// noisy channel is realisable under balanced priors.
Prop1Report validate_prop1_monte_carlo(double alpha, double gamma, double lambda0, double lambda1,
                                       std::size_t trials, std::uint64_t seed);

struct DensityBin {
    std::vector<int> cell;
    double expected = 0.0;
    double observed = 0.0;
    double z = 0.0;
    bool pass = false;
};

struct SortedDensityReport {
    int d = 0;
    double factor = 0.0;  // d!
    std::vector<DensityBin> bins;
    bool pass = false;
};

/// Sorts uniform points on [0,1]^d and checks the histogram over cells
/// strictly inside the ordered region against d! times the uniform density
/// (4 sigma per cell).
SortedDensityReport check_sorted_density(int d, std::size_t trials, int bins, std::uint64_t seed);

}  // namespace icut::theory
