#pragma once

#include "stokes_robin/sensitivity.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stokes_robin {

/// ||q1 - q2||_inf / ||T(q1) - T(q2)|| for one pair.
struct LipschitzRatio {
    double parameter_distance = 0.0;
    double trace_distance = 0.0;
    double ratio = 0.0;  ///< +inf when the traces coincide
    /// Distinct coefficients with identical traces: a discrete
    /// identifiability failure, reported rather than thrown.
    bool identifiability_violation = false;
};

/// Throws InputError when q1 and q2 coincide (distance <= 1e-14).
LipschitzRatio lipschitz_ratio(const Discretization& disc, const PreparedData& data, const RobinCoefficient& q1,
                               const RobinCoefficient& q2);

enum class PairKind { uniform, small_perturbation, basis_direction, singular_local, singular_global };
std::string to_string(PairKind kind);

struct PairRecord {
    int index = 0;
    PairKind kind = PairKind::uniform;
    Eigen::VectorXd q1;
    Eigen::VectorXd q2;
    LipschitzRatio ratio;
    /// First-order prediction ||q2 - q1||_inf / ||dT_{q1}(q2 - q1)||; small-perturbation pairs only.
    std::optional<double> predicted_ratio;
};

struct StabilityOptions {
    double small_fraction = 0.25;  ///< every 1/small_fraction-th sampled pair is a small perturbation
    double small_scale = 1e-4;     ///< perturbation size relative to upper - lower
    int jacobian_samples = 3;      ///< sampled q (besides the box center) with a logged smallest singular value
    int threads = 1;
};

/// Sampled and deterministic "hard" pairs with the empirical constant
/// C_emp = max ratio. C_emp is a lower bound for the constant of the
/// continuous estimate: it comes from finitely many pairs on one discretization.
struct StabilityReport {
    std::uint64_t seed = 0;
    int n_pairs = 0;
    std::vector<PairRecord> pairs;  ///< sampled pairs first (index order), then the hard pairs
    double c_emp = 0.0;             ///< over all pairs
    double c_emp_sampled = 0.0;     ///< over sampled pairs only
    double singular_pair_ratio = 0.0;  ///< best of the two singular-vector pairs
    double min_trace_distance = 0.0;
    /// (n, C_emp over the first n sampled pairs together with the hard pairs), n = 1, 2, 4, ..., n_pairs.
    std::vector<std::pair<int, double>> growth;
    std::vector<std::pair<int, double>> growth_sampled;  ///< same without the hard pairs
    std::vector<double> jacobian_min_singular;  ///< box center first
    double max_prediction_deviation = 0.0;  ///< max |ratio / predicted - 1| over small-perturbation pairs
    int identifiability_violations = 0;
    double data_bound = 0.0;  ///< M1 = ||u0|| + ||g||

    /// C_emp over the first n sampled pairs plus the hard pairs.
    double c_emp_at(int n) const;
};

StabilityReport estimate_constant(const Discretization& disc, const PreparedData& data, const AdmissibleSet& K,
                                  int n_pairs, std::uint64_t seed, const StabilityOptions& options = {});

struct ScanPair {
    double parameter_distance = 0.0;
    double trace_distance = 0.0;
    double floor = 0.0;  ///< parameter_distance / C_emp * (1 - tolerance)
    bool holds = true;
};

struct IdentifiabilityReport {
    std::uint64_t seed = 0;
    double c_emp = 0.0;
    double tolerance = 0.05;
    std::vector<ScanPair> pairs;  ///< identical pairs are excluded
    int excluded = 0;
    double min_trace_distance = 0.0;
    int violations = 0;
    bool holds() const { return violations == 0; }
};

/// Uniform pairs from the box; the pair list depends only on (basis, K, n_pairs, seed).
IdentifiabilityReport identifiability_scan(const Discretization& disc, const PreparedData& data, const AdmissibleSet& K,
                                           int n_pairs, std::uint64_t seed, double c_emp, double tolerance = 0.05,
                                           int threads = 1);

struct HypothesisOptions {
    std::vector<double> scales{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
    std::uint64_t seed = 0;
    int scan_pairs = 50;
    std::optional<double> c_emp;  ///< probe C_emp with `scan_pairs` pairs when absent
    /// Basis for the Gram check (same layout as the discretization's basis);
    /// defaults to the discretization's basis.
    std::shared_ptr<const RobinBasis> jacobian_basis;
    int threads = 1;
};

struct HypothesisSample {
    Eigen::VectorXd q;
    double taylor_slope = 0.0;
    double difference_slope = 0.0;
    bool taylor_saturated = false;
    double continuity_slope = 0.0;
    bool continuity_monotone = true;
    double gram_min = 0.0;
    double gram_max = 0.0;
    double gram_condition = 0.0;
    bool injective = false;
};

struct HypothesisReport {
    std::vector<HypothesisSample> samples;
    IdentifiabilityReport scan;
    bool injectivity = false;       ///< hypothesis 1: identifiability floor holds
    bool c1_regularity = false;     ///< hypothesis 2: Taylor and continuity slopes in range
    bool derivative_injective = false;  ///< hypothesis 3: Gram matrices nonsingular
    double data_bound = 0.0;        ///< M1
    bool all_pass() const { return injectivity && c1_regularity && derivative_injective; }
};

/// Acceptance windows for the hypothesis 2 slopes.
inline constexpr double kTaylorSlopeMin = 1.8, kTaylorSlopeMax = 2.2;
inline constexpr double kDifferenceSlopeMin = 0.9, kDifferenceSlopeMax = 1.1;
inline constexpr double kContinuitySlopeMin = 0.8, kContinuitySlopeMax = 1.2;

HypothesisReport hypothesis_check(const Discretization& disc, const PreparedData& data, const AdmissibleSet& K,
                                  const std::vector<RobinCoefficient>& samples,
                                  const HypothesisOptions& options = {});

}  // namespace stokes_robin
