#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "jsd/data.hpp"
#include "jsd/loss.hpp"

namespace jsd {

// Hard ceiling on exhaustive searches; beyond it operations error instead of
// silently sampling.
inline constexpr std::size_t kEnumerationCap = 10'000'000;

// All lattice points of the simplex with denominator `resolution`
// (compositions of resolution into k parts).
std::vector<ProbVec> simplex_grid(std::size_t k, std::size_t resolution);

// B_L = sum_k L(e_k, u,..,u) and B_U = sum_k L(e_k, e_1,..,e_{M-1}): the range
// endpoints of the per-input class sum. Requires M <= K+1 so distinct one-hot
// predictions exist.
std::pair<double, double> bound_constants(const LossSpec& spec, std::size_t k);

// Closed forms for the JS constants, kept separate from the sums they must
// reproduce:
//   B_L = K [h(pi1 + pi2/K) + (K-1)(1/K) h(pi2) - pi2 h(1/K)] / Z
//   B_U = (K-1) [1 + h(pi1)/h(pi2)]      with h(x) = -x ln x.
std::pair<double, double> js_bound_closed_form(double pi1, std::size_t k);

// B_U recomputed through the decomposition: B_U Z = sum_k D_JS'(e_k, mbar)
// + (1-pi1) K H(pi'') with mbar the mean of the M-1 distinct one-hots.
double bu_from_decomposition(double pi1, std::size_t k, std::size_t m);

struct BoundReport {
    double b_lower = 0.0;
    double b_upper = 0.0;
    double observed_min = 0.0;
    double observed_max = 0.0;
    double worst_violation = 0.0;  // how far outside [b_lower, b_upper]
    std::vector<ProbVec> argmin_point;
    std::vector<ProbVec> argmax_point;
};

// Evaluates the class sum over a full simplex grid (all prediction-slot
// tuples) plus `samples` random draws, through an evaluator independent of
// the loss module. grid_resolution 0 skips the grid.
BoundReport bound_search(const LossSpec& spec, std::size_t k, std::size_t samples,
                         std::size_t grid_resolution, std::uint64_t seed = 0);

// (M, B_U - B_L) per requested M; the gap widens with M.
std::vector<std::pair<int, double>> bound_gap_vs_M(double pi1, std::size_t k,
                                                   const std::vector<int>& m_values);

// A finite classification task small enough for exact enumeration: inputs
// are abstract indices, the hypothesis class is every assignment of grid
// points to inputs.
struct RiskInstance {
    std::size_t num_inputs = 2;
    std::size_t k = 2;
    std::vector<std::size_t> clean_labels;  // one per input
    NoiseSpec noise;                        // SymmetricExclusive semantics
    std::size_t grid_resolution = 10;
};

void validate(const RiskInstance& inst);

struct RiskGaps {
    double noisy_gap = 0.0;    // R^eta(f*) - R^eta(f*_eta), in [0, noisy_bound]
    double noisy_bound = 0.0;  // eta (B_U - B_L) / (K-1)
    double clean_gap = 0.0;    // R(f*) - R(f*_eta), in [-clean_bound, 0]
    double clean_bound = 0.0;  // eta (B_U - B_L) / (K-1-eta K)
};

// Exact risks by expectation over the exclusive-uniform noise matrix,
// minimizers by exhaustive argmin. CE has no finite B_U; it is refused unless
// allow_clamped_ce, which uses the bounds induced by the probability clamp.
RiskGaps risk_bound_enumeration(const RiskInstance& inst, const LossSpec& spec,
                                bool allow_clamped_ce = false);

struct AsymCheck {
    double c1 = 0.0;  // H(pi), the divergence ceiling
    double c2 = 0.0;  // H(pi1) + H(1-pi1), the full-overlap off-label value
    double max_violation = 0.0;
};

// Checks the lemma conditions on the unnormalized divergence: zero iff all
// distributions equal the label one-hot, range [0, C1], and the off-label
// full-overlap value C2.
AsymCheck asym_condition_check(const LossSpec& spec, std::size_t k,
                               std::size_t trials = 100000, std::uint64_t seed = 1);

enum class LimitKind { CELimit, MAELimit, GjsMAELimit };

struct LimitRow {
    double pi1 = 0.0;
    double max_deviation = 0.0;  // relative for CELimit, absolute otherwise
};

// Max deviation from the limiting loss per ladder rung, over `trials` random
// (y, p) with min_k p_k >= 0.1. Draws are shared across rungs so the rows are
// comparable point by point.
std::vector<LimitRow> limit_convergence_probe(LimitKind kind,
                                              const std::vector<double>& ladder,
                                              std::size_t trials,
                                              std::uint64_t seed = 2);

// Central differences per logit coordinate; h in [1e-8, 1e-3].
std::vector<std::vector<double>> finite_diff_grad(
    const std::function<double(const std::vector<LogitVec>&)>& f,
    const std::vector<LogitVec>& zs, double h = 1e-5);

struct ClaimResult {
    std::string name;
    bool passed = false;
    double worst = 0.0;      // the measured quantity the threshold applies to
    double threshold = 0.0;
    std::string detail;
};

struct SuiteOptions {
    std::uint64_t seed = 20260822;
    bool fast = false;       // trimmed sample counts for smoke runs
    double z_fault = 1.0;    // fault injection: scales Z in the reference claim
};

// Every analytic claim as a named pass/fail check.
std::vector<ClaimResult> run_verification_suite(const SuiteOptions& opts);

std::string claims_to_json(const std::vector<ClaimResult>& claims);

}  // namespace jsd
