#pragma once

#include <cstddef>
#include <vector>

#include "jsd/errors.hpp"

namespace jsd {

inline constexpr double kProbEpsilon = 1e-12;   // floor applied before any log
inline constexpr double kProbSumTol = 1e-9;     // post-construction sum tolerance
inline constexpr double kProbRenormTol = 1e-6;  // constructors renormalize within this
inline constexpr double kWeightSumTol = 1e-12;

// A point on the probability simplex: K non-negative entries summing to 1.
// Construction renormalizes when the raw sum is within kProbRenormTol of 1
// and rejects otherwise.
class ProbVec {
public:
    explicit ProbVec(std::vector<double> values);

    static ProbVec uniform(std::size_t k);
    static ProbVec one_hot(std::size_t k, std::size_t index);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const noexcept { return values_; }

    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

private:
    std::vector<double> values_;
};

// Pre-softmax scores; entries must be finite.
class LogitVec {
public:
    explicit LogitVec(std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::vector<double> values_;
};

// Mixture weights: M strictly positive entries summing to 1 (tight tolerance).
class WeightVec {
public:
    explicit WeightVec(std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::vector<double> values_;
};

// Shannon entropy -sum p ln p with the 0 ln 0 = 0 convention. Natural log.
double entropy(const ProbVec& p);

// sum p ln(p/q); requires q_k = 0 => p_k = 0.
double kl_div(const ProbVec& p, const ProbVec& q);

ProbVec mixture(const WeightVec& w, const std::vector<ProbVec>& ps);

// Shift-invariant softmax (max subtracted before exponentiation).
ProbVec softmax(const LogitVec& z);

// dp_j/dz_i = p_j(1(i=j) - p_i) for p = softmax(z).
double softmax_jacobian_entry(const ProbVec& p, std::size_t j, std::size_t i);

// Clamps entries to [kProbEpsilon, 1] and renormalizes; rejects inputs with
// no positive entry.
ProbVec clamp_project(const std::vector<double>& raw);

}  // namespace jsd
