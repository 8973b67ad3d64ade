#include "jsd/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "jsd/rng.hpp"

namespace jsd {

std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index) {
    // FNV-1a over the label, then two SplitMix64 rounds to decorrelate streams.
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : label) {
        h ^= c;
        h *= 1099511628211ull;
    }
    auto mix = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    };
    return mix(mix(master ^ h) ^ index);
}

ProbVec::ProbVec(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2)
        throw ValidationError("ProbVec needs at least 2 entries");
    double sum = 0.0;
    for (double v : values_) {
        if (!std::isfinite(v) || v < 0.0)
            throw ValidationError("ProbVec entries must be finite and non-negative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kProbRenormTol)
        throw ValidationError("ProbVec entries must sum to 1");
    for (double& v : values_) v /= sum;
}

ProbVec ProbVec::uniform(std::size_t k) {
    return ProbVec(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

ProbVec ProbVec::one_hot(std::size_t k, std::size_t index) {
    if (index >= k) throw InvalidLabel("one_hot index out of range");
    std::vector<double> v(k, 0.0);
    v[index] = 1.0;
    return ProbVec(std::move(v));
}

LogitVec::LogitVec(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2)
        throw ValidationError("LogitVec needs at least 2 entries");
    for (double v : values_)
        if (!std::isfinite(v)) throw ValidationError("LogitVec entries must be finite");
}

WeightVec::WeightVec(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2)
        throw ValidationError("WeightVec needs at least 2 entries");
    double sum = 0.0;
    for (double v : values_) {
        if (!std::isfinite(v) || v <= 0.0)
            throw ValidationError("WeightVec entries must be strictly positive");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kWeightSumTol)
        throw ValidationError("WeightVec entries must sum to 1");
    for (double& v : values_) v /= sum;
}

double entropy(const ProbVec& p) {
    double acc = 0.0;
    for (double v : p)
        if (v > 0.0) acc -= v * std::log(v);
    return std::max(acc, 0.0);
}

double kl_div(const ProbVec& p, const ProbVec& q) {
    if (p.size() != q.size()) throw ValidationError("kl_div dimension mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] > 0.0) {
            if (q[k] <= 0.0)
                throw AbsoluteContinuityViolation("kl_div: q has a zero where p is positive");
            acc += p[k] * std::log(p[k] / q[k]);
        }
    }
    return acc;
}

ProbVec mixture(const WeightVec& w, const std::vector<ProbVec>& ps) {
    if (ps.size() != w.size()) throw ValidationError("mixture: weight count != distribution count");
    const std::size_t k = ps.front().size();
    for (const auto& p : ps)
        if (p.size() != k) throw ValidationError("mixture: distributions differ in dimension");
    std::vector<double> m(k, 0.0);
    for (std::size_t i = 0; i < ps.size(); ++i)
        for (std::size_t j = 0; j < k; ++j) m[j] += w[i] * ps[i][j];
    return ProbVec(std::move(m));
}

ProbVec softmax(const LogitVec& z) {
    const double zmax = *std::max_element(z.values().begin(), z.values().end());
    std::vector<double> e(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        e[i] = std::exp(z[i] - zmax);
        sum += e[i];
    }
    for (double& v : e) v /= sum;
    return ProbVec(std::move(e));
}

double softmax_jacobian_entry(const ProbVec& p, std::size_t j, std::size_t i) {
    if (j >= p.size() || i >= p.size())
        throw ValidationError("softmax_jacobian_entry index out of range");
    return p[j] * ((i == j ? 1.0 : 0.0) - p[i]);
}

ProbVec clamp_project(const std::vector<double>& raw) {
    if (raw.size() < 2) throw ValidationError("clamp_project needs at least 2 entries");
    bool any_positive = false;
    for (double v : raw) {
        if (!std::isfinite(v)) throw ValidationError("clamp_project: non-finite entry");
        if (v > 0.0) any_positive = true;
    }
    if (!any_positive) throw ValidationError("clamp_project: no positive entry");
    std::vector<double> out(raw.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = std::clamp(raw[i], kProbEpsilon, 1.0);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return ProbVec(std::move(out));
}

}  // namespace jsd
