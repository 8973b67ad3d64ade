#include "jsd/divergence.hpp"

#include <array>
#include <cmath>

namespace jsd {

namespace {

struct KindRow {
    DivergenceKind kind;
    const char* name;
    bool symmetric;
    bool bounded;
};

// KL and its reverse: asymmetric, unbounded. Jeffreys: symmetric, unbounded.
// K, K': asymmetric but bounded (midpoint dominates the first argument).
// JS (equal weights) and GJS: symmetric, bounded.
constexpr std::array<KindRow, 7> kKindTable{{
    {DivergenceKind::KL, "KL", false, false},
    {DivergenceKind::KLReverse, "KL-reverse", false, false},
    {DivergenceKind::Jeffreys, "Jeffreys", true, false},
    {DivergenceKind::K, "K", false, true},
    {DivergenceKind::KPrime, "K-prime", false, true},
    {DivergenceKind::JS, "JS", true, true},
    {DivergenceKind::GJS, "GJS", true, true},
}};

const KindRow& row(DivergenceKind kind) {
    for (const auto& r : kKindTable)
        if (r.kind == kind) return r;
    throw ValidationError("unknown divergence kind");
}

ProbVec midpoint(const ProbVec& p, const ProbVec& q) {
    if (p.size() != q.size()) throw ValidationError("divergence dimension mismatch");
    std::vector<double> m(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) m[k] = 0.5 * (p[k] + q[k]);
    return ProbVec(std::move(m));
}

}  // namespace

bool divergence_symmetric(DivergenceKind kind) { return row(kind).symmetric; }
bool divergence_bounded(DivergenceKind kind) { return row(kind).bounded; }

const std::string& divergence_name(DivergenceKind kind) {
    static const std::array<std::string, 7> names = [] {
        std::array<std::string, 7> n;
        for (std::size_t i = 0; i < kKindTable.size(); ++i) n[i] = kKindTable[i].name;
        return n;
    }();
    return names[static_cast<std::size_t>(row(kind).kind)];
}

DivergenceKind divergence_from_name(const std::string& name) {
    for (const auto& r : kKindTable)
        if (name == r.name) return r.kind;
    throw ValidationError("unknown divergence name: " + name);
}

double js_div(const WeightVec& w, const ProbVec& p1, const ProbVec& p2) {
    if (w.size() != 2) throw ValidationError("js_div needs exactly 2 weights");
    return gjs_div(w, {p1, p2});
}

double js_div_kl_form(const WeightVec& w, const ProbVec& p1, const ProbVec& p2) {
    if (w.size() != 2) throw ValidationError("js_div needs exactly 2 weights");
    return gjs_div_kl_form(w, {p1, p2});
}

double gjs_div(const WeightVec& w, const std::vector<ProbVec>& ps) {
    const ProbVec m = mixture(w, ps);
    double acc = entropy(m);
    for (std::size_t i = 0; i < ps.size(); ++i) acc -= w[i] * entropy(ps[i]);
    return std::max(acc, 0.0);
}

double gjs_div_kl_form(const WeightVec& w, const std::vector<ProbVec>& ps) {
    const ProbVec m = mixture(w, ps);
    double acc = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) acc += w[i] * kl_div(ps[i], m);
    return acc;
}

double k_div(const ProbVec& p, const ProbVec& q) { return kl_div(p, midpoint(p, q)); }

double k_prime_div(const ProbVec& p, const ProbVec& q) { return kl_div(q, midpoint(p, q)); }

double jeffreys_div(const ProbVec& p, const ProbVec& q) {
    return 0.5 * (kl_div(p, q) + kl_div(q, p));
}

double pairwise_divergence(DivergenceKind kind, const ProbVec& p, const ProbVec& q) {
    switch (kind) {
        case DivergenceKind::KL: return kl_div(p, q);
        case DivergenceKind::KLReverse: return kl_div(q, p);
        case DivergenceKind::Jeffreys: return jeffreys_div(p, q);
        case DivergenceKind::K: return k_div(p, q);
        case DivergenceKind::KPrime: return k_prime_div(p, q);
        case DivergenceKind::JS:
            return js_div(WeightVec({0.5, 0.5}), p, q);
        case DivergenceKind::GJS:
            throw ValidationError("GJS is not a pairwise divergence");
    }
    throw ValidationError("unknown divergence kind");
}

double js_fgen(double pi1, double t) {
    if (!(pi1 > 0.0 && pi1 < 1.0)) throw ValidationError("js_fgen: pi1 must lie in (0,1)");
    if (t < 0.0) throw ValidationError("js_fgen: t must be non-negative");
    auto h = [](double x) { return x > 0.0 ? -x * std::log(x) : 0.0; };
    // f(0) is the limit value h(1-pi1); h(t) -> 0 covers it with the same code.
    return h(pi1 * t + 1.0 - pi1) - pi1 * h(t);
}

GjsDecomposition decompose_gjs(const WeightVec& w, const ProbVec& label,
                               const std::vector<ProbVec>& preds) {
    const std::size_t m_count = w.size();
    if (m_count < 3) throw ValidationError("decompose_gjs requires M >= 3");
    if (preds.size() != m_count - 1)
        throw ValidationError("decompose_gjs: need M-1 predictions");

    // The identity is only stated for one-hot labels; soft labels are rejected.
    std::size_t ones = 0;
    for (std::size_t k = 0; k < label.size(); ++k) {
        if (std::abs(label[k] - 1.0) <= kProbSumTol)
            ++ones;
        else if (label[k] > kProbSumTol)
            throw ValidationError("decompose_gjs: label must be one-hot");
    }
    if (ones != 1) throw ValidationError("decompose_gjs: label must be one-hot");

    const double pi1 = w[0];
    const double rest = 1.0 - pi1;

    std::vector<double> tail_w(m_count - 1);
    for (std::size_t j = 1; j < m_count; ++j) tail_w[j - 1] = w[j] / rest;
    const WeightVec w_tail(std::move(tail_w));

    const ProbVec m_gt1 = mixture(w_tail, preds);
    const double js_term = js_div(WeightVec({pi1, rest}), label, m_gt1);
    const double consistency = rest * gjs_div(w_tail, preds);
    return {js_term, consistency};
}

}  // namespace jsd
