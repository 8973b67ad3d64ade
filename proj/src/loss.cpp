#include "jsd/loss.hpp"

#include <array>
#include <cmath>

namespace jsd {

namespace {

constexpr std::array<const char*, 8> kKindNames{"JS",  "GJS", "JS-on-mean", "CE",
                                                "MAE", "GCE", "LS",         "BS"};

bool is_divergence_kind(LossKind kind) {
    return kind == LossKind::JS || kind == LossKind::GJS || kind == LossKind::JSOnMean;
}

void check_label(std::size_t y, std::size_t k) {
    if (y >= k) throw InvalidLabel("label index out of range");
}

ProbVec clamp_probs(const ProbVec& p) { return clamp_project(p.values()); }

// dL/dz_i = p_i (g_i - <p, g>) for g_j = dL/dp_j and p = softmax(z).
LogitVec chain_through_softmax(const ProbVec& p, const std::vector<double>& g) {
    double dot = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) dot += p[j] * g[j];
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] * (g[i] - dot);
    return LogitVec(std::move(out));
}

}  // namespace

void validate(const LossSpec& spec) {
    if (is_divergence_kind(spec.kind)) {
        if (!(spec.pi1 > 0.0 && spec.pi1 < 1.0))
            throw ValidationError("LossSpec: pi1 must lie in (0,1)");
    }
    if (spec.kind == LossKind::GJS && spec.num_dists < 2)
        throw ValidationError("LossSpec: GJS needs M >= 2");
    if (spec.kind == LossKind::JSOnMean && spec.num_dists < 3)
        throw ValidationError("LossSpec: JS-on-mean needs M >= 3");
    if (spec.kind == LossKind::GCE && !(spec.gce_q > 0.0 && spec.gce_q <= 1.0))
        throw ValidationError("LossSpec: GCE exponent q must lie in (0,1]");
    if (spec.kind == LossKind::LS && !(spec.ls_epsilon >= 0.0 && spec.ls_epsilon < 1.0))
        throw ValidationError("LossSpec: LS epsilon must lie in [0,1)");
    if (spec.kind == LossKind::BS && !(spec.bs_beta > 0.0 && spec.bs_beta <= 1.0))
        throw ValidationError("LossSpec: BS beta must lie in (0,1]");
}

const std::string& loss_kind_name(LossKind kind) {
    static const std::array<std::string, 8> names = [] {
        std::array<std::string, 8> n;
        for (std::size_t i = 0; i < kKindNames.size(); ++i) n[i] = kKindNames[i];
        return n;
    }();
    return names[static_cast<std::size_t>(kind)];
}

LossKind loss_kind_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i)
        if (name == kKindNames[i]) return static_cast<LossKind>(i);
    throw ValidationError("unknown loss kind: " + name);
}

std::size_t prediction_count(const LossSpec& spec) {
    if (spec.kind == LossKind::GJS || spec.kind == LossKind::JSOnMean)
        return static_cast<std::size_t>(spec.num_dists) - 1;
    return 1;
}

double z_factor(const LossSpec& spec) {
    if (spec.z_mode == ZMode::Unit || !is_divergence_kind(spec.kind)) return 1.0;
    // log1p keeps full precision for pi1 near 0, where 1 - pi1 rounds.
    return -(1.0 - spec.pi1) * std::log1p(-spec.pi1);
}

WeightVec loss_weights(const LossSpec& spec) {
    const std::size_t m = prediction_count(spec) + 1;
    std::vector<double> w(m);
    w[0] = spec.pi1;
    const double tail = (1.0 - spec.pi1) / static_cast<double>(m - 1);
    for (std::size_t i = 1; i < m; ++i) w[i] = tail;
    return WeightVec(std::move(w));
}

double loss_js(const LossSpec& spec, std::size_t y, const ProbVec& p) {
    if (spec.kind != LossKind::JS) throw ValidationError("loss_js: spec.kind must be JS");
    validate(spec);
    check_label(y, p.size());
    const WeightVec w({spec.pi1, 1.0 - spec.pi1});
    return gjs_div(w, {ProbVec::one_hot(p.size(), y), p}) / z_factor(spec);
}

double loss_gjs(const LossSpec& spec, std::size_t y, const std::vector<ProbVec>& preds) {
    if (spec.kind != LossKind::GJS) throw ValidationError("loss_gjs: spec.kind must be GJS");
    validate(spec);
    if (preds.size() != prediction_count(spec))
        throw ValidationError("loss_gjs: expected M-1 predictions");
    const std::size_t k = preds.front().size();
    check_label(y, k);
    std::vector<ProbVec> ps;
    ps.reserve(preds.size() + 1);
    ps.push_back(ProbVec::one_hot(k, y));
    for (const auto& p : preds) ps.push_back(p);
    return gjs_div(loss_weights(spec), ps) / z_factor(spec);
}

double loss_js_on_mean(const LossSpec& spec, std::size_t y, const std::vector<ProbVec>& preds) {
    if (spec.kind != LossKind::JSOnMean)
        throw ValidationError("loss_js_on_mean: spec.kind must be JS-on-mean");
    validate(spec);
    if (preds.size() != prediction_count(spec))
        throw ValidationError("loss_js_on_mean: expected M-1 predictions");
    const std::size_t k = preds.front().size();
    check_label(y, k);
    const auto parts =
        decompose_gjs(loss_weights(spec), ProbVec::one_hot(k, y), preds);
    return parts.js_term / z_factor(spec);
}

ProbVec ls_target(const LossSpec& spec, std::size_t y, std::size_t k) {
    check_label(y, k);
    const double eps = spec.ls_epsilon;
    std::vector<double> t(k, eps / static_cast<double>(k));
    t[y] += 1.0 - eps;
    return ProbVec(std::move(t));
}

ProbVec bs_target(const LossSpec& spec, std::size_t y, const ProbVec& p) {
    check_label(y, p.size());
    const double beta = spec.bs_beta;
    std::vector<double> t(p.size());
    for (std::size_t j = 0; j < p.size(); ++j)
        t[j] = (1.0 - beta) * p[j] + (j == y ? beta : 0.0);
    return ProbVec(std::move(t));
}

double cross_entropy_against(const ProbVec& target, const ProbVec& p) {
    if (target.size() != p.size())
        throw ValidationError("cross_entropy_against dimension mismatch");
    const ProbVec pc = clamp_probs(p);
    double acc = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j)
        if (target[j] > 0.0) acc -= target[j] * std::log(pc[j]);
    return acc;
}

double loss_baseline(const LossSpec& spec, std::size_t y, const ProbVec& p) {
    validate(spec);
    check_label(y, p.size());
    switch (spec.kind) {
        case LossKind::CE:
            return -std::log(clamp_probs(p)[y]);
        case LossKind::MAE:
            return 1.0 - p[y];
        case LossKind::GCE: {
            const double q = spec.gce_q;
            return (1.0 - std::pow(clamp_probs(p)[y], q)) / q;
        }
        case LossKind::LS:
            return cross_entropy_against(ls_target(spec, y, p.size()), p);
        case LossKind::BS:
            return cross_entropy_against(bs_target(spec, y, p), p);
        default:
            throw ValidationError("loss_baseline: kind is not a baseline loss");
    }
}

double loss_value(const LossSpec& spec, std::size_t y, const std::vector<ProbVec>& preds) {
    if (preds.empty()) throw ValidationError("loss_value: no predictions");
    switch (spec.kind) {
        case LossKind::JS:
            if (preds.size() != 1) throw ValidationError("loss_value: JS takes one prediction");
            return loss_js(spec, y, preds.front());
        case LossKind::GJS:
            return loss_gjs(spec, y, preds);
        case LossKind::JSOnMean:
            return loss_js_on_mean(spec, y, preds);
        default:
            if (preds.size() != 1)
                throw ValidationError("loss_value: baseline losses take one prediction");
            return loss_baseline(spec, y, preds.front());
    }
}

double sum_over_classes(const LossSpec& spec, const std::vector<ProbVec>& preds) {
    if (preds.empty()) throw ValidationError("sum_over_classes: no predictions");
    const std::size_t k = preds.front().size();
    double acc = 0.0;
    for (std::size_t y = 0; y < k; ++y) acc += loss_value(spec, y, preds);
    return acc;
}

LogitVec grad_js_logits(const LossSpec& spec, std::size_t y, const LogitVec& z) {
    if (spec.kind != LossKind::JS) throw ValidationError("grad_js_logits: spec.kind must be JS");
    validate(spec);
    check_label(y, z.size());
    const ProbVec p = clamp_project(softmax(z).values());
    const double pi1 = spec.pi1;
    const double factor =
        (1.0 - pi1) * std::log1p(pi1 / ((1.0 - pi1) * p[y])) / z_factor(spec);
    std::vector<double> g(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        g[i] = -factor * softmax_jacobian_entry(p, y, i);
    return LogitVec(std::move(g));
}

namespace {

// Shared gradient path for JS (one slot) and GJS (M-1 slots): per slot v with
// weight w_v, dL/dp_j = w_v ln(p_j / m_j) / Z, chained through softmax.
std::vector<LogitVec> grad_gjs_family(const LossSpec& spec, std::size_t y,
                                      const std::vector<LogitVec>& zs) {
    const std::size_t k = zs.front().size();
    check_label(y, k);
    const WeightVec w = loss_weights(spec);
    const double z_norm = z_factor(spec);

    std::vector<ProbVec> ps;
    ps.reserve(zs.size());
    for (const auto& z : zs) ps.push_back(clamp_project(softmax(z).values()));

    std::vector<double> m(k, 0.0);
    m[y] += w[0];
    for (std::size_t v = 0; v < ps.size(); ++v)
        for (std::size_t j = 0; j < k; ++j) m[j] += w[v + 1] * ps[v][j];

    std::vector<LogitVec> grads;
    grads.reserve(zs.size());
    for (std::size_t v = 0; v < ps.size(); ++v) {
        std::vector<double> g(k);
        for (std::size_t j = 0; j < k; ++j)
            g[j] = w[v + 1] * std::log(ps[v][j] / m[j]) / z_norm;
        grads.push_back(chain_through_softmax(ps[v], g));
    }
    return grads;
}

// JS-on-mean: dL/dp^(v)_j = w_v ln(mbar_j / mm_j) / Z with mbar the prediction
// mean and mm = pi1 e_y + (1-pi1) mbar.
std::vector<LogitVec> grad_js_on_mean(const LossSpec& spec, std::size_t y,
                                      const std::vector<LogitVec>& zs) {
    const std::size_t k = zs.front().size();
    check_label(y, k);
    const WeightVec w = loss_weights(spec);
    const double z_norm = z_factor(spec);

    std::vector<ProbVec> ps;
    ps.reserve(zs.size());
    for (const auto& z : zs) ps.push_back(clamp_project(softmax(z).values()));

    std::vector<double> mbar(k, 0.0);
    for (std::size_t v = 0; v < ps.size(); ++v)
        for (std::size_t j = 0; j < k; ++j)
            mbar[j] += ps[v][j] / static_cast<double>(ps.size());
    std::vector<double> mm(k);
    for (std::size_t j = 0; j < k; ++j)
        mm[j] = (1.0 - spec.pi1) * mbar[j] + (j == y ? spec.pi1 : 0.0);

    std::vector<double> g(k);
    for (std::size_t j = 0; j < k; ++j) g[j] = std::log(mbar[j] / mm[j]) / z_norm;

    std::vector<LogitVec> grads;
    grads.reserve(zs.size());
    for (std::size_t v = 0; v < ps.size(); ++v) {
        std::vector<double> gv(k);
        for (std::size_t j = 0; j < k; ++j) gv[j] = w[v + 1] * g[j];
        grads.push_back(chain_through_softmax(ps[v], gv));
    }
    return grads;
}

LogitVec grad_baseline(const LossSpec& spec, std::size_t y, const LogitVec& z) {
    const std::size_t k = z.size();
    check_label(y, k);
    const ProbVec p = softmax(z);
    std::vector<double> g(k);
    switch (spec.kind) {
        case LossKind::CE:
            for (std::size_t i = 0; i < k; ++i) g[i] = p[i] - (i == y ? 1.0 : 0.0);
            break;
        case LossKind::MAE:
            for (std::size_t i = 0; i < k; ++i) g[i] = -softmax_jacobian_entry(p, y, i);
            break;
        case LossKind::GCE: {
            const double scale = std::pow(clamp_project(p.values())[y], spec.gce_q);
            for (std::size_t i = 0; i < k; ++i)
                g[i] = -scale * ((i == y ? 1.0 : 0.0) - p[i]);
            break;
        }
        case LossKind::LS: {
            const ProbVec t = ls_target(spec, y, k);
            for (std::size_t i = 0; i < k; ++i) g[i] = p[i] - t[i];
            break;
        }
        case LossKind::BS:
            // Target beta e_y + (1-beta) p is detached, so the gradient is
            // beta (p - e_y): bootstrapping only rescales the CE gradient.
            for (std::size_t i = 0; i < k; ++i)
                g[i] = spec.bs_beta * (p[i] - (i == y ? 1.0 : 0.0));
            break;
        default:
            throw ValidationError("grad_baseline: kind is not a baseline loss");
    }
    return LogitVec(std::move(g));
}

}  // namespace

std::vector<LogitVec> grad_loss_logits(const LossSpec& spec, std::size_t y,
                                       const std::vector<LogitVec>& zs) {
    validate(spec);
    if (zs.size() != prediction_count(spec))
        throw ValidationError("grad_loss_logits: wrong number of logit vectors");
    const std::size_t k = zs.front().size();
    for (const auto& z : zs)
        if (z.size() != k) throw ValidationError("grad_loss_logits: dimension mismatch");
    switch (spec.kind) {
        case LossKind::JS:
        case LossKind::GJS:
            return grad_gjs_family(spec, y, zs);
        case LossKind::JSOnMean:
            return grad_js_on_mean(spec, y, zs);
        default:
            return {grad_baseline(spec, y, zs.front())};
    }
}

LossEval eval_loss(const LossSpec& spec, std::size_t y, const std::vector<LogitVec>& zs) {
    std::vector<ProbVec> preds;
    preds.reserve(zs.size());
    for (const auto& z : zs) preds.push_back(clamp_project(softmax(z).values()));
    return LossEval{loss_value(spec, y, preds), grad_loss_logits(spec, y, zs)};
}

ProbVec dissection_target(const DissectionSpec& spec, std::size_t y, std::size_t k) {
    if (y >= k) throw InvalidLabel("dissection_target: label out of range");
    const double floor = spec.label_floor;
    if (!(floor >= 0.0) || floor * static_cast<double>(k - 1) > 0.5)
        throw ValidationError("dissection_target: label floor out of range");
    if (floor == 0.0) return ProbVec::one_hot(k, y);
    std::vector<double> t(k, floor);
    t[y] = 1.0 - floor * static_cast<double>(k - 1);
    return ProbVec(std::move(t));
}

double dissection_value(const DissectionSpec& spec, std::size_t y, const ProbVec& p) {
    const ProbVec t = dissection_target(spec, y, p.size());
    return pairwise_divergence(spec.kind, t, clamp_probs(p));
}

LogitVec grad_dissection_logits(const DissectionSpec& spec, std::size_t y, const LogitVec& z) {
    const std::size_t k = z.size();
    const ProbVec t = dissection_target(spec, y, k);
    const ProbVec p = clamp_project(softmax(z).values());
    std::vector<double> g(k);
    switch (spec.kind) {
        case DivergenceKind::KL: {
            // KL(t, p) differs from cross entropy against t by a constant.
            std::vector<double> out(k);
            for (std::size_t i = 0; i < k; ++i) out[i] = p[i] - t[i];
            return LogitVec(std::move(out));
        }
        case DivergenceKind::KLReverse:
            for (std::size_t j = 0; j < k; ++j) g[j] = std::log(p[j] / t[j]) + 1.0;
            break;
        case DivergenceKind::Jeffreys: {
            // Mean of the KL(t,p) and KL(p,t) gradients.
            std::vector<double> fwd(k);
            for (std::size_t i = 0; i < k; ++i) fwd[i] = p[i] - t[i];
            for (std::size_t j = 0; j < k; ++j) g[j] = std::log(p[j] / t[j]) + 1.0;
            LogitVec rev = chain_through_softmax(p, g);
            std::vector<double> out(k);
            for (std::size_t i = 0; i < k; ++i) out[i] = 0.5 * (fwd[i] + rev[i]);
            return LogitVec(std::move(out));
        }
        case DivergenceKind::K:
            for (std::size_t j = 0; j < k; ++j) g[j] = -t[j] / (t[j] + p[j]);
            break;
        case DivergenceKind::KPrime:
            for (std::size_t j = 0; j < k; ++j) {
                const double m = 0.5 * (t[j] + p[j]);
                g[j] = std::log(p[j] / m) + 1.0 - p[j] / (2.0 * m);
            }
            break;
        case DivergenceKind::JS:
            for (std::size_t j = 0; j < k; ++j)
                g[j] = 0.5 * std::log(p[j] / (0.5 * (t[j] + p[j])));
            break;
        case DivergenceKind::GJS:
            throw ValidationError("GJS is not a pairwise dissection loss");
    }
    return chain_through_softmax(p, g);
}

namespace {

class SpecTrainLoss final : public TrainLoss {
public:
    explicit SpecTrainLoss(LossSpec spec) : spec_(spec) { validate(spec_); }
    std::size_t prediction_count() const override { return jsd::prediction_count(spec_); }
    double value(std::size_t y, const std::vector<ProbVec>& preds) const override {
        return loss_value(spec_, y, preds);
    }
    std::vector<LogitVec> grad(std::size_t y, const std::vector<LogitVec>& zs) const override {
        return grad_loss_logits(spec_, y, zs);
    }
    std::string name() const override { return loss_kind_name(spec_.kind); }

private:
    LossSpec spec_;
};

class DissectionTrainLoss final : public TrainLoss {
public:
    explicit DissectionTrainLoss(DissectionSpec spec) : spec_(spec) {}
    std::size_t prediction_count() const override { return 1; }
    double value(std::size_t y, const std::vector<ProbVec>& preds) const override {
        return dissection_value(spec_, y, preds.front());
    }
    std::vector<LogitVec> grad(std::size_t y, const std::vector<LogitVec>& zs) const override {
        return {grad_dissection_logits(spec_, y, zs.front())};
    }
    std::string name() const override { return "dissect-" + divergence_name(spec_.kind); }

private:
    DissectionSpec spec_;
};

}  // namespace

std::unique_ptr<TrainLoss> make_train_loss(const LossSpec& spec) {
    return std::make_unique<SpecTrainLoss>(spec);
}

std::unique_ptr<TrainLoss> make_train_loss(const DissectionSpec& spec) {
    return std::make_unique<DissectionTrainLoss>(spec);
}

}  // namespace jsd
