#pragma once

#include <memory>
#include <string>
#include <vector>

#include "jsd/divergence.hpp"
#include "jsd/simplex.hpp"

namespace jsd {

// JS       : D_JS([pi1, 1-pi1], e_y, p) / Z
// GJS      : D_GJS([pi1, (1-pi1)/(M-1)...], e_y, p_2..p_M) / Z
// JSOnMean : the JS term of the GJS decomposition only (no consistency term)
// CE       : -ln p_y
// MAE      : (1/2) ||e_y - p||_1 = 1 - p_y
// GCE      : (1 - p_y^q) / q
// LS       : cross entropy against (1-eps) e_y + eps u
// BS       : cross entropy against beta e_y + (1-beta) p, target detached
enum class LossKind { JS, GJS, JSOnMean, CE, MAE, GCE, LS, BS };

// Z = -(1-pi1) ln(1-pi1) under Normalized, 1 under Unit. Scaling by a constant
// leaves the minimizer unchanged; Normalized makes the CE/MAE limits exact.
enum class ZMode { Normalized, Unit };

struct LossSpec {
    LossKind kind = LossKind::JS;
    double pi1 = 0.5;        // label-distribution weight, JS/GJS/JSOnMean
    int num_dists = 2;       // M, GJS/JSOnMean
    ZMode z_mode = ZMode::Normalized;
    double gce_q = 0.7;      // GCE exponent in (0, 1]
    double ls_epsilon = 0.1; // LS mass moved to uniform, in [0, 1)
    double bs_beta = 0.8;    // BS label weight in (0, 1]
};

// Throws ValidationError when the fields relevant to `kind` are out of range.
void validate(const LossSpec& spec);

const std::string& loss_kind_name(LossKind kind);
LossKind loss_kind_from_name(const std::string& name);

// Number of predictive distributions the loss consumes: M-1 for GJS/JSOnMean,
// 1 for everything else.
std::size_t prediction_count(const LossSpec& spec);

double z_factor(const LossSpec& spec);

// [pi1, (1-pi1)/(M-1), ...]; prediction weights are uniform by definition.
WeightVec loss_weights(const LossSpec& spec);

double loss_js(const LossSpec& spec, std::size_t y, const ProbVec& p);
double loss_gjs(const LossSpec& spec, std::size_t y, const std::vector<ProbVec>& preds);
double loss_js_on_mean(const LossSpec& spec, std::size_t y, const std::vector<ProbVec>& preds);
double loss_baseline(const LossSpec& spec, std::size_t y, const ProbVec& p);

// Dispatch on spec.kind; `preds` carries prediction_count(spec) distributions.
double loss_value(const LossSpec& spec, std::size_t y, const std::vector<ProbVec>& preds);

// sum_k loss(spec, k, preds): the per-input quantity whose range [B_L, B_U]
// drives the risk bounds. Constant in p exactly for MAE.
double sum_over_classes(const LossSpec& spec, const std::vector<ProbVec>& preds);

// Smoothed targets for LS and BS, and the shared evaluation helper.
ProbVec ls_target(const LossSpec& spec, std::size_t y, std::size_t k);
ProbVec bs_target(const LossSpec& spec, std::size_t y, const ProbVec& p);
double cross_entropy_against(const ProbVec& target, const ProbVec& p);

// Closed-form JS gradient with respect to logits, p = softmax(z):
//   dL/dz_i = -(1-pi1) (dp_y/dz_i) ln(pi1 / ((1-pi1) p_y) + 1) / Z.
LogitVec grad_js_logits(const LossSpec& spec, std::size_t y, const LogitVec& z);

// Analytic gradients for every kind via the softmax chain rule, one gradient
// per predictive distribution. The label receives no gradient. For JS this is
// an independent code path that must agree with grad_js_logits.
std::vector<LogitVec> grad_loss_logits(const LossSpec& spec, std::size_t y,
                                       const std::vector<LogitVec>& zs);

struct LossEval {
    double value;
    std::vector<LogitVec> grad_logits;
};
LossEval eval_loss(const LossSpec& spec, std::size_t y, const std::vector<LogitVec>& zs);

// Table-style dissection losses: a pairwise divergence trained against a
// floored one-hot target (the unbounded members need t > 0 everywhere; the
// floor is the standard finite stand-in for ln 0).
struct DissectionSpec {
    DivergenceKind kind = DivergenceKind::JS;
    double label_floor = 1e-4;
};
ProbVec dissection_target(const DissectionSpec& spec, std::size_t y, std::size_t k);
double dissection_value(const DissectionSpec& spec, std::size_t y, const ProbVec& p);
LogitVec grad_dissection_logits(const DissectionSpec& spec, std::size_t y, const LogitVec& z);

// What the trainer drives: value plus per-view logit gradients.
class TrainLoss {
public:
    virtual ~TrainLoss() = default;
    virtual std::size_t prediction_count() const = 0;
    virtual double value(std::size_t y, const std::vector<ProbVec>& preds) const = 0;
    virtual std::vector<LogitVec> grad(std::size_t y, const std::vector<LogitVec>& zs) const = 0;
    virtual std::string name() const = 0;
};

std::unique_ptr<TrainLoss> make_train_loss(const LossSpec& spec);
std::unique_ptr<TrainLoss> make_train_loss(const DissectionSpec& spec);

}  // namespace jsd
