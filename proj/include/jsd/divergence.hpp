#pragma once

#include <string>
#include <vector>

#include "jsd/simplex.hpp"

namespace jsd {

// The divergence family: KL and its reverse, the symmetrized Jeffreys form,
// the two midpoint halves K and K', the weighted Jensen-Shannon divergence,
// and its M-distribution generalization.
enum class DivergenceKind { KL, KLReverse, Jeffreys, K, KPrime, JS, GJS };

// Classification used by the dissection experiments: which members are
// symmetric in their arguments (equal weights for JS) and which are bounded.
bool divergence_symmetric(DivergenceKind kind);
bool divergence_bounded(DivergenceKind kind);
const std::string& divergence_name(DivergenceKind kind);
DivergenceKind divergence_from_name(const std::string& name);

// D_JS_pi(p1, p2) = H(m) - pi1 H(p1) - pi2 H(p2),  m = pi1 p1 + pi2 p2.
// The entropy form is the canonical path; the equivalent weighted-KL form
// pi1 KL(p1||m) + pi2 KL(p2||m) is kept as an independent cross-check.
double js_div(const WeightVec& w, const ProbVec& p1, const ProbVec& p2);
double js_div_kl_form(const WeightVec& w, const ProbVec& p1, const ProbVec& p2);

// D_GJS_pi(p1..pM) = H(sum pi_i p_i) - sum pi_i H(p_i); reduces to js_div at
// M = 2 and is bounded above by H(pi).
double gjs_div(const WeightVec& w, const std::vector<ProbVec>& ps);
double gjs_div_kl_form(const WeightVec& w, const std::vector<ProbVec>& ps);

// K(p,q)  = KL(p, (p+q)/2). Always finite: the midpoint dominates p.
// K'(p,q) = KL(q, (p+q)/2).
double k_div(const ProbVec& p, const ProbVec& q);
double k_prime_div(const ProbVec& p, const ProbVec& q);

// (KL(p,q) + KL(q,p)) / 2; requires mutual absolute continuity.
double jeffreys_div(const ProbVec& p, const ProbVec& q);

// Pairwise dispatcher over every kind except GJS; JS uses equal weights.
double pairwise_divergence(DivergenceKind kind, const ProbVec& p, const ProbVec& q);

// Generator of the f-divergence form of JS:
//   f_pi1(t) = h(pi1 t + 1 - pi1) - pi1 h(t),  h(x) = -x ln x,
// with f(0) = lim_{t->0} f(t) = h(1 - pi1). Then for interior p2,
//   D_JS(p1, p2) = sum_k p2_k f_pi1(p1_k / p2_k).
double js_fgen(double pi1, double t);

// Split of D_GJS(e_y, p_2..p_M) into a label-dependent JS term against the
// prediction mean m_{>1} = sum_{j>=2} pi_j p_j / (1-pi1) and a label-free
// consistency term (1-pi1) D_GJS_pi''(p_2..p_M):
//   js_term + consistency_term = gjs_div(w, [e_y, preds...]).
struct GjsDecomposition {
    double js_term;
    double consistency_term;
};
GjsDecomposition decompose_gjs(const WeightVec& w, const ProbVec& label,
                               const std::vector<ProbVec>& preds);

}  // namespace jsd
