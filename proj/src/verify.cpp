#include "jsd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace jsd {

namespace {

// Frozen acceptance thresholds, computed from the closed forms before any of
// the checks below were implemented.
constexpr double kLadderThreshold[5] = {0.0, 0.0, 0.0905, 0.1810, 0.2715};  // by K
constexpr double kMaeLimitFinal = 0.0723824;     // 1/|ln 1e-6|
constexpr double kGjsMaeLimitFinal = 0.1225509;  // (1+ln 2)/|ln 1e-6|
constexpr double kCeLimitFinal = 0.01;

// Reference values, independently computed at 40-digit precision.
constexpr double kRefJsLossUniform = 0.6225562489182657;    // pi1=.5, K=2, p=u
constexpr double kRefJsLossOpposite = 2.0;                  // pi1=.5, p=e_2
constexpr double kRefGjsLoss = 4.0642669370271822;          // pi1=1/3, M=3, one-hots
constexpr double kRefJsGrad = -0.39624062518028905;         // pi1=.5, z=0, coord y
constexpr double kRefBlK2 = 1.2451124978365315;             // JS pi1=.5 K=2
constexpr double kRefC2Third = 0.63651416829481282;         // h(1/3)+h(2/3)

// The oracle numerics below deliberately share no code with the divergence
// and loss modules they certify.

double oracle_entropy(const std::vector<double>& p) {
    double acc = 0.0;
    for (double x : p)
        if (x > 0.0) acc -= x * std::log(x);
    return acc;
}

double oracle_h(double x) { return x > 0.0 ? -x * std::log(x) : 0.0; }

double oracle_z(const LossSpec& spec) {
    if (spec.z_mode == ZMode::Unit) return 1.0;
    return oracle_h(1.0 - spec.pi1);
}

bool gjs_family(LossKind kind) {
    return kind == LossKind::JS || kind == LossKind::GJS || kind == LossKind::JSOnMean;
}

// Per-tuple evaluator with the prediction mixture hoisted out of the class
// loop, so a full class sum costs O(K^2) instead of O(M K^2).
struct OracleEval {
    LossSpec spec;
    std::size_t k = 0;
    double z = 1.0;
    std::vector<double> mix_base;  // sum of weighted predictions
    double pred_ent = 0.0;         // sum of weighted prediction entropies
    std::vector<double> mean;      // prediction mean, JSOnMean only
    const std::vector<std::vector<double>>* preds = nullptr;

    void bind(const LossSpec& s, const std::vector<std::vector<double>>& ps) {
        spec = s;
        preds = &ps;
        k = ps.front().size();
        z = oracle_z(spec);
        if (spec.kind == LossKind::JS || spec.kind == LossKind::GJS) {
            const double tail = (1.0 - spec.pi1) / static_cast<double>(ps.size());
            mix_base.assign(k, 0.0);
            pred_ent = 0.0;
            for (const auto& p : ps) {
                for (std::size_t j = 0; j < k; ++j) mix_base[j] += tail * p[j];
                pred_ent += tail * oracle_entropy(p);
            }
        } else if (spec.kind == LossKind::JSOnMean) {
            mean.assign(k, 0.0);
            for (const auto& p : ps)
                for (std::size_t j = 0; j < k; ++j)
                    mean[j] += p[j] / static_cast<double>(ps.size());
        }
    }

    double loss_at(std::size_t y) const {
        switch (spec.kind) {
            case LossKind::JS:
            case LossKind::GJS: {
                double hm = 0.0;
                for (std::size_t j = 0; j < k; ++j) {
                    const double m = mix_base[j] + (j == y ? spec.pi1 : 0.0);
                    hm += oracle_h(m);
                }
                return (hm - pred_ent) / z;
            }
            case LossKind::JSOnMean: {
                double hm = 0.0;
                for (std::size_t j = 0; j < k; ++j) {
                    const double m =
                        (1.0 - spec.pi1) * mean[j] + (j == y ? spec.pi1 : 0.0);
                    hm += oracle_h(m);
                }
                return (hm - (1.0 - spec.pi1) * oracle_entropy(mean)) / z;
            }
            case LossKind::MAE:
                return 1.0 - (*preds)[0][y];
            case LossKind::GCE: {
                const double p = std::max((*preds)[0][y], kProbEpsilon);
                return (1.0 - std::pow(p, spec.gce_q)) / spec.gce_q;
            }
            case LossKind::CE:
                return -std::log(std::max((*preds)[0][y], kProbEpsilon));
            default:
                throw ValidationError("oracle evaluator: unsupported loss kind");
        }
    }

    double class_sum() const {
        double acc = 0.0;
        for (std::size_t y = 0; y < k; ++y) acc += loss_at(y);
        return acc;
    }
};

std::vector<double> draw_prob(Rng& rng, std::size_t k) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> p(k);
    double s = 0.0;
    for (auto& x : p) {
        x = e(rng) + 1e-12;
        s += x;
    }
    for (auto& x : p) x /= s;
    return p;
}

std::vector<double> draw_prob_floor(Rng& rng, std::size_t k, double floor) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> p(k);
    double s = 0.0;
    for (auto& x : p) {
        x = e(rng);
        s += x;
    }
    const double free_mass = 1.0 - floor * static_cast<double>(k);
    for (auto& x : p) x = floor + free_mass * (x / s);
    return p;
}

std::vector<double> raw_one_hot(std::size_t k, std::size_t y) {
    std::vector<double> p(k, 0.0);
    p[y] = 1.0;
    return p;
}

std::vector<double> raw_uniform(std::size_t k) {
    return std::vector<double>(k, 1.0 / static_cast<double>(k));
}

std::size_t loss_slots(const LossSpec& spec) { return prediction_count(spec); }

double grid_point_count(std::size_t k, std::size_t resolution) {
    // C(resolution + k - 1, k - 1), in floating point for the cap check
    double c = 1.0;
    for (std::size_t i = 1; i < k; ++i)
        c *= static_cast<double>(resolution + i) / static_cast<double>(i);
    return c;
}

}  // namespace

std::vector<ProbVec> simplex_grid(std::size_t k, std::size_t resolution) {
    if (k < 2) throw ValidationError("simplex_grid: need k >= 2");
    if (resolution < 1) throw ValidationError("simplex_grid: resolution must be >= 1");
    if (grid_point_count(k, resolution) > static_cast<double>(kEnumerationCap))
        throw EnumerationCapExceeded("simplex_grid: too many lattice points");

    std::vector<ProbVec> out;
    std::vector<double> point(k);
    const double denom = static_cast<double>(resolution);
    // DFS over compositions of `resolution` into k parts.
    std::vector<std::size_t> counts(k, 0);
    std::size_t depth = 0;
    std::size_t remaining = resolution;
    while (true) {
        if (depth == k - 1) {
            counts[depth] = remaining;
            for (std::size_t i = 0; i < k; ++i)
                point[i] = static_cast<double>(counts[i]) / denom;
            out.push_back(ProbVec(point));
            // backtrack to the last coordinate that can still shrink
            while (depth > 0) {
                --depth;
                if (counts[depth] > 0) break;
            }
            if (depth == 0 && counts[0] == 0) break;
            counts[depth] -= 1;
            remaining = resolution;
            for (std::size_t i = 0; i <= depth; ++i) remaining -= counts[i];
            ++depth;
            for (std::size_t i = depth; i < k; ++i) counts[i] = 0;
        } else {
            counts[depth] = remaining;
            remaining = 0;
            ++depth;
        }
    }
    return out;
}

std::pair<double, double> bound_constants(const LossSpec& spec, std::size_t k) {
    validate(spec);
    if (k < 2) throw ValidationError("bound_constants: need k >= 2");
    if (spec.kind == LossKind::CE || spec.kind == LossKind::LS ||
        spec.kind == LossKind::BS)
        throw UnboundedLossError("bound_constants: loss has no finite upper constant");
    const std::size_t slots = loss_slots(spec);
    if (gjs_family(spec.kind) && slots > k)
        throw ValidationError("bound_constants: M exceeds K+1");

    std::vector<ProbVec> lower(slots, ProbVec::uniform(k));
    std::vector<ProbVec> upper;
    for (std::size_t v = 0; v < slots; ++v) upper.push_back(ProbVec::one_hot(k, v));
    return {sum_over_classes(spec, lower), sum_over_classes(spec, upper)};
}

std::pair<double, double> js_bound_closed_form(double pi1, std::size_t k) {
    if (!(pi1 > 0.0 && pi1 < 1.0))
        throw ValidationError("js_bound_closed_form: pi1 must lie in (0,1)");
    if (k < 2) throw ValidationError("js_bound_closed_form: need k >= 2");
    const double pi2 = 1.0 - pi1;
    const double kk = static_cast<double>(k);
    const double z = oracle_h(pi2);
    const double bl =
        kk * (oracle_h(pi1 + pi2 / kk) + (kk - 1.0) * (1.0 / kk) * oracle_h(pi2) -
              pi2 * oracle_h(1.0 / kk)) /
        z;
    const double bu = (kk - 1.0) * (1.0 + oracle_h(pi1) / oracle_h(pi2));
    return {bl, bu};
}

double bu_from_decomposition(double pi1, std::size_t k, std::size_t m) {
    if (m < 3) throw ValidationError("bu_from_decomposition: need M >= 3");
    if (m - 1 > k) throw ValidationError("bu_from_decomposition: M exceeds K+1");
    const std::size_t slots = m - 1;
    std::vector<double> mbar(k, 0.0);
    for (std::size_t v = 0; v < slots; ++v)
        mbar[v] = 1.0 / static_cast<double>(slots);

    const double hbar = oracle_entropy(mbar);
    double js_part = 0.0;
    for (std::size_t y = 0; y < k; ++y) {
        double hm = 0.0;
        for (std::size_t j = 0; j < k; ++j)
            hm += oracle_h((1.0 - pi1) * mbar[j] + (j == y ? pi1 : 0.0));
        js_part += hm - (1.0 - pi1) * hbar;
    }
    const double consistency = (1.0 - pi1) * static_cast<double>(k) *
                               std::log(static_cast<double>(slots));
    return (js_part + consistency) / oracle_h(1.0 - pi1);
}

BoundReport bound_search(const LossSpec& spec, std::size_t k, std::size_t samples,
                         std::size_t grid_resolution, std::uint64_t seed) {
    validate(spec);
    if (k < 2) throw ValidationError("bound_search: need k >= 2");
    if (samples == 0 && grid_resolution == 0)
        throw ValidationError("bound_search: need samples or a grid resolution");
    if (grid_resolution > 0 && k > 5)
        throw ValidationError("bound_search: grid mode supports k <= 5");

    auto [bl, bu] = bound_constants(spec, k);
    BoundReport report;
    report.b_lower = bl;
    report.b_upper = bu;

    const std::size_t slots = loss_slots(spec);
    OracleEval eval;
    double best_min = std::numeric_limits<double>::infinity();
    double best_max = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> tuple(slots);
    std::vector<ProbVec> best_min_arg, best_max_arg;

    auto consider = [&](const std::vector<std::vector<double>>& t) {
        eval.bind(spec, t);
        const double s = eval.class_sum();
        if (s < best_min) {
            best_min = s;
            best_min_arg.clear();
            for (const auto& p : t) best_min_arg.push_back(ProbVec(p));
        }
        if (s > best_max) {
            best_max = s;
            best_max_arg.clear();
            for (const auto& p : t) best_max_arg.push_back(ProbVec(p));
        }
    };

    if (grid_resolution > 0) {
        const std::vector<ProbVec> grid = simplex_grid(k, grid_resolution);
        const double tuples = std::pow(static_cast<double>(grid.size()),
                                       static_cast<double>(slots));
        if (tuples > static_cast<double>(kEnumerationCap))
            throw EnumerationCapExceeded("bound_search: grid tuple count over cap");
        std::vector<std::size_t> idx(slots, 0);
        while (true) {
            for (std::size_t v = 0; v < slots; ++v) tuple[v] = grid[idx[v]].values();
            consider(tuple);
            std::size_t v = 0;
            while (v < slots && ++idx[v] == grid.size()) {
                idx[v] = 0;
                ++v;
            }
            if (v == slots) break;
        }
    }

    Rng rng = make_rng(seed, "bound-search");
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t v = 0; v < slots; ++v) tuple[v] = draw_prob(rng, k);
        consider(tuple);
    }

    report.observed_min = best_min;
    report.observed_max = best_max;
    report.argmin_point = std::move(best_min_arg);
    report.argmax_point = std::move(best_max_arg);
    report.worst_violation =
        std::max({0.0, report.b_lower - best_min, best_max - report.b_upper});
    return report;
}

std::vector<std::pair<int, double>> bound_gap_vs_M(double pi1, std::size_t k,
                                                   const std::vector<int>& m_values) {
    std::vector<std::pair<int, double>> out;
    for (int m : m_values) {
        if (m < 2) throw ValidationError("bound_gap_vs_M: M must be >= 2");
        LossSpec spec;
        spec.kind = LossKind::GJS;
        spec.pi1 = pi1;
        spec.num_dists = m;
        auto [bl, bu] = bound_constants(spec, k);
        out.emplace_back(m, bu - bl);
    }
    return out;
}

void validate(const RiskInstance& inst) {
    if (inst.num_inputs < 1) throw ValidationError("risk instance: no inputs");
    if (inst.k < 2) throw ValidationError("risk instance: need k >= 2");
    if (inst.clean_labels.size() != inst.num_inputs)
        throw ValidationError("risk instance: one clean label per input");
    for (std::size_t y : inst.clean_labels)
        if (y >= inst.k) throw InvalidLabel("risk instance: label out of range");
    if (inst.noise.kind != NoiseKind::SymmetricExclusive)
        throw ValidationError(
            "risk instance: theorem noise model is symmetric-exclusive");
    const double limit = 1.0 - 1.0 / static_cast<double>(inst.k);
    if (!(inst.noise.eta >= 0.0 && inst.noise.eta < limit))
        throw ValidationError("risk instance: eta must lie in [0, 1-1/K)");
    if (inst.grid_resolution < 2)
        throw ValidationError("risk instance: grid resolution must be >= 2");
    const double hyps = std::pow(grid_point_count(inst.k, inst.grid_resolution),
                                 static_cast<double>(inst.num_inputs));
    if (hyps > static_cast<double>(kEnumerationCap))
        throw EnumerationCapExceeded("risk instance: hypothesis count over cap");
}

RiskGaps risk_bound_enumeration(const RiskInstance& inst, const LossSpec& spec,
                                bool allow_clamped_ce) {
    validate(inst);
    validate(spec);
    if (spec.kind == LossKind::CE && !allow_clamped_ce)
        throw UnboundedLossError(
            "risk_bound_enumeration: CE has no finite B_U; pass allow_clamped_ce "
            "to use the clamp-induced bound");
    if (spec.kind == LossKind::LS || spec.kind == LossKind::BS)
        throw UnboundedLossError("risk_bound_enumeration: loss has no finite B_U");

    const std::size_t k = inst.k;
    const double eta = inst.noise.eta;
    const std::size_t slots = loss_slots(spec);
    if (gjs_family(spec.kind) && slots > k)
        throw ValidationError("risk_bound_enumeration: M exceeds K+1");

    double bl, bu;
    if (spec.kind == LossKind::CE) {
        // Clamp-induced constants: min at u, max at a floored one-hot.
        OracleEval eval;
        std::vector<std::vector<double>> at_u{raw_uniform(k)};
        eval.bind(spec, at_u);
        bl = eval.class_sum();
        std::vector<std::vector<double>> at_v{raw_one_hot(k, 0)};
        eval.bind(spec, at_v);
        bu = eval.class_sum();
    } else {
        std::tie(bl, bu) = bound_constants(spec, k);
    }

    const std::vector<ProbVec> grid = simplex_grid(k, inst.grid_resolution);
    const std::size_t g = grid.size();

    // clean_cost[p i + point] with i the input index would waste space: costs
    // depend on (point, class) only.
    std::vector<double> clean_cost(g * k);
    OracleEval eval;
    std::vector<std::vector<double>> tuple;
    for (std::size_t gi = 0; gi < g; ++gi) {
        tuple.assign(slots, grid[gi].values());
        eval.bind(spec, tuple);
        for (std::size_t y = 0; y < k; ++y) clean_cost[gi * k + y] = eval.loss_at(y);
    }
    // Exclusive-uniform noise: stay 1-eta, move eta/(K-1) to each other class.
    std::vector<double> noisy_cost(g * k);
    const double off = eta / static_cast<double>(k - 1);
    for (std::size_t gi = 0; gi < g; ++gi)
        for (std::size_t y = 0; y < k; ++y) {
            double acc = (1.0 - eta) * clean_cost[gi * k + y];
            for (std::size_t c = 0; c < k; ++c)
                if (c != y) acc += off * clean_cost[gi * k + c];
            noisy_cost[gi * k + y] = acc;
        }

    const std::size_t n = inst.num_inputs;
    const double inv_n = 1.0 / static_cast<double>(n);
    double min_clean = std::numeric_limits<double>::infinity();
    double noisy_at_clean_min = 0.0;
    double min_noisy = std::numeric_limits<double>::infinity();
    double clean_at_noisy_min = 0.0;

    std::vector<std::size_t> assign(n, 0);
    while (true) {
        double rc = 0.0, rn = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            rc += clean_cost[assign[i] * k + inst.clean_labels[i]];
            rn += noisy_cost[assign[i] * k + inst.clean_labels[i]];
        }
        rc *= inv_n;
        rn *= inv_n;
        if (rc < min_clean) {
            min_clean = rc;
            noisy_at_clean_min = rn;
        }
        if (rn < min_noisy) {
            min_noisy = rn;
            clean_at_noisy_min = rc;
        }
        std::size_t i = 0;
        while (i < n && ++assign[i] == g) {
            assign[i] = 0;
            ++i;
        }
        if (i == n) break;
    }

    RiskGaps gaps;
    gaps.noisy_gap = noisy_at_clean_min - min_noisy;
    gaps.noisy_bound = eta * (bu - bl) / static_cast<double>(k - 1);
    gaps.clean_gap = min_clean - clean_at_noisy_min;
    gaps.clean_bound =
        eta * (bu - bl) / (static_cast<double>(k - 1) - eta * static_cast<double>(k));
    return gaps;
}

AsymCheck asym_condition_check(const LossSpec& spec, std::size_t k,
                               std::size_t trials, std::uint64_t seed) {
    validate(spec);
    if (spec.kind != LossKind::JS && spec.kind != LossKind::GJS)
        throw ValidationError("asym_condition_check: GJS-family losses only");
    if (k < 2) throw ValidationError("asym_condition_check: need k >= 2");

    const std::size_t slots = loss_slots(spec);
    LossSpec unit = spec;
    unit.z_mode = ZMode::Unit;  // conditions are on the raw divergence scale

    const WeightVec w = loss_weights(spec);
    AsymCheck result;
    result.c1 = oracle_entropy(w.values());
    result.c2 = oracle_h(spec.pi1) + oracle_h(1.0 - spec.pi1);

    OracleEval eval;
    double violation = 0.0;

    // (i) zero at full agreement with the label
    for (std::size_t y = 0; y < k; ++y) {
        std::vector<std::vector<double>> agree(slots, raw_one_hot(k, y));
        eval.bind(unit, agree);
        violation = std::max(violation, std::fabs(eval.loss_at(y)));
    }

    // (iii) off-label one-hot overlap equals C2
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            std::vector<std::vector<double>> overlap(slots, raw_one_hot(k, j));
            eval.bind(unit, overlap);
            violation = std::max(violation, std::fabs(eval.loss_at(i) - result.c2));
        }

    // (ii) range [0, C1] over random draws; (i) positivity away from e_y
    Rng rng = make_rng(seed, "asym-check");
    std::vector<std::vector<double>> tuple(slots);
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t y = rng() % k;
        double l1 = 0.0;
        for (std::size_t v = 0; v < slots; ++v) {
            tuple[v] = draw_prob(rng, k);
            for (std::size_t j = 0; j < k; ++j)
                l1 += std::fabs(tuple[v][j] - (j == y ? 1.0 : 0.0));
        }
        eval.bind(unit, tuple);
        const double d = eval.loss_at(y);
        violation = std::max({violation, -d, d - result.c1});
        if (l1 > 1e-3 && d <= 0.0) violation = std::max(violation, 1.0);
    }

    result.max_violation = violation;
    return result;
}

std::vector<LimitRow> limit_convergence_probe(LimitKind kind,
                                              const std::vector<double>& ladder,
                                              std::size_t trials,
                                              std::uint64_t seed) {
    if (ladder.empty()) throw ValidationError("limit probe: empty ladder");
    for (double pi1 : ladder)
        if (!(pi1 > 0.0 && pi1 < 1.0))
            throw ValidationError("limit probe: ladder entries must lie in (0,1)");
    for (std::size_t i = 1; i < ladder.size(); ++i) {
        const bool toward_one = kind != LimitKind::CELimit;
        if (toward_one ? ladder[i] <= ladder[i - 1] : ladder[i] >= ladder[i - 1])
            throw ValidationError("limit probe: ladder not sorted toward the limit");
    }

    struct Draw {
        std::size_t k;
        std::size_t y;
        std::vector<double> p1;
        std::vector<double> p2;  // GjsMAELimit only
    };
    const bool pair = kind == LimitKind::GjsMAELimit;
    constexpr double kFloor = 0.1;

    std::vector<Draw> draws;
    Rng rng = make_rng(seed, "limit-probe");
    for (std::size_t t = 0; t < trials; ++t) {
        Draw d;
        d.k = 2 + rng() % 7;
        d.y = rng() % d.k;
        d.p1 = draw_prob_floor(rng, d.k, kFloor);
        if (pair) d.p2 = draw_prob_floor(rng, d.k, kFloor);
        draws.push_back(std::move(d));
    }
    // Boundary extremes: all mass beyond the floor on one coordinate.
    for (std::size_t k = 2; k <= 8; ++k) {
        const double rest = 1.0 - kFloor * static_cast<double>(k);
        for (std::size_t j = 0; j < k; ++j) {
            std::vector<double> p(k, kFloor);
            p[j] += rest;
            for (std::size_t y = 0; y < k; ++y) {
                Draw d;
                d.k = k;
                d.y = y;
                d.p1 = p;
                if (pair) {
                    d.p2 = std::vector<double>(k, kFloor);
                    d.p2[(j + 1) % k] += rest;
                }
                draws.push_back(std::move(d));
            }
        }
    }

    std::vector<LimitRow> rows;
    for (double pi1 : ladder) {
        LossSpec js;
        js.kind = LossKind::JS;
        js.pi1 = pi1;
        LossSpec gjs;
        gjs.kind = LossKind::GJS;
        gjs.pi1 = pi1;
        gjs.num_dists = 3;

        double worst = 0.0;
        for (const auto& d : draws) {
            double dev = 0.0;
            if (kind == LimitKind::CELimit) {
                const double ce = -std::log(d.p1[d.y]);
                dev = std::fabs(loss_js(js, d.y, ProbVec(d.p1)) - ce) / ce;
            } else if (kind == LimitKind::MAELimit) {
                dev = std::fabs(loss_js(js, d.y, ProbVec(d.p1)) - (1.0 - d.p1[d.y]));
            } else {
                const double mbar_y = 0.5 * (d.p1[d.y] + d.p2[d.y]);
                dev = std::fabs(loss_gjs(gjs, d.y, {ProbVec(d.p1), ProbVec(d.p2)}) -
                                (1.0 - mbar_y));
            }
            worst = std::max(worst, dev);
        }
        rows.push_back({pi1, worst});
    }
    return rows;
}

std::vector<std::vector<double>> finite_diff_grad(
    const std::function<double(const std::vector<LogitVec>&)>& f,
    const std::vector<LogitVec>& zs, double h) {
    if (!(h >= 1e-8 && h <= 1e-3))
        throw ValidationError("finite_diff_grad: h must lie in [1e-8, 1e-3]");
    std::vector<std::vector<double>> grads;
    for (std::size_t v = 0; v < zs.size(); ++v) {
        std::vector<double> g(zs[v].size());
        for (std::size_t i = 0; i < zs[v].size(); ++i) {
            auto shifted = [&](double delta) {
                std::vector<LogitVec> copy = zs;
                std::vector<double> raw = zs[v].values();
                raw[i] += delta;
                copy[v] = LogitVec(std::move(raw));
                const double val = f(copy);
                if (!std::isfinite(val))
                    throw NonFiniteLoss("finite_diff_grad: non-finite loss value");
                return val;
            };
            g[i] = (shifted(h) - shifted(-h)) / (2.0 * h);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

namespace {

ClaimResult bounded_claim(std::string name, double worst, double threshold,
                          std::string detail = "") {
    ClaimResult r;
    r.name = std::move(name);
    r.worst = worst;
    r.threshold = threshold;
    r.passed = worst <= threshold;
    r.detail = std::move(detail);
    return r;
}

LossSpec make_js(double pi1) {
    LossSpec s;
    s.kind = LossKind::JS;
    s.pi1 = pi1;
    return s;
}

LossSpec make_gjs(double pi1, int m) {
    LossSpec s;
    s.kind = LossKind::GJS;
    s.pi1 = pi1;
    s.num_dists = m;
    return s;
}

ClaimResult claim_reference_values(const SuiteOptions& opts) {
    const double fault = opts.z_fault;
    double worst = 0.0;

    LossSpec js = make_js(0.5);
    worst = std::max(worst,
                     std::fabs(loss_js(js, 0, ProbVec::uniform(2)) / fault -
                               kRefJsLossUniform));
    worst = std::max(worst, std::fabs(loss_js(js, 0, ProbVec::one_hot(2, 1)) / fault -
                                      kRefJsLossOpposite));
    LossSpec gjs = make_gjs(1.0 / 3, 3);
    worst = std::max(
        worst,
        std::fabs(loss_gjs(gjs, 0, {ProbVec::one_hot(3, 1), ProbVec::one_hot(3, 2)}) /
                      fault -
                  kRefGjsLoss));
    LogitVec g = grad_js_logits(js, 0, LogitVec({0.0, 0.0}));
    worst = std::max(worst, std::fabs(g[0] / fault - kRefJsGrad));
    worst = std::max(worst, std::fabs(g[1] / fault + kRefJsGrad));
    return bounded_claim("reference-values", worst, 1e-12,
                         "frozen loss and gradient constants");
}

ClaimResult claim_divergence_forms(const SuiteOptions& opts) {
    Rng rng = make_rng(opts.seed, "suite-forms");
    const std::size_t n = opts.fast ? 200 : 2000;
    double worst = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        std::size_t k = 2 + rng() % 5;
        std::size_t m = 2 + rng() % 3;
        std::vector<double> wraw(m);
        double s = 0.0;
        for (auto& x : wraw) {
            x = 0.05 + static_cast<double>(rng() % 1000) / 1000.0;
            s += x;
        }
        for (auto& x : wraw) x /= s;
        WeightVec w(wraw);
        std::vector<ProbVec> ps;
        for (std::size_t i = 0; i < m; ++i) ps.push_back(ProbVec(draw_prob(rng, k)));
        worst = std::max(worst, std::fabs(gjs_div(w, ps) - gjs_div_kl_form(w, ps)));
    }
    return bounded_claim("divergence-forms-agree", worst, 1e-12,
                         "entropy form vs weighted-KL form");
}

ClaimResult claim_closed_form_bounds() {
    double worst = 0.0;
    for (std::size_t k : {2, 3, 4})
        for (double pi1 : {0.1, 0.5, 0.9}) {
            auto [bl, bu] = bound_constants(make_js(pi1), k);
            auto [cl, cu] = js_bound_closed_form(pi1, k);
            worst = std::max({worst, std::fabs(bl - cl), std::fabs(bu - cu)});
        }
    auto [bl2, bu2] = bound_constants(make_js(0.5), 2);
    worst = std::max(worst, std::fabs(bl2 - kRefBlK2));
    worst = std::max(worst, std::fabs(bu2 - 2.0));
    // GJS constants at M=2 must reduce to the JS constants.
    for (double pi1 : {0.1, 0.5, 0.9}) {
        auto [gl, gu] = bound_constants(make_gjs(pi1, 2), 3);
        auto [jl, ju] = bound_constants(make_js(pi1), 3);
        worst = std::max({worst, std::fabs(gl - jl), std::fabs(gu - ju)});
    }
    return bounded_claim("closed-form-bounds", worst, 1e-12,
                         "proposition formulas vs direct class sums");
}

ClaimResult claim_bound_search(const SuiteOptions& opts) {
    const std::size_t res = opts.fast ? 15 : 30;
    const std::size_t samples = opts.fast ? 5000 : 100000;
    double worst = 0.0;
    std::string detail;

    auto check_args = [&](const BoundReport& r, std::size_t k, bool expect_vertices,
                          std::size_t resolution) {
        for (const auto& p : r.argmin_point)
            for (std::size_t i = 0; i < p.size(); ++i)
                worst = std::max(worst,
                                 std::fabs(p[i] - 1.0 / static_cast<double>(k)) -
                                     1.0 / static_cast<double>(resolution) - 1e-12);
        if (expect_vertices)
            for (const auto& p : r.argmax_point) {
                double top = 0.0;
                for (std::size_t i = 0; i < p.size(); ++i) top = std::max(top, p[i]);
                worst = std::max(worst, 1.0 - top);
            }
    };

    for (std::size_t k : {2, 3}) {
        for (double pi1 : {0.1, 0.5, 0.9}) {
            BoundReport r = bound_search(make_js(pi1), k, 0, res, opts.seed);
            worst = std::max(worst, r.worst_violation);
            check_args(r, k, true, res);
        }
        BoundReport rg = bound_search(make_gjs(0.5, 3), k, 0, k == 2 ? res : 20,
                                      opts.seed);
        worst = std::max(worst, rg.worst_violation);
        check_args(rg, k, true, k == 2 ? res : 20);

        LossSpec mae;
        mae.kind = LossKind::MAE;
        BoundReport rm = bound_search(mae, k, 1000, res, opts.seed);
        worst = std::max(worst, rm.worst_violation);
        worst = std::max(worst, std::fabs(rm.b_lower - static_cast<double>(k - 1)));
        worst = std::max(worst, std::fabs(rm.b_upper - static_cast<double>(k - 1)));
    }
    for (std::size_t k : {2, 3, 4, 5}) {
        BoundReport r = bound_search(make_js(0.5), k, samples, 0, opts.seed + k);
        worst = std::max(worst, r.worst_violation);
        BoundReport rg = bound_search(make_gjs(0.5, 3), k, samples, 0, opts.seed + k);
        worst = std::max(worst, rg.worst_violation);
    }
    return bounded_claim("bound-search", worst, 1e-9,
                         "class-sum range within [B_L, B_U]; extremizers located");
}

ClaimResult claim_gap_vs_m() {
    double worst_violation = -std::numeric_limits<double>::infinity();
    for (double pi1 : {0.1, 0.5, 0.9}) {
        auto gaps = bound_gap_vs_M(pi1, 4, {2, 3, 4});
        for (std::size_t i = 1; i < gaps.size(); ++i)
            worst_violation =
                std::max(worst_violation, gaps[i - 1].second - gaps[i].second);
        auto [jl, ju] = bound_constants(make_js(pi1), 4);
        worst_violation =
            std::max(worst_violation, std::fabs(gaps[0].second - (ju - jl)) - 1e-12);
    }
    // The widening is the consistency term: B_U recomputed from the split.
    double attribution = 0.0;
    for (double pi1 : {0.3, 0.5, 0.7})
        for (std::size_t m : {3, 4}) {
            auto [bl, bu] = bound_constants(make_gjs(pi1, static_cast<int>(m)), 4);
            (void)bl;
            attribution =
                std::max(attribution, std::fabs(bu_from_decomposition(pi1, 4, m) - bu));
        }
    ClaimResult r;
    r.name = "gap-widens-with-M";
    r.worst = std::max(worst_violation, attribution - 1e-12);
    r.threshold = 0.0;
    r.passed = worst_violation < 0.0 && attribution <= 1e-12;
    r.detail = "strict gap growth; B_U attribution to the consistency term";
    return r;
}

ClaimResult claim_limit_ladder_constants() {
    const std::vector<double> ladder{0.9, 0.99, 0.999, 0.9999, 1.0 - 1e-6};
    bool ok = true;
    double worst = 0.0;
    for (std::size_t k : {2, 3, 4}) {
        double prev_gap = std::numeric_limits<double>::infinity();
        double last_dev = 0.0;
        for (double pi1 : ladder) {
            auto [bl, bu] = bound_constants(make_js(pi1), k);
            const double gap = bu - bl;
            if (gap >= prev_gap) ok = false;
            prev_gap = gap;
            last_dev = std::max(std::fabs(bl - static_cast<double>(k - 1)),
                                std::fabs(bu - static_cast<double>(k - 1)));
        }
        worst = std::max(worst, last_dev - kLadderThreshold[k]);
    }
    ClaimResult r;
    r.name = "bounds-collapse-to-K-minus-1";
    r.worst = worst;
    r.threshold = 0.0;
    r.passed = ok && worst <= 0.0;
    r.detail = "gap strictly shrinking along the pi1 ladder; frozen end thresholds";
    return r;
}

ClaimResult claim_risk_theorem(const SuiteOptions& opts) {
    Rng rng = make_rng(opts.seed, "suite-risk");
    double worst = 0.0;
    double mae_worst = 0.0;
    int instances = 0;
    const std::size_t ks[] = {2, 3};
    const double etas[] = {0.1, 0.3};
    const double pis[] = {0.5, 0.9};
    while (instances < 20) {
        const std::size_t k = ks[instances % 2];
        const double eta = etas[(instances / 2) % 2];
        RiskInstance inst;
        inst.num_inputs = 2;
        inst.k = k;
        inst.grid_resolution = 10;
        inst.noise.kind = NoiseKind::SymmetricExclusive;
        inst.noise.eta = eta;
        for (std::size_t i = 0; i < inst.num_inputs; ++i)
            inst.clean_labels.push_back(rng() % k);

        if (instances % 5 == 4) {
            LossSpec mae;
            mae.kind = LossKind::MAE;
            RiskGaps g = risk_bound_enumeration(inst, mae);
            mae_worst = std::max(mae_worst, std::fabs(g.noisy_gap));
            worst = std::max({worst, -g.clean_gap - g.clean_bound, g.clean_gap});
        } else {
            const double pi1 = pis[(instances / 4) % 2];
            RiskGaps g = risk_bound_enumeration(inst, make_js(pi1));
            worst = std::max({worst, -g.noisy_gap, g.noisy_gap - g.noisy_bound,
                              g.clean_gap, -g.clean_gap - g.clean_bound});
        }
        ++instances;
    }
    worst = std::max(worst, mae_worst);
    return bounded_claim("risk-theorem-enumeration", worst, 1e-12,
                         "20 exhaustively enumerated instances; MAE gap exactly 0");
}

ClaimResult claim_asym_constants(const SuiteOptions& opts) {
    const std::size_t trials = opts.fast ? 10000 : 100000;
    double worst = 0.0;

    AsymCheck third = asym_condition_check(make_gjs(1.0 / 3, 3), 3, trials, opts.seed);
    worst = std::max(worst, std::fabs(third.c1 - std::log(3.0)));
    worst = std::max(worst, std::fabs(third.c2 - kRefC2Third));
    worst = std::max(worst, third.max_violation);

    AsymCheck two = asym_condition_check(make_js(0.4), 4, trials, opts.seed + 1);
    worst = std::max(worst, std::fabs(two.c1 - two.c2));
    worst = std::max(worst, two.max_violation);
    return bounded_claim("lemma-constants", worst, 1e-9,
                         "C1=H(pi) and C2=h(pi1)+h(1-pi1) analytic vs numeric; "
                         "divergence range respected");
}

ClaimResult claim_limits(const SuiteOptions& opts) {
    const std::size_t trials = opts.fast ? 500 : 4000;
    bool ok = true;
    double worst = 0.0;

    auto monotone = [&](const std::vector<LimitRow>& rows) {
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (rows[i].max_deviation > rows[i - 1].max_deviation + 1e-15) ok = false;
    };

    auto ce = limit_convergence_probe(LimitKind::CELimit, {1e-1, 1e-2, 1e-3, 1e-4},
                                      trials, opts.seed);
    monotone(ce);
    worst = std::max(worst, ce.back().max_deviation - kCeLimitFinal);

    const std::vector<double> up{0.9, 0.99, 0.999, 0.9999, 1.0 - 1e-6};
    auto mae = limit_convergence_probe(LimitKind::MAELimit, up, trials, opts.seed);
    monotone(mae);
    worst = std::max(worst, mae.back().max_deviation - kMaeLimitFinal);

    auto gjs = limit_convergence_probe(LimitKind::GjsMAELimit, up, trials, opts.seed);
    monotone(gjs);
    worst = std::max(worst, gjs.back().max_deviation - kGjsMaeLimitFinal);

    ClaimResult r;
    r.name = "ce-mae-asymptotes";
    r.worst = worst;
    r.threshold = 0.0;
    r.passed = ok && worst <= 0.0;
    r.detail = "monotone ladders; final rungs under frozen thresholds";
    return r;
}

ClaimResult claim_decomposition(const SuiteOptions& opts) {
    Rng rng = make_rng(opts.seed, "suite-decomp");
    const std::size_t n = opts.fast ? 1000 : 10000;
    double worst = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t k = 2 + rng() % 9;
        const std::size_t m = 3 + rng() % 3;
        const double pi1 = 0.05 + 0.9 * (static_cast<double>(rng() % 1000) / 1000.0);
        std::vector<double> wraw(m);
        wraw[0] = pi1;
        for (std::size_t i = 1; i < m; ++i)
            wraw[i] = (1.0 - pi1) / static_cast<double>(m - 1);
        WeightVec w(wraw);
        const std::size_t y = rng() % k;
        std::vector<ProbVec> preds;
        std::vector<ProbVec> all{ProbVec::one_hot(k, y)};
        for (std::size_t v = 0; v + 1 < m; ++v) {
            preds.push_back(ProbVec(draw_prob(rng, k)));
            all.push_back(preds.back());
        }
        auto parts = decompose_gjs(w, ProbVec::one_hot(k, y), preds);
        worst = std::max(worst, std::fabs(parts.js_term + parts.consistency_term -
                                          gjs_div(w, all)));
    }
    return bounded_claim("decomposition-identity", worst, 1e-10,
                         "JS term + consistency term reassembles GJS");
}

ClaimResult claim_gradient_cross_check(const SuiteOptions& opts) {
    Rng rng = make_rng(opts.seed, "suite-grad");
    const std::size_t n = opts.fast ? 50 : 200;
    double worst = 0.0;
    std::normal_distribution<double> logit(0.0, 2.0);
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t k = 2 + rng() % 9;
        const double pi1 = 0.02 + 0.96 * (static_cast<double>(rng() % 1000) / 1000.0);
        const std::size_t y = rng() % k;
        std::vector<double> raw(k);
        for (auto& v : raw) v = logit(rng);
        LogitVec z(raw);
        LossSpec spec = make_js(pi1);

        LogitVec closed = grad_js_logits(spec, y, z);
        auto generic = grad_loss_logits(spec, y, {z});
        auto fd = finite_diff_grad(
            [&](const std::vector<LogitVec>& zs) {
                return loss_js(spec, y, clamp_project(softmax(zs[0]).values()));
            },
            {z});
        for (std::size_t i = 0; i < k; ++i) {
            const double scale =
                std::max({1.0, std::fabs(closed[i]), std::fabs(fd[0][i])});
            worst = std::max(worst, std::fabs(closed[i] - generic[0][i]) / scale);
            worst = std::max(worst, std::fabs(closed[i] - fd[0][i]) / scale);
        }
    }
    return bounded_claim("gradient-cross-check", worst, 1e-6,
                         "closed form vs chain rule vs finite differences");
}

ClaimResult claim_dissection_table(const SuiteOptions& opts) {
    Rng rng = make_rng(opts.seed, "suite-table");
    bool ok = true;
    double worst = 0.0;
    const DivergenceKind kinds[] = {DivergenceKind::KL,       DivergenceKind::KLReverse,
                                    DivergenceKind::Jeffreys, DivergenceKind::K,
                                    DivergenceKind::KPrime,   DivergenceKind::JS};
    // Deterministic probes: a non-permutation pair to expose asymmetry and a
    // near-disjoint pair to expose unboundedness.
    const ProbVec skew_a({0.6, 0.3, 0.1});
    const ProbVec skew_b({0.2, 0.5, 0.3});
    const double e = 1e-6;
    const ProbVec edge_a({1.0 - 2.0 * e, e, e});
    const ProbVec edge_b({e, e, 1.0 - 2.0 * e});
    for (DivergenceKind kind : kinds) {
        double max_asym = std::fabs(pairwise_divergence(kind, skew_a, skew_b) -
                                    pairwise_divergence(kind, skew_b, skew_a));
        double max_val = std::max(pairwise_divergence(kind, edge_a, edge_b),
                                  pairwise_divergence(kind, edge_b, edge_a));
        for (int t = 0; t < 200; ++t) {
            const std::size_t k = 2 + rng() % 4;
            ProbVec a(draw_prob_floor(rng, k, 1e-6));
            ProbVec b(draw_prob_floor(rng, k, 1e-6));
            const double ab = pairwise_divergence(kind, a, b);
            const double ba = pairwise_divergence(kind, b, a);
            max_asym = std::max(max_asym, std::fabs(ab - ba));
            max_val = std::max(max_val, ab);
        }
        if (divergence_symmetric(kind)) {
            worst = std::max(worst, max_asym);
        } else if (max_asym <= 1e-6) {
            ok = false;  // an asymmetric member must actually show asymmetry
        }
        if (divergence_bounded(kind)) {
            worst = std::max(worst, max_val - std::log(2.0) - 1e-12);
        } else if (max_val <= std::log(2.0)) {
            ok = false;  // an unbounded member must exceed the JS ceiling
        }
    }
    ClaimResult r;
    r.name = "dissection-table";
    r.worst = worst;
    r.threshold = 1e-12;
    r.passed = ok && worst <= 1e-12;
    r.detail = "symmetry and boundedness flags verified numerically";
    return r;
}

}  // namespace

std::vector<ClaimResult> run_verification_suite(const SuiteOptions& opts) {
    std::vector<ClaimResult> claims;
    claims.push_back(claim_reference_values(opts));
    claims.push_back(claim_divergence_forms(opts));
    claims.push_back(claim_closed_form_bounds());
    claims.push_back(claim_bound_search(opts));
    claims.push_back(claim_gap_vs_m());
    claims.push_back(claim_limit_ladder_constants());
    claims.push_back(claim_risk_theorem(opts));
    claims.push_back(claim_asym_constants(opts));
    claims.push_back(claim_limits(opts));
    claims.push_back(claim_decomposition(opts));
    claims.push_back(claim_gradient_cross_check(opts));
    claims.push_back(claim_dissection_table(opts));
    return claims;
}

std::string claims_to_json(const std::vector<ClaimResult>& claims) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : claims) {
        nlohmann::json j;
        j["name"] = c.name;
        j["passed"] = c.passed;
        j["worst_violation"] = c.worst;
        j["threshold"] = c.threshold;
        j["detail"] = c.detail;
        out.push_back(std::move(j));
    }
    return out.dump(2);
}

}  // namespace jsd
