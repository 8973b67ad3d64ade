#include "jsd/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include <json.hpp>

namespace jsd {

namespace {

std::size_t effective_workers(std::size_t requested, std::size_t batch) {
    std::size_t w = std::max<std::size_t>(1, requested);
    if (const char* cap = std::getenv("JSD_MAX_WORKERS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(cap, &end, 10);
        if (end != cap && v >= 1) w = std::min(w, static_cast<std::size_t>(v));
    }
    return std::min(w, std::max<std::size_t>(1, batch));
}

struct ForwardCache {
    std::vector<std::vector<double>> pre;  // per layer pre-activations
    std::vector<std::vector<double>> act;  // act[0] = input, act[L] = logits
};

void forward_into(const MlpModel& m, std::span<const double> x, ForwardCache& c) {
    const std::size_t layers = m.num_layers();
    c.pre.resize(layers);
    c.act.resize(layers + 1);
    c.act[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in = m.widths[l];
        const std::size_t out = m.widths[l + 1];
        c.pre[l].assign(out, 0.0);
        const double* w = m.weights[l].data();
        for (std::size_t o = 0; o < out; ++o) {
            double acc = m.biases[l][o];
            const double* row = w + o * in;
            for (std::size_t i = 0; i < in; ++i) acc += row[i] * c.act[l][i];
            c.pre[l][o] = acc;
        }
        c.act[l + 1] = c.pre[l];
        if (l + 1 < layers)
            for (double& v : c.act[l + 1]) v = v > 0.0 ? v : 0.0;
    }
}

Gradients zero_gradients(const MlpModel& m) {
    Gradients g;
    g.weights.reserve(m.num_layers());
    g.biases.reserve(m.num_layers());
    for (std::size_t l = 0; l < m.num_layers(); ++l) {
        g.weights.emplace_back(m.weights[l].size(), 0.0);
        g.biases.emplace_back(m.biases[l].size(), 0.0);
    }
    return g;
}

// Accumulates d(loss)/d(params) for one view given d(loss)/d(logits).
void backward_view(const MlpModel& m, const ForwardCache& c,
                   const std::vector<double>& dlogits, Gradients& g) {
    const std::size_t layers = m.num_layers();
    std::vector<double> delta = dlogits;
    for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = m.widths[l];
        const std::size_t out = m.widths[l + 1];
        double* gw = g.weights[l].data();
        for (std::size_t o = 0; o < out; ++o) {
            const double d = delta[o];
            g.biases[l][o] += d;
            const double* a = c.act[l].data();
            double* row = gw + o * in;
            for (std::size_t i = 0; i < in; ++i) row[i] += d * a[i];
        }
        if (l == 0) break;
        std::vector<double> prev(in, 0.0);
        const double* w = m.weights[l].data();
        for (std::size_t o = 0; o < out; ++o) {
            const double d = delta[o];
            const double* row = w + o * in;
            for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * d;
        }
        for (std::size_t i = 0; i < in; ++i)
            if (c.pre[l - 1][i] <= 0.0) prev[i] = 0.0;
        delta = std::move(prev);
    }
}

struct ShardResult {
    Gradients grads;
    double loss_sum = 0.0;
    std::size_t bad_index = static_cast<std::size_t>(-1);
};

void run_shard(const MlpModel& model, const std::vector<Sample>& batch,
               const TrainLoss& loss, std::size_t begin, std::size_t end,
               ShardResult& out) {
    out.grads = zero_gradients(model);
    const std::size_t k = model.widths.back();
    for (std::size_t s = begin; s < end; ++s) {
        const Sample& sample = batch[s];
        std::vector<LogitVec> zs;
        std::vector<ProbVec> preds;
        std::vector<ForwardCache> caches(sample.views.size());
        zs.reserve(sample.views.size());
        preds.reserve(sample.views.size());
        for (std::size_t v = 0; v < sample.views.size(); ++v) {
            forward_into(model, sample.views[v], caches[v]);
            zs.push_back(LogitVec(caches[v].act.back()));
            preds.push_back(clamp_project(softmax(zs.back()).values()));
        }
        const double value = loss.value(sample.y, preds);
        if (!std::isfinite(value)) {
            out.bad_index = s;
            return;
        }
        out.loss_sum += value;
        const std::vector<LogitVec> dz = loss.grad(sample.y, zs);
        for (std::size_t v = 0; v < sample.views.size(); ++v) {
            std::vector<double> d(k);
            for (std::size_t i = 0; i < k; ++i) d[i] = dz[v][i];
            backward_view(model, caches[v], d, out.grads);
        }
    }
}

std::vector<std::size_t> rows_with_tag(const Dataset& ds, Split tag) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.num_rows; ++i)
        if (ds.splits[i] == tag) rows.push_back(i);
    return rows;
}

}  // namespace

std::size_t param_count(const MlpModel& model) {
    std::size_t n = 0;
    for (std::size_t l = 0; l < model.num_layers(); ++l)
        n += model.weights[l].size() + model.biases[l].size();
    return n;
}

void check_model(const MlpModel& model) {
    if (model.widths.size() < 2)
        throw ValidationError("model: need input and output widths");
    if (model.weights.size() != model.widths.size() - 1 ||
        model.biases.size() != model.weights.size())
        throw ValidationError("model: layer count mismatch");
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        if (model.weights[l].size() != model.widths[l] * model.widths[l + 1] ||
            model.biases[l].size() != model.widths[l + 1])
            throw ValidationError("model: layer shape mismatch");
        for (double v : model.weights[l])
            if (!std::isfinite(v)) throw ValidationError("model: non-finite weight");
        for (double v : model.biases[l])
            if (!std::isfinite(v)) throw ValidationError("model: non-finite bias");
    }
}

MlpModel init_model(const std::vector<std::size_t>& widths, std::uint64_t seed) {
    if (widths.size() < 2) throw ValidationError("init_model: need >= 2 widths");
    for (std::size_t w : widths)
        if (w == 0) throw ValidationError("init_model: zero layer width");

    MlpModel m;
    m.widths = widths;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const double bound = std::sqrt(1.0 / static_cast<double>(widths[l]));
        Rng rng = make_rng(seed, "init", l);
        std::uniform_real_distribution<double> u(-bound, bound);
        std::vector<double> w(widths[l] * widths[l + 1]);
        for (double& v : w) v = u(rng);
        std::vector<double> b(widths[l + 1]);
        for (double& v : b) v = u(rng);
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
    }
    return m;
}

LogitVec forward_logits(const MlpModel& model, std::span<const double> x) {
    if (x.size() != model.widths.front())
        throw ValidationError("forward: input width mismatch");
    ForwardCache cache;
    forward_into(model, x, cache);
    return LogitVec(cache.act.back());
}

std::size_t predict_class(const MlpModel& model, std::span<const double> x) {
    const LogitVec z = forward_logits(model, x);
    std::size_t best = 0;
    for (std::size_t i = 1; i < z.size(); ++i)
        if (z[i] > z[best]) best = i;
    return best;
}

void validate(const TrainConfig& cfg) {
    if (cfg.dissection) {
        if (cfg.dissection->kind == DivergenceKind::GJS)
            throw ValidationError("train config: dissection needs a pairwise kind");
        if (!(cfg.dissection->label_floor >= 0.0))
            throw ValidationError("train config: negative label floor");
    } else {
        validate(cfg.loss);
    }
    if (!(cfg.lr > 0.0)) throw ValidationError("train config: lr must be positive");
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
        throw ValidationError("train config: momentum must lie in [0,1)");
    if (cfg.batch_size < 1) throw ValidationError("train config: batch_size >= 1");
    if (!(cfg.weight_decay >= 0.0))
        throw ValidationError("train config: negative weight decay");
    for (const auto& [epoch, factor] : cfg.lr_drops) {
        (void)epoch;
        if (!(factor > 0.0)) throw ValidationError("train config: lr drop factor <= 0");
    }
    ViewSpec vs = cfg.views;
    vs.num_views = 1;
    validate(vs);
    if (cfg.workers < 1) throw ValidationError("train config: workers >= 1");
}

std::pair<double, Gradients> batch_gradient(const MlpModel& model,
                                            const std::vector<Sample>& batch,
                                            const TrainLoss& loss,
                                            std::size_t workers) {
    check_model(model);
    if (batch.empty()) throw ValidationError("batch_gradient: empty batch");
    for (const Sample& s : batch) {
        if (s.views.size() != loss.prediction_count())
            throw ValidationError("batch_gradient: view count does not match loss");
        for (const auto& v : s.views)
            if (v.size() != model.widths.front())
                throw ValidationError("batch_gradient: view width mismatch");
        if (s.y >= model.widths.back())
            throw InvalidLabel("batch_gradient: label out of range");
    }

    const std::size_t t = effective_workers(workers, batch.size());
    std::vector<ShardResult> shards(t);
    if (t == 1) {
        run_shard(model, batch, loss, 0, batch.size(), shards[0]);
    } else {
        const std::size_t per = (batch.size() + t - 1) / t;
        std::vector<std::thread> threads;
        for (std::size_t s = 1; s < t; ++s) {
            const std::size_t begin = std::min(batch.size(), s * per);
            const std::size_t end = std::min(batch.size(), (s + 1) * per);
            threads.emplace_back(run_shard, std::cref(model), std::cref(batch),
                                 std::cref(loss), begin, end, std::ref(shards[s]));
        }
        run_shard(model, batch, loss, 0, std::min(batch.size(), per), shards[0]);
        for (auto& th : threads) th.join();
    }

    Gradients total = zero_gradients(model);
    double loss_sum = 0.0;
    std::size_t bad = static_cast<std::size_t>(-1);
    for (const ShardResult& shard : shards) {
        bad = std::min(bad, shard.bad_index);
        loss_sum += shard.loss_sum;
        for (std::size_t l = 0; l < total.weights.size(); ++l) {
            for (std::size_t i = 0; i < total.weights[l].size(); ++i)
                total.weights[l][i] += shard.grads.weights[l][i];
            for (std::size_t i = 0; i < total.biases[l].size(); ++i)
                total.biases[l][i] += shard.grads.biases[l][i];
        }
    }
    if (bad != static_cast<std::size_t>(-1))
        throw NonFiniteLoss("non-finite loss at batch index " + std::to_string(bad));

    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto& layer : total.weights)
        for (double& v : layer) v *= inv;
    for (auto& layer : total.biases)
        for (double& v : layer) v *= inv;
    return {loss_sum * inv, std::move(total)};
}

SgdState make_sgd_state(const MlpModel& model, double lr) {
    SgdState state;
    state.lr = lr;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        state.vel_weights.emplace_back(model.weights[l].size(), 0.0);
        state.vel_biases.emplace_back(model.biases[l].size(), 0.0);
    }
    return state;
}

double train_step(MlpModel& model, SgdState& state,
                  const std::vector<Sample>& batch, const TrainLoss& loss,
                  const TrainConfig& cfg) {
    auto [value, grads] = batch_gradient(model, batch, loss, cfg.workers);

    auto update = [&](std::vector<double>& w, std::vector<double>& vel,
                      const std::vector<double>& g) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double step = g[i] + cfg.weight_decay * w[i];
            vel[i] = cfg.momentum * vel[i] + step;
            w[i] -= state.lr * (step + cfg.momentum * vel[i]);
        }
    };
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        update(model.weights[l], state.vel_weights[l], grads.weights[l]);
        update(model.biases[l], state.vel_biases[l], grads.biases[l]);
    }
    return value;
}

const char* const kMetricsCsvHeader =
    "epoch,train_loss,train_acc_noisy,train_acc_clean,val_acc,consistency,seconds";

std::string metrics_csv_row(const MetricsRecord& m) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.4g",
                  m.epoch, m.train_loss, m.train_acc_noisy, m.train_acc_clean,
                  m.val_acc, m.consistency, m.seconds);
    return buf;
}

std::string metrics_jsonl_row(const MetricsRecord& m) {
    nlohmann::json j;
    j["epoch"] = m.epoch;
    j["train_loss"] = m.train_loss;
    j["train_acc_noisy"] = m.train_acc_noisy;
    j["train_acc_clean"] = m.train_acc_clean;
    j["val_acc"] = m.val_acc;
    j["consistency"] = m.consistency;
    j["seconds"] = m.seconds;
    return j.dump();
}

double evaluate(const MlpModel& model, const Dataset& ds,
                const std::vector<std::size_t>& rows,
                const std::vector<std::size_t>& labels) {
    if (rows.empty()) throw ValidationError("evaluate: no rows");
    if (labels.size() != ds.num_rows)
        throw ValidationError("evaluate: label array size mismatch");
    std::size_t hits = 0;
    for (std::size_t r : rows)
        if (predict_class(model, ds.row(r)) == labels[r]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(rows.size());
}

double consistency_rate(const MlpModel& model, const Dataset& ds,
                        const std::vector<std::size_t>& rows, const ViewSpec& vs,
                        Rng& rng) {
    if (rows.empty()) throw ValidationError("consistency_rate: no rows");
    ViewSpec fresh = vs;
    fresh.num_views = 1;
    fresh.first_view_unaugmented = false;
    std::size_t stable = 0;
    for (std::size_t r : rows) {
        const std::size_t base = predict_class(model, ds.row(r));
        const auto views = make_views(ds.row(r), fresh, rng);
        if (predict_class(model, views[0]) == base) ++stable;
    }
    return static_cast<double>(stable) / static_cast<double>(rows.size());
}

TrainResult train_loop(const Dataset& ds, const TrainConfig& cfg,
                       const EpochCallback& on_epoch) {
    check_dataset(ds);
    validate(cfg);

    const std::vector<std::size_t> train_rows = rows_with_tag(ds, Split::Train);
    const std::vector<std::size_t> val_rows = rows_with_tag(ds, Split::Val);
    if (train_rows.empty()) throw ValidationError("train_loop: no train rows");
    if (val_rows.empty() && cfg.epochs > 0)
        throw ValidationError("train_loop: no validation rows tagged");

    std::vector<std::size_t> widths;
    widths.push_back(ds.dim);
    widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
    widths.push_back(ds.num_classes);

    TrainResult result;
    result.model = init_model(widths, cfg.seed);

    const std::unique_ptr<TrainLoss> loss = cfg.dissection
                                                ? make_train_loss(*cfg.dissection)
                                                : make_train_loss(cfg.loss);
    ViewSpec vs = cfg.views;
    vs.num_views = loss->prediction_count();

    SgdState state = make_sgd_state(result.model, cfg.lr);
    std::vector<std::size_t> order = train_rows;
    std::vector<Sample> batch;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        for (const auto& [drop_epoch, factor] : cfg.lr_drops)
            if (drop_epoch == epoch) state.lr *= factor;

        Rng shuffle_rng = make_rng(cfg.seed, "shuffle", epoch);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t row = order[b];
                Rng view_rng =
                    make_rng(cfg.seed, "views", epoch * ds.num_rows + row);
                batch.push_back(
                    {make_views(ds.row(row), vs, view_rng), ds.labels[row]});
            }
            loss_sum += train_step(result.model, state, batch, *loss, cfg) *
                        static_cast<double>(batch.size());
        }

        MetricsRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(train_rows.size());
        rec.train_acc_noisy = evaluate(result.model, ds, train_rows, ds.labels);
        rec.train_acc_clean =
            evaluate(result.model, ds, train_rows, ds.clean_labels);
        rec.val_acc = evaluate(result.model, ds, val_rows, ds.labels);
        Rng crng = make_rng(cfg.seed, "consistency", epoch);
        rec.consistency = consistency_rate(result.model, ds, train_rows, vs, crng);
        rec.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        result.metrics.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    return result;
}

}  // namespace jsd
