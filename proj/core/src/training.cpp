#include "charrnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "charrnet/errors.hpp"
#include "charrnet/parallel.hpp"

namespace charrnet {

namespace {

constexpr std::uint64_t kShuffleStream = 0x73687566;  // "shuf"
constexpr std::uint64_t kAugmentStream = 0x61756700;  // "aug"
constexpr std::uint64_t kInitStream = 0x696e6974;     // "init"
constexpr std::uint64_t kTrainStream = 0x7472616e;    // "tran"

std::size_t argmax(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::string fmt(double v, const char* f) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

void check_compatible(const ModelConfig& m, const Dataset& data) {
    if (m.num_classes != data.num_devices())
        throw ConfigError("model has " + std::to_string(m.num_classes) + " classes but the dataset has " +
                          std::to_string(data.num_devices()) + " devices");
    if (m.input_length != data.burst_length())
        throw ConfigError("model expects bursts of " + std::to_string(m.input_length) + " samples, dataset has " +
                          std::to_string(data.burst_length()));
}

std::size_t param_count(std::vector<Param*>& ps) {
    std::size_t n = 0;
    for (Param* p : ps) n += p->size();
    return n;
}

Dataset select_train_tag(const Dataset& ds, const std::string& tag) {
    Dataset out;
    out.config = ds.config;
    out.seed = ds.seed;
    out.population_seed = ds.population_seed;
    for (const RecordBlock& b : ds.blocks) {
        if (b.split != Split::train || b.tag != tag) continue;
        out.blocks.push_back({b.split, b.tag, out.records.size(), b.count});
        for (std::size_t i = 0; i < b.count; ++i) out.records.push_back(ds.records[b.first + i]);
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------- augmentation

void AugmentationConfig::validate() const {
    if (!(awgn_snr_range[0] <= awgn_snr_range[1])) throw ConfigError("augmentation.awgn_snr_range: low must be <= high");
    if (!(fading_probability >= 0.0 && fading_probability <= 1.0))
        throw ConfigError("augmentation.fading_probability must lie in [0, 1]");
    try {
        cfo_spec.validate();
        for (const FadingSpec& f : fading_specs) f.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("augmentation: ") + e.what());
    }
}

AugmentationConfig AugmentationConfig::disabled() {
    AugmentationConfig a;
    a.awgn = false;
    a.cfo = false;
    a.fading_specs.clear();
    return a;
}

ComplexSignal augment(const ComplexSignal& burst, const AugmentationConfig& cfg, Rng& rng) {
    ComplexSignal x = burst;
    if (!cfg.fading_specs.empty()) {
        const double u = uniform(rng, 0.0, 1.0);
        const auto pick = static_cast<std::size_t>(rng() % cfg.fading_specs.size());
        if (u < cfg.fading_probability) x = convolve(x, sample_fading_channel(cfg.fading_specs[pick], rng));
    }
    if (cfg.cfo) x = apply_cfo(x, draw_cfo(cfg.cfo_spec, rng));
    if (cfg.awgn) {
        const double snr = cfg.awgn_snr_range[0] == cfg.awgn_snr_range[1]
                               ? cfg.awgn_snr_range[0]
                               : uniform(rng, cfg.awgn_snr_range[0], cfg.awgn_snr_range[1]);
        x = add_awgn(x, {snr}, rng);
    }
    return x;
}

// ---------------------------------------------------------------- optimizer

std::string to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(const std::string& s) {
    if (s == "adam") return OptimizerKind::adam;
    if (s == "sgd") return OptimizerKind::sgd;
    throw ConfigError("unknown optimizer \"" + s + "\" (expected adam or sgd)");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train.beta1/beta2 must lie in [0, 1)");
    if (!(adam_epsilon > 0.0)) throw ConfigError("train.adam_epsilon must be > 0");
    augmentation.validate();
}

Optimizer::Optimizer(const TrainConfig& cfg, std::vector<Param*> params) : cfg_(cfg), params_(std::move(params)) {
    for (Param* p : params_) {
        m_.emplace_back(p->size(), 0.0);
        if (cfg_.optimizer == OptimizerKind::adam) v_.emplace_back(p->size(), 0.0);
    }
}

void Optimizer::step() {
    ++t_;
    const double lr = cfg_.learning_rate;
    if (cfg_.optimizer == OptimizerKind::sgd) {
        for (std::size_t j = 0; j < params_.size(); ++j) {
            Param& p = *params_[j];
            auto& m = m_[j];
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = cfg_.momentum * m[i] + p.grad[i];
                p.value[i] -= lr * m[i];
            }
        }
        return;
    }
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t j = 0; j < params_.size(); ++j) {
        Param& p = *params_[j];
        auto& m = m_[j];
        auto& v = v_[j];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = p.grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            p.value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.adam_epsilon);
        }
    }
}

// ---------------------------------------------------------------- training

TrainResult train(const Dataset& data, const ModelConfig& model_cfg, const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    if (data.records.empty()) throw ConfigError("train: dataset has no records");
    check_compatible(model_cfg, data);

    TrainResult result;
    result.model = make_model(model_cfg);
    Model& master = *result.model;
    const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.workers, cfg.batch_size));
    std::vector<std::unique_ptr<Model>> replicas;
    for (std::size_t w = 1; w < workers; ++w) replicas.push_back(master.clone());

    std::vector<Param*> params = master.params();
    const std::size_t n_params = param_count(params);
    Optimizer opt(cfg, params);

    const std::size_t n = data.records.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    // Per-item gradient slots, summed in item order so the result does not
    // depend on how items were spread over workers.
    std::vector<std::vector<double>> slots(cfg.batch_size, std::vector<double>(n_params));
    std::vector<double> item_loss(cfg.batch_size);
    std::vector<unsigned char> item_hit(cfg.batch_size);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng = make_rng(cfg.seed, {kShuffleStream, epoch});
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t hits = 0;

        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t b = std::min(cfg.batch_size, n - start);
            const double scale = 1.0 / static_cast<double>(b);
            parallel_chunks(b, workers, [&](std::size_t w, std::size_t lo, std::size_t hi) {
                Model& m = w == 0 ? master : *replicas[w - 1];
                for (std::size_t i = lo; i < hi; ++i) {
                    const std::size_t idx = order[start + i];
                    const DatasetRecord& rec = data.records[idx];
                    Rng rng = cfg.augmentation.fresh_draws ? make_rng(cfg.seed, {kAugmentStream, epoch, idx})
                                                           : make_rng(cfg.seed, {kAugmentStream, idx});
                    const ComplexSignal x = augment(rec.burst, cfg.augmentation, rng);
                    m.zero_grad();
                    const std::vector<double> logits = m.forward(x);
                    LossResult lr = softmax_cross_entropy(logits, rec.device_id);
                    item_loss[i] = lr.loss;
                    item_hit[i] = argmax(logits) == rec.device_id;
                    for (double& g : lr.grad) g *= scale;
                    m.backward(lr.grad);
                    double* dst = slots[i].data();
                    for (const Param* p : m.params()) dst = std::copy(p->grad.begin(), p->grad.end(), dst);
                }
            });
            for (Param* p : params) std::fill(p->grad.begin(), p->grad.end(), 0.0);
            for (std::size_t i = 0; i < b; ++i) {
                const double* src = slots[i].data();
                for (Param* p : params)
                    for (double& g : p->grad) g += *src++;
                loss_sum += item_loss[i];
                hits += item_hit[i];
            }
            opt.step();
            for (auto& r : replicas) {
                auto dst = r->params();
                for (std::size_t j = 0; j < params.size(); ++j) dst[j]->value = params[j]->value;
            }
        }
        EpochStats s{epoch + 1, loss_sum / static_cast<double>(n), static_cast<double>(hits) / static_cast<double>(n)};
        result.curve.push_back(s);
        if (on_epoch) on_epoch(s);
    }
    master.zero_grad();
    return result;
}

std::string loss_curve_csv(const std::vector<EpochStats>& curve) {
    std::string out = "epoch,loss,train_top1\n";
    for (const EpochStats& s : curve)
        out += std::to_string(s.epoch) + "," + fmt(s.loss, "%.17g") + "," + fmt(s.train_top1, "%.17g") + "\n";
    return out;
}

// ---------------------------------------------------------------- evaluation

double EvalReport::top1(const std::string& tag) const {
    for (const TagAccuracy& t : per_tag)
        if (t.tag == tag) return t.top1();
    throw ArgumentError("no records with tag \"" + tag + "\" in the report");
}

std::string EvalReport::to_csv() const {
    std::string out = "tag,count,top1\n";
    for (const TagAccuracy& t : per_tag) out += t.tag + "," + std::to_string(t.count) + "," + fmt(t.top1(), "%.17g") + "\n";
    out += "overall," + std::to_string(total) + "," + fmt(top1(), "%.17g") + "\n";
    return out;
}

namespace {

EvalReport tally(const Dataset& data, std::size_t num_classes, const std::vector<std::size_t>& predictions) {
    EvalReport r;
    r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const DatasetRecord& rec = data.records[i];
        const bool hit = predictions[i] == rec.device_id;
        ++r.total;
        r.correct += hit;
        ++r.confusion[rec.device_id][predictions[i]];
        auto it = std::find_if(r.per_tag.begin(), r.per_tag.end(), [&](const TagAccuracy& t) { return t.tag == rec.channel_tag; });
        if (it == r.per_tag.end()) {
            r.per_tag.push_back({rec.channel_tag, 0, 0});
            it = r.per_tag.end() - 1;
        }
        ++it->count;
        it->correct += hit;
    }
    return r;
}

}  // namespace

EvalReport evaluate(const Model& model, const Dataset& data, std::size_t workers) {
    check_compatible(model.config(), data);
    const std::size_t n = data.records.size();
    std::vector<std::size_t> pred(n);
    workers = std::max<std::size_t>(1, std::min(workers, n));
    std::vector<std::unique_ptr<Model>> copies;
    for (std::size_t w = 0; w < workers; ++w) copies.push_back(model.clone());
    parallel_chunks(n, workers, [&](std::size_t w, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) pred[i] = argmax(copies[w]->forward(data.records[i].burst));
    });
    return tally(data, model.config().num_classes, pred);
}

EvalReport evaluate(const Predictor& predict, std::size_t num_classes, const Dataset& data) {
    if (num_classes != data.num_devices()) throw ConfigError("evaluate: class count does not match the dataset");
    std::vector<std::size_t> pred(data.records.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const std::vector<double> logits = predict(data.records[i].burst);
        if (logits.size() != num_classes) throw SizeError("evaluate: predictor returned the wrong number of logits");
        pred[i] = argmax(logits);
    }
    return tally(data, num_classes, pred);
}

// ---------------------------------------------------------------- experiment

double median(std::vector<double> v) {
    if (v.empty()) throw ArgumentError("median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double ExperimentReport::median(std::size_t model, std::size_t train_set, std::size_t tag) const {
    return charrnet::median(accuracy[model][train_set][tag]);
}

std::size_t ExperimentReport::tag_index(const std::string& tag) const {
    for (std::size_t i = 0; i < test_tags.size(); ++i)
        if (test_tags[i] == tag) return i;
    throw ArgumentError("experiment has no test tag \"" + tag + "\"");
}

std::string ExperimentReport::to_csv() const {
    std::string out = "test_tag";
    for (ModelKind m : models)
        for (const std::string& t : train_sets) out += "," + to_string(m) + "_" + t;
    out += "\n";
    for (std::size_t k = 0; k < test_tags.size(); ++k) {
        out += test_tags[k];
        for (std::size_t m = 0; m < models.size(); ++m)
            for (std::size_t t = 0; t < train_sets.size(); ++t) out += "," + fmt(100.0 * median(m, t, k), "%.2f");
        out += "\n";
    }
    return out;
}

std::uint64_t init_seed_for(std::uint64_t master, ModelKind kind) {
    return derive_seed(master, {kInitStream, static_cast<std::uint64_t>(kind)});
}

std::uint64_t train_seed_for(std::uint64_t master) { return derive_seed(master, {kTrainStream}); }

ExperimentReport channel_shift_experiment(const ExperimentConfig& cfg, const ProgressCallback& progress) {
    if (cfg.seeds.empty() || cfg.models.empty() || cfg.train_sets.empty() || cfg.test_tags.empty())
        throw ConfigError("experiment: seeds, models, train sets and test tags must be non-empty");
    ExperimentReport rep;
    rep.test_tags = cfg.test_tags;
    rep.train_sets = cfg.train_sets;
    rep.models = cfg.models;
    rep.accuracy.assign(cfg.models.size(),
                        std::vector<std::vector<std::vector<double>>>(cfg.train_sets.size(),
                                                                      std::vector<std::vector<double>>(cfg.test_tags.size())));
    DatasetConfig dcfg = cfg.dataset;
    dcfg.train_tags = cfg.train_sets;
    dcfg.test_tags = cfg.test_tags;

    for (std::uint64_t seed : cfg.seeds) {
        if (progress) progress("seed " + std::to_string(seed) + ": generating data");
        const Dataset all = build_dataset(dcfg, seed, cfg.train.workers);
        const Dataset test = all.subset(Split::test);
        for (std::size_t t = 0; t < cfg.train_sets.size(); ++t) {
            const Dataset train_set = select_train_tag(all, cfg.train_sets[t]);
            for (std::size_t m = 0; m < cfg.models.size(); ++m) {
                ModelConfig mc = cfg.model;
                mc.kind = cfg.models[m];
                mc.num_classes = all.num_devices();
                mc.input_length = all.burst_length();
                mc.init_seed = init_seed_for(seed, mc.kind);
                TrainConfig tc = cfg.train;
                tc.seed = train_seed_for(seed);
                const std::string label = to_string(mc.kind) + "/" + cfg.train_sets[t];
                if (progress) progress("seed " + std::to_string(seed) + ": training " + label);
                const TrainResult tr = train(train_set, mc, tc, [&](const EpochStats& s) {
                    if (progress)
                        progress("  " + label + " epoch " + std::to_string(s.epoch) + " loss " + fmt(s.loss, "%.4f") +
                                 " train_top1 " + fmt(s.train_top1, "%.3f"));
                });
                const EvalReport ev = evaluate(*tr.model, test, cfg.train.workers);
                for (std::size_t k = 0; k < cfg.test_tags.size(); ++k) rep.accuracy[m][t][k].push_back(ev.top1(cfg.test_tags[k]));
                if (progress) {
                    std::string line = "  " + label + " test:";
                    for (std::size_t k = 0; k < cfg.test_tags.size(); ++k)
                        line += " " + cfg.test_tags[k] + "=" + fmt(ev.top1(cfg.test_tags[k]), "%.3f");
                    progress(line);
                }
            }
        }
    }
    return rep;
}

}  // namespace charrnet
