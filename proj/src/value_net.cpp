#include "diftgame/value_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "diftgame/simulator.hpp"
#include "diftgame/vi_solver.hpp"
#include "json.hpp"

namespace diftgame {

using nlohmann::json;

namespace {

double dot(const double* a, const double* b, int n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

void axpy(double alpha, const double* x, double* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

EncodingSpec make_encoding(const GameSpec& spec) {
    Leveling lv = compute_leveling(spec);  // errors on cyclic state graphs
    EncodingSpec enc;
    enc.output_dim = spec.state_count();
    int offset = 0;
    for (StateId s : lv.topo_order) {
        if (spec.is_absorbing(s)) continue;
        const auto& actions = spec.attacker_actions(s);
        enc.attacker_blocks.push_back({s, offset, static_cast<int>(actions.size()), actions});
        offset += static_cast<int>(actions.size());
    }
    for (StateId s : lv.topo_order) {
        if (spec.is_absorbing(s) || s == spec.virtual_state()) continue;
        const auto& actions = spec.defender_actions(s);
        enc.defender_blocks.push_back({s, offset, static_cast<int>(actions.size()), actions});
        offset += static_cast<int>(actions.size());
    }
    enc.input_dim = offset;
    return enc;
}

std::vector<double> encode(const EncodingSpec& enc, const Strategy& apt, const Strategy& dift) {
    std::vector<double> x(enc.input_dim, 0.0);
    for (const auto& blk : enc.attacker_blocks) {
        const auto& p = apt.apt.at(blk.state);
        if (static_cast<int>(p.size()) != blk.size)
            throw DomainError("strategy encoding dimension mismatch");
        std::copy(p.begin(), p.end(), x.begin() + blk.offset);
    }
    for (const auto& blk : enc.defender_blocks) {
        const auto& p = dift.dift.at(blk.state);
        if (static_cast<int>(p.size()) != blk.size)
            throw DomainError("strategy encoding dimension mismatch");
        std::copy(p.begin(), p.end(), x.begin() + blk.offset);
    }
    return x;
}

void decode(const EncodingSpec& enc, const std::vector<double>& x, Strategy& apt,
            Strategy& dift) {
    if (static_cast<int>(x.size()) != enc.input_dim)
        throw DomainError("strategy encoding dimension mismatch");
    for (const auto& blk : enc.attacker_blocks)
        apt.apt.at(blk.state).assign(x.begin() + blk.offset, x.begin() + blk.offset + blk.size);
    for (const auto& blk : enc.defender_blocks)
        dift.dift.at(blk.state).assign(x.begin() + blk.offset, x.begin() + blk.offset + blk.size);
}

ValueNet::ValueNet(EncodingSpec enc, std::vector<int> hidden, double beta, uint64_t seed)
    : enc_(std::move(enc)), beta_(beta) {
    if (enc_.input_dim <= 0 || enc_.output_dim <= 0) throw DomainError("empty net layout");
    std::vector<int> dims;
    dims.push_back(enc_.input_dim);
    for (int h : hidden) {
        if (h <= 0) throw DomainError("hidden layer width must be positive");
        dims.push_back(h);
    }
    dims.push_back(enc_.output_dim);
    Rng rng(seed);
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        Layer layer;
        layer.in = dims[l];
        layer.out = dims[l + 1];
        double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
        layer.w.resize(static_cast<size_t>(layer.in) * layer.out);
        layer.b.assign(layer.out, 0.0);
        for (auto& w : layer.w) w = rng.uniform(-bound, bound);
        layers_.push_back(std::move(layer));
    }
}

std::vector<int> ValueNet::layout() const {
    std::vector<int> dims{layers_.front().in};
    for (const auto& l : layers_) dims.push_back(l.out);
    return dims;
}

void ValueNet::forward_cached(const std::vector<double>& x,
                              std::vector<std::vector<double>>& acts) const {
    acts.assign(layers_.size() + 1, {});
    acts[0] = x;
    for (size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        acts[l + 1].resize(layer.out);
        bool last = l + 1 == layers_.size();
        for (int o = 0; o < layer.out; ++o) {
            double z = layer.b[o] + dot(&layer.w[static_cast<size_t>(o) * layer.in],
                                        acts[l].data(), layer.in);
            acts[l + 1][o] = last ? z : std::max(0.0, z);
        }
    }
}

std::vector<double> ValueNet::forward(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != enc_.input_dim)
        throw DomainError("net input dimension mismatch");
    std::vector<std::vector<double>> acts;
    forward_cached(x, acts);
    return acts.back();
}

double ValueNet::loss(const std::vector<double>& x, const std::vector<double>& y) const {
    auto out = forward(x);
    double s = 0.0;
    for (size_t i = 0; i < out.size(); ++i) {
        double d = out[i] - y[i];
        s += d * d;
    }
    return s / static_cast<double>(out.size());
}

double ValueNet::accumulate_gradient(const std::vector<double>& x, const std::vector<double>& y,
                                     std::vector<Layer>& grad, double scale) const {
    std::vector<std::vector<double>> acts;
    forward_cached(x, acts);
    const auto& out = acts.back();
    std::vector<double> delta(out.size());
    double h = 2.0 * scale / static_cast<double>(out.size());
    double sample_loss = 0.0;
    for (size_t i = 0; i < out.size(); ++i) {
        double d = out[i] - y[i];
        sample_loss += d * d;
        delta[i] = h * d;
    }
    sample_loss /= static_cast<double>(out.size());

    for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
        const Layer& layer = layers_[l];
        Layer& g = grad[l];
        const auto& input = acts[l];
        for (int o = 0; o < layer.out; ++o) {
            if (delta[o] == 0.0) continue;
            axpy(delta[o], input.data(), &g.w[static_cast<size_t>(o) * layer.in], layer.in);
            g.b[o] += delta[o];
        }
        if (l == 0) break;
        std::vector<double> prev(layer.in, 0.0);
        for (int o = 0; o < layer.out; ++o) {
            if (delta[o] == 0.0) continue;
            axpy(delta[o], &layer.w[static_cast<size_t>(o) * layer.in], prev.data(), layer.in);
        }
        // Rectifier gate: gradient passes only where the unit fired.
        for (int i = 0; i < layer.in; ++i)
            if (acts[l][i] <= 0.0) prev[i] = 0.0;
        delta = std::move(prev);
    }
    return sample_loss;
}

std::vector<double> ValueNet::loss_gradient(const std::vector<double>& x,
                                            const std::vector<double>& y) const {
    std::vector<Layer> grad = layers_;
    for (auto& g : grad) {
        std::fill(g.w.begin(), g.w.end(), 0.0);
        std::fill(g.b.begin(), g.b.end(), 0.0);
    }
    accumulate_gradient(x, y, grad, 1.0);
    std::vector<double> flat;
    for (const auto& g : grad) {
        flat.insert(flat.end(), g.w.begin(), g.w.end());
        flat.insert(flat.end(), g.b.begin(), g.b.end());
    }
    return flat;
}

std::vector<double> ValueNet::flat_weights() const {
    std::vector<double> flat;
    for (const auto& l : layers_) {
        flat.insert(flat.end(), l.w.begin(), l.w.end());
        flat.insert(flat.end(), l.b.begin(), l.b.end());
    }
    return flat;
}

void ValueNet::set_flat_weights(const std::vector<double>& w) {
    size_t pos = 0;
    for (auto& l : layers_) {
        if (pos + l.w.size() + l.b.size() > w.size())
            throw DomainError("weight vector dimension mismatch");
        std::copy(w.begin() + pos, w.begin() + pos + l.w.size(), l.w.begin());
        pos += l.w.size();
        std::copy(w.begin() + pos, w.begin() + pos + l.b.size(), l.b.begin());
        pos += l.b.size();
    }
    if (pos != w.size()) throw DomainError("weight vector dimension mismatch");
}

double ValueNet::sgd_step(const std::vector<const std::vector<double>*>& xs,
                          const std::vector<const std::vector<double>*>& ys, double lr) {
    std::vector<Layer> grad = layers_;
    for (auto& g : grad) {
        std::fill(g.w.begin(), g.w.end(), 0.0);
        std::fill(g.b.begin(), g.b.end(), 0.0);
    }
    double batch_loss = 0.0;
    double scale = 1.0 / static_cast<double>(xs.size());
    for (size_t i = 0; i < xs.size(); ++i)
        batch_loss += accumulate_gradient(*xs[i], *ys[i], grad, scale) * scale;
    for (size_t l = 0; l < layers_.size(); ++l) {
        axpy(-lr, grad[l].w.data(), layers_[l].w.data(), static_cast<int>(layers_[l].w.size()));
        axpy(-lr, grad[l].b.data(), layers_[l].b.data(), static_cast<int>(layers_[l].b.size()));
    }
    return batch_loss;
}

Dataset generate_dataset(const GameSpec& spec, long long n_samples,
                         long long rollouts_per_sample, double mix, uint64_t seed,
                         int threads) {
    if (n_samples < 1) throw DomainError("sample count must be >= 1");
    if (rollouts_per_sample < 1) throw DomainError("rollouts per sample must be >= 1");
    if (mix < 0.0 || mix > 1.0) throw DomainError("mix must lie in [0,1]");
    EncodingSpec enc = make_encoding(spec);

    Dataset data;
    data.inputs.resize(n_samples);
    data.labels.resize(n_samples);
    data.beta = spec.beta();
    data.rollouts_per_sample = rollouts_per_sample;
    data.mix = mix;
    data.seed = seed;

    auto gen_range = [&](long long lo, long long hi) {
        for (long long i = lo; i < hi; ++i) {
            Rng rng(derive_seed(seed, i));
            Strategy apt = Strategy::empty(spec);
            Strategy dift = Strategy::empty(spec);
            for (const auto& blk : enc.attacker_blocks) {
                std::vector<double> p(blk.size, 0.0);
                p[rng.uniform_int(blk.size)] = 1.0;
                apt.apt[blk.state] = std::move(p);
            }
            bool stochastic = rng.uniform() < mix;
            for (const auto& blk : enc.defender_blocks) {
                std::vector<double> p(blk.size, 0.0);
                if (stochastic) {
                    double total = 0.0;
                    for (auto& v : p) {
                        v = -std::log(1.0 - rng.uniform());
                        total += v;
                    }
                    if (total > 0.0)
                        for (auto& v : p) v /= total;
                    else
                        p.assign(blk.size, 1.0 / blk.size);
                } else {
                    p[rng.uniform_int(blk.size)] = 1.0;
                }
                dift.dift[blk.state] = std::move(p);
            }
            data.labels[i] = value_samples(spec, apt, dift, rollouts_per_sample,
                                           derive_seed(seed, 0xDA7AULL ^ i), 1);
            data.inputs[i] = encode(enc, apt, dift);
        }
    };

    threads = std::max(1, threads);
    if (threads == 1) {
        gen_range(0, n_samples);
    } else {
        std::vector<std::thread> pool;
        long long chunk = (n_samples + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            long long lo = t * chunk, hi = std::min<long long>(n_samples, lo + chunk);
            if (lo < hi) pool.emplace_back([&gen_range, lo, hi] { gen_range(lo, hi); });
        }
        for (auto& th : pool) th.join();
    }
    return data;
}

namespace {

// Validation error on the payoff scale: clamped rescaled predictions vs
// labels, mean absolute over coordinates and samples.
double mean_abs_val_error(const ValueNet& net, const Dataset& data,
                          const std::vector<size_t>& val_idx) {
    if (val_idx.empty()) return std::numeric_limits<double>::quiet_NaN();
    double total = 0.0;
    for (size_t idx : val_idx) {
        auto out = net.forward(data.inputs[idx]);
        double s = 0.0;
        for (size_t i = 0; i < out.size(); ++i) {
            double rescaled = std::clamp(out[i] * net.beta(), 0.0, net.beta());
            s += std::abs(rescaled - data.labels[idx][i]);
        }
        total += s / static_cast<double>(out.size());
    }
    return total / static_cast<double>(val_idx.size());
}

}  // namespace

std::pair<ValueNet, TrainReport> train(const Dataset& data, const GameSpec& spec,
                                       const std::vector<int>& hidden, int epochs, double lr,
                                       int batch_size, uint64_t seed) {
    if (data.inputs.empty()) throw DomainError("training dataset is empty");
    if (batch_size < 1) throw DomainError("batch size must be >= 1");
    if (epochs < 0) throw DomainError("epoch count must be >= 0");

    EncodingSpec enc = make_encoding(spec);
    for (const auto& x : data.inputs)
        if (static_cast<int>(x.size()) != enc.input_dim)
            throw DomainError("dataset encoding dimension mismatch");

    ValueNet net(enc, hidden, spec.beta(), derive_seed(seed, 0x1217ULL));

    // The net regresses values on the [0,1] scale so one learning rate works
    // across payoff parameters; predictions rescale by beta.
    std::vector<std::vector<double>> scaled_labels = data.labels;
    for (auto& y : scaled_labels)
        for (auto& v : y) v /= spec.beta();

    size_t n = data.inputs.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 0x5807ULL));
    for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(static_cast<int>(i))]);

    size_t val_count = n / 10;
    std::vector<size_t> val_idx(order.end() - val_count, order.end());
    std::vector<size_t> train_idx(order.begin(), order.end() - val_count);
    if (train_idx.empty()) {
        train_idx = val_idx;
        val_idx.clear();
    }

    TrainReport rep;
    rep.seed = seed;
    rep.train_size = train_idx.size();
    rep.val_size = val_idx.size();

    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (size_t i = train_idx.size(); i > 1; --i)
            std::swap(train_idx[i - 1], train_idx[rng.uniform_int(static_cast<int>(i))]);
        double epoch_loss = 0.0;
        size_t batches = 0;
        for (size_t pos = 0; pos < train_idx.size(); pos += batch_size) {
            size_t end = std::min(train_idx.size(), pos + batch_size);
            std::vector<const std::vector<double>*> xs, ys;
            xs.reserve(end - pos);
            ys.reserve(end - pos);
            for (size_t i = pos; i < end; ++i) {
                xs.push_back(&data.inputs[train_idx[i]]);
                ys.push_back(&scaled_labels[train_idx[i]]);
            }
            epoch_loss += net.sgd_step(xs, ys, lr);
            batches++;
        }
        epoch_loss /= static_cast<double>(batches);
        if (!std::isfinite(epoch_loss))
            throw DomainError("training diverged (loss not finite) at epoch " +
                              std::to_string(epoch + 1));
        rep.loss_trace.push_back(epoch_loss);
        rep.mu_val_trace.push_back(mean_abs_val_error(net, data, val_idx));
        rep.epochs = epoch + 1;
    }
    rep.final_loss = rep.loss_trace.empty() ? 0.0 : rep.loss_trace.back();
    rep.mu_val = rep.mu_val_trace.empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : rep.mu_val_trace.back();
    rep.mu_val_rel = rep.mu_val / spec.beta();
    rep.high_error = rep.mu_val > 0.01 * spec.beta();
    return {std::move(net), std::move(rep)};
}

std::vector<double> predict(const ValueNet& net, const Strategy& apt, const Strategy& dift) {
    auto out = net.forward(encode(net.encoding(), apt, dift));
    for (auto& v : out) v = std::clamp(v * net.beta(), 0.0, net.beta());
    return out;
}

double extract_q(const ValueNet& net, const Strategy& apt, const Strategy& dift, StateId s,
                 int a, int d) {
    const EncodingSpec& enc = net.encoding();
    auto find_block = [s](const std::vector<EncodingSpec::Block>& blocks)
        -> const EncodingSpec::Block* {
        for (const auto& blk : blocks)
            if (blk.state == s) return &blk;
        return nullptr;
    };
    auto point_mass = [](const EncodingSpec::Block& blk, int action, const char* who) {
        auto it = std::find(blk.actions.begin(), blk.actions.end(), action);
        if (it == blk.actions.end())
            throw DomainError(std::string(who) + " action not available at this state");
        std::vector<double> p(blk.size, 0.0);
        p[it - blk.actions.begin()] = 1.0;
        return p;
    };

    const auto* ablk = find_block(enc.attacker_blocks);
    if (!ablk) throw DomainError("state carries no attacker strategy block");
    Strategy apt2 = apt, dift2 = dift;
    apt2.apt.at(s) = point_mass(*ablk, a, "attacker");
    if (const auto* dblk = find_block(enc.defender_blocks)) {
        dift2.dift.at(s) = point_mass(*dblk, d, "defender");
    } else if (d != kNoTrap) {
        // v0 carries no defender block; the only action there is no-trap.
        throw DomainError("defender action not available at this state");
    }
    return predict(net, apt2, dift2)[s];
}

std::string net_to_json(const GameSpec& spec, const ValueNet& net) {
    const EncodingSpec& enc = net.encoding();
    json doc;
    doc["version"] = 1;
    doc["layout"] = net.layout();
    doc["weights"] = net.flat_weights();
    doc["beta"] = net.beta();
    auto blocks_json = [&](const std::vector<EncodingSpec::Block>& blocks, bool attacker) {
        json arr = json::array();
        for (const auto& blk : blocks) {
            json actions = json::array();
            for (int act : blk.actions) {
                if (act < 0)
                    actions.push_back(attacker ? "phi" : "0");
                else
                    actions.push_back(spec.node_id(act));
            }
            arr.push_back({{"state", spec.state_name(blk.state)}, {"actions", actions}});
        }
        return arr;
    };
    doc["encoding_spec"] = {{"attacker", blocks_json(enc.attacker_blocks, true)},
                            {"defender", blocks_json(enc.defender_blocks, false)}};
    return doc.dump() + "\n";
}

ValueNet net_from_json(const GameSpec& spec, const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
        if (doc.value("version", 0) != 1) throw DomainError("unsupported net version");
        auto layout = doc.at("layout").get<std::vector<int>>();
        auto weights = doc.at("weights").get<std::vector<double>>();
        double beta = doc.at("beta").get<double>();

        EncodingSpec enc = make_encoding(spec);
        if (layout.size() < 2 || layout.front() != enc.input_dim ||
            layout.back() != enc.output_dim)
            throw DomainError("net encoding does not match this game");
        if (beta != spec.beta())
            throw DomainError("net was trained for beta=" + std::to_string(beta) +
                              ", game has beta=" + std::to_string(spec.beta()));
        // Cross-check the serialized encoding against the spec's canonical one.
        auto check_blocks = [&](const json& arr, const std::vector<EncodingSpec::Block>& blocks,
                                bool attacker) {
            if (arr.size() != blocks.size())
                throw DomainError("net encoding does not match this game");
            for (size_t i = 0; i < blocks.size(); ++i) {
                auto state = spec.state_by_name(arr[i].at("state").get<std::string>());
                if (!state || *state != blocks[i].state)
                    throw DomainError("net encoding does not match this game");
                const auto& actions = arr[i].at("actions");
                if (actions.size() != blocks[i].actions.size())
                    throw DomainError("net encoding does not match this game");
                for (size_t j = 0; j < blocks[i].actions.size(); ++j) {
                    int act = blocks[i].actions[j];
                    std::string expected =
                        act < 0 ? (attacker ? "phi" : "0") : spec.node_id(act);
                    if (actions[j].get<std::string>() != expected)
                        throw DomainError("net encoding does not match this game");
                }
            }
        };
        check_blocks(doc.at("encoding_spec").at("attacker"), enc.attacker_blocks, true);
        check_blocks(doc.at("encoding_spec").at("defender"), enc.defender_blocks, false);

        std::vector<int> hidden(layout.begin() + 1, layout.end() - 1);
        ValueNet net(enc, hidden, beta, 0);
        net.set_flat_weights(weights);
        return net;
    } catch (const json::exception& e) {
        throw DomainError(std::string("malformed net document: ") + e.what());
    }
}

std::string dataset_to_json(const GameSpec& spec, const Dataset& data) {
    json doc;
    doc["version"] = 1;
    doc["beta"] = data.beta;
    doc["game"] = json::parse(game_to_json(spec));  // self-contained for training
    doc["meta"] = {{"rollouts_per_sample", data.rollouts_per_sample},
                   {"mix", data.mix},
                   {"seed", data.seed},
                   {"samples", data.inputs.size()}};
    doc["inputs"] = data.inputs;
    doc["labels"] = data.labels;
    return doc.dump() + "\n";
}

GameSpec dataset_game(const std::string& json_text) {
    try {
        json doc = json::parse(json_text);
        return load_game(doc.at("game").dump());
    } catch (const json::exception& e) {
        throw DomainError(std::string("malformed dataset document: ") + e.what());
    }
}

Dataset dataset_from_json(const GameSpec& spec, const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
        if (doc.value("version", 0) != 1) throw DomainError("unsupported dataset version");
        Dataset data;
        data.beta = doc.at("beta").get<double>();
        data.inputs = doc.at("inputs").get<std::vector<std::vector<double>>>();
        data.labels = doc.at("labels").get<std::vector<std::vector<double>>>();
        data.rollouts_per_sample = doc.at("meta").at("rollouts_per_sample").get<long long>();
        data.mix = doc.at("meta").at("mix").get<double>();
        data.seed = doc.at("meta").at("seed").get<uint64_t>();
        if (data.inputs.size() != data.labels.size())
            throw DomainError("dataset inputs/labels size mismatch");
        EncodingSpec enc = make_encoding(spec);
        for (const auto& y : data.labels)
            if (static_cast<int>(y.size()) != enc.output_dim)
                throw DomainError("dataset label dimension mismatch");
        return data;
    } catch (const json::exception& e) {
        throw DomainError(std::string("malformed dataset document: ") + e.what());
    }
}

}  // namespace diftgame
