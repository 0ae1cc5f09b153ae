#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diftgame/game.hpp"

namespace diftgame {

// Canonical flattening of a strategy pair: attacker blocks first, then
// defender blocks, states in topological order, actions in action-set order.
// A fixed function of the GameSpec, so encodings round-trip losslessly.
struct EncodingSpec {
    struct Block {
        StateId state;
        int offset;
        int size;
        std::vector<int> actions;  // canonical action order for this block
    };
    std::vector<Block> attacker_blocks;
    std::vector<Block> defender_blocks;
    int input_dim = 0;
    int output_dim = 0;  // |S|
};

EncodingSpec make_encoding(const GameSpec& spec);  // requires acyclic state graph

std::vector<double> encode(const EncodingSpec& enc, const Strategy& apt, const Strategy& dift);
void decode(const EncodingSpec& enc, const std::vector<double>& x, Strategy& apt, Strategy& dift);

struct Dataset {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> labels;
    double beta = 0.0;
    // generation metadata
    long long rollouts_per_sample = 0;
    double mix = 0.0;
    uint64_t seed = 0;
};

// Dense feedforward approximator (p_A, p_D) -> V: rectifier hidden layers,
// identity output. Weights are fan-in scaled uniform, seeded.
class ValueNet {
public:
    ValueNet(EncodingSpec enc, std::vector<int> hidden, double beta, uint64_t seed);

    const EncodingSpec& encoding() const { return enc_; }
    double beta() const { return beta_; }
    std::vector<int> layout() const;  // [input, hidden..., output]

    std::vector<double> forward(const std::vector<double>& x) const;  // unclamped

    // Mean over output coordinates of squared error.
    double loss(const std::vector<double>& x, const std::vector<double>& y) const;
    // Analytic d loss / d weights, flattened; same order as flat_weights().
    std::vector<double> loss_gradient(const std::vector<double>& x,
                                      const std::vector<double>& y) const;

    std::vector<double> flat_weights() const;
    void set_flat_weights(const std::vector<double>& w);

    // One mini-batch SGD step on the mean loss; returns the batch loss.
    double sgd_step(const std::vector<const std::vector<double>*>& xs,
                    const std::vector<const std::vector<double>*>& ys, double lr);

private:
    struct Layer {
        int in = 0, out = 0;
        std::vector<double> w;  // row-major out x in
        std::vector<double> b;
    };
    void forward_cached(const std::vector<double>& x,
                        std::vector<std::vector<double>>& acts) const;
    // Adds scale * d(sample loss)/d(weights) into grad; returns the sample loss.
    double accumulate_gradient(const std::vector<double>& x, const std::vector<double>& y,
                               std::vector<Layer>& grad, double scale) const;

    EncodingSpec enc_;
    double beta_ = 0.0;
    std::vector<Layer> layers_;
};

struct TrainReport {
    int epochs = 0;
    double final_loss = 0.0;
    double mu_val = 0.0;      // mean absolute validation error
    double mu_val_rel = 0.0;  // mu_val / beta
    size_t train_size = 0;
    size_t val_size = 0;
    uint64_t seed = 0;
    bool high_error = false;  // mu_val > 0.01 * beta
    std::vector<double> loss_trace;
    std::vector<double> mu_val_trace;
};

// Random strategy pairs labelled by simulator value estimates. Attacker
// policies are uniformly random deterministic; the defender side is
// Dirichlet(1,..,1)-mixed with probability `mix`, deterministic otherwise.
Dataset generate_dataset(const GameSpec& spec, long long n_samples,
                         long long rollouts_per_sample, double mix, uint64_t seed,
                         int threads = 1);

// Mini-batch SGD on mean squared error with a seeded 90/10 train/validation
// split. Deterministic given the seed; throws on divergence (NaN loss),
// naming the epoch.
std::pair<ValueNet, TrainReport> train(const Dataset& data, const GameSpec& spec,
                                       const std::vector<int>& hidden, int epochs, double lr,
                                       int batch_size, uint64_t seed);

// Forward pass on the encoded pair, clamped to [0, beta].
std::vector<double> predict(const ValueNet& net, const Strategy& apt, const Strategy& dift);

// Q(s,a,d) read off the net by forcing the pair deterministic at s:
// with p_A(s,a)=1 and p_D(s,d)=1 the predicted V(s) is the Q-value.
double extract_q(const ValueNet& net, const Strategy& apt, const Strategy& dift, StateId s,
                 int a, int d);

std::string net_to_json(const GameSpec& spec, const ValueNet& net);
ValueNet net_from_json(const GameSpec& spec, const std::string& json_text);

std::string dataset_to_json(const GameSpec& spec, const Dataset& data);
Dataset dataset_from_json(const GameSpec& spec, const std::string& json_text);
// Dataset documents embed their game, so training needs no extra input.
GameSpec dataset_game(const std::string& json_text);

}  // namespace diftgame
