#include "diftgame/game.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "json.hpp"

namespace diftgame {

using nlohmann::json;

namespace {

// Version ("v#k") and stage-copy ("v@j") ids inherit the base node's rates:
// they are the same physical node. Strips one derived suffix at a time until
// the map answers.
double lookup_rate(const std::map<std::string, double>& rates, const std::string& id,
                   const char* what) {
    std::string cur = id;
    while (true) {
        auto it = rates.find(cur);
        if (it != rates.end()) return it->second;
        size_t pos = cur.find_last_of("#@");
        bool derived = pos != std::string::npos && pos + 1 < cur.size() &&
                       cur.find_first_not_of("0123456789", pos + 1) == std::string::npos;
        if (!derived)
            throw DomainError(std::string("missing ") + what + " rate for node '" + id + "'");
        cur.resize(pos);
    }
}

}  // namespace

GameSpec GameSpec::build(const IfgGraph& g, DetectionParams params, double beta) {
    g.validate();
    if (!(beta > 0.0)) throw DomainError("beta must be positive");
    for (const auto& n : g.nodes) {
        double fn = lookup_rate(params.fn, n.id, "FN");
        double fp = lookup_rate(params.fp, n.id, "FP");
        for (double r : {fn, fp})
            if (!(r > 0.0 && r < 1.0))
                throw DomainError("rate must lie strictly in (0,1) at node '" + n.id + "'");
    }

    GameSpec spec;
    spec.graph_ = g;
    spec.params_ = std::move(params);
    spec.beta_ = beta;
    spec.q_ = static_cast<int>(g.destinations.size());

    // Destinations first, then the rest, both in document order.
    for (const auto& n : g.nodes)
        if (g.is_destination(n.id)) spec.node_ids_.push_back(n.id);
    for (const auto& n : g.nodes)
        if (!g.is_destination(n.id)) spec.node_ids_.push_back(n.id);
    for (int i = 0; i < static_cast<int>(spec.node_ids_.size()); ++i)
        spec.index_of_[spec.node_ids_[i]] = i;

    int n = spec.node_count();
    spec.fn_.resize(n);
    spec.fp_.resize(n);
    for (int i = 0; i < n; ++i) {
        spec.fn_[i] = lookup_rate(spec.params_.fn, spec.node_ids_[i], "FN");
        spec.fp_[i] = lookup_rate(spec.params_.fp, spec.node_ids_[i], "FP");
    }
    spec.out_.assign(n, {});
    for (const auto& [src, dst] : g.edges)
        spec.out_[spec.index_of_.at(src)].push_back(spec.index_of_.at(dst));
    for (auto& row : spec.out_) std::sort(row.begin(), row.end());

    spec.attacker_actions_.assign(spec.state_count(), {});
    spec.defender_actions_.assign(spec.state_count(), {});
    // v0: attacker picks an entry point, defender cannot trap yet.
    std::vector<int> entry_idx;
    for (const auto& e : g.entries) entry_idx.push_back(spec.index_of_.at(e));
    std::sort(entry_idx.begin(), entry_idx.end());
    spec.attacker_actions_[0] = entry_idx;
    spec.defender_actions_[0] = {kNoTrap};
    for (int i = spec.q_; i < n; ++i) {
        StateId s = spec.node_state(i);
        spec.attacker_actions_[s] = spec.out_[i];
        spec.attacker_actions_[s].push_back(kDrop);
        spec.defender_actions_[s] = {kNoTrap};
        for (int w : spec.out_[i]) spec.defender_actions_[s].push_back(w);
    }
    return spec;
}

int GameSpec::node_of(StateId s) const {
    if (!is_node_state(s)) throw DomainError("state " + std::to_string(s) + " is not a node state");
    return s - 1;
}

std::optional<int> GameSpec::node_index(const std::string& id) const {
    auto it = index_of_.find(id);
    if (it == index_of_.end()) return std::nullopt;
    return it->second;
}

std::string GameSpec::state_name(StateId s) const {
    if (s == virtual_state()) return "v0";
    if (s == dropout_state()) return "phi";
    if (s == detected_state()) return "tau_A";
    if (s == false_positive_state()) return "tau_B";
    return node_ids_.at(node_of(s));
}

std::optional<StateId> GameSpec::state_by_name(const std::string& name) const {
    if (name == "v0") return virtual_state();
    if (name == "phi") return dropout_state();
    if (name == "tau_A") return detected_state();
    if (name == "tau_B") return false_positive_state();
    auto idx = node_index(name);
    if (!idx) return std::nullopt;
    return node_state(*idx);
}

const std::vector<int>& GameSpec::attacker_actions(StateId s) const {
    if (s < 0 || s >= state_count()) throw DomainError("state out of range");
    return attacker_actions_[s];
}

const std::vector<int>& GameSpec::defender_actions(StateId s) const {
    if (s < 0 || s >= state_count()) throw DomainError("state out of range");
    if (is_absorbing(s)) {
        static const std::vector<int> kEmpty;
        return kEmpty;
    }
    return defender_actions_[s];
}

double GameSpec::fn(int node_idx) const {
    if (params_.hidden) throw HiddenParamsError();
    return fn_.at(node_idx);
}

double GameSpec::fp(int node_idx) const {
    if (params_.hidden) throw HiddenParamsError();
    return fp_.at(node_idx);
}

const DetectionParams& GameSpec::params() const {
    if (params_.hidden) throw HiddenParamsError();
    return params_;
}

std::vector<StateId> GameSpec::state_successors(StateId s) const {
    if (is_absorbing(s)) return {};
    std::vector<StateId> succ;
    const auto& aa = attacker_actions(s);
    const auto& dd = defender_actions(s);
    bool has_trap = dd.size() > 1;
    for (int a : aa) succ.push_back(a == kDrop ? dropout_state() : node_state(a));
    if (has_trap) {
        succ.push_back(detected_state());  // some trap can coincide with a move
        succ.push_back(false_positive_state());
    }
    std::sort(succ.begin(), succ.end());
    succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
    return succ;
}

bool GameSpec::state_graph_acyclic() const {
    if (acyclic_cache_) return *acyclic_cache_;
    int n = state_count();
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<StateId>> adj(n);
    for (StateId s = 0; s < n; ++s) {
        if (is_absorbing(s)) continue;
        adj[s] = state_successors(s);
        for (StateId t : adj[s]) indeg[t]++;
    }
    std::queue<StateId> q;
    for (StateId s = 0; s < n; ++s)
        if (indeg[s] == 0) q.push(s);
    int removed = 0;
    while (!q.empty()) {
        StateId s = q.front();
        q.pop();
        removed++;
        for (StateId t : adj[s])
            if (--indeg[t] == 0) q.push(t);
    }
    acyclic_cache_ = removed == n;
    return *acyclic_cache_;
}

namespace {

void check_actions(const GameSpec& spec, StateId s, int a, int d) {
    if (spec.is_absorbing(s))
        throw DomainError("state " + spec.state_name(s) + " is absorbing");
    const auto& aa = spec.attacker_actions(s);
    const auto& dd = spec.defender_actions(s);
    if (std::find(aa.begin(), aa.end(), a) == aa.end())
        throw DomainError("attacker action not available at state " + spec.state_name(s));
    if (std::find(dd.begin(), dd.end(), d) == dd.end())
        throw DomainError("defender action not available at state " + spec.state_name(s));
}

std::vector<TransitionEntry> transition_impl(const GameSpec& spec, StateId s, int a, int d,
                                             double fn_d, double fp_d) {
    StateId move_target = a == kDrop ? spec.dropout_state() : spec.node_state(a);
    if (d == kNoTrap) return {{move_target, 1.0}};
    if (d == a) return {{spec.detected_state(), 1.0 - fn_d}, {move_target, fn_d}};
    return {{spec.false_positive_state(), fp_d}, {move_target, 1.0 - fp_d}};
}

}  // namespace

std::vector<TransitionEntry> transition(const GameSpec& spec, StateId s, int a, int d) {
    if (spec.hidden()) throw HiddenParamsError();
    check_actions(spec, s, a, d);
    if (d == kNoTrap) return transition_impl(spec, s, a, d, 0.0, 0.0);
    return transition_impl(spec, s, a, d, spec.fn(d), spec.fp(d));
}

std::vector<TransitionEntry> transition(const GameSpec& spec, StateId s, int a, int d,
                                        const SimulatorAccess& key) {
    check_actions(spec, s, a, d);
    if (d == kNoTrap) return transition_impl(spec, s, a, d, 0.0, 0.0);
    return transition_impl(spec, s, a, d, spec.raw_fn(d, key), spec.raw_fp(d, key));
}

std::pair<double, double> terminal_payoff(const GameSpec& spec, StateId s) {
    if (!spec.is_absorbing(s))
        throw DomainError("terminal payoff requested at non-absorbing state " + spec.state_name(s));
    double beta = spec.beta();
    if (spec.is_destination_state(s) || s == spec.false_positive_state())
        return {beta, 0.0};
    return {0.0, beta};
}

Strategy Strategy::empty(const GameSpec& spec) {
    Strategy s;
    s.apt.assign(spec.state_count(), {});
    s.dift.assign(spec.state_count(), {});
    return s;
}

Strategy Strategy::uniform(const GameSpec& spec) {
    Strategy s = empty(spec);
    for (StateId st = 0; st < spec.state_count(); ++st) {
        if (spec.is_absorbing(st)) continue;
        size_t na = spec.attacker_actions(st).size();
        s.apt[st].assign(na, 1.0 / static_cast<double>(na));
        if (st != spec.virtual_state()) {
            size_t nd = spec.defender_actions(st).size();
            s.dift[st].assign(nd, 1.0 / static_cast<double>(nd));
        }
    }
    return s;
}

namespace {

constexpr double kSimplexTol = 1e-9;

StrategyCheck simplex_violation(const GameSpec& spec, StateId st, const std::vector<double>& p,
                                size_t expected, const char* who) {
    StrategyCheck c;
    if (p.size() != expected) {
        c.ok = false;
        std::ostringstream os;
        os << who << " distribution at " << spec.state_name(st) << " has " << p.size()
           << " entries, expected " << expected;
        c.message = os.str();
        return c;
    }
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0) {
            c.ok = false;
            c.message = std::string(who) + " probability negative at " + spec.state_name(st);
            return c;
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTol) {
        c.ok = false;
        std::ostringstream os;
        os << who << " distribution sums to " << sum << " at " << spec.state_name(st);
        c.message = os.str();
    }
    return c;
}

}  // namespace

StrategyCheck validate_attacker(const GameSpec& spec, const Strategy& s) {
    if (s.apt.size() != static_cast<size_t>(spec.state_count()))
        return {false, "strategy state dimension mismatch"};
    for (StateId st = 0; st < spec.state_count(); ++st) {
        if (spec.is_absorbing(st)) {
            if (!s.apt[st].empty())
                return {false, "strategy entry at absorbing state " + spec.state_name(st)};
            continue;
        }
        auto c = simplex_violation(spec, st, s.apt[st], spec.attacker_actions(st).size(), "apt");
        if (!c.ok) return c;
    }
    return {};
}

StrategyCheck validate_defender(const GameSpec& spec, const Strategy& s) {
    if (s.dift.size() != static_cast<size_t>(spec.state_count()))
        return {false, "strategy state dimension mismatch"};
    for (StateId st = 0; st < spec.state_count(); ++st) {
        if (spec.is_absorbing(st)) {
            if (!s.dift[st].empty())
                return {false, "strategy entry at absorbing state " + spec.state_name(st)};
            continue;
        }
        if (st == spec.virtual_state()) {
            if (!s.dift[st].empty()) return {false, "dift strategy has an entry at v0"};
            continue;
        }
        auto c = simplex_violation(spec, st, s.dift[st], spec.defender_actions(st).size(), "dift");
        if (!c.ok) return c;
    }
    return {};
}

StrategyCheck validate_strategy(const GameSpec& spec, const Strategy& s) {
    auto c = validate_attacker(spec, s);
    if (!c.ok) return c;
    return validate_defender(spec, s);
}

GameSpec load_game(const std::string& json_text) {
    IfgGraph g = load_ifg(json_text);
    json doc = json::parse(json_text);
    if (!doc.contains("fn") || !doc.contains("fp") || !doc.contains("beta"))
        throw DomainError("game document must contain fn, fp, beta");
    DetectionParams params;
    try {
        params.fn = doc.at("fn").get<std::map<std::string, double>>();
        params.fp = doc.at("fp").get<std::map<std::string, double>>();
        params.hidden = doc.value("hidden", false);
        return GameSpec::build(g, std::move(params), doc.at("beta").get<double>());
    } catch (const json::exception& e) {
        throw DomainError(std::string("malformed game document: ") + e.what());
    }
}

std::string game_to_json(const GameSpec& spec) {
    json doc = json::parse(ifg_to_json(spec.graph()));
    doc["fn"] = spec.params_.fn;
    doc["fp"] = spec.params_.fp;
    doc["beta"] = spec.beta_;
    doc["hidden"] = spec.params_.hidden;
    return doc.dump(2) + "\n";
}

DetectionParams load_params(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
        DetectionParams params;
        params.fn = doc.at("fn").get<std::map<std::string, double>>();
        params.fp = doc.at("fp").get<std::map<std::string, double>>();
        params.hidden = doc.value("hidden", false);
        return params;
    } catch (const json::exception& e) {
        throw DomainError(std::string("malformed params document: ") + e.what());
    }
}

namespace {

std::string attacker_action_name(const GameSpec& spec, int a) {
    return a == kDrop ? "phi" : spec.node_id(a);
}

std::string defender_action_name(const GameSpec& spec, int d) {
    return d == kNoTrap ? "0" : spec.node_id(d);
}

int attacker_action_by_name(const GameSpec& spec, StateId st, const std::string& name) {
    int a;
    if (name == "phi") {
        a = kDrop;
    } else {
        auto idx = spec.node_index(name);
        if (!idx) throw DomainError("unsupported action '" + name + "'");
        a = *idx;
    }
    const auto& aa = spec.attacker_actions(st);
    if (std::find(aa.begin(), aa.end(), a) == aa.end())
        throw DomainError("unsupported action '" + name + "' at state " + spec.state_name(st));
    return a;
}

int defender_action_by_name(const GameSpec& spec, StateId st, const std::string& name) {
    int d;
    if (name == "0") {
        d = kNoTrap;
    } else {
        auto idx = spec.node_index(name);
        if (!idx) throw DomainError("unsupported action '" + name + "'");
        d = *idx;
    }
    const auto& dd = spec.defender_actions(st);
    if (std::find(dd.begin(), dd.end(), d) == dd.end())
        throw DomainError("unsupported action '" + name + "' at state " + spec.state_name(st));
    return d;
}

}  // namespace

Strategy strategy_from_json(const GameSpec& spec, const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw DomainError(std::string("malformed strategy document: ") + e.what());
    }
    Strategy s = Strategy::empty(spec);
    auto fill = [&](const char* key, bool attacker) {
        if (!doc.contains(key)) throw DomainError(std::string("strategy missing '") + key + "'");
        for (const auto& [state_name, dist] : doc.at(key).items()) {
            auto st = spec.state_by_name(state_name);
            if (!st) throw DomainError("unknown state '" + state_name + "' in strategy");
            if (spec.is_absorbing(*st))
                throw DomainError("strategy entry at absorbing state " + state_name);
            const auto& actions =
                attacker ? spec.attacker_actions(*st) : spec.defender_actions(*st);
            std::vector<double> p(actions.size(), 0.0);
            for (const auto& [action_name, prob] : dist.items()) {
                int action = attacker ? attacker_action_by_name(spec, *st, action_name)
                                      : defender_action_by_name(spec, *st, action_name);
                auto pos = std::find(actions.begin(), actions.end(), action) - actions.begin();
                p[pos] = prob.get<double>();
            }
            (attacker ? s.apt : s.dift)[*st] = std::move(p);
        }
    };
    fill("apt", true);
    fill("dift", false);
    auto check = validate_strategy(spec, s);
    if (!check.ok) throw DomainError("invalid strategy: " + check.message);
    return s;
}

std::string strategy_to_json(const GameSpec& spec, const Strategy& s) {
    json doc{{"apt", json::object()}, {"dift", json::object()}};
    for (StateId st = 0; st < spec.state_count(); ++st) {
        if (!s.apt[st].empty()) {
            json dist = json::object();
            const auto& aa = spec.attacker_actions(st);
            for (size_t i = 0; i < aa.size(); ++i)
                dist[attacker_action_name(spec, aa[i])] = s.apt[st][i];
            doc["apt"][spec.state_name(st)] = dist;
        }
        if (!s.dift[st].empty()) {
            json dist = json::object();
            const auto& dd = spec.defender_actions(st);
            for (size_t i = 0; i < dd.size(); ++i)
                dist[defender_action_name(spec, dd[i])] = s.dift[st][i];
            doc["dift"][spec.state_name(st)] = dist;
        }
    }
    return doc.dump(2) + "\n";
}

}  // namespace diftgame
