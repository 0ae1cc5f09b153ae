#include "diftgame/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "diftgame/hsl.hpp"
#include "diftgame/ifg.hpp"

namespace diftgame::cli {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot read file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DomainError("cannot write file '" + path + "'");
    out << content;
}

std::string hex64(uint64_t v) {
    char buf[17];
    snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// One manifest per run, written next to the primary output.
struct ManifestScope {
    std::string subcommand;
    json config = json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    void emit() const {
        if (outputs.empty()) return;
        json doc;
        doc["subcommand"] = subcommand;
        doc["config"] = config;
        doc["seed"] = config.contains("seed") ? config.at("seed") : json();
        doc["inputs"] = inputs;
        doc["outputs"] = outputs;
        auto elapsed = std::chrono::steady_clock::now() - started;
        doc["wall_clock_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
        json hashes = json::object();
        for (const auto& path : inputs) hashes[path] = hex64(fnv1a(read_file(path)));
        for (const auto& path : outputs) hashes[path] = hex64(fnv1a(read_file(path)));
        doc["artifact_hashes"] = hashes;
        write_file(outputs.front() + ".manifest.json", doc.dump(2) + "\n");
    }
};

int default_threads() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

StateId parse_state(const GameSpec& spec, const std::string& name) {
    auto s = spec.state_by_name(name);
    if (!s) throw DomainError("unknown state '" + name + "'");
    return *s;
}

std::string dump_q_json(const GameSpec& spec, const std::vector<double>& values) {
    json doc = json::object();
    for (StateId s = 0; s < spec.state_count(); ++s) {
        if (spec.is_absorbing(s)) continue;
        QMatrix qm = q_from_values(spec, s, values);
        json rows = json::array(), cols = json::array();
        for (int d : qm.defender_actions) rows.push_back(d == kNoTrap ? "0" : spec.node_id(d));
        for (int a : qm.attacker_actions) cols.push_back(a == kDrop ? "phi" : spec.node_id(a));
        doc[spec.state_name(s)] = {{"defender_actions", rows},
                                   {"attacker_actions", cols},
                                   {"q", qm.q}};
    }
    return doc.dump(2) + "\n";
}

struct SweepOptions {
    std::vector<double> betas;
    long long samples = 10000;
    long long rollouts = 50;
    double mix = 0.4;
    std::vector<int> hidden{64, 64};
    int epochs = 100;
    double lr = 0.01;
    int batch = 32;
    int trials = 3;
    uint64_t seed = 7;
    int threads = 1;
};

// For each beta: solve the game exactly, run the full hidden-rate pipeline
// (generate, train, level-wise solve), and record the mean absolute error
// between the exact and learned value vectors.
std::vector<std::pair<double, double>> run_beta_sweep(const GameSpec& base,
                                                      const SweepOptions& opt) {
    if (base.hidden())
        throw DomainError("beta sweep needs an unhidden game for the exact reference");
    std::vector<std::pair<double, double>> rows;
    for (double beta : opt.betas) {
        GameSpec exact_spec = GameSpec::build(base.graph(), base.params(), beta);
        SolveReport truth = solve_acyclic(exact_spec);
        DetectionParams hidden_params = base.params();
        hidden_params.hidden = true;
        GameSpec hidden_spec = GameSpec::build(base.graph(), hidden_params, beta);

        double mu_sum = 0.0;
        for (int trial = 0; trial < opt.trials; ++trial) {
            uint64_t trial_seed = derive_seed(opt.seed, 1000 * trial + static_cast<int>(beta));
            Dataset data = generate_dataset(hidden_spec, opt.samples, opt.rollouts, opt.mix,
                                            trial_seed, opt.threads);
            auto [net, rep] = train(data, hidden_spec, opt.hidden, opt.epochs, opt.lr,
                                    opt.batch, derive_seed(trial_seed, 1));
            SolveReport learned = hsl_solve(hidden_spec, net, derive_seed(trial_seed, 2));
            double mu = 0.0;
            for (int s = 0; s < exact_spec.state_count(); ++s)
                mu += std::abs(truth.values[s] - learned.values[s]);
            mu_sum += mu / exact_spec.state_count();
        }
        rows.emplace_back(beta, mu_sum / opt.trials);
    }
    return rows;
}

}  // namespace

std::string solve_plotdata(const SolveReport& report) {
    std::ostringstream os;
    os << "iteration,v0,delta\n";
    os.precision(12);
    for (size_t k = 0; k < report.trace_v0.size(); ++k)
        os << (k + 1) << "," << report.trace_v0[k] << "," << report.delta_trace[k] << "\n";
    return os.str();
}

std::string train_plotdata(const TrainReport& report) {
    std::ostringstream os;
    os << "epoch,loss,mu_val\n";
    os.precision(12);
    for (size_t e = 0; e < report.loss_trace.size(); ++e)
        os << (e + 1) << "," << report.loss_trace[e] << "," << report.mu_val_trace[e] << "\n";
    return os.str();
}

std::string sweep_plotdata(const std::vector<std::pair<double, double>>& beta_mu) {
    std::ostringstream os;
    os << "beta,mu\n";
    os.precision(12);
    for (const auto& [beta, mu] : beta_mu) os << beta << "," << mu << "\n";
    return os.str();
}

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"APT-vs-DIFT stochastic game toolkit"};
    app.require_subcommand(1);

    ManifestScope manifest;

    // ---- ifg prune | version | multistage -------------------------------
    auto* ifg_cmd = app.add_subcommand("ifg", "information-flow graph pipeline");
    ifg_cmd->require_subcommand(1);
    struct {
        std::string in, out;
        std::vector<std::string> prefixes;
    } ifg_opt;

    auto* prune_cmd = ifg_cmd->add_subcommand("prune", "collapse, reduce and group the graph");
    prune_cmd->add_option("input", ifg_opt.in)->required();
    prune_cmd->add_option("--group-prefix", ifg_opt.prefixes, "directory prefix to merge under");
    prune_cmd->add_option("-o,--output", ifg_opt.out)->required();
    prune_cmd->callback([&] {
        manifest.subcommand = "ifg prune";
        manifest.inputs = {ifg_opt.in};
        manifest.outputs = {ifg_opt.out};
        manifest.config = {{"group_prefixes", ifg_opt.prefixes}};
        IfgGraph g = load_ifg(read_file(ifg_opt.in));
        write_file(ifg_opt.out, ifg_to_json(prune_ifg(g, ifg_opt.prefixes)));
    });

    auto* version_cmd = ifg_cmd->add_subcommand("version", "remove cycles by node versioning");
    version_cmd->add_option("input", ifg_opt.in)->required();
    version_cmd->add_option("-o,--output", ifg_opt.out)->required();
    version_cmd->callback([&] {
        manifest.subcommand = "ifg version";
        manifest.inputs = {ifg_opt.in};
        manifest.outputs = {ifg_opt.out};
        IfgGraph g = load_ifg(read_file(ifg_opt.in));
        write_file(ifg_opt.out, ifg_to_json(version_acyclic(g)));
    });

    auto* multi_cmd = ifg_cmd->add_subcommand("multistage", "expand the staged attack copies");
    multi_cmd->add_option("input", ifg_opt.in)->required();
    multi_cmd->add_option("-o,--output", ifg_opt.out)->required();
    multi_cmd->callback([&] {
        manifest.subcommand = "ifg multistage";
        manifest.inputs = {ifg_opt.in};
        manifest.outputs = {ifg_opt.out};
        IfgGraph g = load_ifg(read_file(ifg_opt.in));
        if (!g.stages) throw DomainError("document carries no stage plan");
        write_file(ifg_opt.out, ifg_to_json(expand_multistage(g, *g.stages)));
    });

    // ---- game build ------------------------------------------------------
    auto* game_cmd = app.add_subcommand("game", "game construction");
    game_cmd->require_subcommand(1);
    struct {
        std::string ifg, params, out;
        double beta = 100.0;
    } game_opt;
    auto* build_cmd = game_cmd->add_subcommand("build", "attach rates and payoff parameter");
    build_cmd->add_option("ifg", game_opt.ifg)->required();
    build_cmd->add_option("--params", game_opt.params)->required();
    build_cmd->add_option("--beta", game_opt.beta)->check(CLI::PositiveNumber);
    build_cmd->add_option("-o,--output", game_opt.out)->required();
    build_cmd->callback([&] {
        manifest.subcommand = "game build";
        manifest.inputs = {game_opt.ifg, game_opt.params};
        manifest.outputs = {game_opt.out};
        manifest.config = {{"beta", game_opt.beta}};
        IfgGraph g = load_ifg(read_file(game_opt.ifg));
        DetectionParams params = load_params(read_file(game_opt.params));
        GameSpec spec = GameSpec::build(g, std::move(params), game_opt.beta);
        write_file(game_opt.out, game_to_json(spec));
    });

    // ---- solve vi | acyclic ----------------------------------------------
    auto* solve_cmd = app.add_subcommand("solve", "equilibrium computation with known rates");
    solve_cmd->require_subcommand(1);
    struct {
        std::string game, out, plot, dump_q;
        double delta = 1e-7;
        long max_iter = 1000000;
    } solve_opt;
    auto add_solve_common = [&](CLI::App* cmd) {
        cmd->add_option("game", solve_opt.game)->required();
        cmd->add_option("-o,--output", solve_opt.out)->required();
        cmd->add_option("--plot", solve_opt.plot, "CSV convergence trace");
        cmd->add_option("--dump-q", solve_opt.dump_q, "dump final-stage Q matrices");
    };
    auto* vi_cmd = solve_cmd->add_subcommand("vi", "iterative sweeps, cyclic-safe");
    add_solve_common(vi_cmd);
    vi_cmd->add_option("--delta", solve_opt.delta)->check(CLI::PositiveNumber);
    vi_cmd->add_option("--max-iter", solve_opt.max_iter)->check(CLI::PositiveNumber);
    auto* acyclic_cmd = solve_cmd->add_subcommand("acyclic", "single backward level sweep");
    add_solve_common(acyclic_cmd);
    auto run_solve = [&](bool vi) {
        manifest.subcommand = vi ? "solve vi" : "solve acyclic";
        manifest.inputs = {solve_opt.game};
        manifest.outputs = {solve_opt.out};
        manifest.config = vi ? json{{"delta", solve_opt.delta}, {"max_iter", solve_opt.max_iter}}
                             : json::object();
        GameSpec spec = load_game(read_file(solve_opt.game));
        SolveReport report = vi ? value_iteration(spec, solve_opt.delta, solve_opt.max_iter)
                                : solve_acyclic(spec);
        write_file(solve_opt.out, solution_to_json(spec, report));
        if (!solve_opt.plot.empty()) {
            write_file(solve_opt.plot, solve_plotdata(report));
            manifest.outputs.push_back(solve_opt.plot);
        }
        if (!solve_opt.dump_q.empty()) {
            write_file(solve_opt.dump_q, dump_q_json(spec, report.values));
            manifest.outputs.push_back(solve_opt.dump_q);
        }
        if (!report.converged)
            throw DomainError("value iteration hit the iteration cap after " +
                              std::to_string(report.iterations) + " sweeps");
    };
    vi_cmd->callback([&] { run_solve(true); });
    acyclic_cmd->callback([&] { run_solve(false); });

    // ---- simulate ----------------------------------------------------------
    struct {
        std::string game, strategies, out;
        std::string start = "v0";
        long long rollouts = 100000;
        uint64_t seed = 7;
        int threads = default_threads();
    } sim_opt;
    auto* sim_cmd = app.add_subcommand("simulate", "roll out strategies and estimate payoffs");
    sim_cmd->add_option("game", sim_opt.game)->required();
    sim_cmd->add_option("--strategies", sim_opt.strategies)->required();
    sim_cmd->add_option("--start", sim_opt.start);
    sim_cmd->add_option("--rollouts", sim_opt.rollouts)->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", sim_opt.seed);
    sim_cmd->add_option("--threads", sim_opt.threads)->check(CLI::PositiveNumber);
    sim_cmd->callback([&] {
        manifest.subcommand = "simulate";
        manifest.inputs = {sim_opt.game, sim_opt.strategies};
        manifest.outputs = {sim_opt.out};
        manifest.config = {{"start", sim_opt.start},
                           {"rollouts", sim_opt.rollouts},
                           {"seed", sim_opt.seed},
                           {"threads", sim_opt.threads}};
        GameSpec spec = load_game(read_file(sim_opt.game));
        Strategy s = strategy_from_json(spec, read_file(sim_opt.strategies));
        Strategy apt = Strategy::empty(spec), dift = Strategy::empty(spec);
        apt.apt = s.apt;
        dift.dift = s.dift;
        RolloutStats stats = estimate(spec, apt, dift, parse_state(spec, sim_opt.start),
                                      sim_opt.rollouts, sim_opt.seed, sim_opt.threads);
        write_file(sim_opt.out, stats_to_json(spec, stats));
    });
    sim_cmd->add_option("-o,--output", sim_opt.out)->required();

    // ---- hsl gen-data | train | solve --------------------------------------
    auto* hsl_cmd = app.add_subcommand("hsl", "hidden-rate pipeline");
    hsl_cmd->require_subcommand(1);
    struct {
        std::string game, data, net, out, plot;
        long long n = 100000;
        long long rollouts = 200;
        double mix = 0.4;
        uint64_t seed = 3;
        std::vector<int> hidden{1000, 1000};
        int epochs = 100;
        double lr = 0.01;
        int batch = 32;
        bool audit = false;
        long long audit_rollouts = 100000;
        int threads = default_threads();
    } hsl_opt;

    auto* gen_cmd = hsl_cmd->add_subcommand("gen-data", "sample strategy pairs and labels");
    gen_cmd->add_option("game", hsl_opt.game)->required();
    gen_cmd->add_option("-n,--samples", hsl_opt.n)->check(CLI::PositiveNumber);
    gen_cmd->add_option("--rollouts", hsl_opt.rollouts)->check(CLI::PositiveNumber);
    gen_cmd->add_option("--mix", hsl_opt.mix)->check(CLI::Range(0.0, 1.0));
    gen_cmd->add_option("--seed", hsl_opt.seed);
    gen_cmd->add_option("--threads", hsl_opt.threads)->check(CLI::PositiveNumber);
    gen_cmd->add_option("-o,--output", hsl_opt.data)->required();
    gen_cmd->callback([&] {
        manifest.subcommand = "hsl gen-data";
        manifest.inputs = {hsl_opt.game};
        manifest.outputs = {hsl_opt.data};
        manifest.config = {{"samples", hsl_opt.n},
                           {"rollouts", hsl_opt.rollouts},
                           {"mix", hsl_opt.mix},
                           {"seed", hsl_opt.seed}};
        GameSpec spec = load_game(read_file(hsl_opt.game));
        Dataset data = generate_dataset(spec, hsl_opt.n, hsl_opt.rollouts, hsl_opt.mix,
                                        hsl_opt.seed, hsl_opt.threads);
        write_file(hsl_opt.data, dataset_to_json(spec, data));
    });

    auto* train_cmd = hsl_cmd->add_subcommand("train", "fit the value net");
    train_cmd->add_option("data", hsl_opt.data)->required();
    train_cmd->add_option("--game", hsl_opt.game,
                          "game document (defaults to the one embedded in the dataset)");
    train_cmd->add_option("--hidden", hsl_opt.hidden)->delimiter(',');
    train_cmd->add_option("--epochs", hsl_opt.epochs)->check(CLI::PositiveNumber);
    train_cmd->add_option("--lr", hsl_opt.lr)->check(CLI::PositiveNumber);
    train_cmd->add_option("--batch", hsl_opt.batch)->check(CLI::PositiveNumber);
    train_cmd->add_option("--seed", hsl_opt.seed);
    train_cmd->add_option("--plot", hsl_opt.plot, "CSV loss trace");
    train_cmd->add_option("-o,--output", hsl_opt.net)->required();
    train_cmd->callback([&] {
        manifest.subcommand = "hsl train";
        manifest.inputs = {hsl_opt.data};
        if (!hsl_opt.game.empty()) manifest.inputs.push_back(hsl_opt.game);
        manifest.outputs = {hsl_opt.net};
        manifest.config = {{"hidden", hsl_opt.hidden}, {"epochs", hsl_opt.epochs},
                           {"lr", hsl_opt.lr},         {"batch", hsl_opt.batch},
                           {"seed", hsl_opt.seed}};
        std::string data_text = read_file(hsl_opt.data);
        GameSpec spec = hsl_opt.game.empty() ? dataset_game(data_text)
                                             : load_game(read_file(hsl_opt.game));
        Dataset data = dataset_from_json(spec, data_text);
        auto [net, rep] = train(data, spec, hsl_opt.hidden, hsl_opt.epochs, hsl_opt.lr,
                                hsl_opt.batch, hsl_opt.seed);
        write_file(hsl_opt.net, net_to_json(spec, net));
        if (!hsl_opt.plot.empty()) {
            write_file(hsl_opt.plot, train_plotdata(rep));
            manifest.outputs.push_back(hsl_opt.plot);
        }
        manifest.config["mu_val"] = rep.mu_val;
        if (rep.high_error)
            std::cerr << "warning: validation error " << rep.mu_val << " above 1% of beta\n";
    });

    auto* hslsolve_cmd = hsl_cmd->add_subcommand("solve", "level-wise policy iteration");
    hslsolve_cmd->add_option("game", hsl_opt.game)->required();
    hslsolve_cmd->add_option("--net", hsl_opt.net)->required();
    hslsolve_cmd->add_option("--seed", hsl_opt.seed);
    hslsolve_cmd->add_flag("--audit", hsl_opt.audit, "cross-check V(v0) against a simulation");
    hslsolve_cmd->add_option("--rollouts", hsl_opt.audit_rollouts)->check(CLI::PositiveNumber);
    hslsolve_cmd->add_option("-o,--output", hsl_opt.out)->required();
    hslsolve_cmd->callback([&] {
        manifest.subcommand = "hsl solve";
        manifest.inputs = {hsl_opt.game, hsl_opt.net};
        manifest.outputs = {hsl_opt.out};
        manifest.config = {{"seed", hsl_opt.seed}, {"audit", hsl_opt.audit}};
        GameSpec spec = load_game(read_file(hsl_opt.game));
        ValueNet net = net_from_json(spec, read_file(hsl_opt.net));
        SolveReport report = hsl_solve(spec, net, hsl_opt.seed);
        write_file(hsl_opt.out, solution_to_json(spec, report));
        if (hsl_opt.audit) {
            RolloutStats stats =
                estimate(spec, report.attacker_best, report.defender, spec.virtual_state(),
                         hsl_opt.audit_rollouts, derive_seed(hsl_opt.seed, 0xA0D17ULL),
                         hsl_opt.threads);
            json audit{{"v0_lp", report.values[spec.virtual_state()]},
                       {"v0_simulated", stats.u_defender},
                       {"stderr", stats.stderr_defender},
                       {"rollouts", stats.rollouts}};
            std::cout << audit.dump(2) << "\n";
            manifest.config["audit_result"] = audit;
        }
    });

    // ---- sweep beta ---------------------------------------------------------
    auto* sweep_cmd = app.add_subcommand("sweep", "experiment sweeps");
    sweep_cmd->require_subcommand(1);
    SweepOptions sweep_opt;
    std::string sweep_game, sweep_out;
    auto* beta_cmd = sweep_cmd->add_subcommand("beta", "learned-vs-exact error across beta");
    beta_cmd->add_option("game", sweep_game)->required();
    beta_cmd->add_option("--betas", sweep_opt.betas)->delimiter(',');
    beta_cmd->add_option("--samples", sweep_opt.samples)->check(CLI::PositiveNumber);
    beta_cmd->add_option("--rollouts", sweep_opt.rollouts)->check(CLI::PositiveNumber);
    beta_cmd->add_option("--mix", sweep_opt.mix)->check(CLI::Range(0.0, 1.0));
    beta_cmd->add_option("--hidden", sweep_opt.hidden)->delimiter(',');
    beta_cmd->add_option("--epochs", sweep_opt.epochs)->check(CLI::PositiveNumber);
    beta_cmd->add_option("--lr", sweep_opt.lr)->check(CLI::PositiveNumber);
    beta_cmd->add_option("--trials", sweep_opt.trials)->check(CLI::PositiveNumber);
    beta_cmd->add_option("--seed", sweep_opt.seed);
    beta_cmd->add_option("--threads", sweep_opt.threads)->check(CLI::PositiveNumber);
    beta_cmd->add_option("-o,--output", sweep_out)->required();
    beta_cmd->callback([&] {
        manifest.subcommand = "sweep beta";
        manifest.inputs = {sweep_game};
        manifest.outputs = {sweep_out};
        if (sweep_opt.betas.empty())
            for (int b = 5; b <= 100; b += 5) sweep_opt.betas.push_back(b);
        manifest.config = {{"betas", sweep_opt.betas},   {"samples", sweep_opt.samples},
                           {"rollouts", sweep_opt.rollouts}, {"epochs", sweep_opt.epochs},
                           {"trials", sweep_opt.trials}, {"seed", sweep_opt.seed}};
        GameSpec base = load_game(read_file(sweep_game));
        auto rows = run_beta_sweep(base, sweep_opt);
        write_file(sweep_out, sweep_plotdata(rows));
    });

    std::vector<std::string> argv = args;
    std::reverse(argv.begin(), argv.end());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", {{"kind", "usage"}, {"message", e.what()}}}}.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", {{"kind", "domain"}, {"message", e.what()}}}}.dump() << "\n";
        return 1;
    }
    try {
        manifest.emit();
    } catch (const std::exception& e) {
        std::cerr << json{{"error", {{"kind", "domain"}, {"message", e.what()}}}}.dump() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace diftgame::cli
