#include "meanq/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "meanq/errors.hpp"

namespace meanq {

namespace fs = std::filesystem;

std::string variant_name(Variant v) {
    switch (v) {
    case Variant::meanq: return "meanq";
    case Variant::dqn: return "dqn";
    case Variant::dqn_no_target: return "dqn_no_target";
    case Variant::meanq_no_target: return "meanq_no_target";
    case Variant::avg_dqn: return "avg_dqn";
    case Variant::ens_dqn: return "ens_dqn";
    }
    return "?";
}

std::optional<Variant> variant_from_name(const std::string& name) {
    for (const Variant v : {Variant::meanq, Variant::dqn, Variant::dqn_no_target,
                            Variant::meanq_no_target, Variant::avg_dqn, Variant::ens_dqn})
        if (variant_name(v) == name) return v;
    return std::nullopt;
}

// --- Config parsing ---------------------------------------------------------

namespace {

struct RawEntry {
    std::string value;
    int line = 0;
};

using Section = std::map<std::string, RawEntry>;
using Sections = std::map<std::string, Section>;

const std::map<std::string, std::vector<std::string>>& known_keys() {
    static const std::map<std::string, std::vector<std::string>> keys = {
        {"", {"environment", "variant", "seeds", "total_steps", "eval_every", "cross_run_every",
              "n_eval", "n_s0_resets", "output_dir"}},
        {"learner",
         {"gamma", "alpha", "ensemble_size", "batch_size", "multi_step", "target_sync_period",
          "updates_per_interaction", "warmup", "optimizer", "grad_clip", "model", "activation",
          "value_mode", "sampling", "sgd_decay"}},
        {"exploration", {"kind", "epsilon_start", "epsilon_end", "epsilon_horizon", "lambda"}},
        {"replay",
         {"capacity", "omega", "beta_start", "beta_end", "epsilon_priority", "initial_priority"}},
        {"distributional", {"v_min", "v_max", "atoms"}},
    };
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

Sections tokenize(const std::string& text) {
    Sections sections;
    std::string current;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(line_no, "unterminated section header");
            current = trim(line.substr(1, line.size() - 2));
            if (known_keys().find(current) == known_keys().end())
                throw ConfigError(line_no, "unknown section '[" + current + "]'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(line_no, "empty key");
        if (value.empty()) throw ConfigError(line_no, "empty value for '" + key + "'");
        const auto& allowed = known_keys().at(current);
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(line_no, "unknown key '" + key + "'" +
                                           (current.empty() ? "" : " in section [" + current + "]"));
        auto& section = sections[current];
        if (section.count(key))
            throw ConfigError(line_no, "duplicate key '" + key + "'");
        section[key] = RawEntry{value, line_no};
    }
    return sections;
}

// Typed accessors over the tokenized sections.
class Reader {
public:
    explicit Reader(Sections sections) : sections_(std::move(sections)) {}

    bool has(const std::string& section, const std::string& key) const {
        const auto s = sections_.find(section);
        return s != sections_.end() && s->second.count(key) > 0;
    }

    int line_of(const std::string& section, const std::string& key) const {
        return sections_.at(section).at(key).line;
    }

    std::string str(const std::string& section, const std::string& key,
                    const std::string& fallback) const {
        if (!has(section, key)) return fallback;
        return sections_.at(section).at(key).value;
    }

    double num(const std::string& section, const std::string& key, double fallback) const {
        if (!has(section, key)) return fallback;
        const RawEntry& e = sections_.at(section).at(key);
        try {
            std::size_t used = 0;
            const double x = std::stod(e.value, &used);
            if (used != e.value.size()) throw std::invalid_argument("trailing characters");
            return x;
        } catch (const std::exception&) {
            throw ConfigError(e.line, "expected a number for '" + key + "', got '" + e.value + "'");
        }
    }

    long integer(const std::string& section, const std::string& key, long fallback) const {
        if (!has(section, key)) return fallback;
        const RawEntry& e = sections_.at(section).at(key);
        try {
            std::size_t used = 0;
            const long x = std::stol(e.value, &used);
            if (used != e.value.size()) throw std::invalid_argument("trailing characters");
            return x;
        } catch (const std::exception&) {
            throw ConfigError(e.line, "expected an integer for '" + key + "', got '" + e.value + "'");
        }
    }

    bool section_present(const std::string& section) const { return sections_.count(section) > 0; }

private:
    Sections sections_;
};

std::vector<long> parse_seeds(const std::string& text, int line) {
    std::vector<long> out;
    const auto range = text.find("..");
    try {
        if (range != std::string::npos) {
            const long lo = std::stol(trim(text.substr(0, range)));
            const long hi = std::stol(trim(text.substr(range + 2)));
            if (hi < lo) throw std::invalid_argument("empty range");
            for (long s = lo; s <= hi; ++s) out.push_back(s);
        } else {
            std::stringstream ss(text);
            std::string item;
            while (std::getline(ss, item, ',')) out.push_back(std::stol(trim(item)));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError(line, "seeds must be a comma list or lo..hi range, got '" + text + "'");
    }
    if (out.empty()) throw ConfigError(line, "no seeds given");
    std::vector<long> sorted = out;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ConfigError(line, "duplicate seed");
    return out;
}

Rational parse_rational(const std::string& text, int line) {
    try {
        const auto slash = text.find('/');
        Rational r;
        if (slash == std::string::npos) {
            r.num = std::stoi(trim(text));
            r.den = 1;
        } else {
            r.num = std::stoi(trim(text.substr(0, slash)));
            r.den = std::stoi(trim(text.substr(slash + 1)));
        }
        if (r.num < 1 || r.den < 1) throw std::invalid_argument("non-positive");
        return r;
    } catch (const std::exception&) {
        throw ConfigError(line, "expected a positive rational like 1/2, got '" + text + "'");
    }
}

ModelConfig parse_model(const std::string& text, int line) {
    ModelConfig m;
    if (text == "table") {
        m.kind = ModelConfig::Kind::table;
        return m;
    }
    if (text.rfind("mlp", 0) == 0) {
        m.kind = ModelConfig::Kind::mlp;
        const auto open = text.find('(');
        if (open == std::string::npos) {
            if (text != "mlp") throw ConfigError(line, "bad model spec '" + text + "'");
            return m;
        }
        const auto close = text.rfind(')');
        if (close == std::string::npos || close < open)
            throw ConfigError(line, "bad model spec '" + text + "'");
        std::stringstream ss(text.substr(open + 1, close - open - 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            try {
                const int h = std::stoi(item);
                if (h < 1) throw std::invalid_argument("non-positive");
                m.hidden.push_back(h);
            } catch (const std::exception&) {
                throw ConfigError(line, "bad hidden size '" + item + "' in model spec");
            }
        }
        return m;
    }
    throw ConfigError(line, "model must be 'table' or 'mlp(h1,h2,...)', got '" + text + "'");
}

} // namespace

ExperimentConfig parse_config(const std::string& text) {
    const Reader r(tokenize(text));
    ExperimentConfig cfg;

    if (!r.has("", "environment")) throw ConfigError(0, "missing required key 'environment'");
    try {
        cfg.env = parse_env_descriptor(r.str("", "environment", ""));
    } catch (const std::exception& e) {
        throw ConfigError(r.line_of("", "environment"), e.what());
    }

    if (!r.has("", "variant")) throw ConfigError(0, "missing required key 'variant'");
    const std::string vname = r.str("", "variant", "");
    const auto variant = variant_from_name(vname);
    if (!variant) throw ConfigError(r.line_of("", "variant"), "unknown variant '" + vname + "'");
    cfg.variant = *variant;

    if (!r.has("", "seeds")) throw ConfigError(0, "missing required key 'seeds'");
    cfg.seeds = parse_seeds(r.str("", "seeds", ""), r.line_of("", "seeds"));

    cfg.total_steps = r.integer("", "total_steps", cfg.total_steps);
    cfg.eval_every = r.integer("", "eval_every", cfg.eval_every);
    cfg.cross_run_every = r.integer("", "cross_run_every", cfg.cross_run_every);
    cfg.n_eval = static_cast<int>(r.integer("", "n_eval", cfg.n_eval));
    cfg.n_s0_resets = static_cast<int>(r.integer("", "n_s0_resets", cfg.n_s0_resets));
    cfg.output_dir = r.str("", "output_dir", cfg.output_dir);
    if (cfg.total_steps < 1) throw ConfigError(r.line_of("", "total_steps"), "total_steps >= 1");
    if (cfg.eval_every < 1 || cfg.eval_every > cfg.total_steps)
        throw ConfigError(r.has("", "eval_every") ? r.line_of("", "eval_every") : 0,
                          "eval_every must be in [1, total_steps]");
    if (cfg.cross_run_every % cfg.eval_every != 0)
        throw ConfigError(r.has("", "cross_run_every") ? r.line_of("", "cross_run_every") : 0,
                          "cross_run_every must be a multiple of eval_every");
    if (cfg.n_eval < 1 || cfg.n_s0_resets < 1)
        throw ConfigError(0, "n_eval and n_s0_resets must be >= 1");

    // Learner section.
    LearnerConfig& lc = cfg.learner;
    lc.gamma = r.num("learner", "gamma", 0.99);

    const bool ensemble_variant = cfg.variant != Variant::dqn && cfg.variant != Variant::dqn_no_target;
    lc.ensemble_size =
        static_cast<int>(r.integer("learner", "ensemble_size", ensemble_variant ? 5 : 1));
    if (!ensemble_variant && lc.ensemble_size != 1)
        throw ConfigError(r.has("learner", "ensemble_size") ? r.line_of("learner", "ensemble_size") : 0,
                          "variant " + vname + " requires ensemble_size = 1");
    if (ensemble_variant && lc.ensemble_size < 2)
        throw ConfigError(r.has("learner", "ensemble_size") ? r.line_of("learner", "ensemble_size") : 0,
                          "ensemble variant " + vname + " requires ensemble_size >= 2");

    lc.batch_size = static_cast<int>(r.integer("learner", "batch_size", 32));
    lc.multi_step = static_cast<int>(r.integer("learner", "multi_step", 1));

    const bool online = cfg.variant == Variant::dqn_no_target ||
                        cfg.variant == Variant::meanq_no_target ||
                        cfg.variant == Variant::avg_dqn;
    lc.online_targets = online;
    if (online && r.has("learner", "target_sync_period"))
        throw ConfigError(r.line_of("learner", "target_sync_period"),
                          "variant " + vname + " does not use a lagging target");
    if (!online) lc.target_sync_period = r.integer("learner", "target_sync_period", 2000);

    lc.sampling = cfg.variant == Variant::ens_dqn ? SamplingMode::shared : SamplingMode::independent;
    if (r.has("learner", "sampling")) {
        const std::string s = r.str("learner", "sampling", "");
        SamplingMode requested;
        if (s == "independent") requested = SamplingMode::independent;
        else if (s == "shared") requested = SamplingMode::shared;
        else throw ConfigError(r.line_of("learner", "sampling"), "sampling must be independent|shared");
        if (requested != lc.sampling)
            throw ConfigError(r.line_of("learner", "sampling"),
                              "variant " + vname + " contradicts sampling = " + s);
    }
    lc.ensemble_mode =
        cfg.variant == Variant::avg_dqn ? EnsembleMode::snapshot : EnsembleMode::true_ensemble;

    lc.updates_per_interaction =
        r.has("learner", "updates_per_interaction")
            ? parse_rational(r.str("learner", "updates_per_interaction", "1"),
                             r.line_of("learner", "updates_per_interaction"))
            : Rational{1, 1};
    lc.warmup = static_cast<int>(r.integer("learner", "warmup", 0));

    const std::string opt = r.str("learner", "optimizer", "adam");
    if (opt == "adam") lc.optimizer.kind = OptimizerKind::adam;
    else if (opt == "sgd") lc.optimizer.kind = OptimizerKind::sgd;
    else if (opt == "sgd_decay") lc.optimizer.kind = OptimizerKind::sgd_decay;
    else throw ConfigError(r.line_of("learner", "optimizer"), "optimizer must be adam|sgd|sgd_decay");
    lc.optimizer.alpha = r.num("learner", "alpha", lc.optimizer.alpha);
    lc.optimizer.decay = r.num("learner", "sgd_decay", lc.optimizer.decay);

    cfg.model = r.has("learner", "model")
                    ? parse_model(r.str("learner", "model", ""), r.line_of("learner", "model"))
                    : ModelConfig{};
    const std::string act = r.str("learner", "activation", "relu");
    if (act == "relu") cfg.model.activation = Activation::relu;
    else if (act == "tanh") cfg.model.activation = Activation::tanh;
    else throw ConfigError(r.line_of("learner", "activation"), "activation must be relu|tanh");

    const std::string vm = r.str("learner", "value_mode", "scalar");
    if (vm == "scalar") lc.value_mode = ValueMode::scalar;
    else if (vm == "distributional") lc.value_mode = ValueMode::distributional;
    else throw ConfigError(r.line_of("learner", "value_mode"), "value_mode must be scalar|distributional");
    if (lc.value_mode == ValueMode::distributional && cfg.model.kind == ModelConfig::Kind::table)
        throw ConfigError(r.has("learner", "model") ? r.line_of("learner", "model") : 0,
                          "distributional mode requires an mlp model");
    if (lc.value_mode == ValueMode::scalar && r.section_present("distributional"))
        throw ConfigError(0, "[distributional] section requires value_mode = distributional");
    if (lc.value_mode == ValueMode::distributional) {
        const double v_min = r.num("distributional", "v_min", -10.0);
        const double v_max = r.num("distributional", "v_max", 10.0);
        const int atoms = static_cast<int>(r.integer("distributional", "atoms", 51));
        try {
            lc.support = Support(v_min, v_max, atoms);
        } catch (const std::exception& e) {
            throw ConfigError(0, std::string("bad distributional support: ") + e.what());
        }
    }

    lc.grad_clip = r.num("learner", "grad_clip",
                         cfg.model.kind == ModelConfig::Kind::table ? 0.0 : 10.0);

    // Replay section.
    cfg.replay_capacity = static_cast<int>(r.integer("replay", "capacity", cfg.replay_capacity));
    cfg.replay_options.priority_exponent = r.num("replay", "omega", 0.5);
    cfg.replay_options.priority_floor = r.num("replay", "epsilon_priority", 1e-6);
    cfg.replay_options.initial_priority = r.num("replay", "initial_priority", 1.0);
    lc.beta_start = r.num("replay", "beta_start", 0.4);
    lc.beta_end = r.num("replay", "beta_end", 1.0);
    lc.beta_horizon = cfg.total_steps;
    if (cfg.replay_capacity < 1) throw ConfigError(0, "replay capacity must be >= 1");
    if (cfg.replay_options.priority_exponent < 0.0)
        throw ConfigError(0, "replay omega must be >= 0");

    // Exploration section.
    const std::string kind = r.str("exploration", "kind", "epsilon_greedy");
    if (kind == "epsilon_greedy") cfg.exploration = ExplorationKind::epsilon_greedy;
    else if (kind == "ucb") cfg.exploration = ExplorationKind::ucb;
    else throw ConfigError(r.line_of("exploration", "kind"), "kind must be epsilon_greedy|ucb");
    cfg.epsilon.start = r.num("exploration", "epsilon_start", 1.0);
    cfg.epsilon.end = r.num("exploration", "epsilon_end", 0.1);
    cfg.epsilon.horizon = r.integer("exploration", "epsilon_horizon", 200000);
    cfg.ucb_lambda = r.num("exploration", "lambda", 1.0);
    if (cfg.ucb_lambda < 0.0)
        throw ConfigError(r.has("exploration", "lambda") ? r.line_of("exploration", "lambda") : 0,
                          "lambda must be >= 0");

    try {
        lc.validate();
        make_environment(cfg.env, lc.gamma); // environment-level validation
    } catch (const std::exception& e) {
        throw ConfigError(0, e.what());
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

namespace {

std::string fmt_num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "environment = " << format_env_descriptor(c.env) << "\n";
    os << "variant = " << variant_name(c.variant) << "\n";
    os << "seeds = ";
    for (std::size_t i = 0; i < c.seeds.size(); ++i)
        os << (i ? "," : "") << c.seeds[i];
    os << "\n";
    os << "total_steps = " << c.total_steps << "\n";
    os << "eval_every = " << c.eval_every << "\n";
    os << "cross_run_every = " << c.cross_run_every << "\n";
    os << "n_eval = " << c.n_eval << "\n";
    os << "n_s0_resets = " << c.n_s0_resets << "\n";
    os << "output_dir = " << c.output_dir << "\n";

    os << "\n[learner]\n";
    os << "gamma = " << fmt_num(c.learner.gamma) << "\n";
    os << "alpha = " << fmt_num(c.learner.optimizer.alpha) << "\n";
    os << "ensemble_size = " << c.learner.ensemble_size << "\n";
    os << "batch_size = " << c.learner.batch_size << "\n";
    os << "multi_step = " << c.learner.multi_step << "\n";
    if (!c.learner.online_targets)
        os << "target_sync_period = " << c.learner.target_sync_period << "\n";
    os << "sampling = "
       << (c.learner.sampling == SamplingMode::shared ? "shared" : "independent") << "\n";
    os << "updates_per_interaction = " << c.learner.updates_per_interaction.num << "/"
       << c.learner.updates_per_interaction.den << "\n";
    os << "warmup = " << c.learner.warmup << "\n";
    os << "optimizer = "
       << (c.learner.optimizer.kind == OptimizerKind::adam
               ? "adam"
               : c.learner.optimizer.kind == OptimizerKind::sgd ? "sgd" : "sgd_decay")
       << "\n";
    os << "sgd_decay = " << fmt_num(c.learner.optimizer.decay) << "\n";
    os << "grad_clip = " << fmt_num(c.learner.grad_clip) << "\n";
    if (c.model.kind == ModelConfig::Kind::table) {
        os << "model = table\n";
    } else {
        os << "model = mlp(";
        for (std::size_t i = 0; i < c.model.hidden.size(); ++i)
            os << (i ? "," : "") << c.model.hidden[i];
        os << ")\n";
    }
    os << "activation = " << (c.model.activation == Activation::relu ? "relu" : "tanh") << "\n";
    os << "value_mode = "
       << (c.learner.value_mode == ValueMode::scalar ? "scalar" : "distributional") << "\n";

    os << "\n[exploration]\n";
    os << "kind = " << (c.exploration == ExplorationKind::ucb ? "ucb" : "epsilon_greedy") << "\n";
    os << "epsilon_start = " << fmt_num(c.epsilon.start) << "\n";
    os << "epsilon_end = " << fmt_num(c.epsilon.end) << "\n";
    os << "epsilon_horizon = " << c.epsilon.horizon << "\n";
    os << "lambda = " << fmt_num(c.ucb_lambda) << "\n";

    os << "\n[replay]\n";
    os << "capacity = " << c.replay_capacity << "\n";
    os << "omega = " << fmt_num(c.replay_options.priority_exponent) << "\n";
    os << "beta_start = " << fmt_num(c.learner.beta_start) << "\n";
    os << "beta_end = " << fmt_num(c.learner.beta_end) << "\n";
    os << "epsilon_priority = " << fmt_num(c.replay_options.priority_floor) << "\n";
    os << "initial_priority = " << fmt_num(c.replay_options.initial_priority) << "\n";

    if (c.learner.value_mode == ValueMode::distributional) {
        os << "\n[distributional]\n";
        os << "v_min = " << fmt_num(c.learner.support.v_min) << "\n";
        os << "v_max = " << fmt_num(c.learner.support.v_max) << "\n";
        os << "atoms = " << c.learner.support.n_atoms << "\n";
    }
    return os.str();
}

std::string config_hash(const ExperimentConfig& config) {
    const std::string canon = serialize_config(config);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char ch : canon) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return serialize_config(a) == serialize_config(b);
}

// --- Run driver ---------------------------------------------------------

namespace {

constexpr std::uint64_t kMatchedProbeSeed = 0x736030u; // shared across runs/variants
constexpr std::uint64_t kReferenceSeed = 0x5eedu;

std::unique_ptr<QModel> build_member(const ExperimentConfig& cfg, const TabularMdp& mdp,
                                     long seed, int k) {
    if (cfg.model.kind == ModelConfig::Kind::table)
        return std::make_unique<ActionValueTable>(mdp.n_states, mdp.n_actions);
    Rng rng = derive_rng(static_cast<std::uint64_t>(seed), "init", static_cast<std::uint64_t>(k));
    if (cfg.learner.value_mode == ValueMode::distributional) {
        auto model = std::make_unique<CategoricalQModel>(mdp.n_states, cfg.model.hidden,
                                                         mdp.n_actions, cfg.learner.support,
                                                         cfg.model.activation);
        model->init_random(rng);
        return model;
    }
    std::vector<int> sizes;
    sizes.push_back(mdp.n_states);
    for (const int h : cfg.model.hidden) sizes.push_back(h);
    sizes.push_back(mdp.n_actions);
    auto model = std::make_unique<MlpQNetwork>(sizes, cfg.model.activation);
    model->init_random(rng);
    return model;
}

} // namespace

std::vector<CheckpointRecord> run_single(const ExperimentConfig& cfg, long seed,
                                         const std::string& checkpoint_path) {
    const BuiltEnvironment built = make_environment(cfg.env, cfg.learner.gamma);
    const auto u64 = [](long s) { return static_cast<std::uint64_t>(s); };

    EnvironmentHandle env(built.mdp, built.noise_sigma, built.episode_cap,
                          derive_rng(u64(seed), "env"));
    // Evaluation scores on expected rewards: the synthetic reward noise is
    // a training-time estimation-variance driver with zero mean, and leaving
    // it out of eval episodes only removes measurement noise.
    EnvironmentHandle eval_env(built.mdp, 0.0, built.episode_cap,
                               derive_rng(u64(seed), "eval"));

    const int n_live = cfg.learner.ensemble_mode == EnsembleMode::snapshot
                           ? 1
                           : cfg.learner.ensemble_size;
    std::vector<std::unique_ptr<QModel>> members;
    for (int k = 0; k < n_live; ++k) members.push_back(build_member(cfg, built.mdp, seed, k));
    Ensemble ensemble(std::move(members));

    TargetEnsemble targets = cfg.learner.online_targets
                                 ? TargetEnsemble::online(ensemble)
                                 : TargetEnsemble::lagging(ensemble, cfg.learner.target_sync_period);
    std::optional<SnapshotHistory> snapshots;
    if (cfg.learner.ensemble_mode == EnsembleMode::snapshot)
        snapshots.emplace(cfg.learner.ensemble_size);

    ReplayMemory memory(cfg.replay_capacity, n_live, cfg.replay_options);
    std::vector<Optimizer> optimizers(n_live, Optimizer(cfg.learner.optimizer));
    std::vector<Rng> sample_rngs;
    for (int k = 0; k < n_live; ++k)
        sample_rngs.push_back(derive_rng(u64(seed), "replay", static_cast<std::uint64_t>(k)));
    Rng explore_rng = derive_rng(u64(seed), "explore");

    Learner learner(cfg.learner, ensemble, targets, snapshots ? &*snapshots : nullptr, memory,
                    optimizers, sample_rngs);

    std::vector<CheckpointRecord> records;
    double loss_accum = 0.0, priority_accum = 0.0;
    long member_updates = 0;
    std::uint64_t episode_id = 0;
    int state = env.reset();

    for (long t = 1; t <= cfg.total_steps; ++t) {
        const ModelView view = learner.exploitation_view();
        double eps = 0.0;
        int action;
        if (cfg.exploration == ExplorationKind::ucb) {
            action = ucb_action(view, state, cfg.ucb_lambda);
        } else {
            eps = epsilon_at(cfg.epsilon, t - 1);
            action = epsilon_greedy_action(view, state, eps, explore_rng);
        }
        const StepResult sr = env.step(action);
        memory.push(Transition{state, action, sr.reward, sr.next_state, sr.terminal, episode_id});
        if (env.episode_over()) {
            state = env.reset();
            ++episode_id;
        } else {
            state = sr.next_state;
        }

        const IterationMetrics im = learner.train_iteration(t);
        loss_accum += im.loss_sum;
        priority_accum += im.priority_sum;
        member_updates += im.member_updates;

        if (t % cfg.eval_every == 0) {
            const AgentView agent = make_agent_view(learner.exploitation_view());
            const CheckpointEval ce = checkpoint_eval(agent, eval_env, cfg.n_eval,
                                                      cfg.learner.gamma);
            CheckpointRecord rec;
            rec.run_id = static_cast<int>(seed);
            rec.step = t;
            rec.eval_return_undiscounted = ce.returns.undiscounted;
            rec.eval_return_discounted = ce.returns.discounted;
            rec.v_s0 = ce.v_s0;
            rec.bias = ce.bias;
            rec.loss_mean = member_updates > 0
                                ? loss_accum / static_cast<double>(member_updates)
                                : 0.0;
            rec.priority_mean = member_updates > 0
                                    ? priority_accum / static_cast<double>(member_updates)
                                    : 0.0;
            rec.epsilon = eps;
            loss_accum = priority_accum = 0.0;
            member_updates = 0;

            if (t % cfg.cross_run_every == 0) {
                // Matched initial-state draws: the probe stream depends only
                // on the checkpoint index, never on this run's seed.
                EnvironmentHandle probe(built.mdp, 0.0, built.episode_cap,
                                        derive_rng(kMatchedProbeSeed, "s0-matched",
                                                   static_cast<std::uint64_t>(t / cfg.cross_run_every)));
                for (int j = 0; j < cfg.n_s0_resets; ++j) {
                    const int s0 = probe.reset();
                    rec.v_s0_resets.push_back(agent.value(s0));
                    rec.q_s0_resets.push_back(agent.action_values(s0));
                }
            }
            records.push_back(std::move(rec));
        }
    }
    if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, ensemble);
    return records;
}

namespace {

struct RunOutcome {
    std::vector<CheckpointRecord> records;
    std::string status = "ok";
};

RunOutcome run_single_caught(const ExperimentConfig& cfg, long seed,
                             const std::string& checkpoint_path) {
    RunOutcome out;
    try {
        out.records = run_single(cfg, seed, checkpoint_path);
    } catch (const std::exception& e) {
        out.status = e.what();
        out.records.clear();
    }
    return out;
}

double mean_of(const std::vector<double>& xs) {
    double m = 0.0;
    for (const double x : xs) m += x;
    return xs.empty() ? 0.0 : m / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double ss = 0.0;
    for (const double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

} // namespace

RunManifest run_experiment(const ExperimentConfig& cfg, int jobs) {
    if (cfg.seeds.empty()) throw std::invalid_argument("run_experiment: no seeds");
    if (jobs < 1) jobs = 1;

    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);

    RunManifest manifest;
    manifest.config_hash = config_hash(cfg);
    manifest.canonical_config = serialize_config(cfg);
    manifest.output_dir = cfg.output_dir;

    // Normalization references: random policy vs value-iteration greedy.
    const BuiltEnvironment built = make_environment(cfg.env, cfg.learner.gamma);
    {
        EnvironmentHandle ref_env(built.mdp, 0.0, built.episode_cap,
                                  derive_rng(kReferenceSeed, "ref-low"));
        Rng pol_rng = derive_rng(kReferenceSeed, "ref-low-policy");
        const Policy random_policy = [&](int) { return pol_rng.uniform_int(built.mdp.n_actions); };
        manifest.reference_low =
            monte_carlo_return(ref_env, random_policy, 200, cfg.learner.gamma, built.episode_cap)
                .mean_undiscounted;

        const ValueIterationResult vi = value_iteration(built.mdp, 1e-10);
        EnvironmentHandle opt_env(built.mdp, 0.0, built.episode_cap,
                                  derive_rng(kReferenceSeed, "ref-high"));
        const Policy optimal_policy = [&](int s) {
            int best = 0;
            for (int a = 1; a < built.mdp.n_actions; ++a)
                if (vi.q(s, a, built.mdp.n_actions) > vi.q(s, best, built.mdp.n_actions)) best = a;
            return best;
        };
        manifest.reference_high =
            monte_carlo_return(opt_env, optimal_policy, 200, cfg.learner.gamma, built.episode_cap)
                .mean_undiscounted;
    }

    const std::size_t n = cfg.seeds.size();
    auto checkpoint_path_for = [&](long seed) {
        return (out_dir / ("seed_" + std::to_string(seed) + "_final.ckpt")).string();
    };
    std::vector<RunOutcome> outcomes(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            outcomes[i] = run_single_caught(cfg, cfg.seeds[i], checkpoint_path_for(cfg.seeds[i]));
        }
    };
    {
        std::vector<std::thread> pool;
        for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();
    }

    for (std::size_t i = 0; i < n; ++i) {
        SeedOutcome so;
        so.seed = cfg.seeds[i];
        so.status = outcomes[i].status;
        if (outcomes[i].status == "ok") {
            const fs::path csv = out_dir / ("seed_" + std::to_string(cfg.seeds[i]) + ".csv");
            std::ofstream os(csv);
            write_run_csv(os, outcomes[i].records);
            so.csv_path = csv.string();
            so.checkpoint_path = checkpoint_path_for(cfg.seeds[i]);
            const auto& recs = outcomes[i].records;
            if (!recs.empty()) {
                so.final_return = recs.back().eval_return_undiscounted;
                so.best_return = recs.front().eval_return_undiscounted;
                for (const auto& r : recs)
                    so.best_return = std::max(so.best_return, r.eval_return_undiscounted);
            }
            manifest.records.push_back(outcomes[i].records);
        }
        manifest.seeds.push_back(std::move(so));
    }

    if (manifest.records.size() >= 2) {
        manifest.cross_run = compute_cross_run_stats(manifest.records, manifest.reference_low,
                                                     manifest.reference_high);
        const fs::path csv = out_dir / "cross_run.csv";
        std::ofstream os(csv);
        write_cross_run_csv(os, manifest.cross_run);
        manifest.cross_run_csv = csv.string();
    }

    if (!manifest.records.empty()) {
        const SummaryRow row = summarize(manifest);
        const fs::path csv = out_dir / "summary.csv";
        std::ofstream os(csv);
        write_summary_csv(os, std::span<const SummaryRow>(&row, 1));
        manifest.summary_csv = csv.string();
    }

    manifest.manifest_path = (out_dir / "manifest.json").string();
    save_manifest(manifest);
    return manifest;
}

void save_manifest(const RunManifest& m) {
    nlohmann::json j;
    j["config_hash"] = m.config_hash;
    j["canonical_config"] = m.canonical_config;
    j["output_dir"] = m.output_dir;
    j["reference_low"] = m.reference_low;
    j["reference_high"] = m.reference_high;
    j["cross_run_csv"] = m.cross_run_csv;
    j["summary_csv"] = m.summary_csv;
    nlohmann::json seeds = nlohmann::json::array();
    for (const SeedOutcome& s : m.seeds) {
        nlohmann::json js;
        js["seed"] = s.seed;
        js["status"] = s.status;
        js["csv"] = s.csv_path;
        js["checkpoint"] = s.checkpoint_path;
        js["final_return"] = s.final_return;
        js["best_return"] = s.best_return;
        seeds.push_back(js);
    }
    j["seeds"] = seeds;
    std::ofstream os(m.manifest_path);
    if (!os) throw std::runtime_error("save_manifest: cannot open " + m.manifest_path);
    os << j.dump(2) << "\n";
}

RunManifest load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_manifest: cannot open " + path);
    nlohmann::json j;
    is >> j;
    RunManifest m;
    m.manifest_path = path;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.canonical_config = j.at("canonical_config").get<std::string>();
    m.output_dir = j.at("output_dir").get<std::string>();
    m.reference_low = j.at("reference_low").get<double>();
    m.reference_high = j.at("reference_high").get<double>();
    m.cross_run_csv = j.at("cross_run_csv").get<std::string>();
    m.summary_csv = j.at("summary_csv").get<std::string>();
    for (const auto& js : j.at("seeds")) {
        SeedOutcome s;
        s.seed = js.at("seed").get<long>();
        s.status = js.at("status").get<std::string>();
        s.csv_path = js.at("csv").get<std::string>();
        s.checkpoint_path = js.value("checkpoint", std::string{});
        s.final_return = js.at("final_return").get<double>();
        s.best_return = js.at("best_return").get<double>();
        if (s.ok() && !s.csv_path.empty()) {
            std::ifstream csv(s.csv_path);
            if (!csv) throw std::runtime_error("load_manifest: cannot open " + s.csv_path);
            m.records.push_back(read_run_csv(csv));
        }
        m.seeds.push_back(std::move(s));
    }
    return m;
}

SummaryRow summarize(const RunManifest& manifest) {
    if (manifest.seeds.empty()) throw std::invalid_argument("summarize: empty manifest");
    SummaryRow row;
    const ExperimentConfig cfg = parse_config(manifest.canonical_config);
    row.variant = variant_name(cfg.variant);
    row.environment = format_env_descriptor(cfg.env);
    std::vector<double> finals, bests;
    for (const SeedOutcome& s : manifest.seeds) {
        if (!s.ok()) continue;
        finals.push_back(s.final_return);
        bests.push_back(s.best_return);
    }
    row.n_runs = static_cast<int>(finals.size());
    if (row.n_runs == 0) throw std::invalid_argument("summarize: no successful runs");
    row.final_mean = mean_of(finals);
    row.final_std = std_of(finals, row.final_mean);
    row.best_mean = mean_of(bests);
    row.best_std = std_of(bests, row.best_mean);
    return row;
}

std::string format_summary_table(std::span<const SummaryRow> rows) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-18s %-28s %6s %12s %12s %12s %12s\n", "variant",
                  "environment", "runs", "final_mean", "final_std", "best_mean", "best_std");
    os << buf;
    for (const SummaryRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-18s %-28s %6d %12.4f %12.4f %12.4f %12.4f\n",
                      r.variant.c_str(), r.environment.c_str(), r.n_runs, r.final_mean,
                      r.final_std, r.best_mean, r.best_std);
        os << buf;
    }
    return os.str();
}

void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows) {
    os << "variant,environment,n_runs,final_mean,final_std,best_mean,best_std\n";
    for (const SummaryRow& r : rows) {
        os << r.variant << ",\"" << r.environment << "\"," << r.n_runs << ','
           << fmt_num(r.final_mean) << ',' << fmt_num(r.final_std) << ',' << fmt_num(r.best_mean)
           << ',' << fmt_num(r.best_std) << '\n';
    }
}

} // namespace meanq
