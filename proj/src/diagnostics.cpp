#include "meanq/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace meanq {

AgentView make_agent_view(ModelView members) {
    if (members.empty()) throw std::invalid_argument("make_agent_view: empty view");
    AgentView view;
    view.action_values = [members = std::move(members)](int state) {
        return ensemble_mean_values(members, state);
    };
    return view;
}

CheckpointEval checkpoint_eval(const AgentView& agent, EnvironmentHandle& env, int n_eval,
                               double gamma) {
    if (n_eval < 1) throw std::invalid_argument("checkpoint_eval: n_eval >= 1");
    CheckpointEval out;
    const Policy policy = [&agent](int s) { return agent.greedy(s); };
    for (int i = 0; i < n_eval; ++i) {
        const EpisodeRecord rec = run_episode(env, policy, env.episode_cap(), gamma);
        const double v0 = agent.value(rec.states.front());
        out.returns.undiscounted += rec.undiscounted_return;
        out.returns.discounted += rec.discounted_return;
        out.bias += v0 - rec.discounted_return;
        out.v_s0 += v0;
    }
    const double inv_n = 1.0 / static_cast<double>(n_eval);
    out.returns.undiscounted *= inv_n;
    out.returns.discounted *= inv_n;
    out.bias *= inv_n;
    out.v_s0 *= inv_n;
    return out;
}

EvalResult eval_performance(const AgentView& agent, EnvironmentHandle& env, int n_eval,
                            double gamma) {
    return checkpoint_eval(agent, env, n_eval, gamma).returns;
}

double estimation_bias(const AgentView& agent, EnvironmentHandle& env, int n_eval, double gamma) {
    return checkpoint_eval(agent, env, n_eval, gamma).bias;
}

namespace {

double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) throw std::invalid_argument("sample_std: need at least 2 values");
    double mean = 0.0;
    for (const double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (const double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::optional<double> standardized_performance(double mean_perf, double reference_low,
                                               double reference_high) {
    if (reference_high == reference_low) return std::nullopt;
    const double standardized = (mean_perf - reference_low) / (reference_high - reference_low);
    if (!(standardized > 0.0)) return std::nullopt;
    return standardized;
}

} // namespace

VarianceResult estimation_variance(const std::vector<std::vector<double>>& v_s0, double mean_perf,
                                   double reference_low, double reference_high) {
    if (v_s0.size() < 2)
        throw std::invalid_argument("estimation_variance: need at least 2 runs");
    const std::size_t n_resets = v_s0.front().size();
    if (n_resets == 0) throw std::invalid_argument("estimation_variance: no reset samples");
    for (const auto& run : v_s0)
        if (run.size() != n_resets)
            throw std::invalid_argument("estimation_variance: reset counts differ across runs");

    double std_sum = 0.0;
    std::vector<double> column(v_s0.size());
    for (std::size_t j = 0; j < n_resets; ++j) {
        for (std::size_t r = 0; r < v_s0.size(); ++r) column[r] = v_s0[r][j];
        std_sum += sample_std(column);
    }
    VarianceResult out;
    out.raw_std = std_sum / static_cast<double>(n_resets);
    if (const auto denom = standardized_performance(mean_perf, reference_low, reference_high))
        out.relative_std = out.raw_std / *denom;
    return out;
}

double jensen_gap(const std::vector<std::vector<double>>& per_run_action_values) {
    if (per_run_action_values.size() < 2)
        throw std::invalid_argument("jensen_gap: need at least 2 runs");
    const std::size_t n_actions = per_run_action_values.front().size();
    if (n_actions == 0) throw std::invalid_argument("jensen_gap: empty action values");
    double mean_of_max = 0.0;
    std::vector<double> mean_q(n_actions, 0.0);
    for (const auto& q : per_run_action_values) {
        if (q.size() != n_actions)
            throw std::invalid_argument("jensen_gap: action spaces differ across runs");
        mean_of_max += *std::max_element(q.begin(), q.end());
        for (std::size_t a = 0; a < n_actions; ++a) mean_q[a] += q[a];
    }
    const double inv_r = 1.0 / static_cast<double>(per_run_action_values.size());
    mean_of_max *= inv_r;
    double max_of_mean = mean_q[0] * inv_r;
    for (std::size_t a = 1; a < n_actions; ++a)
        max_of_mean = std::max(max_of_mean, mean_q[a] * inv_r);
    return mean_of_max - max_of_mean;
}

double jensen_gap_over_resets(const std::vector<std::vector<std::vector<double>>>& q) {
    if (q.size() < 2) throw std::invalid_argument("jensen_gap_over_resets: need at least 2 runs");
    const std::size_t n_resets = q.front().size();
    if (n_resets == 0) throw std::invalid_argument("jensen_gap_over_resets: no reset samples");
    double sum = 0.0;
    std::vector<std::vector<double>> slice(q.size());
    for (std::size_t j = 0; j < n_resets; ++j) {
        for (std::size_t r = 0; r < q.size(); ++r) {
            if (q[r].size() != n_resets)
                throw std::invalid_argument("jensen_gap_over_resets: reset counts differ");
            slice[r] = q[r][j];
        }
        sum += jensen_gap(slice);
    }
    return sum / static_cast<double>(n_resets);
}

// --- CSV ----------------------------------------------------------------

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string fmt_opt(const std::optional<double>& x) { return x ? fmt(*x) : "nan"; }

} // namespace

void write_run_csv(std::ostream& os, std::span<const CheckpointRecord> records) {
    os << "step,eval_return_undiscounted,eval_return_discounted,v_s0,bias,loss_mean,"
          "priority_mean,epsilon\n";
    for (const CheckpointRecord& r : records) {
        os << r.step << ',' << fmt(r.eval_return_undiscounted) << ','
           << fmt(r.eval_return_discounted) << ',' << fmt(r.v_s0) << ',' << fmt(r.bias) << ','
           << fmt(r.loss_mean) << ',' << fmt(r.priority_mean) << ',' << fmt(r.epsilon) << '\n';
    }
}

std::vector<CheckpointRecord> read_run_csv(std::istream& is) {
    std::vector<CheckpointRecord> out;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("read_run_csv: empty input");
    if (line.rfind("step,", 0) != 0) throw std::runtime_error("read_run_csv: unexpected header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 8) throw std::runtime_error("read_run_csv: malformed row");
        CheckpointRecord r;
        r.step = std::stol(fields[0]);
        r.eval_return_undiscounted = std::stod(fields[1]);
        r.eval_return_discounted = std::stod(fields[2]);
        r.v_s0 = std::stod(fields[3]);
        r.bias = std::stod(fields[4]);
        r.loss_mean = std::stod(fields[5]);
        r.priority_mean = std::stod(fields[6]);
        r.epsilon = std::stod(fields[7]);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<CrossRunStat> compute_cross_run_stats(
    const std::vector<std::vector<CheckpointRecord>>& runs, double reference_low,
    double reference_high) {
    if (runs.size() < 2)
        throw std::invalid_argument("compute_cross_run_stats: need at least 2 runs");

    // Steps at which the first run carries a payload; the rest must match.
    std::vector<CrossRunStat> out;
    for (std::size_t i = 0; i < runs.front().size(); ++i) {
        const CheckpointRecord& head = runs.front()[i];
        if (head.v_s0_resets.empty()) continue;
        CrossRunStat stat;
        stat.step = head.step;
        stat.n_runs = static_cast<int>(runs.size());
        stat.n_s0_resets = static_cast<int>(head.v_s0_resets.size());

        std::vector<std::vector<double>> v_matrix;
        std::vector<std::vector<std::vector<double>>> q_tensor;
        std::vector<double> returns;
        for (const auto& run : runs) {
            const auto it = std::find_if(run.begin(), run.end(), [&](const CheckpointRecord& r) {
                return r.step == head.step && !r.v_s0_resets.empty();
            });
            if (it == run.end())
                throw std::invalid_argument(
                    "compute_cross_run_stats: checkpoints not matched across runs");
            v_matrix.push_back(it->v_s0_resets);
            q_tensor.push_back(it->q_s0_resets);
            returns.push_back(it->eval_return_undiscounted);
        }
        double mean_return = 0.0;
        for (const double r : returns) mean_return += r;
        mean_return /= static_cast<double>(returns.size());
        stat.return_mean = mean_return;
        stat.return_std = sample_std(returns);

        const VarianceResult var =
            estimation_variance(v_matrix, mean_return, reference_low, reference_high);
        stat.v_s0_std = var.raw_std;
        stat.v_s0_std_rel = var.relative_std;

        stat.jensen_gap_value = jensen_gap_over_resets(q_tensor);
        if (const auto denom =
                standardized_performance(mean_return, reference_low, reference_high))
            stat.jensen_gap_rel = stat.jensen_gap_value / *denom;
        out.push_back(std::move(stat));
    }
    return out;
}

void write_cross_run_csv(std::ostream& os, std::span<const CrossRunStat> stats) {
    os << "step,n_runs,n_s0_resets,return_mean,return_std,v_s0_std,v_s0_std_rel,"
          "jensen_gap,jensen_gap_rel\n";
    for (const CrossRunStat& s : stats) {
        os << s.step << ',' << s.n_runs << ',' << s.n_s0_resets << ',' << fmt(s.return_mean)
           << ',' << fmt(s.return_std) << ',' << fmt(s.v_s0_std) << ',' << fmt_opt(s.v_s0_std_rel)
           << ',' << fmt(s.jensen_gap_value) << ',' << fmt_opt(s.jensen_gap_rel) << '\n';
    }
}

} // namespace meanq
