#include "meanq/value_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "meanq/errors.hpp"

namespace meanq {

// --- ActionValueTable -------------------------------------------------------

ActionValueTable::ActionValueTable(int n_states, int n_actions)
    : n_states_(n_states), n_actions_(n_actions),
      values_(static_cast<std::size_t>(n_states) * n_actions, 0.0) {
    if (n_states <= 0 || n_actions <= 0)
        throw std::invalid_argument("ActionValueTable: dimensions must be positive");
}

std::vector<double> ActionValueTable::predict(int state) const {
    if (state < 0 || state >= n_states_)
        throw std::out_of_range("ActionValueTable: state index out of range");
    const auto base = values_.begin() + static_cast<std::size_t>(state) * n_actions_;
    return std::vector<double>(base, base + n_actions_);
}

double ActionValueTable::at(int state, int action) const {
    if (state < 0 || state >= n_states_ || action < 0 || action >= n_actions_)
        throw std::out_of_range("ActionValueTable: index out of range");
    return values_[static_cast<std::size_t>(state) * n_actions_ + action];
}

double& ActionValueTable::at(int state, int action) {
    if (state < 0 || state >= n_states_ || action < 0 || action >= n_actions_)
        throw std::out_of_range("ActionValueTable: index out of range");
    return values_[static_cast<std::size_t>(state) * n_actions_ + action];
}

std::unique_ptr<QModel> ActionValueTable::clone() const {
    return std::make_unique<ActionValueTable>(*this);
}

// --- MlpQNetwork ------------------------------------------------------------

MlpQNetwork::MlpQNetwork(std::vector<int> layer_sizes, Activation activation)
    : layer_sizes_(std::move(layer_sizes)), activation_(activation) {
    if (layer_sizes_.size() < 2)
        throw std::invalid_argument("MlpQNetwork: need at least input and output layers");
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
        if (layer_sizes_[l] <= 0 || layer_sizes_[l + 1] <= 0)
            throw std::invalid_argument("MlpQNetwork: layer sizes must be positive");
        w_offset_.push_back(count);
        count += static_cast<std::size_t>(layer_sizes_[l + 1]) * layer_sizes_[l];
        b_offset_.push_back(count);
        count += static_cast<std::size_t>(layer_sizes_[l + 1]);
    }
    params_.assign(count, 0.0);
}

std::vector<double> MlpQNetwork::one_hot(int state) const {
    if (state < 0 || state >= layer_sizes_.front())
        throw std::out_of_range("MlpQNetwork: state index out of range");
    std::vector<double> x(layer_sizes_.front(), 0.0);
    x[state] = 1.0;
    return x;
}

std::vector<double> MlpQNetwork::predict(int state) const { return forward(one_hot(state)); }

std::vector<double> MlpQNetwork::forward(std::span<const double> features) const {
    if (features.size() != static_cast<std::size_t>(layer_sizes_.front()))
        throw std::invalid_argument("MlpQNetwork: feature dimension mismatch");
    std::vector<double> act(features.begin(), features.end());
    const std::size_t n_layers = layer_sizes_.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const int in = layer_sizes_[l];
        const int out = layer_sizes_[l + 1];
        const double* W = params_.data() + w_offset_[l];
        const double* b = params_.data() + b_offset_[l];
        std::vector<double> next(out);
        for (int i = 0; i < out; ++i) {
            double z = b[i];
            const double* row = W + static_cast<std::size_t>(i) * in;
            for (int j = 0; j < in; ++j) z += row[j] * act[j];
            if (l + 1 < n_layers) {
                next[i] = activation_ == Activation::relu ? std::max(0.0, z) : std::tanh(z);
            } else {
                next[i] = z; // linear output
            }
        }
        act = std::move(next);
    }
    return act;
}

std::vector<double> MlpQNetwork::forward_backward(std::span<const double> features,
                                                  std::span<const double> output_gradient,
                                                  std::span<double> grads) const {
    if (features.size() != static_cast<std::size_t>(layer_sizes_.front()))
        throw std::invalid_argument("MlpQNetwork: feature dimension mismatch");
    if (output_gradient.size() != static_cast<std::size_t>(layer_sizes_.back()))
        throw std::invalid_argument("MlpQNetwork: output gradient dimension mismatch");
    if (grads.size() != params_.size())
        throw std::invalid_argument("MlpQNetwork: gradient buffer size mismatch");

    const std::size_t n_layers = layer_sizes_.size() - 1;

    // Forward pass, keeping post-activation values per layer.
    std::vector<std::vector<double>> acts(n_layers + 1);
    acts[0].assign(features.begin(), features.end());
    for (std::size_t l = 0; l < n_layers; ++l) {
        const int in = layer_sizes_[l];
        const int out = layer_sizes_[l + 1];
        const double* W = params_.data() + w_offset_[l];
        const double* b = params_.data() + b_offset_[l];
        acts[l + 1].resize(out);
        for (int i = 0; i < out; ++i) {
            double z = b[i];
            const double* row = W + static_cast<std::size_t>(i) * in;
            for (int j = 0; j < in; ++j) z += row[j] * acts[l][j];
            if (l + 1 < n_layers) {
                acts[l + 1][i] = activation_ == Activation::relu ? std::max(0.0, z) : std::tanh(z);
            } else {
                acts[l + 1][i] = z;
            }
        }
    }

    // Backward pass. delta holds dLoss/dPreactivation of the current layer.
    std::vector<double> delta(output_gradient.begin(), output_gradient.end());
    for (std::size_t l = n_layers; l-- > 0;) {
        const int in = layer_sizes_[l];
        const int out = layer_sizes_[l + 1];
        const double* W = params_.data() + w_offset_[l];
        double* gW = grads.data() + w_offset_[l];
        double* gb = grads.data() + b_offset_[l];
        for (int i = 0; i < out; ++i) {
            gb[i] += delta[i];
            double* grow = gW + static_cast<std::size_t>(i) * in;
            for (int j = 0; j < in; ++j) grow[j] += delta[i] * acts[l][j];
        }
        if (l == 0) break;
        std::vector<double> prev(in, 0.0);
        for (int i = 0; i < out; ++i) {
            const double* row = W + static_cast<std::size_t>(i) * in;
            for (int j = 0; j < in; ++j) prev[j] += row[j] * delta[i];
        }
        // Activation derivative of the layer below (hidden layers only).
        for (int j = 0; j < in; ++j) {
            const double a = acts[l][j];
            prev[j] *= activation_ == Activation::relu ? (a > 0.0 ? 1.0 : 0.0) : (1.0 - a * a);
        }
        delta = std::move(prev);
    }
    return acts[n_layers];
}

void MlpQNetwork::init_random(Rng& rng) {
    const std::size_t n_layers = layer_sizes_.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const int in = layer_sizes_[l];
        const int out = layer_sizes_[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        double* W = params_.data() + w_offset_[l];
        for (std::size_t i = 0; i < static_cast<std::size_t>(out) * in; ++i)
            W[i] = rng.uniform(-bound, bound);
        double* b = params_.data() + b_offset_[l];
        for (int i = 0; i < out; ++i) b[i] = 0.0;
    }
}

std::unique_ptr<QModel> MlpQNetwork::clone() const { return std::make_unique<MlpQNetwork>(*this); }

std::vector<long> MlpQNetwork::shape_ints() const {
    std::vector<long> out;
    out.push_back(activation_ == Activation::relu ? 0 : 1);
    for (const int s : layer_sizes_) out.push_back(s);
    return out;
}

// --- CategoricalQModel ------------------------------------------------------

namespace {
std::vector<int> categorical_layers(int n_states, std::vector<int> hidden, int n_actions,
                                    int n_atoms) {
    std::vector<int> sizes;
    sizes.push_back(n_states);
    for (const int h : hidden) sizes.push_back(h);
    sizes.push_back(n_actions * n_atoms);
    return sizes;
}
} // namespace

CategoricalQModel::CategoricalQModel(int n_states, std::vector<int> hidden, int n_actions,
                                     Support support, Activation activation)
    : n_actions_(n_actions), support_(support),
      body_(categorical_layers(n_states, std::move(hidden), n_actions, support.n_atoms),
            activation) {
    if (n_actions <= 0) throw std::invalid_argument("CategoricalQModel: n_actions must be positive");
}

std::vector<double> CategoricalQModel::predict(int state) const {
    std::vector<double> x(body_.n_states(), 0.0);
    if (state < 0 || state >= body_.n_states())
        throw std::out_of_range("CategoricalQModel: state index out of range");
    x[state] = 1.0;
    const std::vector<double> logits = body_.forward(x);
    std::vector<double> values(n_actions_);
    const int L = support_.n_atoms;
    for (int a = 0; a < n_actions_; ++a) {
        const std::span<const double> block(logits.data() + static_cast<std::size_t>(a) * L, L);
        values[a] = expected_value(softmax(block), support_);
    }
    return values;
}

std::vector<double> CategoricalQModel::action_logits(int state, int action) const {
    if (action < 0 || action >= n_actions_)
        throw std::out_of_range("CategoricalQModel: action index out of range");
    std::vector<double> x(body_.n_states(), 0.0);
    if (state < 0 || state >= body_.n_states())
        throw std::out_of_range("CategoricalQModel: state index out of range");
    x[state] = 1.0;
    const std::vector<double> logits = body_.forward(x);
    const int L = support_.n_atoms;
    const auto base = logits.begin() + static_cast<std::size_t>(action) * L;
    return std::vector<double>(base, base + L);
}

std::vector<double> CategoricalQModel::action_distribution(int state, int action) const {
    return softmax(action_logits(state, action));
}

std::vector<std::vector<double>> CategoricalQModel::distributions(int state) const {
    std::vector<double> x(body_.n_states(), 0.0);
    if (state < 0 || state >= body_.n_states())
        throw std::out_of_range("CategoricalQModel: state index out of range");
    x[state] = 1.0;
    const std::vector<double> logits = body_.forward(x);
    const int L = support_.n_atoms;
    std::vector<std::vector<double>> out(n_actions_);
    for (int a = 0; a < n_actions_; ++a) {
        const std::span<const double> block(logits.data() + static_cast<std::size_t>(a) * L, L);
        out[a] = softmax(block);
    }
    return out;
}

void CategoricalQModel::backward_action(int state, int action, std::span<const double> dlogits,
                                        std::span<double> grads) const {
    if (dlogits.size() != static_cast<std::size_t>(support_.n_atoms))
        throw std::invalid_argument("CategoricalQModel: dlogits size mismatch");
    std::vector<double> x(body_.n_states(), 0.0);
    if (state < 0 || state >= body_.n_states())
        throw std::out_of_range("CategoricalQModel: state index out of range");
    x[state] = 1.0;
    std::vector<double> full(static_cast<std::size_t>(n_actions_) * support_.n_atoms, 0.0);
    std::copy(dlogits.begin(), dlogits.end(),
              full.begin() + static_cast<std::size_t>(action) * support_.n_atoms);
    body_.forward_backward(x, full, grads);
}

std::unique_ptr<QModel> CategoricalQModel::clone() const {
    return std::make_unique<CategoricalQModel>(*this);
}

std::vector<long> CategoricalQModel::shape_ints() const {
    std::vector<long> out;
    out.push_back(n_actions_);
    out.push_back(support_.n_atoms);
    const std::vector<long> body = body_.shape_ints();
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

// --- Ensemble aggregation -----------------------------------------------

std::vector<double> ensemble_mean_values(const ModelView& members, int state) {
    if (members.empty()) throw std::invalid_argument("ensemble: empty member view");
    std::vector<double> mean = members.front()->predict(state);
    for (std::size_t k = 1; k < members.size(); ++k) {
        const std::vector<double> q = members[k]->predict(state);
        if (q.size() != mean.size()) throw std::invalid_argument("ensemble: action-count mismatch");
        for (std::size_t a = 0; a < q.size(); ++a) mean[a] += q[a];
    }
    const double inv_k = 1.0 / static_cast<double>(members.size());
    for (double& x : mean) x *= inv_k;
    return mean;
}

double ensemble_value(const ModelView& members, int state) {
    const std::vector<double> mean = ensemble_mean_values(members, state);
    return *std::max_element(mean.begin(), mean.end());
}

int greedy_action(const ModelView& members, int state) {
    const std::vector<double> mean = ensemble_mean_values(members, state);
    int best = 0;
    for (std::size_t a = 1; a < mean.size(); ++a)
        if (mean[a] > mean[best]) best = static_cast<int>(a);
    return best;
}

std::vector<double> ensemble_std(const ModelView& members, int state) {
    if (members.empty()) throw std::invalid_argument("ensemble: empty member view");
    const std::size_t K = members.size();
    std::vector<std::vector<double>> qs(K);
    for (std::size_t k = 0; k < K; ++k) qs[k] = members[k]->predict(state);
    const std::size_t A = qs.front().size();
    std::vector<double> out(A, 0.0);
    for (std::size_t a = 0; a < A; ++a) {
        double mean = 0.0;
        for (std::size_t k = 0; k < K; ++k) mean += qs[k][a];
        mean /= static_cast<double>(K);
        double ss = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double d = qs[k][a] - mean;
            ss += d * d;
        }
        out[a] = std::sqrt(ss / static_cast<double>(K)); // population std
    }
    return out;
}

// --- Ensemble / TargetEnsemble / SnapshotHistory ---------------------------

Ensemble::Ensemble(std::vector<std::unique_ptr<QModel>> members) : members_(std::move(members)) {
    if (members_.empty()) throw std::invalid_argument("Ensemble: needs at least one member");
    for (const auto& m : members_) {
        if (!m) throw std::invalid_argument("Ensemble: null member");
        if (m->n_actions() != members_.front()->n_actions() ||
            m->n_states() != members_.front()->n_states())
            throw std::invalid_argument("Ensemble: members must share shape");
    }
}

ModelView Ensemble::view() const {
    ModelView v;
    v.reserve(members_.size());
    for (const auto& m : members_) v.push_back(m.get());
    return v;
}

TargetEnsemble TargetEnsemble::online(const Ensemble& live) {
    TargetEnsemble t;
    t.live_ = &live;
    return t;
}

TargetEnsemble TargetEnsemble::lagging(const Ensemble& live, long sync_period) {
    if (sync_period <= 0)
        throw std::invalid_argument("TargetEnsemble: sync period must be positive");
    TargetEnsemble t;
    t.sync_period_ = sync_period;
    for (int k = 0; k < live.size(); ++k) t.copies_.push_back(live.member(k).clone());
    return t;
}

void TargetEnsemble::sync(const Ensemble& live, long step) {
    if (is_online()) return;
    if (step < 0) throw std::invalid_argument("TargetEnsemble: negative step");
    if (step % *sync_period_ == 0) force_sync(live);
}

void TargetEnsemble::force_sync(const Ensemble& live) {
    if (is_online()) return;
    if (static_cast<int>(copies_.size()) != live.size())
        throw std::invalid_argument("TargetEnsemble: size mismatch with live ensemble");
    for (int k = 0; k < live.size(); ++k) copies_[k]->params() = live.member(k).params();
}

ModelView TargetEnsemble::view() const {
    if (is_online()) return live_->view();
    ModelView v;
    v.reserve(copies_.size());
    for (const auto& m : copies_) v.push_back(m.get());
    return v;
}

SnapshotHistory::SnapshotHistory(int capacity) : capacity_(capacity) {
    if (capacity <= 0) throw std::invalid_argument("SnapshotHistory: capacity must be positive");
}

void SnapshotHistory::push(const QModel& current) {
    snaps_.push_back(current.clone());
    while (static_cast<int>(snaps_.size()) > capacity_) snaps_.pop_front();
}

ModelView SnapshotHistory::view() const {
    ModelView v;
    v.reserve(snaps_.size());
    for (const auto& m : snaps_) v.push_back(m.get());
    return v;
}

// --- Optimizer --------------------------------------------------------------

void Optimizer::step(std::vector<double>& params, std::span<const double> grads) {
    if (grads.size() != params.size())
        throw std::invalid_argument("Optimizer: gradient/parameter size mismatch");
    for (const double g : grads)
        if (!std::isfinite(g)) throw NumericalError("Optimizer: non-finite gradient entry");

    ++t_;
    switch (cfg_.kind) {
    case OptimizerKind::sgd:
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg_.alpha * grads[i];
        break;
    case OptimizerKind::sgd_decay:
        if (visits_.empty()) visits_.assign(params.size(), 0.0);
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (grads[i] == 0.0) continue;
            visits_[i] += 1.0;
            params[i] -= cfg_.alpha / (1.0 + cfg_.decay * visits_[i]) * grads[i];
        }
        break;
    case OptimizerKind::adam: {
        if (m_.empty()) {
            m_.assign(params.size(), 0.0);
            v_.assign(params.size(), 0.0);
        }
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
            const double mhat = m_[i] / bc1;
            const double vhat = v_[i] / bc2;
            params[i] -= cfg_.alpha * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
        break;
    }
    }
    for (const double p : params)
        if (!std::isfinite(p)) throw NumericalError("Optimizer: parameters became non-finite");
}

void clip_gradient_norm(std::span<double> grads, double max_norm) {
    if (max_norm <= 0.0) return;
    double ss = 0.0;
    for (const double g : grads) ss += g * g;
    const double norm = std::sqrt(ss);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (double& g : grads) g *= scale;
    }
}

// --- Checkpoints -------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'M', 'Q', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t x) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_i64(std::ostream& os, std::int64_t x) {
    unsigned char b[8];
    const auto u = static_cast<std::uint64_t>(x);
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& os, double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, 8);
    write_i64(os, static_cast<std::int64_t>(u));
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return x;
}

std::int64_t read_i64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return static_cast<std::int64_t>(x);
}

double read_f64(std::istream& is) {
    const auto u = static_cast<std::uint64_t>(read_i64(is));
    double x;
    std::memcpy(&x, &u, 8);
    return x;
}

} // namespace

void save_checkpoint(const std::string& path, const Ensemble& ensemble) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(ensemble.size()));
    for (int k = 0; k < ensemble.size(); ++k) {
        const QModel& m = ensemble.member(k);
        const std::string kind = m.kind();
        write_u32(os, static_cast<std::uint32_t>(kind.size()));
        os.write(kind.data(), static_cast<std::streamsize>(kind.size()));
        const std::vector<long> ints = m.shape_ints();
        write_u32(os, static_cast<std::uint32_t>(ints.size()));
        for (const long x : ints) write_i64(os, x);
        const std::vector<double> dbls = m.shape_doubles();
        write_u32(os, static_cast<std::uint32_t>(dbls.size()));
        for (const double x : dbls) write_f64(os, x);
        const std::vector<double>& p = m.params();
        write_i64(os, static_cast<std::int64_t>(p.size()));
        for (const double x : p) write_f64(os, x);
    }
    if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Ensemble load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    const std::uint32_t version = read_u32(is);
    if (version != kVersion)
        throw std::runtime_error("load_checkpoint: unsupported version in " + path);
    const std::uint32_t K = read_u32(is);
    std::vector<std::unique_ptr<QModel>> members;
    for (std::uint32_t k = 0; k < K; ++k) {
        const std::uint32_t kind_len = read_u32(is);
        std::string kind(kind_len, '\0');
        is.read(kind.data(), kind_len);
        const std::uint32_t n_ints = read_u32(is);
        std::vector<long> ints(n_ints);
        for (auto& x : ints) x = static_cast<long>(read_i64(is));
        const std::uint32_t n_dbls = read_u32(is);
        std::vector<double> dbls(n_dbls);
        for (auto& x : dbls) x = read_f64(is);
        auto model = make_model(kind, ints, dbls);
        const auto n_params = static_cast<std::size_t>(read_i64(is));
        if (n_params != model->params().size())
            throw std::runtime_error("load_checkpoint: parameter count mismatch in " + path);
        for (auto& x : model->params()) x = read_f64(is);
        if (!is) throw std::runtime_error("load_checkpoint: truncated file " + path);
        members.push_back(std::move(model));
    }
    return Ensemble(std::move(members));
}

std::unique_ptr<QModel> make_model(const std::string& kind, const std::vector<long>& shape_ints,
                                   const std::vector<double>& shape_doubles) {
    if (kind == "table") {
        if (shape_ints.size() != 2) throw std::runtime_error("make_model: bad table shape");
        return std::make_unique<ActionValueTable>(static_cast<int>(shape_ints[0]),
                                                  static_cast<int>(shape_ints[1]));
    }
    if (kind == "mlp") {
        if (shape_ints.size() < 3) throw std::runtime_error("make_model: bad mlp shape");
        const Activation act = shape_ints[0] == 0 ? Activation::relu : Activation::tanh;
        std::vector<int> sizes;
        for (std::size_t i = 1; i < shape_ints.size(); ++i)
            sizes.push_back(static_cast<int>(shape_ints[i]));
        return std::make_unique<MlpQNetwork>(sizes, act);
    }
    if (kind == "categorical") {
        // [n_actions, n_atoms, activation, layer sizes...]
        if (shape_ints.size() < 5 || shape_doubles.size() != 2)
            throw std::runtime_error("make_model: bad categorical shape");
        const int n_actions = static_cast<int>(shape_ints[0]);
        const int n_atoms = static_cast<int>(shape_ints[1]);
        const Activation act = shape_ints[2] == 0 ? Activation::relu : Activation::tanh;
        const int n_states = static_cast<int>(shape_ints[3]);
        std::vector<int> hidden;
        for (std::size_t i = 4; i + 1 < shape_ints.size(); ++i)
            hidden.push_back(static_cast<int>(shape_ints[i]));
        return std::make_unique<CategoricalQModel>(
            n_states, hidden, n_actions, Support(shape_doubles[0], shape_doubles[1], n_atoms),
            act);
    }
    throw std::runtime_error("make_model: unknown model kind '" + kind + "'");
}

} // namespace meanq
