#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oee/errors.hpp"
#include "oee/mlp.hpp"
#include "oee/rng.hpp"
#include "oee/types.hpp"

namespace oee {

enum class ModelClass { Tabular, Mlp };
enum class RatioDomain { SA, SAS, Raw };

inline std::string to_string(RatioDomain d) {
    switch (d) {
        case RatioDomain::SA: return "sa";
        case RatioDomain::SAS: return "sas";
        case RatioDomain::Raw: return "raw";
    }
    return "?";
}

// Row-major sample container; one row per sample.
struct SampleMatrix {
    int dim = 0;
    std::vector<double> data;

    SampleMatrix() = default;
    explicit SampleMatrix(int d) : dim(d) {}

    static SampleMatrix from_scalars(const std::vector<double>& xs) {
        SampleMatrix m(1);
        m.data = xs;
        return m;
    }

    std::size_t rows() const { return dim > 0 ? data.size() / dim : 0; }
    const double* row(std::size_t i) const { return data.data() + i * dim; }

    void push(const double* v) { data.insert(data.end(), v, v + dim); }
    void push(const std::vector<double>& v) {
        if (static_cast<int>(v.size()) != dim) throw DimensionError("SampleMatrix: row size");
        data.insert(data.end(), v.begin(), v.end());
    }
};

// Feature layout shared by training and evaluation: state coordinates,
// then the action (one-hot for discrete specs), then the next state for
// the SAS domain.
struct FeatureSpec {
    int d_s = 0;
    ActionSpec aspec;
    RatioDomain domain = RatioDomain::Raw;

    int action_width() const {
        return aspec.kind == ActionSpec::Kind::Discrete ? aspec.count : aspec.dim();
    }

    int mlp_dim() const {
        if (domain == RatioDomain::Raw) return d_s;
        return d_s + action_width() + (domain == RatioDomain::SAS ? d_s : 0);
    }

    void encode_mlp(const StateVec& s, const ActionId& a, const StateVec* s_next,
                    std::vector<double>& out) const {
        out.clear();
        out.insert(out.end(), s.begin(), s.end());
        if (aspec.kind == ActionSpec::Kind::Discrete) {
            for (int i = 0; i < aspec.count; ++i) out.push_back(i == a.index() ? 1.0 : 0.0);
        } else {
            out.insert(out.end(), a.values().begin(), a.values().end());
        }
        if (domain == RatioDomain::SAS) {
            if (!s_next) throw ArgumentError("encode: SAS domain requires s_next");
            out.insert(out.end(), s_next->begin(), s_next->end());
        }
    }

    // Tabular key: states rounded to integers, discrete action index.
    void encode_key(const StateVec& s, const ActionId& a, const StateVec* s_next,
                    std::vector<long>& out) const {
        if (aspec.kind != ActionSpec::Kind::Discrete)
            throw ArgumentError("tabular models require discrete actions");
        out.clear();
        for (double x : s) out.push_back(std::llround(x));
        out.push_back(a.index());
        if (domain == RatioDomain::SAS) {
            if (!s_next) throw ArgumentError("encode: SAS domain requires s_next");
            for (double x : *s_next) out.push_back(std::llround(x));
        }
    }
};

struct TrainCurvePoint {
    int iteration = 0;
    double loss = 0.0;
};

struct TrainMeta {
    std::size_t n_p = 0, n_q = 0;
    int iterations = 0;
    std::uint64_t seed = 0;
    std::vector<TrainCurvePoint> curve;
    bool saturation_warning = false;
};

struct TrainConfig {
    ModelClass model_class = ModelClass::Mlp;
    int batch = 256;        // N of the two-sample minibatch
    int iterations = 50000;
    double lr = 1e-5;
    double lambda = 1e-4;   // tabular callers usually pass 0
    double nu = 0.1;
    double mu = 10.0;
    std::uint64_t seed = 0;
    int eval_stride = 0;    // 0 -> iterations / 100
    std::array<int, 3> widths = {64, 64, 64};
    bool full_batch = false;  // tabular only: deterministic full-batch descent
    double full_batch_tol = 1e-12;

    void validate() const {
        if (batch < 1) throw ArgumentError("TrainConfig: batch < 1");
        if (iterations < 1) throw ArgumentError("TrainConfig: iterations < 1");
        if (!(nu > 0.0 && nu < 1.0 && mu > 1.0))
            throw ArgumentError("TrainConfig: requires 0 < nu < 1 < mu");
    }
};

// Bounded positive function g: X -> [nu, mu], tabular or MLP-backed.
class RatioModel {
  public:
    ModelClass cls = ModelClass::Mlp;
    FeatureSpec fspec;
    double nu = 0.1, mu = 10.0;
    double lambda = 0.0;
    MlpParams mlp;
    std::map<std::vector<long>, double> table;
    TrainMeta meta;

    struct SatCounter {
        std::atomic<std::uint64_t> evals{0};
        std::atomic<std::uint64_t> hits{0};
    };

    RatioModel() : sat_(std::make_shared<SatCounter>()) {}

    int input_dim() const { return cls == ModelClass::Mlp ? mlp.din : -1; }

    // Raw feature-vector evaluation (MLP class).
    double value(const std::vector<double>& x) const {
        if (cls != ModelClass::Mlp) throw ArgumentError("value(): tabular model needs a key");
        return record(mlp_forward(mlp, x));
    }

    double value_key(const std::vector<long>& key) const {
        if (cls != ModelClass::Tabular) throw ArgumentError("value_key(): not a tabular model");
        const auto it = table.find(key);
        // Unseen atoms report the neutral ratio 1 (inside [nu, mu]).
        return record(it == table.end() ? 1.0 : it->second);
    }

    double eval_sa(const StateVec& s, const ActionId& a) const {
        if (fspec.domain != RatioDomain::SA) throw ArgumentError("eval_sa: domain mismatch");
        return eval_encoded(s, a, nullptr);
    }

    double eval_sas(const StateVec& s, const ActionId& a, const StateVec& s_next) const {
        if (fspec.domain != RatioDomain::SAS) throw ArgumentError("eval_sas: domain mismatch");
        return eval_encoded(s, a, &s_next);
    }

    double saturation_fraction() const {
        const auto e = sat_->evals.load();
        return e == 0 ? 0.0 : static_cast<double>(sat_->hits.load()) / static_cast<double>(e);
    }

    // Regularizer I(g): parameter L2 norm for MLPs, table deviation from 1
    // for tabular models.
    double reg_sq_norm() const {
        if (cls == ModelClass::Mlp) return mlp.param_sq_norm();
        double s = 0.0;
        for (const auto& [k, v] : table) s += (v - 1.0) * (v - 1.0);
        return s;
    }

  private:
    double eval_encoded(const StateVec& s, const ActionId& a, const StateVec* s_next) const {
        if (static_cast<int>(s.size()) != fspec.d_s)
            throw DimensionError("RatioModel: state dimension mismatch");
        if (cls == ModelClass::Mlp) {
            std::vector<double> x;
            fspec.encode_mlp(s, a, s_next, x);
            return record(mlp_forward(mlp, x));
        }
        std::vector<long> key;
        fspec.encode_key(s, a, s_next, key);
        return value_key(key);
    }

    double record(double g) const {
        const double edge = 1e-9 * (mu - nu);
        sat_->evals.fetch_add(1, std::memory_order_relaxed);
        if (g <= nu + edge || g >= mu - edge) sat_->hits.fetch_add(1, std::memory_order_relaxed);
        return g;
    }

    std::shared_ptr<SatCounter> sat_;
};

// ---------------------------------------------------------------------------
// Dual-KL empirical loss:  (1/|q|) sum g(x_q) - (1/|p|) sum log g(x_p)
//                          + (lambda/2) I(g)^2
// The linear term averages over the denominator distribution Q and the log
// term over the numerator distribution P; the minimizer over unconstrained
// g is then P/Q.
// ---------------------------------------------------------------------------

// Callable form used by tests with stub functions; I(g) is taken as 0.
template <class G>
double empirical_dual_loss_fn(G&& g, const std::vector<double>& batch_p,
                              const std::vector<double>& batch_q, double lambda) {
    if (batch_p.empty() || batch_q.empty())
        throw ArgumentError("empirical_dual_loss: empty batch");
    double lin = 0.0;
    for (double x : batch_q) lin += g(x);
    double lg = 0.0;
    for (double x : batch_p) {
        const double v = g(x);
        if (!(v > 0.0)) throw ArgumentError("empirical_dual_loss: g <= 0 on a P sample");
        lg += std::log(v);
    }
    (void)lambda;  // no parameter norm for a bare callable
    return lin / static_cast<double>(batch_q.size()) - lg / static_cast<double>(batch_p.size());
}

inline double empirical_dual_loss(const RatioModel& model, const SampleMatrix& batch_p,
                                  const SampleMatrix& batch_q, double lambda) {
    if (batch_p.rows() == 0 || batch_q.rows() == 0)
        throw ArgumentError("empirical_dual_loss: empty batch");
    double lin = 0.0, lg = 0.0;
    if (model.cls == ModelClass::Mlp) {
        MlpWorkspace ws;
        for (std::size_t i = 0; i < batch_q.rows(); ++i)
            lin += mlp_forward_ws(model.mlp, batch_q.row(i), ws);
        for (std::size_t i = 0; i < batch_p.rows(); ++i)
            lg += std::log(mlp_forward_ws(model.mlp, batch_p.row(i), ws));
    } else {
        std::vector<long> key;
        for (std::size_t i = 0; i < batch_q.rows(); ++i) {
            key.clear();
            for (int d = 0; d < batch_q.dim; ++d) key.push_back(std::llround(batch_q.row(i)[d]));
            lin += model.value_key(key);
        }
        for (std::size_t i = 0; i < batch_p.rows(); ++i) {
            key.clear();
            for (int d = 0; d < batch_p.dim; ++d) key.push_back(std::llround(batch_p.row(i)[d]));
            lg += std::log(model.value_key(key));
        }
    }
    return lin / static_cast<double>(batch_q.rows()) - lg / static_cast<double>(batch_p.rows()) +
           0.5 * lambda * model.reg_sq_norm();
}

// Analytic loss gradient for the MLP class over explicit batches. Empty
// batches are allowed here (the gradient degenerates to the regularizer
// term), matching the loss contract only for nonempty data.
inline GradientBuffer mlp_loss_gradient(const MlpParams& params, const SampleMatrix& batch_p,
                                        const SampleMatrix& batch_q, double lambda,
                                        double* loss_out = nullptr) {
    GradientBuffer buf(params);
    MlpWorkspace ws, scratch;
    double loss = 0.0;
    const double wq = batch_q.rows() ? 1.0 / static_cast<double>(batch_q.rows()) : 0.0;
    for (std::size_t i = 0; i < batch_q.rows(); ++i) {
        const double g = mlp_forward_ws(params, batch_q.row(i), ws);
        loss += wq * g;
        mlp_backward_accum(params, batch_q.row(i), wq, ws, buf, scratch);
    }
    const double wp = batch_p.rows() ? 1.0 / static_cast<double>(batch_p.rows()) : 0.0;
    for (std::size_t i = 0; i < batch_p.rows(); ++i) {
        const double g = mlp_forward_ws(params, batch_p.row(i), ws);
        loss -= wp * std::log(g);
        mlp_backward_accum(params, batch_p.row(i), -wp / g, ws, buf, scratch);
    }
    if (lambda != 0.0) {
        loss += 0.5 * lambda * params.param_sq_norm();
        for (int l = 0; l < 4; ++l) {
            for (std::size_t i = 0; i < params.W[l].size(); ++i)
                buf.W[l][i] += lambda * params.W[l][i];
            for (std::size_t i = 0; i < params.b[l].size(); ++i)
                buf.b[l][i] += lambda * params.b[l][i];
        }
    }
    if (loss_out) *loss_out = loss;
    return buf;
}

// Tabular gradient per atom from batch keys:
//   +count_q/|q| - count_p / (g |p|) + lambda (g - 1).
inline std::map<std::vector<long>, double> tabular_loss_gradient(
    const RatioModel& model, const std::vector<std::vector<long>>& batch_p,
    const std::vector<std::vector<long>>& batch_q, double lambda) {
    std::map<std::vector<long>, double> grad;
    const double wq = batch_q.empty() ? 0.0 : 1.0 / static_cast<double>(batch_q.size());
    const double wp = batch_p.empty() ? 0.0 : 1.0 / static_cast<double>(batch_p.size());
    for (const auto& k : batch_q) grad[k] += wq;
    for (const auto& k : batch_p) grad[k] -= wp / model.value_key(k);
    if (lambda != 0.0)
        for (const auto& [k, v] : model.table) grad[k] += lambda * (v - 1.0);
    return grad;
}

namespace detail {

inline std::vector<long> round_row(const SampleMatrix& m, std::size_t i) {
    std::vector<long> key(m.dim);
    for (int d = 0; d < m.dim; ++d) key[d] = std::llround(m.row(i)[d]);
    return key;
}

inline int curve_stride(const TrainConfig& cfg) {
    if (cfg.eval_stride > 0) return cfg.eval_stride;
    return std::max(1, cfg.iterations / 100);
}

// Loss over capped evaluation subsets, recorded on the training curve.
inline double eval_loss(const RatioModel& model, const SampleMatrix& p, const SampleMatrix& q,
                        double lambda, std::size_t cap = 2048) {
    SampleMatrix pe(p.dim), qe(q.dim);
    const std::size_t np = std::min(cap, p.rows()), nq = std::min(cap, q.rows());
    pe.data.assign(p.data.begin(), p.data.begin() + np * p.dim);
    qe.data.assign(q.data.begin(), q.data.begin() + nq * q.dim);
    return empirical_dual_loss(model, pe, qe, lambda);
}

inline void check_saturation(RatioModel& model, const SampleMatrix& p, const SampleMatrix& q) {
    std::size_t evals = 0, hits = 0;
    const double edge = 1e-9 * (model.mu - model.nu);
    auto probe = [&](const SampleMatrix& m) {
        std::vector<long> key;
        const std::size_t n = std::min<std::size_t>(m.rows(), 4096);
        for (std::size_t i = 0; i < n; ++i) {
            double g;
            if (model.cls == ModelClass::Mlp) {
                g = mlp_forward(model.mlp,
                                std::vector<double>(m.row(i), m.row(i) + m.dim));
            } else {
                key = round_row(m, i);
                const auto it = model.table.find(key);
                g = it == model.table.end() ? 1.0 : it->second;
            }
            ++evals;
            if (g <= model.nu + edge || g >= model.mu - edge) ++hits;
        }
    };
    probe(p);
    probe(q);
    if (evals > 0 && static_cast<double>(hits) > 0.01 * static_cast<double>(evals)) {
        model.meta.saturation_warning = true;
        std::fprintf(stderr,
                     "oee: warning: %.1f%% of ratio evaluations saturate [nu, mu]; "
                     "the true ratio may lie outside the model class\n",
                     100.0 * static_cast<double>(hits) / static_cast<double>(evals));
    }
}

inline RatioModel train_mlp(const SampleMatrix& p, const SampleMatrix& q, const TrainConfig& cfg) {
    RatioModel model;
    model.cls = ModelClass::Mlp;
    model.nu = cfg.nu;
    model.mu = cfg.mu;
    model.lambda = cfg.lambda;
    Rng rng(cfg.seed);
    Rng init_rng = rng.child(0);
    model.mlp = mlp_init(p.dim, cfg.widths, cfg.nu, cfg.mu, init_rng);
    Rng batch_rng = rng.child(1);

    const int stride = curve_stride(cfg);
    SampleMatrix bp(p.dim), bq(q.dim);
    model.meta.curve.push_back({0, eval_loss(model, p, q, cfg.lambda)});
    for (int it = 1; it <= cfg.iterations; ++it) {
        bp.data.clear();
        bq.data.clear();
        for (int k = 0; k < cfg.batch; ++k)
            bp.push(p.row(static_cast<std::size_t>(batch_rng.uniform_int(
                static_cast<std::int64_t>(p.rows())))));
        for (int k = 0; k < cfg.batch; ++k)
            bq.push(q.row(static_cast<std::size_t>(batch_rng.uniform_int(
                static_cast<std::int64_t>(q.rows())))));
        double loss = 0.0;
        GradientBuffer buf = mlp_loss_gradient(model.mlp, bp, bq, cfg.lambda, &loss);
        if (!std::isfinite(loss))
            throw TrainingError("train_ratio: non-finite loss at iteration " + std::to_string(it));
        try {
            sgd_update(model.mlp, buf, cfg.lr);
        } catch (const TrainingError&) {
            throw TrainingError("train_ratio: non-finite gradient at iteration " +
                                std::to_string(it));
        }
        if (it % stride == 0 || it == cfg.iterations)
            model.meta.curve.push_back({it, eval_loss(model, p, q, cfg.lambda)});
    }
    model.meta.iterations = cfg.iterations;
    return model;
}

inline RatioModel train_tabular(const SampleMatrix& p, const SampleMatrix& q,
                                const TrainConfig& cfg) {
    RatioModel model;
    model.cls = ModelClass::Tabular;
    model.nu = cfg.nu;
    model.mu = cfg.mu;
    model.lambda = cfg.lambda;

    std::vector<std::vector<long>> keys_p(p.rows()), keys_q(q.rows());
    for (std::size_t i = 0; i < p.rows(); ++i) keys_p[i] = round_row(p, i);
    for (std::size_t i = 0; i < q.rows(); ++i) keys_q[i] = round_row(q, i);
    std::map<std::vector<long>, double> phat, qhat;
    for (const auto& k : keys_p) phat[k] += 1.0 / static_cast<double>(keys_p.size());
    for (const auto& k : keys_q) qhat[k] += 1.0 / static_cast<double>(keys_q.size());
    for (const auto& [k, v] : phat) model.table.emplace(k, 1.0);
    for (const auto& [k, v] : qhat) model.table.emplace(k, 1.0);

    const auto clamp = [&](double g) { return std::min(cfg.mu, std::max(cfg.nu, g)); };
    const int stride = curve_stride(cfg);
    auto counts_loss = [&]() {
        double loss = 0.5 * cfg.lambda * model.reg_sq_norm();
        for (const auto& [k, g] : model.table) {
            const auto qi = qhat.find(k);
            if (qi != qhat.end()) loss += qi->second * g;
            const auto pi = phat.find(k);
            if (pi != phat.end()) loss -= pi->second * std::log(g);
        }
        return loss;
    };
    model.meta.curve.push_back({0, counts_loss()});

    if (cfg.full_batch) {
        // Deterministic full-batch descent on the separable objective:
        // per-atom Newton steps with a relative cap, projected to [nu, mu].
        int it = 1;
        for (; it <= cfg.iterations; ++it) {
            double max_delta = 0.0;
            for (auto& [k, g] : model.table) {
                const auto pi = phat.find(k);
                const auto qi = qhat.find(k);
                const double ph = pi == phat.end() ? 0.0 : pi->second;
                const double qh = qi == qhat.end() ? 0.0 : qi->second;
                const double grad = qh - ph / g + cfg.lambda * (g - 1.0);
                const double curv = ph / (g * g) + cfg.lambda;
                double g_new;
                if (curv < 1e-300) {
                    g_new = grad > 0.0 ? cfg.nu : (grad < 0.0 ? cfg.mu : g);
                } else {
                    double step = grad / curv;
                    step = std::max(-0.5 * g, std::min(0.5 * g, step));
                    g_new = clamp(g - step);
                }
                max_delta = std::max(max_delta, std::abs(g_new - g));
                g = g_new;
            }
            if (it % stride == 0) model.meta.curve.push_back({it, counts_loss()});
            if (max_delta < cfg.full_batch_tol) break;
        }
        model.meta.iterations = std::min(it, cfg.iterations);
        model.meta.curve.push_back({model.meta.iterations, counts_loss()});
        return model;
    }

    // Minibatch SGD on the table entries (Algorithm-1 style loop).
    Rng batch_rng = Rng(cfg.seed).child(1);
    for (int it = 1; it <= cfg.iterations; ++it) {
        std::map<std::vector<long>, double> grad;
        for (int k = 0; k < cfg.batch; ++k) {
            const auto& key = keys_q[static_cast<std::size_t>(
                batch_rng.uniform_int(static_cast<std::int64_t>(keys_q.size())))];
            grad[key] += 1.0 / cfg.batch;
        }
        for (int k = 0; k < cfg.batch; ++k) {
            const auto& key = keys_p[static_cast<std::size_t>(
                batch_rng.uniform_int(static_cast<std::int64_t>(keys_p.size())))];
            grad[key] -= 1.0 / (cfg.batch * model.table.at(key));
        }
        if (cfg.lambda != 0.0)
            for (const auto& [k, v] : model.table) grad[k] += cfg.lambda * (v - 1.0);
        for (const auto& [k, gval] : grad) {
            auto& g = model.table.at(k);
            g = clamp(g - cfg.lr * gval);
        }
        if (it % stride == 0 || it == cfg.iterations)
            model.meta.curve.push_back({it, counts_loss()});
    }
    model.meta.iterations = cfg.iterations;
    return model;
}

}  // namespace detail

// Convex risk minimization of the dual-KL loss over the configured
// function class; the minimizer approximates dP/dQ on the data support.
inline RatioModel train_ratio(const SampleMatrix& samples_p, const SampleMatrix& samples_q,
                              const TrainConfig& cfg) {
    cfg.validate();
    if (samples_p.rows() == 0 || samples_q.rows() == 0)
        throw ArgumentError("train_ratio: empty sample set");
    if (samples_p.dim != samples_q.dim)
        throw DimensionError("train_ratio: P and Q sample dimensions differ");
    RatioModel model = cfg.model_class == ModelClass::Mlp
                           ? detail::train_mlp(samples_p, samples_q, cfg)
                           : detail::train_tabular(samples_p, samples_q, cfg);
    model.fspec.d_s = samples_p.dim;
    model.fspec.domain = RatioDomain::Raw;
    model.meta.n_p = samples_p.rows();
    model.meta.n_q = samples_q.rows();
    model.meta.seed = cfg.seed;
    detail::check_saturation(model, samples_p, samples_q);
    return model;
}

struct ZetaPair {
    RatioModel sas;
    RatioModel sa;
};

namespace detail {

inline SampleMatrix encode_dataset(const TransitionDataset& ds, const FeatureSpec& fs,
                                   bool tabular) {
    SampleMatrix m(tabular ? (fs.d_s + 1 + (fs.domain == RatioDomain::SAS ? fs.d_s : 0))
                           : fs.mlp_dim());
    std::vector<double> x;
    std::vector<long> key;
    for (const auto& tr : ds.records) {
        if (tabular) {
            fs.encode_key(tr.s, tr.a, fs.domain == RatioDomain::SAS ? &tr.s_next : nullptr, key);
            x.assign(key.begin(), key.end());
        } else {
            fs.encode_mlp(tr.s, tr.a, fs.domain == RatioDomain::SAS ? &tr.s_next : nullptr, x);
        }
        m.push(x);
    }
    return m;
}

}  // namespace detail

// Trains the two density-ratio models of the off-environment estimator:
// one over (s, a) marginals and one over (s, a, s') tuples, test data as P
// and train data as Q, with independent substreams.
inline ZetaPair train_zeta_pair(const TransitionDataset& dataset_te,
                                const TransitionDataset& dataset_tr, const TrainConfig& cfg) {
    cfg.validate();
    if (dataset_te.records.empty() || dataset_tr.records.empty())
        throw ArgumentError("train_zeta_pair: empty dataset");
    if (dataset_te.d_s != dataset_tr.d_s)
        throw DimensionError("train_zeta_pair: state dimensions differ");
    dataset_te.validate_consistent();
    dataset_tr.validate_consistent();

    const bool tabular = cfg.model_class == ModelClass::Tabular;
    ZetaPair pair;
    for (RatioDomain domain : {RatioDomain::SA, RatioDomain::SAS}) {
        FeatureSpec fs;
        fs.d_s = dataset_te.d_s;
        fs.aspec = dataset_te.action_spec;
        fs.domain = domain;
        const SampleMatrix p = detail::encode_dataset(dataset_te, fs, tabular);
        const SampleMatrix q = detail::encode_dataset(dataset_tr, fs, tabular);
        TrainConfig c = cfg;
        c.seed = Rng(cfg.seed).child(domain == RatioDomain::SA ? 1 : 2).seed();
        RatioModel m = train_ratio(p, q, c);
        m.fspec = fs;
        (domain == RatioDomain::SA ? pair.sa : pair.sas) = std::move(m);
    }
    return pair;
}

// ---------------------------------------------------------------------------
// Persistence. MLP models use the shared model format with extra header
// tokens (domain/ds/da); tabular models use the kind=tabular variant with
// one `key value` line per atom.
// ---------------------------------------------------------------------------

inline std::string ratio_header_tokens(const RatioModel& m) {
    std::ostringstream os;
    os << "domain=" << to_string(m.fspec.domain) << " ds=" << m.fspec.d_s
       << " da=" << m.fspec.aspec.token() << " lambda=" << detail::format_param(m.lambda);
    return os.str();
}

inline void write_ratio_model(const RatioModel& m, std::ostream& os) {
    if (m.cls == ModelClass::Mlp) {
        write_mlp(m.mlp, os, ratio_header_tokens(m));
        return;
    }
    os << "oee-model v1 kind=tabular din="
       << (m.fspec.d_s > 0 ? m.fspec.d_s : 0) << " nu=" << detail::format_param(m.nu)
       << " mu=" << detail::format_param(m.mu) << " " << ratio_header_tokens(m) << "\n";
    for (const auto& [key, value] : m.table) {
        for (std::size_t i = 0; i < key.size(); ++i) os << (i ? "," : "") << key[i];
        os << " " << detail::format_param(value) << "\n";
    }
}

inline void write_ratio_model_file(const RatioModel& m, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    write_ratio_model(m, os);
}

inline RatioModel read_ratio_model(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw IoError("model: empty input");
    MlpHeader h = parse_mlp_header(header);
    std::string kind = "mlp";
    RatioModel m;
    for (const auto& [k, v] : h.extra) {
        if (k == "kind") kind = v;
        else if (k == "domain")
            m.fspec.domain = v == "sa" ? RatioDomain::SA
                            : v == "sas" ? RatioDomain::SAS
                                         : RatioDomain::Raw;
        else if (k == "ds") m.fspec.d_s = std::stoi(v);
        else if (k == "lambda") m.lambda = std::stod(v);
        else if (k == "da") {
            if (v.size() >= 2 && v[0] == 'd') m.fspec.aspec = ActionSpec::discrete(std::stoi(v.substr(1)));
            else if (v.size() >= 2 && v[0] == 'c') {
                std::vector<std::pair<double, double>> ranges(
                    std::stoi(v.substr(1)), {-std::numeric_limits<double>::infinity(),
                                             std::numeric_limits<double>::infinity()});
                m.fspec.aspec = ActionSpec::continuous(ranges);
            }
        }
    }
    m.nu = h.params.nu;
    m.mu = h.params.mu;
    if (kind == "mlp") {
        m.cls = ModelClass::Mlp;
        MlpParams p = h.params;
        for (int l = 0; l < 4; ++l) {
            p.W[l].resize(static_cast<std::size_t>(p.in_size(l)) * p.out_size(l));
            p.b[l].resize(p.out_size(l));
            for (auto& w : p.W[l])
                if (!(is >> w)) throw IoError("model: truncated weights");
            for (auto& v : p.b[l])
                if (!(is >> v)) throw IoError("model: truncated biases");
        }
        p.validate();
        m.mlp = std::move(p);
        return m;
    }
    m.cls = ModelClass::Tabular;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string keytok;
        double value;
        if (!(ls >> keytok >> value)) throw IoError("model: bad tabular line '" + line + "'");
        std::vector<long> key;
        std::istringstream ks(keytok);
        std::string cell;
        while (std::getline(ks, cell, ',')) key.push_back(std::stol(cell));
        m.table[key] = value;
    }
    return m;
}

inline RatioModel read_ratio_model_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open for reading: " + path);
    return read_ratio_model(is);
}

}  // namespace oee
