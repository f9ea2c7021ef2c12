#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oee/errors.hpp"
#include "oee/rng.hpp"

namespace oee {

// Three hidden ReLU layers and a scalar output squashed through tanh into
// (nu, mu), so every emitted value satisfies the ratio bounds by
// construction:  g(x) = nu + (mu - nu) * (tanh(z) + 1) / 2.
struct MlpParams {
    int din = 1;
    std::array<int, 3> hidden = {64, 64, 64};
    double nu = 0.1;
    double mu = 10.0;
    // Four layers: din->h0, h0->h1, h1->h2, h2->1. Weights are row-major
    // (out x in), one flat vector per layer, followed by the bias vector.
    std::array<std::vector<double>, 4> W;
    std::array<std::vector<double>, 4> b;

    int in_size(int layer) const { return layer == 0 ? din : hidden[layer - 1]; }
    int out_size(int layer) const { return layer == 3 ? 1 : hidden[layer]; }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (int l = 0; l < 4; ++l) n += W[l].size() + b[l].size();
        return n;
    }

    double param_sq_norm() const {
        double s = 0.0;
        for (int l = 0; l < 4; ++l) {
            for (double w : W[l]) s += w * w;
            for (double v : b[l]) s += v * v;
        }
        return s;
    }

    void validate() const {
        if (!(nu > 0.0 && nu < 1.0 && mu > 1.0))
            throw ArgumentError("MlpParams: requires 0 < nu < 1 < mu");
        for (int l = 0; l < 4; ++l) {
            if (static_cast<int>(W[l].size()) != in_size(l) * out_size(l) ||
                static_cast<int>(b[l].size()) != out_size(l))
                throw DimensionError("MlpParams: layer shape mismatch");
            for (double w : W[l])
                if (!std::isfinite(w)) throw ArgumentError("MlpParams: non-finite weight");
            for (double v : b[l])
                if (!std::isfinite(v)) throw ArgumentError("MlpParams: non-finite bias");
        }
    }
};

// Gradient accumulator, shape-congruent with its MlpParams.
struct GradientBuffer {
    std::array<std::vector<double>, 4> W;
    std::array<std::vector<double>, 4> b;

    explicit GradientBuffer(const MlpParams& p) {
        for (int l = 0; l < 4; ++l) {
            W[l].assign(p.W[l].size(), 0.0);
            b[l].assign(p.b[l].size(), 0.0);
        }
    }

    void zero() {
        for (int l = 0; l < 4; ++l) {
            std::fill(W[l].begin(), W[l].end(), 0.0);
            std::fill(b[l].begin(), b[l].end(), 0.0);
        }
    }
};

// He-style uniform fan-in init; biases get a small uniform spread so no
// pre-activation starts exactly on the ReLU kink.
inline MlpParams mlp_init(int din, std::array<int, 3> hidden, double nu, double mu, Rng& rng) {
    MlpParams p;
    p.din = din;
    p.hidden = hidden;
    p.nu = nu;
    p.mu = mu;
    for (int l = 0; l < 4; ++l) {
        const int in = p.in_size(l), out = p.out_size(l);
        const double limit = std::sqrt(6.0 / in);
        const double bias_limit = 1.0 / std::sqrt(static_cast<double>(in));
        p.W[l].resize(static_cast<std::size_t>(in) * out);
        for (auto& w : p.W[l]) w = rng.uniform(-limit, limit);
        p.b[l].resize(out);
        for (auto& v : p.b[l]) v = rng.uniform(-bias_limit, bias_limit);
    }
    p.validate();
    return p;
}

// Per-sample activations kept for the backward pass.
struct MlpWorkspace {
    std::array<std::vector<double>, 3> pre;  // hidden pre-activations
    std::array<std::vector<double>, 3> act;  // hidden ReLU outputs
    double z = 0.0;                           // scalar pre-tanh output
    double tanh_z = 0.0;
    std::vector<double> delta_a, delta_b;    // backprop scratch
};

inline double mlp_forward_ws(const MlpParams& p, const double* x, MlpWorkspace& ws) {
    const double* in = x;
    int in_n = p.din;
    for (int l = 0; l < 3; ++l) {
        const int out_n = p.hidden[l];
        ws.pre[l].resize(out_n);
        ws.act[l].resize(out_n);
        const double* Wl = p.W[l].data();
        for (int o = 0; o < out_n; ++o) {
            double acc = p.b[l][o];
            const double* row = Wl + static_cast<std::size_t>(o) * in_n;
            for (int i = 0; i < in_n; ++i) acc += row[i] * in[i];
            ws.pre[l][o] = acc;
            ws.act[l][o] = acc > 0.0 ? acc : 0.0;
        }
        in = ws.act[l].data();
        in_n = out_n;
    }
    double z = p.b[3][0];
    for (int i = 0; i < in_n; ++i) z += p.W[3][i] * in[i];
    ws.z = z;
    ws.tanh_z = std::tanh(z);
    return p.nu + (p.mu - p.nu) * 0.5 * (ws.tanh_z + 1.0);
}

inline double mlp_forward(const MlpParams& p, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != p.din)
        throw DimensionError("mlp_forward: input dimension mismatch");
    MlpWorkspace ws;
    return mlp_forward_ws(p, x.data(), ws);
}

// Accumulates d(upstream * g) / d(param) into buf for the sample whose
// forward pass filled ws.
inline void mlp_backward_accum(const MlpParams& p, const double* x, double upstream,
                               const MlpWorkspace& ws, GradientBuffer& buf,
                               MlpWorkspace& scratch) {
    // Through the scaled tanh output.
    const double dz = upstream * (p.mu - p.nu) * 0.5 * (1.0 - ws.tanh_z * ws.tanh_z);
    const int h2 = p.hidden[2];
    // Output layer.
    for (int i = 0; i < h2; ++i) buf.W[3][i] += dz * ws.act[2][i];
    buf.b[3][0] += dz;
    // Delta entering hidden layer 2.
    scratch.delta_a.resize(h2);
    for (int i = 0; i < h2; ++i)
        scratch.delta_a[i] = ws.pre[2][i] > 0.0 ? dz * p.W[3][i] : 0.0;
    // Hidden layers back to the input.
    std::vector<double>* delta = &scratch.delta_a;
    std::vector<double>* next_delta = &scratch.delta_b;
    for (int l = 2; l >= 0; --l) {
        const int out_n = p.hidden[l];
        const int in_n = p.in_size(l);
        const double* prev_act = l == 0 ? x : ws.act[l - 1].data();
        double* Wg = buf.W[l].data();
        for (int o = 0; o < out_n; ++o) {
            const double d = (*delta)[o];
            if (d == 0.0) continue;
            double* row = Wg + static_cast<std::size_t>(o) * in_n;
            for (int i = 0; i < in_n; ++i) row[i] += d * prev_act[i];
            buf.b[l][o] += d;
        }
        if (l == 0) break;
        next_delta->assign(in_n, 0.0);
        const double* Wl = p.W[l].data();
        for (int o = 0; o < out_n; ++o) {
            const double d = (*delta)[o];
            if (d == 0.0) continue;
            const double* row = Wl + static_cast<std::size_t>(o) * in_n;
            for (int i = 0; i < in_n; ++i) (*next_delta)[i] += d * row[i];
        }
        for (int i = 0; i < in_n; ++i)
            if (ws.pre[l - 1][i] <= 0.0) (*next_delta)[i] = 0.0;
        std::swap(delta, next_delta);
    }
}

// Analytic gradient of upstream * g(x) with respect to every parameter.
inline GradientBuffer mlp_backward(const MlpParams& p, const std::vector<double>& x,
                                   double upstream) {
    if (static_cast<int>(x.size()) != p.din)
        throw DimensionError("mlp_backward: input dimension mismatch");
    GradientBuffer buf(p);
    MlpWorkspace ws, scratch;
    mlp_forward_ws(p, x.data(), ws);
    mlp_backward_accum(p, x.data(), upstream, ws, buf, scratch);
    return buf;
}

// params <- params - lr * grads.
inline void sgd_update(MlpParams& p, const GradientBuffer& g, double lr) {
    for (int l = 0; l < 4; ++l) {
        if (g.W[l].size() != p.W[l].size() || g.b[l].size() != p.b[l].size())
            throw DimensionError("sgd_update: gradient shape mismatch");
        for (std::size_t i = 0; i < p.W[l].size(); ++i) {
            if (!std::isfinite(g.W[l][i]))
                throw TrainingError("sgd_update: non-finite gradient");
            p.W[l][i] -= lr * g.W[l][i];
        }
        for (std::size_t i = 0; i < p.b[l].size(); ++i) {
            if (!std::isfinite(g.b[l][i]))
                throw TrainingError("sgd_update: non-finite gradient");
            p.b[l][i] -= lr * g.b[l][i];
        }
    }
}

namespace detail {
inline std::string format_param(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace detail

// Model file: header line then parameters layer by layer, row-major
// weights then biases, whitespace-separated.
inline void write_mlp(const MlpParams& p, std::ostream& os,
                      const std::string& extra_header_tokens = "") {
    os << "oee-model v1 kind=mlp din=" << p.din << " h=" << p.hidden[0] << "," << p.hidden[1]
       << "," << p.hidden[2] << " nu=" << detail::format_param(p.nu)
       << " mu=" << detail::format_param(p.mu);
    if (!extra_header_tokens.empty()) os << " " << extra_header_tokens;
    os << "\n";
    for (int l = 0; l < 4; ++l) {
        for (std::size_t i = 0; i < p.W[l].size(); ++i)
            os << detail::format_param(p.W[l][i]) << (i + 1 == p.W[l].size() ? "" : " ");
        os << "\n";
        for (std::size_t i = 0; i < p.b[l].size(); ++i)
            os << detail::format_param(p.b[l][i]) << (i + 1 == p.b[l].size() ? "" : " ");
        os << "\n";
    }
}

struct MlpHeader {
    MlpParams params;  // shapes and bounds filled in, weights empty
    std::vector<std::pair<std::string, std::string>> extra;
};

inline MlpHeader parse_mlp_header(const std::string& header) {
    std::istringstream hs(header);
    std::string magic, version;
    hs >> magic >> version;
    if (magic != "oee-model" || version != "v1")
        throw IoError("model: bad header '" + header + "'");
    MlpHeader out;
    std::string tok;
    bool is_mlp = false;
    while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw IoError("model: bad header token '" + tok + "'");
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "kind") {
            is_mlp = val == "mlp";
            if (!is_mlp && val != "tabular") throw IoError("model: unknown kind '" + val + "'");
            out.extra.push_back({key, val});
        } else if (key == "din") {
            out.params.din = std::stoi(val);
        } else if (key == "h") {
            std::istringstream vs(val);
            std::string cell;
            for (int i = 0; i < 3; ++i) {
                if (!std::getline(vs, cell, ',')) throw IoError("model: bad h= field");
                out.params.hidden[i] = std::stoi(cell);
            }
        } else if (key == "nu") {
            out.params.nu = std::stod(val);
        } else if (key == "mu") {
            out.params.mu = std::stod(val);
        } else {
            out.extra.push_back({key, val});
        }
    }
    return out;
}

inline MlpParams read_mlp(std::istream& is, std::vector<std::pair<std::string, std::string>>*
                                                 extra_tokens = nullptr) {
    std::string header;
    if (!std::getline(is, header)) throw IoError("model: empty input");
    MlpHeader h = parse_mlp_header(header);
    MlpParams p = h.params;
    if (extra_tokens) *extra_tokens = h.extra;
    for (int l = 0; l < 4; ++l) {
        p.W[l].resize(static_cast<std::size_t>(p.in_size(l)) * p.out_size(l));
        p.b[l].resize(p.out_size(l));
        for (auto& w : p.W[l])
            if (!(is >> w)) throw IoError("model: truncated weights");
        for (auto& v : p.b[l])
            if (!(is >> v)) throw IoError("model: truncated biases");
    }
    p.validate();
    return p;
}

inline void write_mlp_file(const MlpParams& p, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    write_mlp(p, os);
}

inline MlpParams read_mlp_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open for reading: " + path);
    return read_mlp(is);
}

}  // namespace oee
