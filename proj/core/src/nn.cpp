#include "toma/nn.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace toma {

namespace {

void check_spec(const MlpSpec& spec) {
    if (spec.widths.size() < 2) throw std::invalid_argument("MlpSpec needs >= 2 widths");
    for (int w : spec.widths)
        if (w <= 0) throw std::invalid_argument("MlpSpec widths must be positive");
}

}  // namespace

MlpParams MlpParams::glorot(const MlpSpec& spec, Rng& rng) {
    check_spec(spec);
    MlpParams p;
    p.spec = spec;
    for (int l = 0; l < spec.layers(); ++l) {
        const int fan_in = spec.widths[l], fan_out = spec.widths[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        Eigen::MatrixXd W(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) W(r, c) = uniform_real(rng, -limit, limit);
        p.W.push_back(std::move(W));
        p.b.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return p;
}

long MlpParams::param_count() const {
    long n = 0;
    for (size_t l = 0; l < W.size(); ++l) n += W[l].size() + b[l].size();
    return n;
}

Eigen::VectorXd mlp_forward(const MlpParams& p, const Eigen::VectorXd& x) {
    return mlp_forward_batch(p, x).col(0);
}

Eigen::MatrixXd mlp_forward_batch(const MlpParams& p, const Eigen::MatrixXd& X,
                                  ForwardTrace* trace) {
    if (X.rows() != p.spec.in_dim())
        throw std::invalid_argument("mlp_forward: input has " + std::to_string(X.rows()) +
                                    " rows, expected " + std::to_string(p.spec.in_dim()));
    const int L = p.spec.layers();
    if (trace) {
        trace->acts.assign(1, X);
        trace->pre.clear();
    }
    Eigen::MatrixXd h = X;
    for (int l = 0; l < L; ++l) {
        Eigen::MatrixXd z = (p.W[l] * h).colwise() + p.b[l];
        if (trace) trace->pre.push_back(z);
        h = (l + 1 < L) ? z.cwiseMax(0.0).eval() : std::move(z);
        if (trace) trace->acts.push_back(h);
    }
    return h;
}

MlpGrads MlpGrads::zeros(const MlpSpec& spec) {
    check_spec(spec);
    MlpGrads g;
    for (int l = 0; l < spec.layers(); ++l) {
        g.dW.push_back(Eigen::MatrixXd::Zero(spec.widths[l + 1], spec.widths[l]));
        g.db.push_back(Eigen::VectorXd::Zero(spec.widths[l + 1]));
    }
    return g;
}

void MlpGrads::accumulate(const MlpGrads& other, double scale) {
    if (other.dW.size() != dW.size()) throw std::invalid_argument("accumulate: shape mismatch");
    for (size_t l = 0; l < dW.size(); ++l) {
        dW[l] += scale * other.dW[l];
        db[l] += scale * other.db[l];
    }
}

MlpGrads mlp_backward_batch(const MlpParams& p, const ForwardTrace& trace,
                            const Eigen::MatrixXd& upstream, Eigen::MatrixXd* dX) {
    const int L = p.spec.layers();
    if (static_cast<int>(trace.pre.size()) != L || static_cast<int>(trace.acts.size()) != L + 1)
        throw std::invalid_argument("mlp_backward: trace does not match spec");
    if (upstream.rows() != p.spec.out_dim() || upstream.cols() != trace.acts[0].cols())
        throw std::invalid_argument("mlp_backward: upstream shape mismatch");

    MlpGrads g;
    g.dW.resize(L);
    g.db.resize(L);
    Eigen::MatrixXd delta = upstream;  // dLoss/d(pre) of the layer being visited
    for (int l = L - 1; l >= 0; --l) {
        if (l < L - 1)
            delta = delta.cwiseProduct((trace.pre[l].array() > 0.0).cast<double>().matrix());
        g.dW[l] = delta * trace.acts[l].transpose();
        g.db[l] = delta.rowwise().sum();
        if (l > 0 || dX) delta = (p.W[l].transpose() * delta).eval();
    }
    if (dX) *dX = std::move(delta);
    return g;
}

AdamState AdamState::zeros(const MlpSpec& spec) {
    check_spec(spec);
    AdamState s;
    for (int l = 0; l < spec.layers(); ++l) {
        s.mW.push_back(Eigen::MatrixXd::Zero(spec.widths[l + 1], spec.widths[l]));
        s.vW.push_back(Eigen::MatrixXd::Zero(spec.widths[l + 1], spec.widths[l]));
        s.mb.push_back(Eigen::VectorXd::Zero(spec.widths[l + 1]));
        s.vb.push_back(Eigen::VectorXd::Zero(spec.widths[l + 1]));
    }
    return s;
}

void adam_step(MlpParams& p, AdamState& s, const MlpGrads& g, const AdamConfig& cfg) {
    if (s.mW.size() != p.W.size() || g.dW.size() != p.W.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    s.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.t));
    for (size_t l = 0; l < p.W.size(); ++l) {
        s.mW[l] = cfg.beta1 * s.mW[l] + (1.0 - cfg.beta1) * g.dW[l];
        s.vW[l] = cfg.beta2 * s.vW[l] + (1.0 - cfg.beta2) * g.dW[l].cwiseProduct(g.dW[l]);
        p.W[l].array() -=
            cfg.lr * (s.mW[l].array() / bc1) / ((s.vW[l].array() / bc2).sqrt() + cfg.eps);
        s.mb[l] = cfg.beta1 * s.mb[l] + (1.0 - cfg.beta1) * g.db[l];
        s.vb[l] = cfg.beta2 * s.vb[l] + (1.0 - cfg.beta2) * g.db[l].cwiseProduct(g.db[l]);
        p.b[l].array() -=
            cfg.lr * (s.mb[l].array() / bc1) / ((s.vb[l].array() / bc2).sqrt() + cfg.eps);
    }
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return {};
    const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j.at(r);
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw std::runtime_error("checkpoint: ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(c).get<double>();
    }
    return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
    return v;
}

}  // namespace

nlohmann::json params_to_json(const MlpParams& p) {
    nlohmann::json j;
    j["widths"] = p.spec.widths;
    j["W"] = nlohmann::json::array();
    j["b"] = nlohmann::json::array();
    for (size_t l = 0; l < p.W.size(); ++l) {
        j["W"].push_back(matrix_to_json(p.W[l]));
        j["b"].push_back(vector_to_json(p.b[l]));
    }
    return j;
}

MlpParams params_from_json(const nlohmann::json& j) {
    MlpParams p;
    p.spec.widths = j.at("widths").get<std::vector<int>>();
    check_spec(p.spec);
    for (const auto& w : j.at("W")) p.W.push_back(matrix_from_json(w));
    for (const auto& b : j.at("b")) p.b.push_back(vector_from_json(b));
    if (static_cast<int>(p.W.size()) != p.spec.layers() || p.b.size() != p.W.size())
        throw std::runtime_error("checkpoint: layer count mismatch");
    return p;
}

nlohmann::json adam_to_json(const AdamState& s) {
    nlohmann::json j;
    j["t"] = s.t;
    j["mW"] = nlohmann::json::array();
    j["vW"] = nlohmann::json::array();
    j["mb"] = nlohmann::json::array();
    j["vb"] = nlohmann::json::array();
    for (size_t l = 0; l < s.mW.size(); ++l) {
        j["mW"].push_back(matrix_to_json(s.mW[l]));
        j["vW"].push_back(matrix_to_json(s.vW[l]));
        j["mb"].push_back(vector_to_json(s.mb[l]));
        j["vb"].push_back(vector_to_json(s.vb[l]));
    }
    return j;
}

AdamState adam_from_json(const nlohmann::json& j) {
    AdamState s;
    s.t = j.at("t").get<long>();
    for (const auto& m : j.at("mW")) s.mW.push_back(matrix_from_json(m));
    for (const auto& m : j.at("vW")) s.vW.push_back(matrix_from_json(m));
    for (const auto& v : j.at("mb")) s.mb.push_back(vector_from_json(v));
    for (const auto& v : j.at("vb")) s.vb.push_back(vector_from_json(v));
    return s;
}

// ---------------------------------------------------------------------------
// Image input shrinking

Eigen::VectorXd pool2(const Eigen::VectorXd& img, int side) {
    if (side % 2 != 0 || img.size() != static_cast<Eigen::Index>(side) * side)
        throw std::invalid_argument("pool2: need an even side x side image");
    const int half = side / 2;
    Eigen::Map<const Eigen::MatrixXd> in(img.data(), side, side);
    Eigen::MatrixXd out(half, half);
    for (int r = 0; r < half; ++r)
        for (int c = 0; c < half; ++c)
            out(r, c) = in.block<2, 2>(2 * r, 2 * c).mean();
    return Eigen::Map<const Eigen::VectorXd>(out.data(), out.size());
}

int InputTransform::out_dim(int in_dim) const {
    if (image_side == 0 || pool_steps == 0) return in_dim;
    if (in_dim != image_side * image_side)
        throw std::invalid_argument("InputTransform: dim is not image_side^2");
    int side = image_side;
    for (int i = 0; i < pool_steps; ++i) side /= 2;
    return side * side;
}

Eigen::VectorXd InputTransform::apply(const Eigen::VectorXd& obs) const {
    if (image_side == 0 || pool_steps == 0) return obs;
    Eigen::VectorXd v = obs;
    int side = image_side;
    for (int i = 0; i < pool_steps; ++i) {
        v = pool2(v, side);
        side /= 2;
    }
    return v;
}

Eigen::MatrixXd InputTransform::apply_batch(const Eigen::MatrixXd& obs) const {
    if (image_side == 0 || pool_steps == 0) return obs;
    Eigen::MatrixXd out(out_dim(static_cast<int>(obs.rows())), obs.cols());
    for (Eigen::Index c = 0; c < obs.cols(); ++c) out.col(c) = apply(obs.col(c));
    return out;
}

}  // namespace toma
