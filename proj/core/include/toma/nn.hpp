#pragma once

#include "toma/rng.hpp"

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>
#include <vector>

namespace toma {

// Fully connected net: ReLU on hidden layers, linear output. All math is
// double precision; batches are stored one sample per column.

struct MlpSpec {
    std::vector<int> widths;  // input, hidden..., output

    int layers() const { return static_cast<int>(widths.size()) - 1; }
    int in_dim() const { return widths.front(); }
    int out_dim() const { return widths.back(); }

    friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

struct MlpParams {
    MlpSpec spec;
    std::vector<Eigen::MatrixXd> W;  // W[l] is widths[l+1] x widths[l]
    std::vector<Eigen::VectorXd> b;

    // Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases.
    static MlpParams glorot(const MlpSpec& spec, Rng& rng);
    long param_count() const;
};

struct ForwardTrace {
    std::vector<Eigen::MatrixXd> acts;  // acts[0] = input, acts[l+1] = layer l output
    std::vector<Eigen::MatrixXd> pre;   // pre-activations, for the ReLU mask
};

Eigen::VectorXd mlp_forward(const MlpParams& p, const Eigen::VectorXd& x);
Eigen::MatrixXd mlp_forward_batch(const MlpParams& p, const Eigen::MatrixXd& X,
                                  ForwardTrace* trace = nullptr);

struct MlpGrads {
    std::vector<Eigen::MatrixXd> dW;
    std::vector<Eigen::VectorXd> db;

    static MlpGrads zeros(const MlpSpec& spec);
    void accumulate(const MlpGrads& other, double scale = 1.0);
};

// `upstream` holds dLoss/dOutput per column; gradients are summed over the
// batch. ReLU is treated as having zero derivative at exactly 0. If dX is
// given it receives dLoss/dInput.
MlpGrads mlp_backward_batch(const MlpParams& p, const ForwardTrace& trace,
                            const Eigen::MatrixXd& upstream, Eigen::MatrixXd* dX = nullptr);

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Eigen::MatrixXd> mW, vW;
    std::vector<Eigen::VectorXd> mb, vb;
    long t = 0;

    static AdamState zeros(const MlpSpec& spec);
};

// One bias-corrected Adam update, in place.
void adam_step(MlpParams& p, AdamState& state, const MlpGrads& g, const AdamConfig& cfg);

// Checkpoint round-trip. Doubles survive bit-exactly.
nlohmann::json params_to_json(const MlpParams& p);
MlpParams params_from_json(const nlohmann::json& j);
nlohmann::json adam_to_json(const AdamState& s);
AdamState adam_from_json(const nlohmann::json& j);

// 2x2 average pooling over a column-major side x side image vector. Used to
// shrink top-down observations before they reach a network.
Eigen::VectorXd pool2(const Eigen::VectorXd& img, int side);

// Applies pooling `pool_steps` times when the observation is a square image of
// `image_side`; passes small observations through untouched.
struct InputTransform {
    int image_side = 0;  // 0 = identity
    int pool_steps = 0;

    int out_dim(int in_dim) const;
    Eigen::VectorXd apply(const Eigen::VectorXd& obs) const;
    Eigen::MatrixXd apply_batch(const Eigen::MatrixXd& obs) const;
};

}  // namespace toma
