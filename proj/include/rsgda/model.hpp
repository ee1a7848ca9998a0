#pragma once

#include "rsgda/graph.hpp"

#include <random>
#include <string>
#include <utility>
#include <vector>

namespace rsgda {

/// A parameter matrix with its gradient and Adam moments.
struct Tensor {
    std::string name;
    DenseMat value;
    DenseMat grad;
    DenseMat m;
    DenseMat v;

    void setup(Eigen::Index r, Eigen::Index c, std::string n);
};

struct DenseLayer {
    Tensor W; // in x out
    Tensor b; // 1 x out
};

struct LossWeights {
    double mu1 = 0.1;      // reconstruction trade-off
    double mu2 = 0.1;      // alignment trade-off
    double beta = 2.0;     // scaled-cosine sharpening, >= 1
    double mu_ce = 1.0;    // source classification weight
    double cr_weight = 1.0; // zeroed by the no_cr ablation

    void validate() const;
};

/// Two unshared encoders (d -> hidden -> code), a decoder
/// (2*code -> hidden -> 2d), a linear classifier head on the
/// concatenated code, and the filter balance logit.
struct ModelState {
    DenseLayer enc_e1, enc_e2;
    DenseLayer enc_o1, enc_o2;
    DenseLayer dec1, dec2;
    DenseLayer cls;
    Tensor gamma_logit; // 1 x 1

    int input_dim = 0;
    int hidden_dim = 128;
    int code_dim = 16;
    int num_classes = 0;
    double dropout_rate = 0.5;
    int64_t adam_step = 0;

    static ModelState init(int input_dim, int num_classes, std::mt19937_64& rng,
                           int hidden_dim = 128, int code_dim = 16);

    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    void zero_grads();
    double gamma() const;
};

/// Inverted-dropout mask: entries are 0 or 1/(1-rate).
DenseMat dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng);

struct MlpTrace {
    DenseMat in, pre1, hidden, out;
    DenseMat mask; // empty in eval mode
};

MlpTrace mlp_forward(const DenseLayer& l1, const DenseLayer& l2, const DenseMat& in,
                     const DenseMat* mask);
/// Accumulates parameter grads, returns the gradient w.r.t. the input.
DenseMat mlp_backward(DenseLayer& l1, DenseLayer& l2, const MlpTrace& trace,
                      const DenseMat& d_out);

/// Both encoders on the filtered features; masks null = eval mode.
std::pair<DenseMat, DenseMat> encode(const DenseMat& z_e, const DenseMat& z_o,
                                     const ModelState& state, const DenseMat* mask_e = nullptr,
                                     const DenseMat* mask_o = nullptr);

// --- losses (value-only and value+gradient forms) -------------------------

double correlation_reduction_loss(const DenseMat& h_e, const DenseMat& h_o);
double correlation_reduction_loss_grad(const DenseMat& h_e, const DenseMat& h_o, DenseMat& d_h_e,
                                       DenseMat& d_h_o);

double reconstruction_loss(const DenseMat& target, const DenseMat& decoded, double beta);
double reconstruction_loss_grad(const DenseMat& target, const DenseMat& decoded, double beta,
                                DenseMat& d_target, DenseMat& d_decoded);

/// KL(p || q) with the 1e-8 additive guard inside the logs.
double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Mean of row-wise softmax distributions.
Eigen::VectorXd mean_row_softmax(const DenseMat& codes);

double alignment_loss(const DenseMat& h_e_src, const DenseMat& h_e_tgt, const DenseMat& h_o_src,
                      const DenseMat& h_o_tgt);
double alignment_loss_grad(const DenseMat& h_e_src, const DenseMat& h_e_tgt,
                           const DenseMat& h_o_src, const DenseMat& h_o_tgt, DenseMat& d_e_src,
                           DenseMat& d_e_tgt, DenseMat& d_o_src, DenseMat& d_o_tgt);

double classifier_loss(const DenseLayer& cls, const DenseMat& h_concat,
                       const Eigen::VectorXi& y);
double classifier_loss_grad(DenseLayer& cls, const DenseMat& h_concat, const Eigen::VectorXi& y,
                            DenseMat& d_h);

struct LossParts {
    double cr = 0.0, re = 0.0, a = 0.0, ce = 0.0;
};

/// Weighted sum; throws NumericalError naming the first non-finite part.
double total_loss(const LossParts& parts, const LossWeights& weights);

// --- full-model forward/backward ------------------------------------------

/// Unscaled filter bases for one domain; gamma scales them inside the model
/// so its gradient can flow back into the cached products.
struct DomainInput {
    const DenseMat* u_e = nullptr; // (L_E/2)^k X
    const DenseMat* u_o = nullptr; // (I - L_O/2)^k X
};

struct DomainTrace {
    DenseMat z_e, z_o;
    MlpTrace enc_e, enc_o, dec;
    DenseMat code;    // [H_E, H_O]
    DenseMat target;  // [Z_E, Z_O]
    DenseMat decoded;
};

struct ForwardTrace {
    DomainTrace src, tgt;
    DenseMat logits_src;
    LossParts parts;
    double total = 0.0;
    double gamma = 0.0;
};

struct TrainingMasks {
    DenseMat enc_e_src, enc_o_src, dec_src;
    DenseMat enc_e_tgt, enc_o_tgt, dec_tgt;

    static TrainingMasks draw(Eigen::Index n_src, Eigen::Index n_tgt, int hidden_dim, double rate,
                              std::mt19937_64& rng);
};

ForwardTrace model_forward(const ModelState& state, const DomainInput& src,
                           const DomainInput& tgt, const Eigen::VectorXi& y_src,
                           const LossWeights& weights, const TrainingMasks* masks);

/// Exact reverse-mode gradients for every parameter including gamma_logit.
/// Throws NumericalError naming the parameter on a non-finite gradient.
void model_backward(ModelState& state, const DomainInput& src, const DomainInput& tgt,
                    const Eigen::VectorXi& y_src, const LossWeights& weights,
                    const ForwardTrace& trace);

/// Adam with decoupled weight decay over every registered parameter.
void adam_step(ModelState& state, double lr, double weight_decay);

/// forward + backward + adam in one call; returns the trace for metrics.
ForwardTrace backward_and_step(ModelState& state, const DomainInput& src, const DomainInput& tgt,
                               const Eigen::VectorXi& y_src, const LossWeights& weights,
                               const TrainingMasks* masks, double lr, double weight_decay);

} // namespace rsgda
