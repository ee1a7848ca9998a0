#include "rsgda/model.hpp"

#include "rsgda/common.hpp"

#include <cmath>

namespace rsgda {

namespace {
constexpr double kEps = 1e-8; // guard for cosine and KL denominators
}

void Tensor::setup(Eigen::Index r, Eigen::Index c, std::string n) {
    name = std::move(n);
    value = DenseMat::Zero(r, c);
    grad = DenseMat::Zero(r, c);
    m = DenseMat::Zero(r, c);
    v = DenseMat::Zero(r, c);
}

void LossWeights::validate() const {
    if (beta < 1.0) throw DataError("loss weights: beta must be >= 1");
    if (mu1 < 0.0 || mu2 < 0.0 || mu_ce < 0.0 || cr_weight < 0.0)
        throw DataError("loss weights must be nonnegative");
}

namespace {

void init_layer(DenseLayer& layer, Eigen::Index in, Eigen::Index out, const std::string& name,
                std::mt19937_64& rng) {
    layer.W.setup(in, out, name + ".W");
    layer.b.setup(1, out, name + ".b");
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < in; ++i)
        for (Eigen::Index j = 0; j < out; ++j) layer.W.value(i, j) = u(rng);
    for (Eigen::Index j = 0; j < out; ++j) layer.b.value(0, j) = u(rng);
}

} // namespace

ModelState ModelState::init(int input_dim, int num_classes, std::mt19937_64& rng, int hidden_dim,
                            int code_dim) {
    if (input_dim < 1 || num_classes < 1) throw DataError("model needs input_dim and classes >= 1");
    ModelState s;
    s.input_dim = input_dim;
    s.hidden_dim = hidden_dim;
    s.code_dim = code_dim;
    s.num_classes = num_classes;
    init_layer(s.enc_e1, input_dim, hidden_dim, "encoder_E.l1", rng);
    init_layer(s.enc_e2, hidden_dim, code_dim, "encoder_E.l2", rng);
    init_layer(s.enc_o1, input_dim, hidden_dim, "encoder_O.l1", rng);
    init_layer(s.enc_o2, hidden_dim, code_dim, "encoder_O.l2", rng);
    init_layer(s.dec1, 2 * code_dim, hidden_dim, "decoder.l1", rng);
    init_layer(s.dec2, hidden_dim, 2 * input_dim, "decoder.l2", rng);
    init_layer(s.cls, 2 * code_dim, num_classes, "classifier", rng);
    s.gamma_logit.setup(1, 1, "gamma_logit");
    return s;
}

std::vector<Tensor*> ModelState::parameters() {
    return {&enc_e1.W, &enc_e1.b, &enc_e2.W, &enc_e2.b, &enc_o1.W, &enc_o1.b,
            &enc_o2.W, &enc_o2.b, &dec1.W,   &dec1.b,   &dec2.W,   &dec2.b,
            &cls.W,    &cls.b,    &gamma_logit};
}

std::vector<const Tensor*> ModelState::parameters() const {
    auto mut = const_cast<ModelState*>(this)->parameters();
    return {mut.begin(), mut.end()};
}

void ModelState::zero_grads() {
    for (Tensor* t : parameters()) t->grad.setZero();
}

double ModelState::gamma() const { return sigmoid(gamma_logit.value(0, 0)); }

DenseMat dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng) {
    if (rate < 0.0 || rate >= 1.0) throw DataError("dropout rate must be in [0, 1)");
    double keep = 1.0 - rate;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DenseMat mask(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) mask(i, j) = u(rng) < keep ? 1.0 / keep : 0.0;
    return mask;
}

MlpTrace mlp_forward(const DenseLayer& l1, const DenseLayer& l2, const DenseMat& in,
                     const DenseMat* mask) {
    MlpTrace t;
    t.in = in;
    t.pre1 = (in * l1.W.value).rowwise() + l1.b.value.row(0);
    t.hidden = t.pre1.cwiseMax(0.0);
    if (mask != nullptr) {
        t.mask = *mask;
        t.hidden = t.hidden.cwiseProduct(t.mask);
    }
    t.out = (t.hidden * l2.W.value).rowwise() + l2.b.value.row(0);
    return t;
}

DenseMat mlp_backward(DenseLayer& l1, DenseLayer& l2, const MlpTrace& trace,
                      const DenseMat& d_out) {
    l2.W.grad += trace.hidden.transpose() * d_out;
    l2.b.grad += d_out.colwise().sum();
    DenseMat d_hidden = d_out * l2.W.value.transpose();
    if (trace.mask.size() > 0) d_hidden = d_hidden.cwiseProduct(trace.mask);
    DenseMat d_pre1 =
        d_hidden.cwiseProduct((trace.pre1.array() > 0.0).cast<double>().matrix());
    l1.W.grad += trace.in.transpose() * d_pre1;
    l1.b.grad += d_pre1.colwise().sum();
    return d_pre1 * l1.W.value.transpose();
}

std::pair<DenseMat, DenseMat> encode(const DenseMat& z_e, const DenseMat& z_o,
                                     const ModelState& state, const DenseMat* mask_e,
                                     const DenseMat* mask_o) {
    if (z_e.cols() != state.input_dim || z_o.cols() != state.input_dim)
        throw DataError("encode: feature dimension disagrees with the model");
    MlpTrace te = mlp_forward(state.enc_e1, state.enc_e2, z_e, mask_e);
    MlpTrace to = mlp_forward(state.enc_o1, state.enc_o2, z_o, mask_o);
    return {te.out, to.out};
}

// --- correlation reduction --------------------------------------------------

namespace {

// K_ij is the cosine of column i of H_E with column j of H_O.
struct CrWork {
    Eigen::VectorXd a, b; // column norms
    DenseMat K, R;
    double loss = 0.0;
    Eigen::Index d = 0;
};

CrWork cr_forward(const DenseMat& h_e, const DenseMat& h_o) {
    if (h_e.rows() != h_o.rows() || h_e.cols() != h_o.cols())
        throw DataError("correlation reduction: code shapes disagree");
    CrWork w;
    w.d = h_e.cols();
    w.a = h_e.colwise().norm();
    w.b = h_o.colwise().norm();
    w.R = w.a * w.b.transpose();
    w.R.array() += kEps;
    w.K = (h_e.transpose() * h_o).cwiseQuotient(w.R);
    const double dd = static_cast<double>(w.d) * static_cast<double>(w.d);
    double diag = 0.0, off = 0.0;
    for (Eigen::Index i = 0; i < w.d; ++i) {
        for (Eigen::Index j = 0; j < w.d; ++j) {
            if (i == j) {
                diag += (w.K(i, i) - 1.0) * (w.K(i, i) - 1.0);
            } else {
                off += w.K(i, j) * w.K(i, j);
            }
        }
    }
    w.loss = diag / dd + (w.d > 1 ? off / (dd - static_cast<double>(w.d)) : 0.0);
    return w;
}

} // namespace

double correlation_reduction_loss(const DenseMat& h_e, const DenseMat& h_o) {
    return cr_forward(h_e, h_o).loss;
}

double correlation_reduction_loss_grad(const DenseMat& h_e, const DenseMat& h_o, DenseMat& d_h_e,
                                       DenseMat& d_h_o) {
    CrWork w = cr_forward(h_e, h_o);
    const double dd = static_cast<double>(w.d) * static_cast<double>(w.d);
    DenseMat G(w.d, w.d);
    for (Eigen::Index i = 0; i < w.d; ++i)
        for (Eigen::Index j = 0; j < w.d; ++j)
            G(i, j) = i == j ? 2.0 * (w.K(i, i) - 1.0) / dd
                             : (w.d > 1 ? 2.0 * w.K(i, j) / (dd - static_cast<double>(w.d)) : 0.0);

    DenseMat GR = G.cwiseQuotient(w.R);
    d_h_e = h_o * GR.transpose();
    d_h_o = h_e * GR;
    for (Eigen::Index i = 0; i < w.d; ++i) {
        double c = (GR.row(i).transpose().array() * w.K.row(i).transpose().array() * w.b.array())
                       .sum();
        if (w.a[i] > 0.0) d_h_e.col(i) -= (c / w.a[i]) * h_e.col(i);
    }
    for (Eigen::Index j = 0; j < w.d; ++j) {
        double c = (GR.col(j).array() * w.K.col(j).array() * w.a.array()).sum();
        if (w.b[j] > 0.0) d_h_o.col(j) -= (c / w.b[j]) * h_o.col(j);
    }
    return w.loss;
}

// --- scaled cosine reconstruction -------------------------------------------

double reconstruction_loss(const DenseMat& target, const DenseMat& decoded, double beta) {
    if (target.rows() != decoded.rows() || target.cols() != decoded.cols())
        throw DataError("reconstruction loss: shape mismatch");
    if (beta < 1.0) throw DataError("reconstruction loss: beta must be >= 1");
    double loss = 0.0;
    for (Eigen::Index i = 0; i < target.rows(); ++i) {
        double r = target.row(i).norm() * decoded.row(i).norm() + kEps;
        double c = target.row(i).dot(decoded.row(i)) / r;
        loss += std::pow(1.0 - c, beta);
    }
    return loss;
}

double reconstruction_loss_grad(const DenseMat& target, const DenseMat& decoded, double beta,
                                DenseMat& d_target, DenseMat& d_decoded) {
    if (target.rows() != decoded.rows() || target.cols() != decoded.cols())
        throw DataError("reconstruction loss: shape mismatch");
    if (beta < 1.0) throw DataError("reconstruction loss: beta must be >= 1");
    d_target = DenseMat::Zero(target.rows(), target.cols());
    d_decoded = DenseMat::Zero(target.rows(), target.cols());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < target.rows(); ++i) {
        Eigen::RowVectorXd z = target.row(i);
        Eigen::RowVectorXd w = decoded.row(i);
        double nz = z.norm(), nw = w.norm();
        double r = nz * nw + kEps;
        double s = z.dot(w);
        double c = s / r;
        loss += std::pow(1.0 - c, beta);
        double dc = -beta * std::pow(1.0 - c, beta - 1.0);
        Eigen::RowVectorXd dcdw = z / r;
        if (nw > 0.0) dcdw -= (s / (r * r)) * nz * (w / nw);
        Eigen::RowVectorXd dcdz = w / r;
        if (nz > 0.0) dcdz -= (s / (r * r)) * nw * (z / nz);
        d_decoded.row(i) = dc * dcdw;
        d_target.row(i) = dc * dcdz;
    }
    return loss;
}

// --- KL alignment -------------------------------------------------------------

double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    if (p.size() != q.size()) throw DataError("kl divergence: length mismatch");
    double kl = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        kl += p[i] * (std::log(p[i] + kEps) - std::log(q[i] + kEps));
    return kl;
}

namespace {

DenseMat row_softmax(const DenseMat& h) {
    DenseMat s(h.rows(), h.cols());
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        Eigen::RowVectorXd e = (h.row(i).array() - h.row(i).maxCoeff()).exp();
        s.row(i) = e / e.sum();
    }
    return s;
}

// gradient of KL(p||q) w.r.t. the mean distributions
void kl_grads(const Eigen::VectorXd& p, const Eigen::VectorXd& q, Eigen::VectorXd& dp,
              Eigen::VectorXd& dq) {
    dp.resize(p.size());
    dq.resize(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        dp[i] = std::log(p[i] + kEps) - std::log(q[i] + kEps) + p[i] / (p[i] + kEps);
        dq[i] = -p[i] / (q[i] + kEps);
    }
}

// propagates a mean-distribution gradient through mean-of-row-softmax
DenseMat softmax_mean_backward(const DenseMat& softmaxed, const Eigen::VectorXd& d_mean) {
    const double inv_n = 1.0 / static_cast<double>(softmaxed.rows());
    DenseMat d_h(softmaxed.rows(), softmaxed.cols());
    for (Eigen::Index i = 0; i < softmaxed.rows(); ++i) {
        Eigen::RowVectorXd s = softmaxed.row(i);
        double dot = s.dot(d_mean.transpose());
        d_h.row(i) = inv_n * (s.array() * (d_mean.transpose().array() - dot)).matrix();
    }
    return d_h;
}

} // namespace

Eigen::VectorXd mean_row_softmax(const DenseMat& codes) {
    if (codes.rows() == 0) throw DataError("mean_row_softmax: empty code matrix");
    return row_softmax(codes).colwise().mean().transpose();
}

double alignment_loss(const DenseMat& h_e_src, const DenseMat& h_e_tgt, const DenseMat& h_o_src,
                      const DenseMat& h_o_tgt) {
    if (h_e_src.cols() != h_e_tgt.cols() || h_o_src.cols() != h_o_tgt.cols())
        throw DataError("alignment loss: code dimensions disagree");
    return kl_divergence(mean_row_softmax(h_e_src), mean_row_softmax(h_e_tgt)) +
           kl_divergence(mean_row_softmax(h_o_src), mean_row_softmax(h_o_tgt));
}

double alignment_loss_grad(const DenseMat& h_e_src, const DenseMat& h_e_tgt,
                           const DenseMat& h_o_src, const DenseMat& h_o_tgt, DenseMat& d_e_src,
                           DenseMat& d_e_tgt, DenseMat& d_o_src, DenseMat& d_o_tgt) {
    double loss = 0.0;
    auto path = [&](const DenseMat& hs, const DenseMat& ht, DenseMat& ds, DenseMat& dt) {
        DenseMat ss = row_softmax(hs), st = row_softmax(ht);
        Eigen::VectorXd p = ss.colwise().mean().transpose();
        Eigen::VectorXd q = st.colwise().mean().transpose();
        loss += kl_divergence(p, q);
        Eigen::VectorXd dp, dq;
        kl_grads(p, q, dp, dq);
        ds = softmax_mean_backward(ss, dp);
        dt = softmax_mean_backward(st, dq);
    };
    path(h_e_src, h_e_tgt, d_e_src, d_e_tgt);
    path(h_o_src, h_o_tgt, d_o_src, d_o_tgt);
    return loss;
}

// --- classifier ---------------------------------------------------------------

namespace {

DenseMat classifier_probs(const DenseLayer& cls, const DenseMat& h) {
    DenseMat logits = (h * cls.W.value).rowwise() + cls.b.value.row(0);
    return row_softmax(logits);
}

} // namespace

double classifier_loss(const DenseLayer& cls, const DenseMat& h_concat, const Eigen::VectorXi& y) {
    if (h_concat.rows() != y.size()) throw DataError("classifier loss: label count mismatch");
    if (y.size() == 0) throw DataError("classifier loss: empty input");
    DenseMat probs = classifier_probs(cls, h_concat);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        loss -= std::log(std::max(probs(i, y[i]), kEps)); // floor keeps the loss nonnegative
    return loss / static_cast<double>(y.size());
}

double classifier_loss_grad(DenseLayer& cls, const DenseMat& h_concat, const Eigen::VectorXi& y,
                            DenseMat& d_h) {
    if (h_concat.rows() != y.size()) throw DataError("classifier loss: label count mismatch");
    if (y.size() == 0) throw DataError("classifier loss: empty input");
    DenseMat probs = classifier_probs(cls, h_concat);
    double loss = 0.0;
    DenseMat d_logits = probs;
    const double inv_n = 1.0 / static_cast<double>(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double p = probs(i, y[i]);
        loss -= std::log(std::max(p, kEps));
        if (p > kEps) {
            d_logits(i, y[i]) -= 1.0;
        } else {
            d_logits.row(i).setZero(); // flat region of the floored log
        }
    }
    d_logits *= inv_n;
    cls.W.grad += h_concat.transpose() * d_logits;
    cls.b.grad += d_logits.colwise().sum();
    d_h = d_logits * cls.W.value.transpose();
    return loss * inv_n;
}

double total_loss(const LossParts& parts, const LossWeights& weights) {
    weights.validate();
    struct Named {
        const char* name;
        double value;
    } named[] = {{"L_CR", parts.cr}, {"L_RE", parts.re}, {"L_A", parts.a}, {"L_CE", parts.ce}};
    for (const auto& p : named) {
        if (!std::isfinite(p.value))
            throw NumericalError(std::string("loss part ") + p.name + " is not finite");
    }
    return weights.cr_weight * parts.cr + weights.mu1 * parts.re + weights.mu2 * parts.a +
           weights.mu_ce * parts.ce;
}

// --- full model ----------------------------------------------------------------

TrainingMasks TrainingMasks::draw(Eigen::Index n_src, Eigen::Index n_tgt, int hidden_dim,
                                  double rate, std::mt19937_64& rng) {
    TrainingMasks m;
    m.enc_e_src = dropout_mask(n_src, hidden_dim, rate, rng);
    m.enc_o_src = dropout_mask(n_src, hidden_dim, rate, rng);
    m.dec_src = dropout_mask(n_src, hidden_dim, rate, rng);
    m.enc_e_tgt = dropout_mask(n_tgt, hidden_dim, rate, rng);
    m.enc_o_tgt = dropout_mask(n_tgt, hidden_dim, rate, rng);
    m.dec_tgt = dropout_mask(n_tgt, hidden_dim, rate, rng);
    return m;
}

namespace {

DomainTrace domain_forward(const ModelState& state, const DomainInput& in, double gamma,
                           const DenseMat* mask_e, const DenseMat* mask_o,
                           const DenseMat* mask_dec) {
    DomainTrace t;
    t.z_e = gamma * (*in.u_e);
    t.z_o = (1.0 - gamma) * (*in.u_o);
    t.enc_e = mlp_forward(state.enc_e1, state.enc_e2, t.z_e, mask_e);
    t.enc_o = mlp_forward(state.enc_o1, state.enc_o2, t.z_o, mask_o);
    t.code.resize(t.enc_e.out.rows(), 2 * state.code_dim);
    t.code << t.enc_e.out, t.enc_o.out;
    t.target.resize(t.z_e.rows(), 2 * state.input_dim);
    t.target << t.z_e, t.z_o;
    t.dec = mlp_forward(state.dec1, state.dec2, t.code, mask_dec);
    t.decoded = t.dec.out;
    return t;
}

} // namespace

ForwardTrace model_forward(const ModelState& state, const DomainInput& src,
                           const DomainInput& tgt, const Eigen::VectorXi& y_src,
                           const LossWeights& weights, const TrainingMasks* masks) {
    weights.validate();
    ForwardTrace t;
    t.gamma = state.gamma();
    t.src = domain_forward(state, src, t.gamma, masks ? &masks->enc_e_src : nullptr,
                           masks ? &masks->enc_o_src : nullptr, masks ? &masks->dec_src : nullptr);
    t.tgt = domain_forward(state, tgt, t.gamma, masks ? &masks->enc_e_tgt : nullptr,
                           masks ? &masks->enc_o_tgt : nullptr, masks ? &masks->dec_tgt : nullptr);

    t.parts.cr = weights.cr_weight == 0.0
                     ? 0.0 // the no_cr ablation reports an all-zero series
                     : correlation_reduction_loss(t.src.enc_e.out, t.src.enc_o.out) +
                           correlation_reduction_loss(t.tgt.enc_e.out, t.tgt.enc_o.out);
    t.parts.re = reconstruction_loss(t.src.target, t.src.decoded, weights.beta) +
                 reconstruction_loss(t.tgt.target, t.tgt.decoded, weights.beta);
    t.parts.a =
        alignment_loss(t.src.enc_e.out, t.tgt.enc_e.out, t.src.enc_o.out, t.tgt.enc_o.out);
    t.logits_src = (t.src.code * state.cls.W.value).rowwise() + state.cls.b.value.row(0);
    t.parts.ce = classifier_loss(state.cls, t.src.code, y_src);
    t.total = total_loss(t.parts, weights);
    return t;
}

void model_backward(ModelState& state, const DomainInput& src, const DomainInput& tgt,
                    const Eigen::VectorXi& y_src, const LossWeights& weights,
                    const ForwardTrace& trace) {
    state.zero_grads();
    const int cd = state.code_dim;
    const int d = state.input_dim;

    // code-level gradients per domain
    DenseMat d_he_src = DenseMat::Zero(trace.src.code.rows(), cd);
    DenseMat d_ho_src = DenseMat::Zero(trace.src.code.rows(), cd);
    DenseMat d_he_tgt = DenseMat::Zero(trace.tgt.code.rows(), cd);
    DenseMat d_ho_tgt = DenseMat::Zero(trace.tgt.code.rows(), cd);
    // filtered-feature gradients per domain
    DenseMat d_ze_src = DenseMat::Zero(trace.src.z_e.rows(), d);
    DenseMat d_zo_src = DenseMat::Zero(trace.src.z_o.rows(), d);
    DenseMat d_ze_tgt = DenseMat::Zero(trace.tgt.z_e.rows(), d);
    DenseMat d_zo_tgt = DenseMat::Zero(trace.tgt.z_o.rows(), d);

    // classifier (source only)
    {
        DenseMat d_code;
        classifier_loss_grad(state.cls, trace.src.code, y_src, d_code);
        state.cls.W.grad *= weights.mu_ce;
        state.cls.b.grad *= weights.mu_ce;
        d_he_src += weights.mu_ce * d_code.leftCols(cd);
        d_ho_src += weights.mu_ce * d_code.rightCols(cd);
    }

    // correlation reduction, both domains
    if (weights.cr_weight != 0.0) {
        DenseMat ge, go;
        correlation_reduction_loss_grad(trace.src.enc_e.out, trace.src.enc_o.out, ge, go);
        d_he_src += weights.cr_weight * ge;
        d_ho_src += weights.cr_weight * go;
        correlation_reduction_loss_grad(trace.tgt.enc_e.out, trace.tgt.enc_o.out, ge, go);
        d_he_tgt += weights.cr_weight * ge;
        d_ho_tgt += weights.cr_weight * go;
    }

    // alignment across domains
    if (weights.mu2 != 0.0) {
        DenseMat des, det, dos_, dot_;
        alignment_loss_grad(trace.src.enc_e.out, trace.tgt.enc_e.out, trace.src.enc_o.out,
                            trace.tgt.enc_o.out, des, det, dos_, dot_);
        d_he_src += weights.mu2 * des;
        d_he_tgt += weights.mu2 * det;
        d_ho_src += weights.mu2 * dos_;
        d_ho_tgt += weights.mu2 * dot_;
    }

    // reconstruction through the decoder, both domains
    if (weights.mu1 != 0.0) {
        auto re_path = [&](const DomainTrace& dt, DenseMat& d_he, DenseMat& d_ho, DenseMat& d_ze,
                           DenseMat& d_zo) {
            DenseMat d_target, d_decoded;
            reconstruction_loss_grad(dt.target, dt.decoded, weights.beta, d_target, d_decoded);
            DenseMat d_code = mlp_backward(state.dec1, state.dec2, dt.dec,
                                           DenseMat(weights.mu1 * d_decoded));
            d_he += d_code.leftCols(cd);
            d_ho += d_code.rightCols(cd);
            d_ze += weights.mu1 * d_target.leftCols(d);
            d_zo += weights.mu1 * d_target.rightCols(d);
        };
        re_path(trace.src, d_he_src, d_ho_src, d_ze_src, d_zo_src);
        re_path(trace.tgt, d_he_tgt, d_ho_tgt, d_ze_tgt, d_zo_tgt);
    }

    // encoders
    d_ze_src += mlp_backward(state.enc_e1, state.enc_e2, trace.src.enc_e, d_he_src);
    d_zo_src += mlp_backward(state.enc_o1, state.enc_o2, trace.src.enc_o, d_ho_src);
    d_ze_tgt += mlp_backward(state.enc_e1, state.enc_e2, trace.tgt.enc_e, d_he_tgt);
    d_zo_tgt += mlp_backward(state.enc_o1, state.enc_o2, trace.tgt.enc_o, d_ho_tgt);

    // gamma path into the cached filter bases: Z_E = g U_E, Z_O = (1-g) U_O
    double d_gamma = d_ze_src.cwiseProduct(*src.u_e).sum() - d_zo_src.cwiseProduct(*src.u_o).sum() +
                     d_ze_tgt.cwiseProduct(*tgt.u_e).sum() - d_zo_tgt.cwiseProduct(*tgt.u_o).sum();
    state.gamma_logit.grad(0, 0) = d_gamma * trace.gamma * (1.0 - trace.gamma);

    for (const Tensor* p : state.parameters()) {
        if (!p->grad.allFinite())
            throw NumericalError("gradient not finite: " + p->name);
    }
}

void adam_step(ModelState& state, double lr, double weight_decay) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    state.adam_step += 1;
    const double t = static_cast<double>(state.adam_step);
    const double bc1 = 1.0 - std::pow(b1, t);
    const double bc2 = 1.0 - std::pow(b2, t);
    for (Tensor* p : state.parameters()) {
        p->m = b1 * p->m + (1.0 - b1) * p->grad;
        p->v = b2 * p->v + (1.0 - b2) * p->grad.cwiseProduct(p->grad);
        DenseMat m_hat = p->m / bc1;
        DenseMat v_hat = p->v / bc2;
        DenseMat denom = v_hat.cwiseSqrt();
        denom.array() += eps;
        p->value -= lr * (m_hat.cwiseQuotient(denom) + weight_decay * p->value);
        if (!p->value.allFinite())
            throw NumericalError("parameter not finite after update: " + p->name);
    }
}

ForwardTrace backward_and_step(ModelState& state, const DomainInput& src, const DomainInput& tgt,
                               const Eigen::VectorXi& y_src, const LossWeights& weights,
                               const TrainingMasks* masks, double lr, double weight_decay) {
    ForwardTrace trace = model_forward(state, src, tgt, y_src, weights, masks);
    model_backward(state, src, tgt, y_src, weights, trace);
    adam_step(state, lr, weight_decay);
    return trace;
}

} // namespace rsgda
