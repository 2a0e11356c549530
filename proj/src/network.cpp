#include "sedkit/network.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

namespace sedkit::model {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;
using ConstRowMap = Eigen::Map<const Eigen::RowVectorXd>;
using MutRowMap = Eigen::Map<Eigen::RowVectorXd>;

// (T x in) -> (T x kernel*in); block j holds the input shifted by j - kernel/2,
// zero outside the sequence.
Matrix im2col(const Matrix& x, int kernel) {
    if (kernel == 1) {
        return x;
    }
    const Eigen::Index t = x.rows();
    const Eigen::Index in = x.cols();
    const int half = kernel / 2;
    Matrix cols = Matrix::Zero(t, in * kernel);
    for (int j = 0; j < kernel; ++j) {
        const Eigen::Index shift = j - half;
        const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
        const Eigen::Index t1 = std::min<Eigen::Index>(t, t - shift);
        if (t1 > t0) {
            cols.block(t0, j * in, t1 - t0, in) = x.block(t0 + shift, 0, t1 - t0, in);
        }
    }
    return cols;
}

Matrix col2im(const Matrix& cols, int kernel, Eigen::Index in) {
    if (kernel == 1) {
        return cols;
    }
    const Eigen::Index t = cols.rows();
    const int half = kernel / 2;
    Matrix x = Matrix::Zero(t, in);
    for (int j = 0; j < kernel; ++j) {
        const Eigen::Index shift = j - half;
        const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
        const Eigen::Index t1 = std::min<Eigen::Index>(t, t - shift);
        if (t1 > t0) {
            x.block(t0 + shift, 0, t1 - t0, in) += cols.block(t0, j * in, t1 - t0, in);
        }
    }
    return x;
}

Matrix activate(const Matrix& z, Activation act) {
    const auto za = z.array();
    switch (act) {
        case Activation::elu: return (za > 0.0).select(za, za.min(0.0).exp() - 1.0).matrix();
        case Activation::relu: return za.max(0.0).matrix();
        case Activation::tanh: return za.tanh().matrix();
        case Activation::sigmoid: return (1.0 / (1.0 + (-za).exp())).matrix();
        case Activation::linear: return z;
    }
    return z;
}

// dL/dz given dL/da, the pre-activation z and the activation a.
Matrix activation_backward(const Matrix& grad, const Matrix& z, const Matrix& a, Activation act) {
    switch (act) {
        case Activation::elu:
            return (z.array() > 0.0).select(grad.array(), grad.array() * (a.array() + 1.0)).matrix();
        case Activation::relu:
            return grad.binaryExpr(z, [](double g, double v) { return v > 0.0 ? g : 0.0; });
        case Activation::tanh: return (grad.array() * (1.0 - a.array().square())).matrix();
        case Activation::sigmoid: return (grad.array() * a.array() * (1.0 - a.array())).matrix();
        case Activation::linear: return grad;
    }
    return grad;
}

// dL/dz of a sigmoid output under the clipped mean BCE, scaled by `weight`.
Matrix output_grad(const Matrix& p, const Matrix& y, double weight) {
    const double scale = weight / static_cast<double>(p.size());
    return p.binaryExpr(y, [scale](double pv, double yv) {
        if (pv < kProbClip || pv > 1.0 - kProbClip) {
            return 0.0;
        }
        return scale * (pv - yv);
    });
}

// Inverted-dropout mask; each 64-bit draw yields four 16-bit keep decisions.
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, std::mt19937_64& rng) {
    const auto keep_below = static_cast<std::uint64_t>(std::llround((1.0 - p) * 65536.0));
    const double scale = 1.0 / (1.0 - p);
    Matrix mask(rows, cols);
    std::uint64_t bits = 0;
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
        if (i % 4 == 0) bits = rng();
        mask(i) = (bits & 0xFFFFU) < keep_below ? scale : 0.0;
        bits >>= 16;
    }
    return mask;
}

}  // namespace

struct Network::Cache {
    Matrix cols;
    Matrix pre;
    Matrix act;
    Matrix mask;
};

std::string_view to_string(LayerKind kind) { return kind == LayerKind::conv1d ? "conv1d" : "dense"; }

std::string_view to_string(Activation act) {
    switch (act) {
        case Activation::elu: return "elu";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
        case Activation::linear: return "linear";
    }
    return "linear";
}

NetworkConfig default_network_config(int n_classes) {
    NetworkConfig cfg;
    cfg.n_classes = n_classes;
    cfg.trunk = {
        {LayerKind::conv1d, 32, 5, Activation::elu},
        {LayerKind::conv1d, 32, 5, Activation::elu},
        {LayerKind::dense, 32, 1, Activation::elu},
    };
    cfg.n_shared = 2;
    return cfg;
}

void validate(const NetworkConfig& cfg) {
    const auto fail = [](const std::string& msg) { throw Error(ErrorKind::config, "network: " + msg); };
    if (cfg.input_dim < 1) fail("input_dim must be >= 1");
    if (cfg.n_classes < 1) fail("n_classes must be >= 1");
    if (cfg.n_shared < 0 || cfg.n_shared > static_cast<int>(cfg.trunk.size())) {
        fail("n_shared must lie in [0, trunk depth]");
    }
    if (cfg.sad_hidden < 1) fail("sad_hidden must be >= 1");
    if (!(cfg.dropout_p >= 0.0 && cfg.dropout_p < 1.0)) fail("dropout_p must lie in [0, 1)");
    for (const auto& l : cfg.trunk) {
        if (l.width < 1) fail("layer width must be >= 1");
        if (l.kernel < 1 || l.kernel % 2 == 0) fail("kernel must be a positive odd number");
        if (l.kind == LayerKind::dense && l.kernel != 1) fail("dense layers have kernel 1");
    }
}

void validate(const LossWeights& w) {
    if (w.a < 0.0 || w.b < 0.0 || !(w.a + w.b > 0.0)) {
        throw Error(ErrorKind::config, "loss weights must be nonnegative with a + b > 0");
    }
}

Network::Network(NetworkConfig cfg) : cfg_(std::move(cfg)) {
    validate(cfg_);
    int width = cfg_.input_dim;
    for (int i = 0; i < cfg_.n_shared; ++i) {
        const auto& l = cfg_.trunk[static_cast<std::size_t>(i)];
        add_layer(Branch::shared, width, l.width, l.kernel, l.activation, true);
        width = l.width;
    }
    const int split_width = width;
    for (Branch branch : {Branch::sed, Branch::sad}) {
        width = split_width;
        for (std::size_t i = static_cast<std::size_t>(cfg_.n_shared); i < cfg_.trunk.size(); ++i) {
            const auto& l = cfg_.trunk[i];
            add_layer(branch, width, l.width, l.kernel, l.activation, true);
            width = l.width;
        }
        if (branch == Branch::sed) {
            add_layer(branch, width, cfg_.n_classes, 1, Activation::sigmoid, false);
        } else {
            add_layer(branch, width, cfg_.sad_hidden, 1, Activation::elu, true);
            add_layer(branch, cfg_.sad_hidden, 1, 1, Activation::sigmoid, false);
        }
    }
}

void Network::add_layer(Branch branch, int in, int out, int kernel, Activation act, bool dropout) {
    Layer l{branch, in, out, kernel, act, dropout, n_params_, 0};
    n_params_ += static_cast<std::size_t>(kernel) * in * out;
    l.b_offset = n_params_;
    n_params_ += static_cast<std::size_t>(out);
    const std::size_t index = layers_.size();
    layers_.push_back(l);
    switch (branch) {
        case Branch::shared: shared_.push_back(index); break;
        case Branch::sed: sed_.push_back(index); break;
        case Branch::sad: sad_.push_back(index); break;
    }
}

std::vector<double> Network::init_parameters(std::uint64_t seed) const {
    std::vector<double> p(n_params_, 0.0);
    std::mt19937_64 rng(seed);
    for (const auto& l : layers_) {
        const double limit = std::sqrt(6.0 / (static_cast<double>(l.kernel) * l.in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (std::size_t i = l.w_offset; i < l.b_offset; ++i) {
            p[i] = dist(rng);
        }
    }
    return p;
}

std::vector<Branch> Network::parameter_branches() const {
    std::vector<Branch> out(n_params_, Branch::shared);
    for (const auto& l : layers_) {
        std::fill(out.begin() + static_cast<std::ptrdiff_t>(l.w_offset),
                  out.begin() + static_cast<std::ptrdiff_t>(l.b_offset + static_cast<std::size_t>(l.out)), l.branch);
    }
    return out;
}

void Network::check_input(const Matrix& features) const {
    if (features.rows() != cfg_.input_dim || features.cols() < 1) {
        throw Error(ErrorKind::dimension, "expected " + std::to_string(cfg_.input_dim) + " x T features, got " +
                                              std::to_string(features.rows()) + " x " +
                                              std::to_string(features.cols()));
    }
}

Matrix Network::run(const std::vector<std::size_t>& layers, std::span<const double> params, Matrix x, bool train,
                    std::mt19937_64* rng, std::vector<Cache>* caches) const {
    for (std::size_t idx : layers) {
        const Layer& l = layers_[idx];
        const ConstMap w(params.data() + l.w_offset, static_cast<Eigen::Index>(l.kernel) * l.in, l.out);
        const ConstRowMap b(params.data() + l.b_offset, l.out);
        Matrix cols = im2col(x, l.kernel);
        Matrix z(cols.rows(), l.out);
        z.noalias() = cols * w;
        z.rowwise() += b;
        Matrix a = activate(z, l.activation);
        Matrix mask;
        if (train && l.dropout && cfg_.dropout_p > 0.0) {
            mask = dropout_mask(a.rows(), a.cols(), cfg_.dropout_p, *rng);
            x = a.cwiseProduct(mask);
        } else {
            x = a;
        }
        if (caches != nullptr) {
            auto& c = (*caches)[idx];
            c.cols = std::move(cols);
            c.pre = std::move(z);
            c.act = std::move(a);
            c.mask = std::move(mask);
        }
    }
    return x;
}

Matrix Network::run_back(const std::vector<std::size_t>& layers, std::span<const double> params, Matrix grad,
                         std::vector<Cache>& caches, std::span<double> out, bool need_input_grad) const {
    // `grad` enters as dL/d(output) except for the sigmoid heads, whose
    // callers pass dL/dz directly.
    const bool head = &layers != &shared_;
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
        const Layer& l = layers_[*it];
        Cache& c = caches[*it];
        Matrix dz;
        if (head && it == layers.rbegin()) {
            dz = std::move(grad);
        } else {
            if (c.mask.size() != 0) {
                grad = grad.cwiseProduct(c.mask);
            }
            dz = activation_backward(grad, c.pre, c.act, l.activation);
        }
        const auto rows = static_cast<Eigen::Index>(l.kernel) * l.in;
        const ConstMap w(params.data() + l.w_offset, rows, l.out);
        MutMap dw(out.data() + l.w_offset, rows, l.out);
        MutRowMap db(out.data() + l.b_offset, l.out);
        dw.noalias() += c.cols.transpose() * dz;
        db += dz.colwise().sum();
        if (!need_input_grad && std::next(it) == layers.rend()) {
            return {};
        }
        Matrix dcols(dz.rows(), rows);
        dcols.noalias() = dz * w.transpose();
        grad = col2im(dcols, l.kernel, l.in);
    }
    return grad;
}

Outputs Network::forward(std::span<const double> params, const Matrix& features, bool train_mode,
                         std::mt19937_64* dropout_rng) const {
    check_input(features);
    if (params.size() != n_params_) {
        throw Error(ErrorKind::dimension, "parameter vector has the wrong length");
    }
    if (train_mode && dropout_rng == nullptr) {
        throw Error(ErrorKind::contract, "train mode needs a dropout rng");
    }
    Matrix h = run(shared_, params, features.transpose(), train_mode, dropout_rng, nullptr);
    Outputs out;
    out.sed = run(sed_, params, h, train_mode, dropout_rng, nullptr);
    out.sad = run(sad_, params, std::move(h), train_mode, dropout_rng, nullptr).col(0);
    return out;
}

Gradient Network::backward(std::span<const double> params, const Matrix& features, const BinaryMatrix& gt_sed,
                           const BinaryVector& gt_sad, LossWeights weights, bool train_mode,
                           std::mt19937_64* dropout_rng) const {
    check_input(features);
    validate(weights);
    const auto t = features.cols();
    if (gt_sed.rows() != t || gt_sed.cols() != cfg_.n_classes || gt_sad.size() != t) {
        throw Error(ErrorKind::dimension, "label shapes do not match the features");
    }
    if (params.size() != n_params_) {
        throw Error(ErrorKind::dimension, "parameter vector has the wrong length");
    }
    if (train_mode && dropout_rng == nullptr) {
        throw Error(ErrorKind::contract, "train mode needs a dropout rng");
    }
    std::vector<Cache> caches(layers_.size());
    Matrix h = run(shared_, params, features.transpose(), train_mode, dropout_rng, &caches);
    const Matrix p_sed = run(sed_, params, h, train_mode, dropout_rng, &caches);
    const Matrix p_sad = run(sad_, params, h, train_mode, dropout_rng, &caches);

    const Matrix y_sed = gt_sed.cast<double>();
    const Matrix y_sad = gt_sad.cast<double>();

    Gradient g;
    g.loss.sed = bce(p_sed, y_sed);
    g.loss.sad = bce(p_sad, y_sad);
    g.loss.joint = joint_loss(g.loss.sed, g.loss.sad, weights);
    g.values.assign(n_params_, 0.0);

    // A branch with zero loss weight contributes exactly zero gradient; skip it.
    const bool has_shared = !shared_.empty();
    Matrix dh = has_shared ? Matrix::Zero(h.rows(), h.cols()) : Matrix();
    if (weights.a != 0.0) {
        const Matrix dh_sed =
            run_back(sed_, params, output_grad(p_sed, y_sed, weights.a), caches, g.values, has_shared);
        if (has_shared) dh += dh_sed;
    }
    if (weights.b != 0.0) {
        const Matrix dh_sad =
            run_back(sad_, params, output_grad(p_sad, y_sad, weights.b), caches, g.values, has_shared);
        if (has_shared) dh += dh_sad;
    }
    if (has_shared) {
        run_back(shared_, params, std::move(dh), caches, g.values, false);
    }
    return g;
}

LossParts Network::loss(std::span<const double> params, const Matrix& features, const BinaryMatrix& gt_sed,
                        const BinaryVector& gt_sad, LossWeights weights) const {
    const auto out = forward(params, features);
    if (gt_sed.rows() != out.sed.rows() || gt_sed.cols() != out.sed.cols() || gt_sad.size() != out.sad.size()) {
        throw Error(ErrorKind::dimension, "label shapes do not match the features");
    }
    LossParts lp;
    lp.sed = bce(out.sed, gt_sed.cast<double>());
    lp.sad = bce(out.sad, gt_sad.cast<double>());
    lp.joint = joint_loss(lp.sed, lp.sad, weights);
    return lp;
}

double bce(const Eigen::Ref<const Matrix>& pred, const Eigen::Ref<const Matrix>& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        throw Error(ErrorKind::dimension, "prediction and target shapes differ");
    }
    if (pred.size() == 0) {
        return 0.0;
    }
    const auto p = pred.array().max(kProbClip).min(1.0 - kProbClip);
    const auto y = target.array();
    return -(y * p.log() + (1.0 - y) * (1.0 - p).log()).mean();
}

double joint_loss(double l_sed, double l_sad, LossWeights w) { return w.a * l_sed + w.b * l_sad; }

void to_json(nlohmann::json& j, const LayerSpec& s) {
    j = nlohmann::json{{"kind", std::string(to_string(s.kind))},
                       {"width", s.width},
                       {"kernel", s.kernel},
                       {"activation", std::string(to_string(s.activation))}};
}

void from_json(const nlohmann::json& j, LayerSpec& s) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "conv1d") {
        s.kind = LayerKind::conv1d;
    } else if (kind == "dense") {
        s.kind = LayerKind::dense;
    } else {
        throw Error(ErrorKind::config, "unknown layer kind '" + kind + "'");
    }
    s.width = j.at("width").get<int>();
    s.kernel = j.value("kernel", 1);
    const auto act = j.value("activation", std::string("elu"));
    bool found = false;
    for (auto a : {Activation::elu, Activation::relu, Activation::tanh, Activation::sigmoid, Activation::linear}) {
        if (to_string(a) == act) {
            s.activation = a;
            found = true;
        }
    }
    if (!found) {
        throw Error(ErrorKind::config, "unknown activation '" + act + "'");
    }
}

void to_json(nlohmann::json& j, const NetworkConfig& c) {
    j = nlohmann::json{{"input_dim", c.input_dim}, {"n_classes", c.n_classes}, {"trunk", c.trunk},
                       {"n_shared", c.n_shared},   {"sad_hidden", c.sad_hidden}, {"dropout_p", c.dropout_p}};
}

void from_json(const nlohmann::json& j, NetworkConfig& c) {
    c = default_network_config();
    c.input_dim = j.value("input_dim", c.input_dim);
    c.n_classes = j.value("n_classes", c.n_classes);
    if (j.contains("trunk")) c.trunk = j.at("trunk").get<std::vector<LayerSpec>>();
    c.n_shared = j.value("n_shared", c.n_shared);
    c.sad_hidden = j.value("sad_hidden", c.sad_hidden);
    c.dropout_p = j.value("dropout_p", c.dropout_p);
}

void to_json(nlohmann::json& j, const LossWeights& w) { j = nlohmann::json{{"a", w.a}, {"b", w.b}}; }

void from_json(const nlohmann::json& j, LossWeights& w) {
    w.a = j.at("a").get<double>();
    w.b = j.at("b").get<double>();
}

}  // namespace sedkit::model
