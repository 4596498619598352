#include "rtk/mtlnet.hpp"

#include <algorithm>
#include <cmath>

#include "binary_io.hpp"
#include "json.hpp"
#include "rtk/error.hpp"

namespace rtk {

// --- variants ----------------------------------------------------------------

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::net_minus: return "net-";
        case Variant::net_plus: return "net+";
        case Variant::net_star: return "net*";
        case Variant::net_amp: return "net&";
        case Variant::net_at: return "net@";
    }
    return "full";
}

Variant parse_variant(std::string_view name) {
    struct Alias {
        std::string_view a, b;
        Variant v;
    };
    static constexpr Alias kAliases[] = {{"full", "full", Variant::full},
                                         {"net-", "net_minus", Variant::net_minus},
                                         {"net+", "net_plus", Variant::net_plus},
                                         {"net*", "net_star", Variant::net_star},
                                         {"net&", "net_amp", Variant::net_amp},
                                         {"net@", "net_at", Variant::net_at}};
    for (const auto& al : kAliases) {
        if (name == al.a || name == al.b) {
            return al.v;
        }
    }
    throw ArgumentError("unknown variant '" + std::string(name) + "' (expected full, net-, net+, net*, net& or net@)");
}

CropPolicy variant_crop_policy(Variant v) {
    return v == Variant::net_minus || v == Variant::net_amp ? CropPolicy::single_resize : CropPolicy::dense_crop;
}

VariantTerms variant_terms(Variant v) {
    switch (v) {
        case Variant::full:
        case Variant::net_amp: return {true, true, true, true, false};
        case Variant::net_minus: return {false, false, false, false, true};
        case Variant::net_plus: return {true, false, false, true, false};
        case Variant::net_star: return {true, true, false, true, false};
        case Variant::net_at: return {true, true, true, false, true};
    }
    return {};
}

void NetShape::validate() const {
    if (input_dim < 1 || attributes < 1 || hidden1 < 1 || hidden2 < 1 || head_hidden < 1) {
        throw ArgumentError("network shape: every dimension must be positive");
    }
    if (attributes != kAttributeCount) {
        throw ArgumentError("network shape: attribute count must be " + std::to_string(kAttributeCount));
    }
}

void Hyperparams::validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !(tau >= 0.0) || !(delta >= 0.0) || !(learning_rate >= 0.0)) {
        throw ArgumentError("hyperparameters: alpha, beta, tau, delta and learning_rate must be nonnegative");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw ArgumentError("hyperparameters: dropout must lie in [0, 1)");
    }
    if (batch_size < 1 || epochs < 0) {
        throw ArgumentError("hyperparameters: batch_size must be positive and epochs nonnegative");
    }
}

Hyperparams parse_config(std::string_view json_text, NetShape* shape) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) {
        throw FormatError("config: expected a JSON object");
    }
    Hyperparams hp;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "alpha") hp.alpha = value.get<double>();
            else if (key == "beta") hp.beta = value.get<double>();
            else if (key == "tau") hp.tau = value.get<double>();
            else if (key == "delta") hp.delta = value.get<double>();
            else if (key == "learning_rate" || key == "lr") hp.learning_rate = value.get<double>();
            else if (key == "batch_size" || key == "batch") hp.batch_size = value.get<int>();
            else if (key == "dropout") hp.dropout = value.get<double>();
            else if (key == "epochs") hp.epochs = value.get<int>();
            else if (key == "seed") hp.seed = value.get<std::uint64_t>();
            else if (shape != nullptr && key == "hidden1") shape->hidden1 = value.get<int>();
            else if (shape != nullptr && key == "hidden2") shape->hidden2 = value.get<int>();
            else if (shape != nullptr && key == "head_hidden") shape->head_hidden = value.get<int>();
            else throw ArgumentError("config: unknown key '" + key + "'");
        } catch (const nlohmann::json::exception&) {
            throw FormatError("config: key '" + key + "' has the wrong type");
        }
    }
    hp.validate();
    return hp;
}

// --- network -----------------------------------------------------------------

MtlNetwork::MtlNetwork(NetShape shape, Variant variant) : shape_(shape), variant_(variant) {
    shape_.validate();
    int head_in = shape_.input_dim;
    if (variant_terms(variant).attribute_branches) {
        branches_.resize(static_cast<std::size_t>(shape_.attributes));
        for (auto& b : branches_) {
            b.w1 = Eigen::MatrixXd::Zero(shape_.hidden1, shape_.input_dim);
            b.b1 = Eigen::VectorXd::Zero(shape_.hidden1);
            b.w2 = Eigen::MatrixXd::Zero(shape_.hidden2, shape_.hidden1);
            b.b2 = Eigen::VectorXd::Zero(shape_.hidden2);
            b.w3 = Eigen::VectorXd::Zero(shape_.hidden2);
        }
        head_in = shape_.attributes * shape_.hidden2;
    }
    head_.w1 = Eigen::MatrixXd::Zero(shape_.head_hidden, head_in);
    head_.b1 = Eigen::VectorXd::Zero(shape_.head_hidden);
    head_.w2 = Eigen::VectorXd::Zero(shape_.head_hidden);
}

namespace {

void glorot(Eigen::MatrixXd& w, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
            w(r, c) = rng.uniform(-limit, limit);
        }
    }
}

void glorot(Eigen::VectorXd& w, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.size() + 1));
    for (auto& v : w) {
        v = rng.uniform(-limit, limit);
    }
}

// Visits every parameter in the flat order.
template <class Net, class F>
void for_each_block(Net& net, F&& f) {
    auto matrix = [&](auto& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                f(m(r, c));
            }
        }
    };
    auto vector = [&](auto& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            f(v(i));
        }
    };
    for (auto& b : net.branches()) {
        matrix(b.w1);
        vector(b.b1);
        matrix(b.w2);
        vector(b.b2);
        vector(b.w3);
        f(b.b3);
    }
    auto& h = net.head();
    matrix(h.w1);
    vector(h.b1);
    vector(h.w2);
    f(h.b2);
}

}  // namespace

MtlNetwork MtlNetwork::initialized(NetShape shape, Variant variant, std::uint64_t seed) {
    MtlNetwork net(shape, variant);
    Rng rng(seed);
    for (auto& b : net.branches_) {
        glorot(b.w1, rng);
        glorot(b.w2, rng);
        glorot(b.w3, rng);
    }
    glorot(net.head_.w1, rng);
    glorot(net.head_.w2, rng);
    return net;
}

std::size_t MtlNetwork::parameter_count() const {
    std::size_t n = 0;
    for_each_block(*this, [&](const double&) { ++n; });
    return n;
}

std::vector<double> MtlNetwork::parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for_each_block(*this, [&](const double& v) { out.push_back(v); });
    return out;
}

void MtlNetwork::set_parameters(std::span<const double> values) {
    if (values.size() != parameter_count()) {
        throw ArgumentError("network: expected " + std::to_string(parameter_count()) + " parameters, got " +
                            std::to_string(values.size()));
    }
    std::size_t i = 0;
    for_each_block(*this, [&](double& v) { v = values[i++]; });
}

double MtlNetwork::weight_norm() const {
    double s = 0.0;
    for (const auto& b : branches_) {
        s += b.w1.squaredNorm() + b.w2.squaredNorm() + b.w3.squaredNorm();
    }
    s += head_.w1.squaredNorm() + head_.w2.squaredNorm();
    return std::sqrt(s);
}

double MtlNetwork::group_norm() const {
    double s = 0.0;
    for (const auto& b : branches_) {
        s += b.w2.norm();
    }
    return s;
}

void MtlNetwork::round_to_float() {
    for_each_block(*this, [](double& v) { v = static_cast<float>(v); });
}

bool MtlNetwork::operator==(const MtlNetwork& other) const {
    return shape_ == other.shape_ && variant_ == other.variant_ && parameters() == other.parameters();
}

// --- forward / backward ------------------------------------------------------

namespace {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;

struct Pass {
    std::vector<MatrixXd> z1, a1, m1, z2, a2, m2;
    MatrixXd outs;    // attributes x C
    MatrixXd shared;  // attributes*hidden2 x C, or the input for a plain regressor
    MatrixXd zh, ah, mh;
    RowVectorXd y;
};

struct Dropout {
    Rng* rng = nullptr;
    double keep = 1.0;

    // Empty when dropout is off.
    MatrixXd mask(Eigen::Index rows, Eigen::Index cols) const {
        if (rng == nullptr || keep >= 1.0) {
            return {};
        }
        MatrixXd m(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c) {
            for (Eigen::Index r = 0; r < rows; ++r) {
                m(r, c) = rng->uniform() < keep ? 1.0 / keep : 0.0;
            }
        }
        return m;
    }
};

MatrixXd relu_masked(const MatrixXd& z, const MatrixXd& mask) {
    MatrixXd a = z.cwiseMax(0.0);
    if (mask.size() != 0) {
        a.array() *= mask.array();
    }
    return a;
}

// Gradient through max(0, z) (right-sided at 0) and the dropout mask.
MatrixXd relu_back(const MatrixXd& da, const MatrixXd& z, const MatrixXd& mask) {
    MatrixXd dz = (z.array() >= 0.0).select(da.array(), 0.0).matrix();
    if (mask.size() != 0) {
        dz.array() *= mask.array();
    }
    return dz;
}

Pass forward(const MtlNetwork& net, const MatrixXd& x, const Dropout& drop) {
    Pass p;
    const auto cols = x.cols();
    if (net.has_branches()) {
        const int h2 = net.shape().hidden2;
        const auto m = net.branches().size();
        p.z1.resize(m);
        p.a1.resize(m);
        p.m1.resize(m);
        p.z2.resize(m);
        p.a2.resize(m);
        p.m2.resize(m);
        p.outs.resize(static_cast<Eigen::Index>(m), cols);
        p.shared.resize(static_cast<Eigen::Index>(m) * h2, cols);
        for (std::size_t k = 0; k < m; ++k) {
            const auto& b = net.branches()[k];
            p.z1[k] = (b.w1 * x).colwise() + b.b1;
            p.m1[k] = drop.mask(p.z1[k].rows(), cols);
            p.a1[k] = relu_masked(p.z1[k], p.m1[k]);
            p.z2[k] = (b.w2 * p.a1[k]).colwise() + b.b2;
            p.m2[k] = drop.mask(p.z2[k].rows(), cols);
            p.a2[k] = relu_masked(p.z2[k], p.m2[k]);
            p.outs.row(static_cast<Eigen::Index>(k)) = (b.w3.transpose() * p.a2[k]).array() + b.b3;
            p.shared.middleRows(static_cast<Eigen::Index>(k) * h2, h2) = p.a2[k];
        }
    } else {
        p.shared = x;
    }
    const auto& h = net.head();
    p.zh = (h.w1 * p.shared).colwise() + h.b1;
    p.mh = drop.mask(p.zh.rows(), cols);
    p.ah = relu_masked(p.zh, p.mh);
    p.y = (h.w2.transpose() * p.ah).array() + h.b2;
    return p;
}

// Accumulates into `g` the gradient given d/d outs and d/d y.
void backprop(const MtlNetwork& net, const MatrixXd& x, const Pass& p, const MatrixXd& douts, const RowVectorXd& dy,
              MtlNetwork& g) {
    auto& gh = g.head();
    const auto& h = net.head();
    gh.w2 += p.ah * dy.transpose();
    gh.b2 += dy.sum();
    const MatrixXd dzh = relu_back(h.w2 * dy, p.zh, p.mh);
    gh.w1 += dzh * p.shared.transpose();
    gh.b1 += dzh.rowwise().sum();
    if (!net.has_branches()) {
        return;
    }
    const MatrixXd dshared = h.w1.transpose() * dzh;
    const int h2 = net.shape().hidden2;
    for (std::size_t k = 0; k < net.branches().size(); ++k) {
        const auto& b = net.branches()[k];
        auto& gb = g.branches()[k];
        const auto kk = static_cast<Eigen::Index>(k);
        const RowVectorXd dout = douts.row(kk);
        gb.w3 += p.a2[k] * dout.transpose();
        gb.b3 += dout.sum();
        const MatrixXd da2 = dshared.middleRows(kk * h2, h2) + b.w3 * dout;
        const MatrixXd dz2 = relu_back(da2, p.z2[k], p.m2[k]);
        gb.w2 += dz2 * p.a1[k].transpose();
        gb.b2 += dz2.rowwise().sum();
        const MatrixXd dz1 = relu_back(b.w2.transpose() * dz2, p.z1[k], p.m1[k]);
        gb.w1 += dz1 * x.transpose();
        gb.b1 += dz1.rowwise().sum();
    }
}

// Columns [0, P) hold the first (larger-label) image of each pair and
// columns [P, 2P) the second.
struct PairBatch {
    MatrixXd x;
    std::vector<AttributeFlags> attributes;
    std::vector<double> labels;
    std::vector<int> indicator;

    int pairs() const { return static_cast<int>(indicator.size()); }
};

void add_scaled(MtlNetwork& net, const MtlNetwork& g, double s) {
    for (std::size_t k = 0; k < net.branches().size(); ++k) {
        auto& b = net.branches()[k];
        const auto& d = g.branches()[k];
        b.w1 += s * d.w1;
        b.b1 += s * d.b1;
        b.w2 += s * d.w2;
        b.b2 += s * d.b2;
        b.w3 += s * d.w3;
        b.b3 += s * d.b3;
    }
    net.head().w1 += s * g.head().w1;
    net.head().b1 += s * g.head().b1;
    net.head().w2 += s * g.head().w2;
    net.head().b2 += s * g.head().b2;
}

// Mean pair objective plus the regularizers; fills `grad` when given.
double evaluate(const MtlNetwork& net, const PairBatch& batch, const Hyperparams& hp, const Dropout& drop,
                MtlNetwork* grad) {
    const VariantTerms terms = variant_terms(net.variant());
    const int np = batch.pairs();
    const auto cols = batch.x.cols();
    const double scale = 1.0 / np;
    const Pass p = forward(net, batch.x, drop);

    double loss = 0.0;
    MatrixXd douts = MatrixXd::Zero(p.outs.rows(), cols);
    RowVectorXd dy = RowVectorXd::Zero(cols);
    if (terms.binary) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& labels = batch.attributes[static_cast<std::size_t>(c)];
            for (Eigen::Index k = 0; k < p.outs.rows(); ++k) {
                const double l = labels[static_cast<std::size_t>(k)];
                const double m = 1.0 - l * p.outs(k, c);
                if (m > 0.0) {
                    loss += 0.5 * m * m;
                    douts(k, c) = -l * m * scale;
                }
            }
        }
    }
    if (terms.relative) {
        for (int i = 0; i < np; ++i) {
            const double d = p.y(i) - p.y(np + i);
            double dd = 0.0;
            if (batch.indicator[static_cast<std::size_t>(i)] == 1) {
                if (hp.tau - d > 0.0) {
                    loss += hp.tau - d;
                    dd = -1.0;
                }
            } else {
                loss += 0.5 * d * d;
                dd = d;
            }
            dy(i) += dd * scale;
            dy(np + i) -= dd * scale;
        }
    }
    if (terms.regression) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double r = p.y(c) - batch.labels[static_cast<std::size_t>(c)];
            loss += 0.5 * r * r;
            dy(c) += r * scale;
        }
    }
    loss *= scale;

    const bool group = terms.binary && terms.group_sparsity && hp.alpha > 0.0;
    if (group) {
        loss += hp.alpha * net.group_norm();
    }
    const double wn = net.weight_norm();
    loss += hp.beta * wn;

    if (grad != nullptr) {
        *grad = MtlNetwork(net.shape(), net.variant());
        backprop(net, batch.x, p, douts, dy, *grad);
        if (group) {
            for (std::size_t k = 0; k < net.branches().size(); ++k) {
                const double n = net.branches()[k].w2.norm();
                if (n > 0.0) {
                    grad->branches()[k].w2 += (hp.alpha / n) * net.branches()[k].w2;
                }
            }
        }
        if (hp.beta > 0.0 && wn > 0.0) {
            const double s = hp.beta / wn;
            for (std::size_t k = 0; k < net.branches().size(); ++k) {
                const auto& b = net.branches()[k];
                auto& gb = grad->branches()[k];
                gb.w1 += s * b.w1;
                gb.w2 += s * b.w2;
                gb.w3 += s * b.w3;
            }
            grad->head().w1 += s * net.head().w1;
            grad->head().w2 += s * net.head().w2;
        }
    }
    return loss;
}

void check_input(const MtlNetwork& net, Eigen::Index dim) {
    if (dim != net.shape().input_dim) {
        throw ArgumentError("network: feature dimension " + std::to_string(dim) + " does not match input dimension " +
                            std::to_string(net.shape().input_dim));
    }
}

PairBatch single_pair(const MtlNetwork& net, const LabeledSample& a, const LabeledSample& b, const Hyperparams& hp) {
    check_input(net, a.features.size());
    check_input(net, b.features.size());
    validate_flags(a.attributes);
    validate_flags(b.attributes);
    const bool swap = b.label > a.label;
    const auto& hi = swap ? b : a;
    const auto& lo = swap ? a : b;
    PairBatch batch;
    batch.x.resize(net.shape().input_dim, 2);
    batch.x.col(0) = hi.features;
    batch.x.col(1) = lo.features;
    batch.attributes = {hi.attributes, lo.attributes};
    batch.labels = {hi.label, lo.label};
    batch.indicator = {pair_indicator(hi.label, lo.label, hp.delta)};
    return batch;
}

}  // namespace

double squared_hinge(std::span<const double> outputs, const AttributeFlags& labels) {
    if (outputs.size() > labels.size()) {
        throw ArgumentError("squared hinge: more outputs than labels");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < outputs.size(); ++k) {
        const double m = 1.0 - labels[k] * outputs[k];
        if (m > 0.0) {
            s += 0.5 * m * m;
        }
    }
    return s;
}

BinaryLoss loss_binary(const MtlNetwork& net, const Eigen::VectorXd& x, const AttributeFlags& labels, double alpha) {
    if (!net.has_branches()) {
        throw StateError("binary loss: this variant has no attribute branches");
    }
    check_input(net, x.size());
    validate_flags(labels);
    const Pass p = forward(net, x, {});
    BinaryLoss out;
    out.outputs.assign(p.outs.data(), p.outs.data() + p.outs.size());
    out.value = squared_hinge(out.outputs, labels) + 0.5 * alpha * net.group_norm();
    return out;
}

double loss_relative(double yi, double yj, int indicator, double tau) {
    if (indicator != 0 && indicator != 1) {
        throw ArgumentError("relative loss: indicator must be 0 or 1");
    }
    const double d = yi - yj;
    return indicator == 1 ? std::max(0.0, tau - d) : 0.5 * d * d;
}

int pair_indicator(double yi, double yj, double delta) { return std::abs(yi - yj) > delta ? 1 : 0; }

double total_objective(const MtlNetwork& net, const LabeledSample& a, const LabeledSample& b, const Hyperparams& hp) {
    return evaluate(net, single_pair(net, a, b, hp), hp, {}, nullptr);
}

MtlNetwork backward(const MtlNetwork& net, const LabeledSample& a, const LabeledSample& b, const Hyperparams& hp) {
    MtlNetwork g;
    evaluate(net, single_pair(net, a, b, hp), hp, {}, &g);
    return g;
}

LabeledSample TrainingSet::sample(int i) const {
    if (i < 0 || i >= size()) {
        throw BoundsError("training set: sample " + std::to_string(i) + " out of range");
    }
    return {features.col(i), attributes[static_cast<std::size_t>(i)], labels[static_cast<std::size_t>(i)]};
}

TrainResult train(const TrainingSet& data, const Hyperparams& hp, Variant variant, const NetShape& shape) {
    hp.validate();
    const int n = data.size();
    if (n < 2) {
        throw ArgumentError("train: at least two samples are needed to draw a pair");
    }
    if (data.features.cols() != n || static_cast<int>(data.attributes.size()) != n) {
        throw ArgumentError("train: features, attributes and labels must have one entry per sample");
    }
    if (data.features.rows() != shape.input_dim) {
        throw ArgumentError("train: feature dimension " + std::to_string(data.features.rows()) +
                            " does not match the network input " + std::to_string(shape.input_dim));
    }
    for (const auto& a : data.attributes) {
        validate_flags(a);
    }
    for (double y : data.labels) {
        if (!std::isfinite(y)) {
            throw ArgumentError("train: non-finite label");
        }
    }

    TrainResult result;
    result.network = MtlNetwork::initialized(shape, variant, hp.seed);
    Rng rng(hp.seed ^ 0xA5A5A5A5DEADBEEFULL);
    const Dropout drop{&rng, 1.0 - hp.dropout};
    const int batches = (n + hp.batch_size - 1) / hp.batch_size;
    const int np = hp.batch_size;

    PairBatch batch;
    batch.x.resize(shape.input_dim, 2 * np);
    batch.attributes.resize(static_cast<std::size_t>(2 * np));
    batch.labels.resize(static_cast<std::size_t>(2 * np));
    batch.indicator.resize(static_cast<std::size_t>(np));
    MtlNetwork grad;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        double epoch_sum = 0.0;
        for (int bi = 0; bi < batches; ++bi) {
            for (int p = 0; p < np; ++p) {
                int i = rng.below(n);
                int j = rng.below(n - 1);
                if (j >= i) {
                    ++j;
                }
                if (data.labels[static_cast<std::size_t>(j)] > data.labels[static_cast<std::size_t>(i)]) {
                    std::swap(i, j);
                }
                const auto ui = static_cast<std::size_t>(i);
                const auto uj = static_cast<std::size_t>(j);
                batch.x.col(p) = data.features.col(i);
                batch.x.col(np + p) = data.features.col(j);
                batch.attributes[static_cast<std::size_t>(p)] = data.attributes[ui];
                batch.attributes[static_cast<std::size_t>(np + p)] = data.attributes[uj];
                batch.labels[static_cast<std::size_t>(p)] = data.labels[ui];
                batch.labels[static_cast<std::size_t>(np + p)] = data.labels[uj];
                batch.indicator[static_cast<std::size_t>(p)] =
                    pair_indicator(data.labels[ui], data.labels[uj], hp.delta);
            }
            const double loss = evaluate(result.network, batch, hp, drop, &grad);
            if (!std::isfinite(loss)) {
                throw DivergedError("training diverged at epoch " + std::to_string(epoch + 1) + ", batch " +
                                    std::to_string(bi + 1) + " (non-finite loss)");
            }
            add_scaled(result.network, grad, -hp.learning_rate);
            result.batch_losses.push_back(loss);
            epoch_sum += loss;
        }
        result.epoch_losses.push_back(epoch_sum / batches);
    }
    for (double v : result.network.parameters()) {
        if (!std::isfinite(v)) {
            throw DivergedError("training diverged: non-finite parameters after epoch " + std::to_string(hp.epochs));
        }
    }
    result.network.round_to_float();
    return result;
}

Prediction predict(const MtlNetwork& net, std::span<const double> features) {
    check_input(net, static_cast<Eigen::Index>(features.size()));
    const Eigen::Map<const Eigen::VectorXd> x(features.data(), static_cast<Eigen::Index>(features.size()));
    const Pass p = forward(net, MatrixXd(x), {});
    Prediction out;
    out.raw = p.y(0);
    out.retargetability = std::clamp(out.raw, 0.0, 1.0);
    if (net.has_branches()) {
        out.attribute_outputs.assign(p.outs.data(), p.outs.data() + p.outs.size());
        for (double v : out.attribute_outputs) {
            out.attributes.push_back(v > kAttributeThreshold);
        }
        out.shared.assign(p.shared.data(), p.shared.data() + p.shared.size());
    }
    return out;
}

// --- model file --------------------------------------------------------------

std::vector<std::uint8_t> encode_model(const MtlNetwork& net) {
    bin::Writer w;
    w.magic("RTGM");
    w.u32(1);
    const auto& s = net.shape();
    for (int d : {s.input_dim, s.attributes, s.hidden1, s.hidden2, s.head_hidden}) {
        w.u32(static_cast<std::uint32_t>(d));
    }
    w.u32(static_cast<std::uint32_t>(net.variant()));
    for (double v : net.parameters()) {
        w.f32(static_cast<float>(v));
    }
    return w.take();
}

MtlNetwork decode_model(const std::vector<std::uint8_t>& bytes) {
    bin::Reader r(bytes, "model file");
    r.expect_magic("RTGM");
    const auto version = r.u32();
    if (version != 1) {
        throw FormatError("model file: unsupported version " + std::to_string(version));
    }
    NetShape shape;
    for (int* d : {&shape.input_dim, &shape.attributes, &shape.hidden1, &shape.hidden2, &shape.head_hidden}) {
        const auto v = r.u32();
        if (v == 0 || v > (1u << 24)) {
            throw FormatError("model file: implausible dimension " + std::to_string(v));
        }
        *d = static_cast<int>(v);
    }
    const auto code = r.u32();
    if (code > static_cast<std::uint32_t>(Variant::net_at)) {
        throw FormatError("model file: unknown variant code " + std::to_string(code));
    }
    MtlNetwork net;
    try {
        net = MtlNetwork(shape, static_cast<Variant>(code));
    } catch (const ArgumentError& e) {
        throw FormatError(std::string("model file: ") + e.what());
    }
    const auto count = net.parameter_count();
    r.need(count * 4);
    std::vector<double> values(count);
    for (auto& v : values) {
        v = r.f32();
        if (!std::isfinite(v)) {
            throw FormatError("model file: non-finite parameter");
        }
    }
    if (!r.at_end()) {
        throw FormatError("model file: trailing bytes after the parameters");
    }
    net.set_parameters(values);
    return net;
}

void save_model(const std::filesystem::path& path, const MtlNetwork& net) { write_file_bytes(path, encode_model(net)); }

MtlNetwork load_model(const std::filesystem::path& path) { return decode_model(read_file_bytes(path)); }

}  // namespace rtk
