#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rtk/annotstats.hpp"
#include "rtk/features.hpp"
#include "rtk/rng.hpp"

namespace rtk {

inline constexpr int kDefaultBatchSize = 64;
inline constexpr double kDefaultLearningRate = 0.01;
inline constexpr double kDefaultDropout = 0.30;
/// Attribute k is predicted present when its output exceeds this.
inline constexpr double kAttributeThreshold = 0.5;

/// Training configurations: the full model and five ablations.
enum class Variant { full, net_minus, net_plus, net_star, net_amp, net_at };

inline constexpr std::array<Variant, 6> kAllVariants = {Variant::full,     Variant::net_minus, Variant::net_plus,
                                                        Variant::net_star, Variant::net_amp,   Variant::net_at};

/// CLI spelling: full, net-, net+, net*, net&, net@.
std::string_view variant_name(Variant v);
/// Accepts the CLI spelling and full_name forms (net_minus, ...).
Variant parse_variant(std::string_view name);
/// net- and net& learn from a single anisotropic resize, the rest from dense crops.
CropPolicy variant_crop_policy(Variant v);

/// Which objective terms a variant trains with.
struct VariantTerms {
    bool attribute_branches = true;  // false: plain D -> Hr -> 1 regressor
    bool binary = true;              // squared hinge on the 14 attributes
    bool group_sparsity = true;      // l2,1 on the hidden1 -> hidden2 weights
    bool relative = true;            // pairwise contrastive / similar loss
    bool regression = false;         // 1/2 (y* - y)^2 per image
};
VariantTerms variant_terms(Variant v);

struct NetShape {
    int input_dim = 0;
    int attributes = kAttributeCount;
    int hidden1 = 64;
    int hidden2 = 32;
    int head_hidden = 64;

    static NetShape desk(int input_dim) { return {input_dim, kAttributeCount, 64, 32, 64}; }
    static NetShape paper(int input_dim) { return {input_dim, kAttributeCount, 4096, 1000, 1000}; }
    void validate() const;
    bool operator==(const NetShape&) const = default;
};

struct Hyperparams {
    double alpha = 1e-3;  // l2,1 weight
    double beta = 1e-4;   // Frobenius weight
    double tau = 0.1;     // relative margin
    double delta = 1e-6;  // |y_i - y_j| <= delta counts as similar
    double learning_rate = kDefaultLearningRate;
    int batch_size = kDefaultBatchSize;
    double dropout = kDefaultDropout;
    int epochs = 50;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Reads the JSON config: any subset of the Hyperparams fields plus optional
/// hidden1 / hidden2 / head_hidden overriding `shape`.
Hyperparams parse_config(std::string_view json_text, NetShape* shape = nullptr);

/// All learnable parameters. Both siamese channels evaluate this one set.
class MtlNetwork {
public:
    struct Branch {
        Eigen::MatrixXd w1;  // hidden1 x input
        Eigen::VectorXd b1;
        Eigen::MatrixXd w2;  // hidden2 x hidden1, the l2,1 group
        Eigen::VectorXd b2;
        Eigen::VectorXd w3;  // hidden2
        double b3 = 0.0;
    };
    struct Head {
        Eigen::MatrixXd w1;  // head_hidden x (attributes * hidden2), or x input for net-
        Eigen::VectorXd b1;
        Eigen::VectorXd w2;
        double b2 = 0.0;
    };

    MtlNetwork() = default;
    /// All-zero parameters.
    MtlNetwork(NetShape shape, Variant variant);
    /// Glorot-uniform weights, zero biases, from a seeded generator.
    static MtlNetwork initialized(NetShape shape, Variant variant, std::uint64_t seed);

    const NetShape& shape() const noexcept { return shape_; }
    Variant variant() const noexcept { return variant_; }
    bool has_branches() const noexcept { return !branches_.empty(); }
    int shared_dim() const noexcept { return has_branches() ? shape_.attributes * shape_.hidden2 : 0; }

    std::vector<Branch>& branches() noexcept { return branches_; }
    const std::vector<Branch>& branches() const noexcept { return branches_; }
    Head& head() noexcept { return head_; }
    const Head& head() const noexcept { return head_; }

    /// Flat order: per branch w1 (row-major), b1, w2 (row-major), b2, w3, b3;
    /// then head w1 (row-major), b1, w2, b2. The model file uses this order.
    std::size_t parameter_count() const;
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> values);

    /// Frobenius norm of every weight matrix and vector, biases excluded.
    double weight_norm() const;
    /// Sum over branches of the Frobenius norm of w2.
    double group_norm() const;

    /// Rounds every parameter to float32 precision.
    void round_to_float();
    bool operator==(const MtlNetwork& other) const;

private:
    NetShape shape_;
    Variant variant_ = Variant::full;
    std::vector<Branch> branches_;
    Head head_;
};

struct LabeledSample {
    Eigen::VectorXd features;
    AttributeFlags attributes{};
    double label = 0.0;
};

/// sum_k 1/2 max(0, 1 - L_k * out_k)^2.
double squared_hinge(std::span<const double> outputs, const AttributeFlags& labels);

struct BinaryLoss {
    double value = 0.0;
    std::vector<double> outputs;  // L*_k
};

/// Squared hinge on the attribute outputs plus 1/2 alpha sum_k ||w2_k||_F.
BinaryLoss loss_binary(const MtlNetwork& net, const Eigen::VectorXd& x, const AttributeFlags& labels, double alpha);

/// I max(0, tau - d) + (1 - I) 1/2 d^2 with d = y*_i - y*_j.
double loss_relative(double yi, double yj, int indicator, double tau);

/// 1 when the larger label exceeds the smaller by more than delta.
int pair_indicator(double yi, double yj, double delta);

/// Objective of one pair under the network's variant (dropout off). The pair
/// is canonicalized so the first sample carries the larger label.
double total_objective(const MtlNetwork& net, const LabeledSample& a, const LabeledSample& b, const Hyperparams& hp);

/// Exact gradient of total_objective, same layout as the network. The
/// subgradient of a zero norm is 0; kinks take the right-sided derivative.
MtlNetwork backward(const MtlNetwork& net, const LabeledSample& a, const LabeledSample& b, const Hyperparams& hp);

struct TrainingSet {
    Eigen::MatrixXd features;  // input_dim x N
    std::vector<AttributeFlags> attributes;
    std::vector<double> labels;

    int size() const noexcept { return static_cast<int>(labels.size()); }
    LabeledSample sample(int i) const;
};

struct TrainResult {
    MtlNetwork network;
    std::vector<double> batch_losses;
    std::vector<double> epoch_losses;
};

/// Mini-batch SGD on pairs drawn uniformly from all unordered pairs.
/// ceil(N / batch) batches per epoch; inverted dropout on hidden activations.
/// Final parameters are rounded to float32 so the model file is exact.
/// DivergedError names the epoch and batch of a non-finite loss.
TrainResult train(const TrainingSet& data, const Hyperparams& hp, Variant variant, const NetShape& shape);

struct Prediction {
    double raw = 0.0;
    double retargetability = 0.0;  // raw clamped to [0, 1]
    std::vector<double> attribute_outputs;
    std::vector<bool> attributes;  // output > 0.5
    std::vector<double> shared;    // concatenated hidden2 activations
};

/// One-way forward pass without dropout. ArgumentError on a wrong input size.
Prediction predict(const MtlNetwork& net, std::span<const double> features);

/// Model file: "RTGM", u32 version, u32 D, M, H1, H2, Hr, u32 variant, then
/// the float32 parameters in the flat order.
std::vector<std::uint8_t> encode_model(const MtlNetwork& net);
MtlNetwork decode_model(const std::vector<std::uint8_t>& bytes);
void save_model(const std::filesystem::path& path, const MtlNetwork& net);
MtlNetwork load_model(const std::filesystem::path& path);

}  // namespace rtk
