#include "sunlit/encoder.hpp"

#include <cmath>

#include "sunlit/error.hpp"
#include "sunlit/tensor_io.hpp"

namespace sunlit::encoder {

namespace {

template <typename M>
Eigen::Map<Eigen::VectorXd> flat(M& m) {
    return {m.data(), m.size()};
}

template <typename M>
Eigen::Map<const Eigen::VectorXd> flat_c(const M& m) {
    return {m.data(), m.size()};
}

void check_unit(double v) {
    if (!(v >= 0.0 && v <= 1.0))
        throw DomainError("RBF input " + std::to_string(v) + " outside [0, 1]");
}

} // namespace

void save_tokens(const std::filesystem::path& path, const TokenSet& tokens) {
    io::Archive a;
    a.kind = "token_set";
    a.meta = {{"name", tokens.name}, {"count", tokens.count()}, {"dim", tokens.dim()}};
    a.add("embeddings", tokens.embeddings);
    io::write_archive(path, a);
}

TokenSet load_tokens(const std::filesystem::path& path) {
    const io::Archive a = io::read_archive(path);
    io::expect_kind(a, "token_set");
    return {a.meta.value("name", std::string("S*")), a.matrix("embeddings")};
}

RbfLayer RbfLayer::uniform(int count) {
    if (count < 1)
        throw DomainError("RBF layer needs at least one center");
    RbfLayer layer;
    layer.centers = count == 1 ? Eigen::VectorXd(Eigen::VectorXd::Constant(1, 0.5))
                               : Eigen::VectorXd(Eigen::VectorXd::LinSpaced(count, 0.0, 1.0));
    const double spacing = count == 1 ? 1.0 : 1.0 / (count - 1);
    layer.log_gammas = Eigen::VectorXd::Constant(count, std::log(1.0 / (2.0 * spacing * spacing)));
    return layer;
}

Eigen::VectorXd RbfLayer::encode(double v) const {
    check_unit(v);
    const Eigen::ArrayXd diff = v - centers.array();
    return (-gammas().array() * diff.square()).exp().matrix();
}

Eigen::VectorXd RbfLayer::encode_derivative(double v) const {
    const Eigen::ArrayXd diff = v - centers.array();
    return (-2.0 * gammas().array() * diff * encode(v).array()).matrix();
}

SalnParams SalnParams::identity(const Eigen::MatrixXd& base, int features) {
    SalnParams p;
    const auto d = base.cols();
    p.weight_scale = Eigen::MatrixXd::Zero(d, features);
    p.bias_scale = Eigen::VectorXd::Ones(d);
    p.weight_shift = Eigen::MatrixXd::Zero(d, features);
    p.bias_shift = Eigen::VectorXd::Zero(d);
    p.base = base;
    return p;
}

Eigen::MatrixXd layer_norm_rows(const Eigen::MatrixXd& x, double epsilon) {
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mean = x.row(r).mean();
        const Eigen::RowVectorXd centered = x.row(r).array() - mean;
        const double var = centered.squaredNorm() / static_cast<double>(x.cols());
        out.row(r) = centered / std::sqrt(var + epsilon);
    }
    return out;
}

Eigen::MatrixXd saln_modulate(const SalnParams& p, const Eigen::VectorXd& h) {
    if (!h.allFinite())
        throw DomainError("SALN features must be finite");
    if (h.size() != p.weight_scale.cols())
        throw ContractError("SALN feature width mismatch");
    const Eigen::VectorXd scale = p.weight_scale * h + p.bias_scale;
    const Eigen::VectorXd shift = p.weight_shift * h + p.bias_shift;
    Eigen::MatrixXd out = layer_norm_rows(p.base, p.epsilon);
    for (Eigen::Index r = 0; r < out.rows(); ++r)
        out.row(r) = out.row(r).cwiseProduct(scale.transpose()) + shift.transpose();
    return out;
}

ContextNet ContextNet::create(const Eigen::MatrixXd& seed_embeddings, int centers) {
    if (seed_embeddings.rows() < 1 || seed_embeddings.rows() > 5)
        throw DomainError("context token count must lie in 1..5");
    ContextNet net;
    net.rbf = RbfLayer::uniform(centers);
    net.saln = SalnParams::identity(seed_embeddings, centers);
    return net;
}

ContextNet ContextNet::zeros_like() const {
    ContextNet g;
    g.rbf.centers = rbf.centers;
    g.rbf.log_gammas = Eigen::VectorXd::Zero(rbf.log_gammas.size());
    g.saln.weight_scale = Eigen::MatrixXd::Zero(saln.weight_scale.rows(), saln.weight_scale.cols());
    g.saln.bias_scale = Eigen::VectorXd::Zero(saln.bias_scale.size());
    g.saln.weight_shift = Eigen::MatrixXd::Zero(saln.weight_shift.rows(), saln.weight_shift.cols());
    g.saln.bias_shift = Eigen::VectorXd::Zero(saln.bias_shift.size());
    g.saln.base = Eigen::MatrixXd::Zero(saln.base.rows(), saln.base.cols());
    g.saln.epsilon = saln.epsilon;
    return g;
}

std::vector<Eigen::Map<Eigen::VectorXd>> ContextNet::trainable() {
    return {flat(rbf.log_gammas), flat(saln.weight_scale), flat(saln.bias_scale),
            flat(saln.weight_shift), flat(saln.bias_shift), flat(saln.base)};
}

std::vector<Eigen::Map<const Eigen::VectorXd>> ContextNet::trainable() const {
    return {flat_c(rbf.log_gammas), flat_c(saln.weight_scale), flat_c(saln.bias_scale),
            flat_c(saln.weight_shift), flat_c(saln.bias_shift), flat_c(saln.base)};
}

Eigen::MatrixXd ContextNet::forward(double normalized) const {
    return saln_modulate(saln, rbf.encode(normalized));
}

void ContextNet::backward(double v, const Eigen::MatrixXd& d_out, ContextNet& g) const {
    const Eigen::VectorXd phi = rbf.encode(v);
    const Eigen::VectorXd scale = saln.weight_scale * phi + saln.bias_scale;
    const Eigen::MatrixXd& e = saln.base;
    const auto d = static_cast<double>(e.cols());

    Eigen::VectorXd d_scale = Eigen::VectorXd::Zero(scale.size());
    Eigen::VectorXd d_shift = Eigen::VectorXd::Zero(scale.size());
    for (Eigen::Index r = 0; r < e.rows(); ++r) {
        const double mean = e.row(r).mean();
        const Eigen::RowVectorXd centered = e.row(r).array() - mean;
        const double s = std::sqrt(centered.squaredNorm() / d + saln.epsilon);
        const Eigen::RowVectorXd n = centered / s;

        d_scale += d_out.row(r).cwiseProduct(n).transpose();
        d_shift += d_out.row(r).transpose();

        const Eigen::RowVectorXd dn = d_out.row(r).cwiseProduct(scale.transpose());
        const double mean_dn = dn.mean();
        const double mean_dn_n = dn.cwiseProduct(n).mean();
        g.saln.base.row(r) += ((dn.array() - mean_dn - n.array() * mean_dn_n) / s).matrix();
    }

    g.saln.weight_scale += d_scale * phi.transpose();
    g.saln.bias_scale += d_scale;
    g.saln.weight_shift += d_shift * phi.transpose();
    g.saln.bias_shift += d_shift;

    const Eigen::VectorXd d_phi = saln.weight_scale.transpose() * d_scale + saln.weight_shift.transpose() * d_shift;
    const Eigen::ArrayXd diff2 = (v - rbf.centers.array()).square();
    g.rbf.log_gammas += (d_phi.array() * phi.array() * (-rbf.gammas().array() * diff2)).matrix();
}

void save_context_net(const std::filesystem::path& path, const ContextNet& net) {
    io::Archive a;
    a.kind = "context_net";
    a.meta = {{"centers", net.rbf.size()}, {"tokens", net.saln.tokens()}, {"dim", net.saln.dim()},
              {"epsilon", net.saln.epsilon}};
    a.add("rbf.centers", net.rbf.centers);
    a.add("rbf.log_gammas", net.rbf.log_gammas);
    a.add("saln.weight_scale", net.saln.weight_scale);
    a.add("saln.bias_scale", net.saln.bias_scale);
    a.add("saln.weight_shift", net.saln.weight_shift);
    a.add("saln.bias_shift", net.saln.bias_shift);
    a.add("saln.base", net.saln.base);
    io::write_archive(path, a);
}

ContextNet load_context_net(const std::filesystem::path& path) {
    const io::Archive a = io::read_archive(path);
    io::expect_kind(a, "context_net");
    ContextNet net;
    net.rbf.centers = a.vector("rbf.centers");
    net.rbf.log_gammas = a.vector("rbf.log_gammas");
    net.saln.weight_scale = a.matrix("saln.weight_scale");
    net.saln.bias_scale = a.vector("saln.bias_scale");
    net.saln.weight_shift = a.matrix("saln.weight_shift");
    net.saln.bias_shift = a.vector("saln.bias_shift");
    net.saln.base = a.matrix("saln.base");
    net.saln.epsilon = a.meta.value("epsilon", 1e-5);
    return net;
}

TokenSet context_tokens(double altitude_deg, const binning::BinScheme& scheme, const ContextNet& net,
                        binning::OutOfRange policy) {
    return context_tokens_normalized(binning::normalize(altitude_deg, scheme, policy).value, net);
}

TokenSet context_tokens_normalized(double normalized, const ContextNet& net) {
    return {"D*", net.forward(normalized)};
}

} // namespace sunlit::encoder
