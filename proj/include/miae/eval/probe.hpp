#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "miae/core/errors.hpp"
#include "miae/core/tensor.hpp"
#include "miae/eval/lbfgs.hpp"

namespace miae::eval {

// Feature-wise standardization fitted on the training split. Constant
// features keep scale 1 so they pass through unchanged.
struct StandardScaler {
    std::vector<double> mean;
    std::vector<double> scale;
};

inline StandardScaler fit_scaler(const Tensor& x) {
    const std::size_t m = x.rows(), d = x.cols();
    if (m == 0 || d == 0) throw ShapeError("fit_scaler: empty matrix");
    StandardScaler s;
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += x.at(i, j);
    for (double& v : s.mean) v /= static_cast<double>(m);
    for (std::size_t j = 0; j < d; ++j) {
        double var = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double c = x.at(i, j) - s.mean[j];
            var += c * c;
        }
        var /= static_cast<double>(m);
        if (var > 0.0) s.scale[j] = std::sqrt(var);
    }
    return s;
}

inline Tensor transform(const StandardScaler& s, const Tensor& x) {
    if (x.cols() != s.mean.size()) throw ShapeError("transform: feature count mismatch");
    Tensor out = x;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j)
            out.at(i, j) = (x.at(i, j) - s.mean[j]) / s.scale[j];
    return out;
}

// Multinomial logistic regression on standardized features, fitted by L-BFGS
// on mean cross-entropy plus an L2 penalty 0.5 * lambda * |W|^2 (bias free).
struct LinearProbe {
    StandardScaler scaler;
    Tensor w; // d x C
    Tensor b; // C
    std::vector<int> classes; // sorted original labels, column k predicts classes[k]
    double lambda = 0.0;
    double val_accuracy = 0.0;
};

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline RowMat to_eigen(const Tensor& t) {
    return Eigen::Map<const RowMat>(t.data(), static_cast<Eigen::Index>(t.rows()),
                                    static_cast<Eigen::Index>(t.cols()));
}

// Fit W (d x C), b (C) minimizing mean CE + 0.5*lambda*|W|^2 from a zero start.
inline void fit_logreg(const RowMat& x, const std::vector<std::size_t>& y, std::size_t n_classes,
                       double lambda, RowMat& w_out, Eigen::VectorXd& b_out) {
    const Eigen::Index m = x.rows(), d = x.cols(), c = static_cast<Eigen::Index>(n_classes);
    const double inv_m = 1.0 / static_cast<double>(m);

    Objective obj = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        const Eigen::Map<const RowMat> w(theta.data(), d, c);
        const Eigen::Map<const Eigen::VectorXd> b(theta.data() + d * c, c);
        RowMat z = x * w;
        z.rowwise() += b.transpose();

        double f = 0.0;
        RowMat p(m, c); // will hold softmax(z) - onehot(y)
        for (Eigen::Index i = 0; i < m; ++i) {
            const double zmax = z.row(i).maxCoeff();
            const double lse = zmax + std::log((z.row(i).array() - zmax).exp().sum());
            f += (lse - z(i, static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)]))) * inv_m;
            p.row(i) = (z.row(i).array() - lse).exp().matrix();
            p(i, static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)])) -= 1.0;
        }
        f += 0.5 * lambda * w.squaredNorm();

        grad.resize(theta.size());
        Eigen::Map<RowMat> gw(grad.data(), d, c);
        Eigen::Map<Eigen::VectorXd> gb(grad.data() + d * c, c);
        gw = inv_m * (x.transpose() * p) + lambda * w;
        gb = inv_m * p.colwise().sum().transpose();
        return f;
    };

    LbfgsResult res = minimize_lbfgs(obj, Eigen::VectorXd::Zero(d * c + c));
    w_out = Eigen::Map<const RowMat>(res.x.data(), d, c);
    b_out = Eigen::Map<const Eigen::VectorXd>(res.x.data() + d * c, c);
}

inline std::size_t argmax_row(const RowMat& z, Eigen::Index i) {
    std::size_t best = 0;
    for (Eigen::Index k = 1; k < z.cols(); ++k)
        if (z(i, k) > z(i, static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(k);
    return best;
}

} // namespace detail

inline std::vector<int> probe_predict(const LinearProbe& probe, const Tensor& x) {
    const Tensor xs = transform(probe.scaler, x);
    const detail::RowMat xe = detail::to_eigen(xs);
    const detail::RowMat w = detail::to_eigen(probe.w);
    detail::RowMat z = xe * w;
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index k = 0; k < z.cols(); ++k) z(i, k) += probe.b[static_cast<std::size_t>(k)];
    std::vector<int> out(static_cast<std::size_t>(z.rows()));
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        out[static_cast<std::size_t>(i)] = probe.classes[detail::argmax_row(z, i)];
    return out;
}

inline double probe_accuracy(const LinearProbe& probe, const Tensor& x,
                             const std::vector<int>& y) {
    if (y.size() != x.rows()) throw ShapeError("probe_accuracy: label count mismatch");
    const std::vector<int> pred = probe_predict(probe, x);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hits += pred[i] == y[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

inline const std::vector<double>& default_probe_grid() {
    static const std::vector<double> grid{100.0, 10.0, 1.0, 0.1, 0.01, 0.001};
    return grid;
}

// Full probing protocol: standardize with train statistics, fit one model per
// grid value, keep the one with the best validation accuracy. The grid runs
// from strong to weak regularization, so ties resolve to the stronger value.
inline LinearProbe fit_linear_probe(const Tensor& train_x, const std::vector<int>& train_y,
                                    const Tensor& val_x, const std::vector<int>& val_y,
                                    const std::vector<double>& grid = default_probe_grid()) {
    if (train_y.size() != train_x.rows()) throw ShapeError("probe: train label count mismatch");
    if (val_y.size() != val_x.rows()) throw ShapeError("probe: val label count mismatch");
    if (val_x.cols() != train_x.cols()) throw ShapeError("probe: feature count mismatch");
    if (grid.empty()) throw ProbeError("probe: empty regularization grid");

    std::map<int, std::size_t> counts;
    for (int label : train_y) ++counts[label];
    if (counts.size() < 2) throw ProbeError("probe: need at least two classes in train");
    for (const auto& [label, n] : counts)
        if (n < 2)
            throw ProbeError("probe: singleton class " + std::to_string(label) + " in train");

    LinearProbe probe;
    for (const auto& [label, n] : counts) probe.classes.push_back(label);
    std::map<int, std::size_t> index;
    for (std::size_t k = 0; k < probe.classes.size(); ++k) index[probe.classes[k]] = k;
    std::vector<std::size_t> y(train_y.size());
    for (std::size_t i = 0; i < train_y.size(); ++i) y[i] = index.at(train_y[i]);

    probe.scaler = fit_scaler(train_x);
    const Tensor train_s = transform(probe.scaler, train_x);
    const detail::RowMat xe = detail::to_eigen(train_s);
    const std::size_t d = train_x.cols(), c = probe.classes.size();

    double best_acc = -1.0;
    for (double lambda : grid) {
        detail::RowMat w;
        Eigen::VectorXd b;
        detail::fit_logreg(xe, y, c, lambda, w, b);

        LinearProbe cand;
        cand.scaler = probe.scaler;
        cand.classes = probe.classes;
        cand.lambda = lambda;
        cand.w = Tensor({d, c});
        cand.b = Tensor({c});
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t k = 0; k < c; ++k)
                cand.w.at(i, k) = w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        for (std::size_t k = 0; k < c; ++k) cand.b[k] = b(static_cast<Eigen::Index>(k));
        cand.val_accuracy = probe_accuracy(cand, val_x, val_y);

        if (cand.val_accuracy > best_acc) {
            best_acc = cand.val_accuracy;
            probe = std::move(cand);
        }
    }
    return probe;
}

} // namespace miae::eval
