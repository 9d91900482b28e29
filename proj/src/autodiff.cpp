#include "scenemem/autodiff.hpp"

#include <cmath>

#include "scenemem/common.hpp"

namespace scenemem {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Tape::Var Tape::push(Matrix value, std::function<void()> back) {
    Node n;
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::constant(Matrix v) { return push(std::move(v)); }

Tape::Var Tape::param(Param& p) {
    const Var id = push(p.value);
    nodes_[id].param = &p;
    return id;
}

Tape::Var Tape::matmul(Var a, Var b) {
    if (value(a).cols() != value(b).rows()) throw Error("matmul shape mismatch");
    const Var out = push(value(a) * value(b));
    nodes_[out].back = [this, a, b, out] {
        g(a).noalias() += g(out) * value(b).transpose();
        g(b).noalias() += value(a).transpose() * g(out);
    };
    return out;
}

Tape::Var Tape::add_row(Var x, Var row) {
    if (value(row).rows() != 1 || value(row).cols() != value(x).cols()) throw Error("add_row shape mismatch");
    const Var out = push(value(x).rowwise() + value(row).row(0));
    nodes_[out].back = [this, x, row, out] {
        g(x) += g(out);
        g(row) += g(out).colwise().sum();
    };
    return out;
}

Tape::Var Tape::add(Var a, Var b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) throw Error("add shape mismatch");
    const Var out = push(value(a) + value(b));
    nodes_[out].back = [this, a, b, out] {
        g(a) += g(out);
        g(b) += g(out);
    };
    return out;
}

Tape::Var Tape::relu(Var x) {
    const Var out = push(value(x).cwiseMax(0.0));
    nodes_[out].back = [this, x, out] {
        g(x) += (value(x).array() > 0.0).cast<double>().matrix().cwiseProduct(g(out));
    };
    return out;
}

Tape::Var Tape::scale(Var x, double s) {
    const Var out = push(value(x) * s);
    nodes_[out].back = [this, x, s, out] { g(x) += s * g(out); };
    return out;
}

Tape::Var Tape::concat_cols(Var a, Var b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    if (va.rows() != vb.rows()) throw Error("concat_cols row mismatch");
    Matrix v(va.rows(), va.cols() + vb.cols());
    v << va, vb;
    const Var out = push(std::move(v));
    nodes_[out].back = [this, a, b, out] {
        const auto ca = value(a).cols();
        g(a) += g(out).leftCols(ca);
        g(b) += g(out).rightCols(value(b).cols());
    };
    return out;
}

Tape::Var Tape::gather_rows(Var x, std::vector<int> idx) {
    const Matrix& vx = value(x);
    Matrix v = Matrix::Zero(static_cast<Eigen::Index>(idx.size()), vx.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= vx.rows()) throw Error("gather_rows index out of range");
        if (idx[i] >= 0) v.row(static_cast<Eigen::Index>(i)) = vx.row(idx[i]);
    }
    const Var out = push(std::move(v));
    nodes_[out].back = [this, x, idx = std::move(idx), out] {
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (idx[i] >= 0) g(x).row(idx[i]) += g(out).row(static_cast<Eigen::Index>(i));
        }
    };
    return out;
}

Tape::Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
    const Matrix& vx = value(x);
    const auto n = vx.cols();
    if (value(gain).cols() != n || value(bias).cols() != n) throw Error("layer_norm shape mismatch");
    Matrix xhat(vx.rows(), n);
    Eigen::VectorXd inv_std(vx.rows());
    for (Eigen::Index r = 0; r < vx.rows(); ++r) {
        const double mean = vx.row(r).mean();
        const double var = (vx.row(r).array() - mean).square().mean();
        inv_std(r) = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = (vx.row(r).array() - mean) * inv_std(r);
    }
    Matrix y = (xhat.array().rowwise() * value(gain).row(0).array()).rowwise() + value(bias).row(0).array();
    const Var out = push(std::move(y));
    nodes_[out].back = [this, x, gain, bias, out, xhat = std::move(xhat), inv_std = std::move(inv_std)] {
        const Matrix& dy = g(out);
        g(gain) += (dy.array() * xhat.array()).colwise().sum().matrix();
        g(bias) += dy.colwise().sum();
        const Matrix dxhat = (dy.array().rowwise() * value(gain).row(0).array()).matrix();
        for (Eigen::Index r = 0; r < dy.rows(); ++r) {
            const double m1 = dxhat.row(r).mean();
            const double m2 = (dxhat.row(r).array() * xhat.row(r).array()).mean();
            g(x).row(r).array() += inv_std(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
        }
    };
    return out;
}

Tape::Var Tape::attention(Var q, Var k, Var v, std::vector<int> offsets, int heads) {
    const Matrix& Q = value(q);
    const Matrix& K = value(k);
    const Matrix& V = value(v);
    if (Q.rows() != K.rows() || Q.rows() != V.rows() || Q.cols() != K.cols() || Q.cols() != V.cols()) {
        throw Error("attention shape mismatch");
    }
    if (heads <= 0 || Q.cols() % heads != 0) throw Error("attention width not divisible by head count");
    if (offsets.empty() || offsets.front() != 0 || offsets.back() != Q.rows()) {
        throw Error("attention segments must cover all rows");
    }
    const int dh = static_cast<int>(Q.cols()) / heads;
    const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
    Matrix out_v = Matrix::Zero(Q.rows(), Q.cols());
    // softmax weights per (segment, head)
    std::vector<Matrix> weights;
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
        const int r0 = offsets[s];
        const int len = offsets[s + 1] - r0;
        if (len < 0) throw Error("attention offsets must be non-decreasing");
        for (int h = 0; h < heads; ++h) {
            if (len == 0) {
                weights.emplace_back();
                continue;
            }
            Matrix S = Q.block(r0, h * dh, len, dh) * K.block(r0, h * dh, len, dh).transpose() * inv;
            for (int i = 0; i < len; ++i) {
                const double mx = S.row(i).maxCoeff();
                S.row(i) = (S.row(i).array() - mx).exp();
                S.row(i) /= S.row(i).sum();
            }
            out_v.block(r0, h * dh, len, dh) = S * V.block(r0, h * dh, len, dh);
            weights.push_back(std::move(S));
        }
    }
    const Var out = push(std::move(out_v));
    nodes_[out].back = [this, q, k, v, out, heads, dh, inv, offsets = std::move(offsets),
                        weights = std::move(weights)] {
        const Matrix& dO = g(out);
        std::size_t w = 0;
        for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
            const int r0 = offsets[s];
            const int len = offsets[s + 1] - r0;
            for (int h = 0; h < heads; ++h, ++w) {
                if (len == 0) continue;
                const Matrix& A = weights[w];
                const auto dOb = dO.block(r0, h * dh, len, dh);
                g(v).block(r0, h * dh, len, dh).noalias() += A.transpose() * dOb;
                const Matrix dA = dOb * value(v).block(r0, h * dh, len, dh).transpose();
                const Eigen::VectorXd rowdot = (dA.array() * A.array()).rowwise().sum();
                const Matrix dS = (A.array() * (dA.array().colwise() - rowdot.array())).matrix() * inv;
                g(q).block(r0, h * dh, len, dh).noalias() += dS * value(k).block(r0, h * dh, len, dh);
                g(k).block(r0, h * dh, len, dh).noalias() += dS.transpose() * value(q).block(r0, h * dh, len, dh);
            }
        }
    };
    return out;
}

Tape::Var Tape::bce_with_logits(Var logits, std::vector<double> labels, std::vector<double> weights) {
    const Matrix& z = value(logits);
    if (z.cols() != 1 || static_cast<std::size_t>(z.rows()) != labels.size() || labels.size() != weights.size()) {
        throw Error("bce_with_logits length mismatch");
    }
    if (labels.empty()) throw Error("bce_with_logits needs at least one row");
    const double n = static_cast<double>(labels.size());
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double zi = std::clamp(z(static_cast<Eigen::Index>(i), 0), -kLogitClamp, kLogitClamp);
        const double loss = std::max(zi, 0.0) - labels[i] * zi + std::log1p(std::exp(-std::abs(zi)));
        total += weights[i] * loss;
    }
    Matrix v(1, 1);
    v(0, 0) = total / n;
    const Var out = push(std::move(v));
    nodes_[out].back = [this, logits, out, n, labels = std::move(labels), weights = std::move(weights)] {
        const double up = g(out)(0, 0);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            const double zi = value(logits)(r, 0);
            if (zi <= -kLogitClamp || zi >= kLogitClamp) continue;
            g(logits)(r, 0) += up * weights[i] * (sigmoid(zi) - labels[i]) / n;
        }
    };
    return out;
}

void Tape::backward(Var output) {
    if (value(output).size() != 1) throw Error("backward needs a scalar output");
    for (auto& n : nodes_) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    nodes_[output].grad(0, 0) = 1.0;
    for (Var i = output; i >= 0; --i) {
        if (nodes_[i].back) nodes_[i].back();
    }
    for (auto& n : nodes_) {
        if (n.param) n.param->grad += n.grad;
    }
}

}  // namespace scenemem
