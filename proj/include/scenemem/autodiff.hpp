#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scenemem {

using Matrix = Eigen::MatrixXd;

/// A trainable tensor with its gradient and optimizer moments.
struct Param {
    std::string name;
    Matrix value;
    Matrix grad;
    Matrix m;
    Matrix v;

    explicit Param(std::string n = {}, Matrix init = {})
        : name(std::move(n)), value(std::move(init)),
          grad(Matrix::Zero(value.rows(), value.cols())),
          m(Matrix::Zero(value.rows(), value.cols())),
          v(Matrix::Zero(value.rows(), value.cols())) {}
};

/// Reverse-mode differentiation over row-major batches of 2-D matrices.
/// Build a graph with the op methods, then call backward() once on a 1x1 output;
/// gradients of parameter leaves are accumulated into Param::grad.
class Tape {
public:
    using Var = int;

    Var constant(Matrix v);
    Var param(Param& p);

    const Matrix& value(Var x) const { return nodes_[x].value; }
    const Matrix& grad(Var x) const { return nodes_[x].grad; }

    Var matmul(Var a, Var b);
    // x + row, where row is 1 x cols and broadcast over rows.
    Var add_row(Var x, Var row);
    Var add(Var a, Var b);
    Var relu(Var x);
    Var scale(Var x, double s);
    Var concat_cols(Var a, Var b);
    // Row i of the result is row idx[i] of x, or zeros when idx[i] < 0.
    Var gather_rows(Var x, std::vector<int> idx);
    // Normalizes each row, then applies per-column gain and bias (1 x cols).
    Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
    // Scaled dot-product attention restricted to row segments
    // [offsets[s], offsets[s+1]); rows never attend outside their segment.
    // Columns are split evenly into `heads` heads.
    Var attention(Var q, Var k, Var v, std::vector<int> offsets, int heads);
    // Mean over rows of weights[i] * BCE(sigmoid(logit_i), labels[i]), with the
    // probability clamped to [1e-7, 1 - 1e-7]. Returns a 1x1 value.
    Var bce_with_logits(Var logits, std::vector<double> labels, std::vector<double> weights);

    void backward(Var output);
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void()> back;
        Param* param = nullptr;
    };

    Var push(Matrix value, std::function<void()> back = {});
    Matrix& g(Var x) { return nodes_[x].grad; }

    std::vector<Node> nodes_;
};

// log((1 - 1e-7) / 1e-7): logits beyond this are clamped.
inline constexpr double kLogitClamp = 16.11809559;

double sigmoid(double z);

}  // namespace scenemem
