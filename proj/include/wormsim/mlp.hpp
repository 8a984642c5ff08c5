#ifndef WORMSIM_MLP_HPP_
#define WORMSIM_MLP_HPP_

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

namespace wormsim {

/// Fully connected network with tanh hidden layers and a linear output.
/// Batches are stored column-wise: one column per sample.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Layer {
    Matrix weight;  // out x in
    Vector bias;    // out
  };

  /// Activations of every layer, input first.
  struct Cache {
    std::vector<Matrix> activations;
  };

  Mlp() = default;

  /// Zero-initialised network with layer widths `sizes` (input first).
  explicit Mlp(const std::vector<Eigen::Index>& sizes) {
    if (sizes.size() < 2) throw std::invalid_argument("an MLP needs input and output sizes");
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
      layers_.push_back({Matrix::Zero(sizes[l + 1], sizes[l]), Vector::Zero(sizes[l + 1])});
  }

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  Eigen::Index input_size() const { return layers_.front().weight.cols(); }
  Eigen::Index output_size() const { return layers_.back().weight.rows(); }

  Matrix forward(const Matrix& input, Cache* cache = nullptr) const {
    Matrix a = input;
    if (cache) {
      cache->activations.clear();
      cache->activations.push_back(a);
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = layers_[l].weight * a;
      z.colwise() += layers_[l].bias;
      if (l + 1 < layers_.size()) z = z.array().tanh().matrix();
      a = std::move(z);
      if (cache) cache->activations.push_back(a);
    }
    return a;
  }

  /// Parameter gradients of sum_over_batch <output_grad, output>. Returns the
  /// gradient with respect to the input as well when `input_grad` is set.
  std::vector<Layer> backward(const Cache& cache, const Matrix& output_grad,
                              Matrix* input_grad = nullptr) const {
    std::vector<Layer> grads(layers_.size());
    Matrix delta = output_grad;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const Matrix& input = cache.activations[l];
      grads[l].weight = delta * input.transpose();
      grads[l].bias = delta.rowwise().sum();
      if (l > 0 || input_grad) {
        Matrix back = layers_[l].weight.transpose() * delta;
        if (l > 0)
          delta = back.cwiseProduct(
              (Scalar(1) - input.array().square()).matrix());
        else
          *input_grad = std::move(back);
      }
    }
    return grads;
  }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
    return n;
  }

  /// Weights (column-major) then bias, layer by layer.
  static void pack(const std::vector<Layer>& layers, Scalar* out) {
    for (const auto& layer : layers) {
      out = std::copy(layer.weight.data(), layer.weight.data() + layer.weight.size(), out);
      out = std::copy(layer.bias.data(), layer.bias.data() + layer.bias.size(), out);
    }
  }

  void unpack(const Scalar* in) {
    for (auto& layer : layers_) {
      std::copy(in, in + layer.weight.size(), layer.weight.data());
      in += layer.weight.size();
      std::copy(in, in + layer.bias.size(), layer.bias.data());
      in += layer.bias.size();
    }
  }

 private:
  std::vector<Layer> layers_;
};

/// Orthogonal initialisation (gain-scaled, zero bias): hidden layers use
/// `hidden_gain`, the output layer `output_gain`.
template <typename Scalar, typename Engine>
void orthogonal_init(Mlp<Scalar>& net, Scalar hidden_gain, Scalar output_gain, Engine& engine) {
  using Matrix = typename Mlp<Scalar>::Matrix;
  std::normal_distribution<double> normal(0.0, 1.0);
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Eigen::Index rows = layers[l].weight.rows();
    const Eigen::Index cols = layers[l].weight.cols();
    const bool tall = rows >= cols;
    Matrix g(tall ? rows : cols, tall ? cols : rows);
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = Scalar(normal(engine));
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(g.rows(), g.cols());
    // sign fix so the distribution is uniform over orthogonal matrices
    const Matrix r = qr.matrixQR().topRows(g.cols()).template triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < q.cols(); ++j)
      if (r(j, j) < Scalar(0)) q.col(j) = -q.col(j);
    const Scalar gain = l + 1 < layers.size() ? hidden_gain : output_gain;
    layers[l].weight = gain * (tall ? q : Matrix(q.transpose()));
    layers[l].bias.setZero();
  }
}

}  // namespace wormsim

#endif  // WORMSIM_MLP_HPP_
