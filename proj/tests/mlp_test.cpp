#include <random>

#include <doctest.h>

#include "wormsim/mlp.hpp"

using namespace wormsim;

namespace {

using Net = Mlp<double>;

Net random_net(const std::vector<Eigen::Index>& sizes, std::uint64_t seed) {
  Net net(sizes);
  std::mt19937_64 gen(seed);
  orthogonal_init(net, std::sqrt(2.0), 1.0, gen);
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& layer : net.layers())
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = n(gen);
  return net;
}

double weighted_sum(const Net& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& c) {
  return net.forward(x).cwiseProduct(c).sum();
}

}  // namespace

TEST_SUITE("mlp") {

TEST_CASE("backprop matches central differences on 2x64 networks") {
  for (Eigen::Index out : {1, 6}) {
    Net net = random_net({9, 64, 64, out}, 10 + out);
    std::mt19937_64 gen(out);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd x(9, 3), c(out, 3);
    for (auto& v : x.reshaped()) v = n(gen);
    for (auto& v : c.reshaped()) v = n(gen);

    Net::Cache cache;
    net.forward(x, &cache);
    Eigen::MatrixXd input_grad;
    const auto grads = net.backward(cache, c, &input_grad);

    const double h = 1e-5;
    const auto check_tensor = [&](double* values, const double* analytic, Eigen::Index count) {
      Eigen::VectorXd fd(count), bp(count);
      for (Eigen::Index i = 0; i < count; ++i) {
        const double saved = values[i];
        values[i] = saved + h;
        const double up = weighted_sum(net, x, c);
        values[i] = saved - h;
        const double down = weighted_sum(net, x, c);
        values[i] = saved;
        fd[i] = (up - down) / (2 * h);
        bp[i] = analytic[i];
      }
      CHECK((fd - bp).norm() <= 1e-4 * bp.norm());
    };
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      auto& layer = net.layers()[l];
      CAPTURE(l);
      check_tensor(layer.weight.data(), grads[l].weight.data(), layer.weight.size());
      check_tensor(layer.bias.data(), grads[l].bias.data(), layer.bias.size());
    }

    Eigen::MatrixXd fd_input(9, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Eigen::MatrixXd up = x, down = x;
      up.data()[i] += h;
      down.data()[i] -= h;
      fd_input.data()[i] = (weighted_sum(net, up, c) - weighted_sum(net, down, c)) / (2 * h);
    }
    CHECK((fd_input - input_grad).norm() <= 1e-4 * input_grad.norm());
  }
}

TEST_CASE("zero network outputs zero") {
  const Net net({5, 64, 64, 3});
  const Eigen::MatrixXd y = net.forward(Eigen::MatrixXd::Random(5, 4));
  CHECK(y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("batched and single-sample forward agree") {
  const Net net = random_net({4, 8, 2}, 3);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 5);
  const Eigen::MatrixXd y = net.forward(x);
  for (Eigen::Index j = 0; j < 5; ++j)
    CHECK((net.forward(x.col(j)) - y.col(j)).norm() < 1e-15);
}

TEST_CASE("orthogonal init has the requested gain") {
  Net net({10, 64, 64, 4});
  std::mt19937_64 gen(1);
  orthogonal_init(net, std::sqrt(2.0), 0.01, gen);
  const auto& l0 = net.layers()[0].weight;  // 64 x 10: orthogonal columns
  CHECK((l0.transpose() * l0 - 2.0 * Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-12);
  const auto& l1 = net.layers()[1].weight;
  CHECK((l1.transpose() * l1 - 2.0 * Eigen::MatrixXd::Identity(64, 64)).cwiseAbs().maxCoeff() < 1e-12);
  const auto& l2 = net.layers()[2].weight;  // 4 x 64: orthogonal rows
  CHECK((l2 * l2.transpose() - 1e-4 * Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-15);
  for (const auto& layer : net.layers()) CHECK(layer.bias.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pack and unpack round trip") {
  const Net net = random_net({3, 5, 2}, 8);
  Eigen::VectorXd flat(net.parameter_count());
  CHECK(flat.size() == 3 * 5 + 5 + 5 * 2 + 2);
  Net::pack(net.layers(), flat.data());
  Net copy({3, 5, 2});
  copy.unpack(flat.data());
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(copy.layers()[l].weight == net.layers()[l].weight);
    CHECK(copy.layers()[l].bias == net.layers()[l].bias);
  }
}

}  // TEST_SUITE
