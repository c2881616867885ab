#include <doctest.h>

#include <random>

#include "spooftrace/nn.hpp"

using namespace spooftrace;

namespace {

using V = Var<double>;

Tensor<double> rand_tensor(std::mt19937& rng, std::vector<int> dims, double lo = -1.0,
                           double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(std::move(dims));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = u(rng);
  return t;
}

/// Central-difference check of every leaf gradient of a scalar graph.
template <typename BuildFn>
void check_gradients(std::vector<V> leaves, BuildFn build, double tol = 1e-3, double h = 1e-4) {
  for (auto& leaf : leaves) leaf.zero_grad();
  V loss = build();
  REQUIRE(loss.val().size() == 1);
  backward(loss);
  for (auto& leaf : leaves) {
    REQUIRE(leaf.requires_grad());
    Tensor<double> analytic = leaf.has_grad() ? leaf.grad() : Tensor<double>(leaf.val().dims());
    Tensor<double>& x = leaf.mutable_val();
    for (std::int64_t i = 0; i < x.size(); ++i) {
      const double keep = x[i];
      x[i] = keep + h;
      const double up = build().val()[0];
      x[i] = keep - h;
      const double dn = build().val()[0];
      x[i] = keep;
      const double numeric = (up - dn) / (2.0 * h);
      const double have = analytic[i];
      CHECK(std::abs(have - numeric) <= tol * std::max(1.0, std::abs(numeric)));
    }
  }
}

}  // namespace

TEST_CASE("elementwise and reduction gradients") {
  std::mt19937 rng(3);
  V a = V::leaf(rand_tensor(rng, {2, 3, 3, 2}), true);
  V b = V::leaf(rand_tensor(rng, {2, 3, 3, 2}), true);
  V mask = V::leaf(rand_tensor(rng, {2, 3, 3, 1}, 0.1, 0.9), true);

  SUBCASE("sum of products") {
    check_gradients({a, b}, [&] { return sum_all(hadamard(a, b)); });
  }
  SUBCASE("broadcast mask product") {
    check_gradients({a, mask}, [&] { return mean_all(hadamard(mask, a)); });
  }
  SUBCASE("affine and square") {
    check_gradients({a}, [&] { return mean_square(add_const(a * 2.5, -0.3)); });
  }
  SUBCASE("mean absolute value") {
    check_gradients({a}, [&] { return mean_abs(a); });
  }
  SUBCASE("difference and one_minus") {
    check_gradients({a, b}, [&] { return mean_square(one_minus(a) - b); });
  }
  SUBCASE("a diamond accumulates both paths") {
    check_gradients({a}, [&] { return sum_all(hadamard(a, a) + a * 0.7); });
  }
}

TEST_CASE("shape op gradients") {
  std::mt19937 rng(5);
  V a = V::leaf(rand_tensor(rng, {2, 4, 4, 3}), true);
  V b = V::leaf(rand_tensor(rng, {2, 4, 4, 2}), true);

  SUBCASE("concat and slice channels") {
    check_gradients({a, b}, [&] {
      V cat = concat_channels<double>({a, b});
      return mean_square(slice_channels(cat, 1, 4));
    });
  }
  SUBCASE("batch slice") {
    check_gradients({a}, [&] { return mean_square(slice_batch(a, 1, 2)); });
  }
  SUBCASE("channel mean and max") {
    check_gradients({a}, [&] { return mean_square(channel_mean(a) + channel_max(a)); });
  }
}

TEST_CASE("resize gradients") {
  std::mt19937 rng(7);
  V a = V::leaf(rand_tensor(rng, {1, 8, 8, 2}), true);
  SUBCASE("downsample") {
    check_gradients({a}, [&] { return mean_square(resize_bilinear(a, 4, 4)); });
  }
  SUBCASE("upsample") {
    check_gradients({a}, [&] { return mean_square(resize_bilinear(a, 12, 12)); });
  }
  SUBCASE("bandpass") {
    check_gradients({a}, [&] { return mean_square(bandpass_low(a, 2)); });
  }
}

TEST_CASE("convolution gradients") {
  std::mt19937 rng(11);
  V x = V::leaf(rand_tensor(rng, {2, 6, 6, 3}), true);
  V w = V::leaf(rand_tensor(rng, {3, 3, 3, 4}, -0.5, 0.5), true);
  V b = V::leaf(rand_tensor(rng, {4}), true);

  SUBCASE("stride 1") {
    check_gradients({x, w, b}, [&] { return mean_square(conv2d(x, w, b, 1, 1)); });
  }
  SUBCASE("stride 2") {
    check_gradients({x, w, b}, [&] { return mean_square(conv2d(x, w, b, 2, 1)); });
  }
  SUBCASE("no bias") {
    check_gradients({x, w}, [&] { return mean_square(conv2d(x, w, V(), 1, 1)); });
  }
}

TEST_CASE("transposed convolution gradients and geometry") {
  std::mt19937 rng(13);
  V x = V::leaf(rand_tensor(rng, {2, 4, 4, 3}), true);
  V w = V::leaf(rand_tensor(rng, {3, 3, 5, 3}, -0.5, 0.5), true);  // [K,K,Cout,Cin]
  V b = V::leaf(rand_tensor(rng, {5}), true);

  V y = conv2d_transpose(x, w, b, 2, 1);
  CHECK(y.val().dims() == std::vector<int>{2, 8, 8, 5});
  check_gradients({x, w, b}, [&] { return mean_square(conv2d_transpose(x, w, b, 2, 1)); });
}

TEST_CASE("batch normalization gradients") {
  std::mt19937 rng(17);
  V x = V::leaf(rand_tensor(rng, {3, 4, 4, 2}), true);
  V gamma = V::leaf(rand_tensor(rng, {2}, 0.5, 1.5), true);
  V beta = V::leaf(rand_tensor(rng, {2}), true);
  Tensor<double> rm({2}), rv = Tensor<double>::ones({2});

  SUBCASE("training mode") {
    check_gradients({x, gamma, beta},
                    [&] { return mean_square(batch_norm(x, gamma, beta, &rm, &rv, true)); });
  }
  SUBCASE("inference mode treats running stats as constants") {
    rm[0] = 0.2;
    rm[1] = -0.1;
    rv[0] = 0.8;
    rv[1] = 1.4;
    check_gradients({x, gamma, beta},
                    [&] { return mean_square(batch_norm(x, gamma, beta, &rm, &rv, false)); });
  }
  SUBCASE("running statistics move toward batch statistics") {
    Tensor<double> rm2({2}), rv2 = Tensor<double>::ones({2});
    batch_norm(x, gamma, beta, &rm2, &rv2, true, 0.5);
    CHECK(rm2[0] != 0.0);  // updated
    batch_norm(x, gamma, beta, &rm2, &rv2, false);
    const double frozen = rm2[0];
    batch_norm(x, gamma, beta, &rm2, &rv2, false);
    CHECK(rm2[0] == frozen);  // inference never updates
  }
}

TEST_CASE("activation gradients") {
  std::mt19937 rng(19);
  V x = V::leaf(rand_tensor(rng, {2, 3, 3, 2}, -2.0, 2.0), true);
  SUBCASE("leaky relu") {
    check_gradients({x}, [&] { return mean_square(leaky_relu(x, 0.2)); });
  }
  SUBCASE("sigmoid") {
    check_gradients({x}, [&] { return mean_square(sigmoid(x)); });
  }
  SUBCASE("tanh") {
    check_gradients({x}, [&] { return mean_square(tanh_(x)); });
  }
}

TEST_CASE("pool, dense and cross-entropy gradients") {
  std::mt19937 rng(23);
  V x = V::leaf(rand_tensor(rng, {3, 4, 4, 5}), true);
  V w = V::leaf(rand_tensor(rng, {5, 3}, -0.5, 0.5), true);
  V b = V::leaf(rand_tensor(rng, {3}), true);
  const std::vector<int> labels = {2, 0, 1};
  check_gradients({x, w, b}, [&] {
    return softmax_cross_entropy(dense(global_avg_pool(x), w, b), labels);
  });
}

TEST_CASE("warp op gradients flow into image and offsets") {
  std::mt19937 rng(29);
  V img = V::leaf(rand_tensor(rng, {8, 8, 2}, 0.0, 1.0), true);
  Tensor<double> off_t({8, 8, 2});
  std::uniform_real_distribution<double> frac(0.2, 0.8);
  for (std::int64_t i = 0; i < off_t.size(); ++i) off_t[i] = frac(rng) + (rng() % 3) - 1.0;
  V off = V::leaf(off_t, true);
  check_gradients({img, off}, [&] { return mean_square(warp(img, off)); });
}

TEST_CASE("detach cuts the gradient path") {
  std::mt19937 rng(31);
  V a = V::leaf(rand_tensor(rng, {4, 4, 1}), true);

  SUBCASE("a fully detached graph is constant") {
    V loss = mean_square(detach(hadamard(a, a)));
    CHECK(!loss.requires_grad());
    backward(loss);
    CHECK(!a.has_grad());
  }

  SUBCASE("only the live factor receives gradient") {
    V loss = sum_all(hadamard(detach(a), a));
    backward(loss);
    for (std::int64_t i = 0; i < a.val().size(); ++i)
      CHECK(a.grad()[i] == doctest::Approx(a.val()[i]));  // d/da of detach(a)*a
  }
}

TEST_CASE("constant-only graphs carry no tape") {
  V c1 = V::constant(Tensor<double>::full({3, 3, 1}, 0.5));
  V c2 = V::constant(Tensor<double>::ones({3, 3, 1}));
  V sum = mean_all(hadamard(c1, c2));
  CHECK(!sum.requires_grad());
  CHECK(sum.get()->parents.empty());
}

TEST_CASE("backward requires a scalar root") {
  V a = V::leaf(Tensor<double>::ones({2, 2, 1}), true);
  CHECK_THROWS_AS(backward(a + a), std::invalid_argument);
}

TEST_CASE("gradients accumulate across backward calls until cleared") {
  V a = V::leaf(Tensor<double>::full({2}, 1.5), true);
  V l1 = sum_all(square(a));
  backward(l1);
  const double g1 = a.grad()[0];
  V l2 = sum_all(square(a));
  backward(l2);
  CHECK(a.grad()[0] == doctest::Approx(2.0 * g1));
  a.zero_grad();
  CHECK(!a.has_grad());
}
