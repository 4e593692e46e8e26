#include <doctest.h>

#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "erlab/csv.hpp"
#include "erlab/models.hpp"
#include "generators.hpp"

using namespace erlab;

namespace {

EncoderSpec small_mlp() {
  EncoderSpec s;
  s.input_dim = 2;
  s.hidden_dims = {};
  s.rep_dim = 4;
  s.output_dim = 2;
  return s;
}

}  // namespace

TEST_CASE("task kind and encoder enums round trip") {
  for (auto k : {TaskKind::RegressionLowRank, TaskKind::ClassifyGaussians}) CHECK(parse_task_kind(to_string(k)) == k);
  for (auto k : {EncoderKind::Mlp, EncoderKind::Attn1}) CHECK(parse_encoder_kind(to_string(k)) == k);
  for (auto a : {Activation::Tanh, Activation::Relu}) CHECK(parse_activation(to_string(a)) == a);
  CHECK_THROWS_AS(parse_encoder_kind("cnn"), ValidationError);
  CHECK_THROWS_AS(parse_activation("gelu"), ValidationError);
}

TEST_CASE("make_task is deterministic and shaped by the spec") {
  TaskSpec spec;
  spec.kind = TaskKind::ClassifyGaussians;
  spec.n_train = 40;
  spec.n_test = 30;
  spec.n_val = 10;
  const TaskData a = make_task(spec);
  const TaskData b = make_task(spec);
  CHECK(a.train.x == b.train.x);
  CHECK(a.test.y == b.test.y);
  CHECK(a.train.x.rows() == 40);
  CHECK(a.test.x.rows() == 30);
  CHECK(a.val.x.rows() == 10);
  CHECK(a.train.y.cols() == spec.num_classes);
  for (Eigen::Index i = 0; i < a.train.y.rows(); ++i) CHECK(a.train.y.row(i).sum() == 1.0);
  CHECK(a.train.x.topRows(10) != a.test.x.topRows(10));
  CHECK(a.train.x.topRows(10) != a.val.x);

  spec.seed = 2;
  CHECK(make_task(spec).train.x != a.train.x);
}

TEST_CASE("regression targets have the configured low rank without noise") {
  TaskSpec spec;
  spec.noise_std = 0.0;
  spec.rank = 2;
  spec.output_dim = 5;
  const TaskData d = make_task(spec);
  Eigen::JacobiSVD<Matrix> svd(d.train.y);
  const auto sv = svd.singularValues();
  CHECK(sv(2) <= 1e-10 * sv(0));
  CHECK(sv(1) > 1e-6 * sv(0));
}

TEST_CASE("task spec validation") {
  TaskSpec spec;
  spec.n_train = 1;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = TaskSpec{};
  spec.noise_std = -1.0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("dataset csv header") {
  Dataset d{Matrix::Ones(2, 2), Matrix::Zero(2, 1)};
  std::ostringstream os;
  write_dataset_csv(os, d);
  std::istringstream is(os.str());
  const CsvTable t = read_csv(is);
  CHECK(t.header == std::vector<std::string>{"x_0", "x_1", "y_0"});
  CHECK(t.rows.size() == 2);
}

TEST_CASE("init_params") {
  const EncoderSpec s = small_mlp();
  CHECK(s.param_count() == 22);
  CHECK(init_params(s, 3) == init_params(s, 3));
  CHECK(init_params(s, 3) != init_params(s, 4));

  EncoderSpec wide;
  wide.input_dim = 400;
  wide.hidden_dims = {};
  wide.rep_dim = 300;
  const ParamVector theta = init_params(wide, 1);
  const Eigen::Map<const Matrix> w(theta.data(), 300, 400);
  CHECK((w.array().square().mean()) == doctest::Approx(1.0 / 400.0).epsilon(0.02));
  CHECK(theta.segment(400 * 300, 300).isZero(0.0));
}

TEST_CASE("forward hand examples") {
  SUBCASE("zero weights give zero outputs") {
    const EncoderSpec s = small_mlp();
    const ForwardValues out = forward(ParamVector::Zero(s.param_count()), Matrix::Ones(3, 2), s);
    CHECK(out.z.isZero(0.0));
    CHECK(out.yhat.isZero(0.0));
  }
  SUBCASE("one-layer encoder is X W") {
    EncoderSpec s;
    s.input_dim = 2;
    s.hidden_dims = {};
    s.rep_dim = 2;
    s.output_dim = 1;
    s.activation = Activation::Relu;
    ParamVector theta = ParamVector::Zero(s.param_count());
    theta.head(4) << 1, 2, 3, 4;  // W row-major
    Matrix x(2, 2), expect(2, 2);
    x << 1, 0, 2, 1;
    expect << 1, 2, 5, 8;
    CHECK(forward(theta, x, s).z == expect);
  }
  SUBCASE("attn1 with equal keys pools the mean value row") {
    EncoderSpec s;
    s.kind = EncoderKind::Attn1;
    s.input_dim = 4;
    s.seq_len = 2;
    s.rep_dim = 2;
    CounterRng rng(9);
    ParamVector theta = testgen::normal_vector(rng, s.param_count());
    theta.segment(4, 4).setZero();  // W_k
    const Eigen::Map<const Matrix> wv_t(theta.data() + 8, 2, 2);
    const Matrix wv = wv_t.transpose();
    Matrix x(1, 4);
    x << 1, -2, 0.5, 3;
    Matrix tokens(2, 2);
    tokens << 1, -2, 0.5, 3;
    const Matrix pooled = (tokens * wv).colwise().mean();
    CHECK(forward(theta, x, s).z.isApprox(pooled.array().tanh().matrix(), 1e-14));
  }
  CHECK_THROWS_AS(forward(ParamVector::Zero(3), Matrix::Ones(2, 2), small_mlp()), DimensionError);
  CHECK_THROWS_AS(forward(init_params(small_mlp(), 0), Matrix::Ones(2, 3), small_mlp()), DimensionError);
}

TEST_CASE("pred_loss examples") {
  ad::Tape tape;
  Matrix y(3, 1);
  y << 1, -2, 0.5;
  CHECK(ad::mse(tape.constant(y), tape.constant(y)).scalar() == 0.0);
  CHECK(pred_loss(tape.constant(Matrix::Zero(1, 1)), tape.constant(Matrix::Constant(1, 1, 2.0)),
                  TaskKind::RegressionLowRank)
            .scalar() == doctest::Approx(4.0));
  for (int k = 2; k <= 6; ++k) {
    Matrix onehot = Matrix::Zero(4, k);
    for (int i = 0; i < 4; ++i) onehot(i, i % k) = 1.0;
    CHECK(pred_loss(tape.constant(Matrix::Constant(4, k, 0.3)), tape.constant(onehot), TaskKind::ClassifyGaussians)
              .scalar() == doctest::Approx(std::log(k)));
  }
  CounterRng rng(10);
  for (int c = 0; c < 30; ++c) {
    const Matrix logits = testgen::normal_matrix(rng, 5, 3, 4.0);
    Matrix onehot = Matrix::Zero(5, 3);
    for (int i = 0; i < 5; ++i) onehot(i, testgen::uniform_int(rng, 0, 2)) = 1.0;
    CHECK(pred_loss(tape.constant(logits), tape.constant(onehot), TaskKind::ClassifyGaussians).scalar() >= 0.0);
    CHECK(pred_loss(tape.constant(logits), tape.constant(onehot.leftCols(1).replicate(1, 3)),
                    TaskKind::RegressionLowRank)
              .scalar() >= 0.0);
  }
}

TEST_CASE("gen_gap") {
  TaskSpec task;
  task.kind = TaskKind::ClassifyGaussians;
  task.n_train = 400;
  task.n_test = 400;
  const TaskData data = make_task(task);
  EncoderSpec s;
  s.output_dim = task.num_classes;
  const ParamVector theta = init_params(s, 5);
  CHECK(gen_gap(theta, data.train, data.train, s, task.kind) == 0.0);
  CHECK(std::abs(gen_gap(theta, data.train, data.test, s, task.kind)) < 0.1);
  CHECK(std::abs(pred_loss(theta, data.train, s, task.kind) - std::log(4.0)) < 0.5);
}

TEST_CASE("forward gradients match finite differences for both encoders") {
  CounterRng rng(11);
  for (auto kind : {EncoderKind::Mlp, EncoderKind::Attn1}) {
    for (auto act : {Activation::Tanh, Activation::Relu}) {
      EncoderSpec s;
      s.kind = kind;
      s.activation = act;
      s.input_dim = 4;
      s.hidden_dims = {5};
      s.rep_dim = 3;
      s.output_dim = 2;
      const Matrix x = testgen::normal_matrix(rng, 6, 4);
      const Matrix y = testgen::normal_matrix(rng, 6, 2);
      const ParamVector theta0 = init_params(s, 12);
      auto loss = [&](const Vector& th) {
        ad::Tape t;
        const auto out = forward(t.constant(th), t.constant(x), s);
        return ad::add(ad::mse(out.yhat, t.constant(y)), ad::sum_squares(out.z)).scalar();
      };
      ad::Tape tape;
      const ad::Var th = tape.variable(theta0);
      const auto out = forward(th, tape.constant(x), s);
      tape.backward(ad::add(ad::mse(out.yhat, tape.constant(y)), ad::sum_squares(out.z)));
      CAPTURE(to_string(kind));
      CAPTURE(to_string(act));
      CHECK(relative_error(th.grad(), finite_diff_grad(loss, theta0, 1e-6)) <= 1e-5);
    }
  }
}
