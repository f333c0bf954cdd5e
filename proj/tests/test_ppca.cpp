#include "doctest.h"

#include "netadmm/data.hpp"
#include "netadmm/metrics.hpp"
#include "netadmm/ppca.hpp"
#include "ppca_oracle.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

using namespace netadmm;
using doctest::Approx;

namespace {

using testing::randn;
using testing::random_params;
using testing::uniform;

// Dense Gaussian density evaluated through a full inverse and determinant.
double nll_oracle(const PpcaParams& p, const Eigen::MatrixXd& X) {
  const Eigen::Index D = p.W.rows();
  const Eigen::MatrixXd C = p.W * p.W.transpose() + Eigen::MatrixXd::Identity(D, D) / p.a;
  const Eigen::MatrixXd Cinv = C.inverse();
  double total = 0.0;
  for (Eigen::Index n = 0; n < X.cols(); ++n) {
    const Eigen::VectorXd d = X.col(n) - p.mu;
    total += 0.5 * (D * std::log(2 * std::numbers::pi) + std::log(C.determinant()) + d.dot(Cinv * d));
  }
  return total;
}

}  // namespace

TEST_CASE("flatten order is vec(W), mu, a") {
  PpcaParams p{Eigen::MatrixXd(2, 2), Eigen::VectorXd(2), 7.0};
  p.W << 1, 3, 2, 4;
  p.mu << 5, 6;
  const Eigen::VectorXd theta = flatten(p);
  for (int k = 0; k < 7; ++k) CHECK(theta(k) == k + 1);
  const PpcaParams back = unflatten(theta, 2, 2);
  CHECK(back.W == p.W);
  CHECK(back.mu == p.mu);
  CHECK(back.a == 7.0);
  CHECK_THROWS_AS(unflatten(theta, 3, 2), std::invalid_argument);
}

TEST_CASE("e-step matches the joint-Gaussian posterior") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const PpcaParams p = random_params(3, 2, rng);
    const Eigen::MatrixXd X = randn(3, 6, rng, 2.0);
    const LatentMoments m = e_step(p, X);

    // Condition z on x using the (M + D) joint covariance.
    const Eigen::MatrixXd Sxx = p.W * p.W.transpose() + Eigen::MatrixXd::Identity(3, 3) / p.a;
    const Eigen::MatrixXd gain = p.W.transpose() * Sxx.inverse();
    const Eigen::MatrixXd post_cov = Eigen::MatrixXd::Identity(2, 2) - gain * p.W;
    for (Eigen::Index n = 0; n < X.cols(); ++n) {
      const Eigen::VectorXd mean = gain * (X.col(n) - p.mu);
      CHECK((m.Ez.col(n) - mean).norm() < 1e-10);
      CHECK((m.ezz(n) - m.Ez.col(n) * m.Ez.col(n).transpose() - m.cov).norm() < 1e-12);
    }
    CHECK((m.cov - post_cov).norm() < 1e-10);
    CHECK((m.cov - m.cov.transpose()).norm() < 1e-14);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m.cov).eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("e-step limits") {
  PpcaParams p{Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3), 1e12};
  Eigen::MatrixXd X(3, 2);
  X << 1, -2, 0.5, 3, 4, 0;
  CHECK((e_step(p, X).Ez - X).norm() < 1e-9);

  std::mt19937_64 rng(1);
  PpcaParams q = random_params(4, 2, rng);
  CHECK(e_step(q, q.mu).Ez.norm() == 0.0);
  q.a = -1.0;
  CHECK_THROWS_AS(e_step(q, q.mu), std::invalid_argument);
}

TEST_CASE("negative log-likelihood") {
  PpcaParams p{Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1), 1.0};
  CHECK(negative_log_likelihood(p, Eigen::MatrixXd::Zero(1, 1)) == Approx(0.5 * std::log(2 * std::numbers::pi)));

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const PpcaParams q = random_params(5, 2, rng);
    const Eigen::MatrixXd X = randn(5, 9, rng);
    const double nll = negative_log_likelihood(q, X);
    CHECK(nll == Approx(nll_oracle(q, X)).epsilon(1e-10));

    // W -> W R leaves W W' unchanged.
    const Eigen::MatrixXd R = Eigen::HouseholderQR<Eigen::MatrixXd>(randn(2, 2, rng)).householderQ();
    PpcaParams rotated = q;
    rotated.W = q.W * R;
    CHECK(negative_log_likelihood(rotated, X) == Approx(nll).epsilon(1e-12));
  }
}

TEST_CASE("negative log-likelihood prefers the generating parameters") {
  SyntheticSpec spec;
  spec.num_samples = 2000;
  spec.seed = 4;
  const SyntheticData data = generate_synthetic(spec);
  const PpcaParams truth{data.W_true, Eigen::VectorXd::Zero(20), 1.0 / spec.noise_variance};
  std::mt19937_64 rng(9);
  PpcaParams perturbed = truth;
  perturbed.W += randn(20, 5, rng, 0.3);
  CHECK(negative_log_likelihood(truth, data.X) < negative_log_likelihood(perturbed, data.X));
}

TEST_CASE("centralized EM increases the log-likelihood monotonically") {
  SyntheticSpec spec;
  spec.seed = 12;
  const SyntheticData data = generate_synthetic(spec);
  std::mt19937_64 rng(3);
  const EmResult em = centralized_em(data.X, random_init(data.X, 5, rng), 100);
  for (std::size_t t = 1; t < em.log_likelihood.size(); ++t)
    CHECK(em.log_likelihood[t] >= em.log_likelihood[t - 1] - 1e-9 * std::abs(em.log_likelihood[t - 1]));
  // the ML subspace is the leading principal subspace of the sample
  const Eigen::MatrixXd centered = data.X.colwise() - data.X.rowwise().mean();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  CHECK(subspace_angle_deg(em.params.W, svd.matrixU().leftCols(5)) < 1e-6);
  CHECK(subspace_angle_deg(em.params.W, data.W_true) < 10.0);
  CHECK(1.0 / em.params.a == Approx(0.2).epsilon(0.15));
}

TEST_CASE("centralized EM recovers a noiseless subspace") {
  SyntheticSpec spec;
  spec.ambient_dim = 10;
  spec.latent_dim = 3;
  spec.num_samples = 100;
  spec.noise_variance = 0.0;
  spec.seed = 5;
  const SyntheticData data = generate_synthetic(spec);
  std::mt19937_64 rng(8);
  const EmResult em = centralized_em(data.X, random_init(data.X, 3, rng), 300);
  CHECK(subspace_angle_deg(em.params.W, data.W_true) < 1e-6);
}

TEST_CASE("centralized EM preconditions") {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd few = randn(5, 3, rng);
  CHECK_THROWS_AS(centralized_em(few, random_init(few, 3, rng), 5), std::invalid_argument);
  const Eigen::MatrixXd flat = Eigen::MatrixXd::Ones(5, 20);
  CHECK_THROWS_AS(centralized_em(flat, random_init(flat, 2, rng), 5), std::invalid_argument);
}

TEST_CASE("m-step without neighbors is the centralized mean update") {
  std::mt19937_64 rng(21);
  const PpcaParams p = random_params(4, 2, rng);
  const Eigen::MatrixXd X = randn(4, 8, rng);
  const LatentMoments m = e_step(p, X);
  const PpcaParams next = dppca_m_step(m, X, p, DppcaMultipliers::zeros(4, 2), {}, {});
  const Eigen::VectorXd expected = (X - p.W * m.Ez).rowwise().mean();
  CHECK((next.mu - expected).norm() < 1e-12);
  const PpcaParams central = centralized_em_step(p, X);
  CHECK((next.W - central.W).norm() < 1e-10);
  CHECK(next.a == Approx(central.a).epsilon(1e-12));
}

TEST_CASE("m-step mean with agreeing neighbors is a convex combination") {
  std::mt19937_64 rng(22);
  const PpcaParams p = random_params(4, 2, rng);
  const Eigen::MatrixXd X = randn(4, 8, rng);
  const LatentMoments m = e_step(p, X);
  std::vector<PpcaParams> nbrs(3, random_params(4, 2, rng));
  for (auto& n : nbrs) n.mu = p.mu;
  const std::vector<double> eta{5.0, 10.0, 20.0};
  const PpcaParams next = dppca_m_step(m, X, p, DppcaMultipliers::zeros(4, 2), nbrs, eta);
  const double w_data = 8 * p.a, w_cons = 2 * 35.0;
  const Eigen::VectorXd data_term = (X - p.W * m.Ez).rowwise().mean();
  CHECK((next.mu - (w_data * data_term + w_cons * p.mu) / (w_data + w_cons)).norm() < 1e-12);
}

TEST_CASE("m-step output is stationary for each block") {
  std::mt19937_64 rng(1234);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const testing::StationarityTrial r = testing::stationarity_trial(trial, rng);
    INFO("trial " << trial << " D=" << r.D << " M=" << r.M << " N=" << r.N << " nbrs=" << r.neighbors << " mu " << r.mu
                  << " W " << r.W << " a " << r.a);
    CHECK(r.mu < 1e-5);
    CHECK(r.W < 1e-5);
    CHECK(r.a < 1e-5);
    CHECK(r.positive_precision);
    worst = std::max(worst, r.worst());
  }
  MESSAGE("worst relative stationarity " << worst);
}

TEST_CASE("multiplier step") {
  PpcaParams own{Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Constant(1, 0.2), 1.0};
  PpcaParams nbr{Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1), 1.0};
  const std::vector<PpcaParams> nbrs{nbr};
  const std::vector<double> eta{10.0};
  const auto zero = DppcaMultipliers::zeros(1, 1);
  const auto next = dppca_multiplier_step(own, nbrs, eta, zero);
  CHECK(next.gamma(0) == Approx(1.0));
  CHECK(next.lambda(0, 0) == 0.0);
  CHECK(next.beta == 0.0);

  const std::vector<PpcaParams> same{own};
  const auto unchanged = dppca_multiplier_step(own, same, eta, next);
  CHECK(unchanged.gamma == next.gamma);

  std::mt19937_64 rng(3);
  const PpcaParams a = random_params(3, 2, rng), b = random_params(3, 2, rng);
  const std::vector<PpcaParams> one{b};
  const std::vector<double> e1{4.0}, e2{8.0};
  const auto d1 = dppca_multiplier_step(a, one, e1, DppcaMultipliers::zeros(3, 2));
  const auto d2 = dppca_multiplier_step(a, one, e2, DppcaMultipliers::zeros(3, 2));
  CHECK((d2.lambda - 2 * d1.lambda).norm() < 1e-14);
  CHECK((d2.gamma - 2 * d1.gamma).norm() < 1e-14);
  CHECK(d2.beta == Approx(2 * d1.beta));
}

TEST_CASE("node model round trip") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd X = randn(4, 10, rng);
  const PpcaParams init = random_init(X, 2, rng);
  DppcaNodeModel model(X, init);
  CHECK(model.parameters() == flatten(init));
  CHECK(model.local_objective(model.parameters()) == Approx(negative_log_likelihood(init, X)));
  CHECK(init.mu.isApprox(X.rowwise().mean()));
  CHECK(init.a == 1.0);
  model.local_step({});
  CHECK(model.params().W.isApprox(centralized_em_step(init, X).W, 1e-10));
  CHECK_THROWS_AS(DppcaNodeModel(randn(3, 10, rng), init), std::invalid_argument);
}

