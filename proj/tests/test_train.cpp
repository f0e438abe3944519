#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>

#include "unbounded/harness.hpp"
#include "unbounded/train.hpp"

using namespace unbounded;

namespace {

harness::ExperimentConfig small(networks::Family family) {
  auto c = harness::ExperimentConfig::defaults(problems::DomainKind::infinite, family);
  c.hidden_layers = 2;
  c.width = 5;
  c.n_collocation = 80;
  c.n_obs = 60;
  return c;
}

loss::LossEvaluator evaluator(const harness::ExperimentConfig& c) {
  return loss::LossEvaluator(c.u_network(), c.k_network(), harness::make_batch(c), c.weights, c.problem);
}

}  // namespace

TEST_CASE("a zero-epoch schedule returns the initial parameters") {
  const auto c = small(networks::Family::pinn);
  const auto ev = evaluator(c);
  const auto theta0 = train::initial_parameters(c.u_network(), c.k_network(), 1);
  const auto r = train::train(ev, theta0, train::Schedule{0, 1e-3, 0, 0.5});
  CHECK(r.params == theta0);
  CHECK(r.history.empty());
  CHECK_FALSE(r.aborted);
}

TEST_CASE("the Adam phase lowers the loss and training is reproducible") {
  for (auto family : {networks::Family::pinn, networks::Family::pikan}) {
    const auto c = small(family);
    const auto ev = evaluator(c);
    const auto theta0 = train::initial_parameters(c.u_network(), c.k_network(), 2);
    const train::Schedule s{150, 1e-3, 10, 0.5};
    const auto a = train::train(ev, theta0, s);
    const auto b = train::train(ev, theta0, s);
    REQUIRE(a.history.size() >= 150);
    CHECK(a.history[149].loss.total < a.history[0].loss.total);
    CHECK(a.params == b.params);
    for (std::size_t i = 1; i < a.history.size(); ++i) CHECK(a.history[i].epoch == a.history[i - 1].epoch + 1);
    // L-BFGS never accepts an increase.
    for (std::size_t i = 151; i < a.history.size(); ++i) {
      CHECK(a.history[i].loss.total <= a.history[i - 1].loss.total);
    }
  }
}

TEST_CASE("a non-finite loss aborts with the last finite parameters") {
  auto c = small(networks::Family::pinn);
  c.weights.pde = 1e308;  // the weighted residual overflows
  const auto ev = evaluator(c);
  const auto theta0 = train::initial_parameters(c.u_network(), c.k_network(), 3);
  std::size_t saved = 0;
  train::TrainOptions opts;
  opts.on_checkpoint = [&](std::span<const double> p, std::size_t) {
    ++saved;
    CHECK(std::equal(p.begin(), p.end(), theta0.begin()));
  };
  const auto r = train::train(ev, theta0, train::Schedule{5, 1e-3, 0, 0.5}, opts);
  CHECK(r.aborted);
  CHECK(r.diagnostic.find("non-finite") != std::string::npos);
  CHECK(r.params == theta0);
  CHECK(saved == 1);
}

TEST_CASE("desk schedules are a third of the defaults") {
  const auto p = train::Schedule::defaults(networks::Family::pinn, true);
  CHECK(p.adam_epochs == 5000);
  CHECK(p.lbfgs_epochs == 500);
  const auto k = train::Schedule::defaults(networks::Family::pikan, true);
  CHECK(k.adam_epochs == 500);
  CHECK(k.lbfgs_epochs == 166);
  CHECK_THROWS_AS((train::Schedule{1, 0.0, 1, 0.5}).validate(), std::invalid_argument);
  const auto j = train::Schedule::pikan().to_json();
  CHECK(train::Schedule::from_json(j).to_json() == j);
}

TEST_CASE("loss history CSV has a header row and one line per epoch") {
  std::vector<train::HistoryRow> rows(3);
  for (std::size_t i = 0; i < 3; ++i) rows[i].epoch = i + 1;
  const auto path = std::filesystem::temp_directory_path() / "unbounded_history_test.csv";
  train::write_history_csv(rows, path, "note one\nnote two");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# note one");
  std::getline(in, line);
  CHECK(line == "# note two");
  std::getline(in, line);
  CHECK(line == "epoch,loss_total,loss_pde,loss_u,loss_k,loss_bnd,wall_ms");
  int n = 0;
  while (std::getline(in, line)) ++n;
  CHECK(n == 3);
  std::filesystem::remove(path);
}
