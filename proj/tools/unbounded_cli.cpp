// Command-line front end: sample, train, evaluate, sweeps and
// generalisation maps. Exit codes: 0 success, 1 configuration error,
// 2 training aborted on a non-finite loss.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "unbounded/harness.hpp"

using namespace unbounded;
using harness::ExperimentConfig;
using nlohmann::json;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flag overrides shared by every subcommand that builds a config.
struct Overrides {
  std::string config_path;
  std::optional<std::string> problem, family, arch;
  std::optional<double> alpha, beta, epsilon, shift;
  std::optional<double> lambda_pde, lambda_u, lambda_k, lambda_bnd;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_colloc, n_obs, n_bnd, resolution;
  std::optional<double> noise;
  std::optional<std::size_t> adam_epochs, lbfgs_epochs;
  std::optional<double> adam_lr, lbfgs_lr;
  bool desk = false;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    app.add_option("--problem", problem, "infinite | semi-infinite");
    app.add_option("--family", family, "pinn | pikan");
    app.add_option("--arch", arch, "hidden layers and width, e.g. 16x32");
    app.add_option("--alpha", alpha);
    app.add_option("--beta", beta);
    app.add_option("--epsilon", epsilon);
    app.add_option("--shift", shift);
    app.add_option("--lambda-pde", lambda_pde);
    app.add_option("--lambda-u", lambda_u);
    app.add_option("--lambda-k", lambda_k);
    app.add_option("--lambda-bnd", lambda_bnd);
    app.add_option("--seed", seed, "run seed (falls back to UNBOUNDED_SEED)");
    app.add_option("--n-colloc", n_colloc);
    app.add_option("--n-obs", n_obs);
    app.add_option("--n-bnd", n_bnd);
    app.add_option("--noise", noise, "observation noise in percent of RMS");
    app.add_option("--adam-epochs", adam_epochs);
    app.add_option("--adam-lr", adam_lr);
    app.add_option("--lbfgs-epochs", lbfgs_epochs);
    app.add_option("--lbfgs-lr", lbfgs_lr);
    app.add_option("--resolution", resolution, "evaluation grid nodes per axis");
    app.add_flag("--desk", desk, "desk-scale schedule: a third of the default epochs");
  }
};

std::pair<int, int> parse_arch(const std::string& s) {
  const auto x = s.find_first_of("x,");
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw ConfigError("bad architecture '" + s + "', expected LxW");
  }
}

template <class T>
std::vector<T> parse_list(const std::string& s) {
  std::vector<T> out;
  std::istringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    std::istringstream one(item);
    T v{};
    if (!(one >> v)) throw ConfigError("bad list entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// File (or `fallback` without --config) < flags; the seed falls back to
// UNBOUNDED_SEED when neither sets it. `force_family` rebuilds the config
// for another family, dropping --arch.
ExperimentConfig build_config(const Overrides& o, std::optional<networks::Family> force_family = {},
                              const json& fallback = json::object()) {
  json j = o.config_path.empty() ? fallback : read_json(o.config_path);
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  auto& prob = j["problem"];
  if (prob.is_null()) prob = json::object();
  if (o.problem) prob["kind"] = *o.problem;
  if (o.alpha) prob["alpha"] = *o.alpha;
  if (o.beta) prob["beta"] = *o.beta;
  if (o.epsilon) prob["epsilon"] = *o.epsilon;
  if (o.shift) prob["shift"] = *o.shift;
  auto& net = j["network"];
  if (net.is_null()) net = json::object();
  if (o.family) net["family"] = *o.family;
  const bool family_changed =
      force_family && networks::parse_family(net.value("family", std::string("pinn"))) != *force_family;
  if (force_family) net["family"] = std::string(networks::family_name(*force_family));
  if (family_changed) {
    for (const char* k : {"hidden_layers", "width", "grid_size", "degree", "grid_range"}) net.erase(k);
  } else if (o.arch) {
    const auto [l, w] = parse_arch(*o.arch);
    net["hidden_layers"] = l;
    net["width"] = w;
  }
  auto& w = j["weights"];
  if (w.is_null()) w = json::object();
  if (o.lambda_pde) w["pde"] = *o.lambda_pde;
  if (o.lambda_u) w["u"] = *o.lambda_u;
  if (o.lambda_k) w["k"] = *o.lambda_k;
  if (o.lambda_bnd) w["bnd"] = *o.lambda_bnd;
  if (o.n_colloc) j["n_collocation"] = *o.n_colloc;
  if (o.n_obs) j["n_obs"] = *o.n_obs;
  if (o.n_bnd) j["n_bnd"] = *o.n_bnd;
  if (o.noise) j["noise_percent"] = *o.noise;
  if (o.resolution) j["eval_resolution"] = *o.resolution;
  if (o.seed) {
    j["seed"] = *o.seed;
  } else if (!j.contains("seed")) {
    if (const char* env = std::getenv("UNBOUNDED_SEED")) {
      try {
        j["seed"] = std::stoull(env);
      } catch (const std::exception&) {
        throw ConfigError(std::string("UNBOUNDED_SEED is not an integer: ") + env);
      }
    }
  }
  if (family_changed || o.desk) j.erase("schedule");

  ExperimentConfig c;
  try {
    c = ExperimentConfig::from_json(j);
    if (o.desk) c.schedule = train::Schedule::defaults(c.family, true);
    if (o.adam_epochs) c.schedule.adam_epochs = *o.adam_epochs;
    if (o.adam_lr) c.schedule.adam_lr = *o.adam_lr;
    if (o.lbfgs_epochs) c.schedule.lbfgs_epochs = *o.lbfgs_epochs;
    if (o.lbfgs_lr) c.schedule.lbfgs_lr = *o.lbfgs_lr;
    c.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void print_report(const harness::ExperimentReport& r) {
  std::cout << std::setprecision(6) << networks::family_name(r.config.family) << " ("
            << r.config.hidden_layers << "," << r.config.width << ") "
            << problems::domain_name(r.config.problem.kind) << ": err_k_rel " << r.err_k_rel
            << "  err_u_rel " << r.err_u_rel << "  loss " << r.final_loss.total << "  train "
            << r.wall_time_s << " s" << (r.aborted ? "  ABORTED: " + r.diagnostic : "") << '\n';
}

harness::SweepOptions sweep_options(const std::string& out, unsigned jobs) {
  harness::SweepOptions so;
  so.out_dir = out;
  so.jobs = jobs;
  so.on_done = [](std::size_t i, const harness::SweepRow& row) {
    std::cerr << "[run " << i << "] " << row.status << '\n';
    if (row.report) print_report(*row.report);
  };
  return so;
}

harness::TrainedPair load_pair(const std::string& path, json* config_out) {
  const json j = read_json(path);
  if (config_out && j.contains("config")) *config_out = j["config"];
  try {
    return harness::TrainedPair::from_json(j);
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

sampling::Box parse_box(const std::string& s) {
  const auto v = parse_list<double>(s);
  if (v.size() != 4 || !(v[0] < v[1]) || !(v[2] < v[3])) {
    throw ConfigError("bad box '" + s + "', expected x_lo,x_hi,y_lo,y_hi");
  }
  return {v[0], v[1], v[2], v[3]};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inverse Poisson problems on unbounded domains with PINNs and PIKANs"};
  app.require_subcommand(1);

  Overrides o;
  std::string out = "out";
  unsigned jobs = 1;
  std::size_t checkpoint_every = 0;
  std::size_t progress = 500;
  std::string checkpoint;
  std::string archs, obs_list = "100,500,1000,5000", percents = "0,5,10,15", families = "pinn,pikan";
  std::string inner, outer;

  auto* sample = app.add_subcommand("sample", "write the sampled point sets as CSV");
  auto* trn = app.add_subcommand("train", "train one u/k network pair and evaluate it");
  auto* eval = app.add_subcommand("evaluate", "re-score a checkpoint on the evaluation grid");
  auto* sarch = app.add_subcommand("sweep-arch", "one run per architecture");
  auto* sobs = app.add_subcommand("sweep-obs", "one run per observation count");
  auto* snoise = app.add_subcommand("sweep-noise", "one run per noise level and family");
  auto* gen = app.add_subcommand("generalize", "error maps beyond the training box");

  for (auto* sub : {sample, trn, eval, sarch, sobs, snoise, gen}) {
    o.attach(*sub);
    sub->add_option("--out", out, "output directory");
  }
  trn->add_option("--checkpoint-every", checkpoint_every, "epochs between checkpoints (0: off)");
  trn->add_option("--progress", progress, "print the loss every N epochs (0: quiet)");
  for (auto* sub : {eval, gen}) sub->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  for (auto* sub : {sarch, sobs, snoise}) sub->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);
  sarch->add_option("--archs", archs, "comma list of LxW (default: the family's five)");
  sobs->add_option("--n-obs-list", obs_list, "comma list of observation counts");
  snoise->add_option("--percents", percents, "comma list of noise levels");
  snoise->add_option("--families", families, "comma list of families");
  gen->add_option("--inner", inner, "training box x_lo,x_hi,y_lo,y_hi (default: evaluation box)");
  gen->add_option("--outer", outer, "outer box (default: config generalization_box)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const std::filesystem::path out_dir = out;
    if (*sample) {
      const ExperimentConfig c = build_config(o);
      const loss::Batch b = harness::make_batch(c);
      std::filesystem::create_directories(out_dir);
      sampling::write_csv(b.collocation, out_dir / "collocation.csv");
      sampling::write_csv(b.obs_points, out_dir / "observations.csv");
      std::ostringstream obs;
      obs << "# config: " << c.to_json().dump() << "\nx,y,u,k\n" << std::setprecision(17);
      for (std::size_t i = 0; i < b.obs_points.size(); ++i) {
        obs << b.obs_points.xs[i] << ',' << b.obs_points.ys[i] << ',' << b.obs_u[i] << ',' << b.obs_k[i] << '\n';
      }
      write_text(out_dir / "observation_values.csv", obs.str());
      if (!b.bnd_points.empty()) sampling::write_csv(b.bnd_points, out_dir / "boundary.csv");
      write_text(out_dir / "config.json", c.to_json().dump(2) + "\n");
      std::cout << "wrote point sets to " << out_dir << '\n';
      return 0;
    }
    if (*trn) {
      const ExperimentConfig c = build_config(o);
      harness::RunOptions ro;
      ro.out_dir = out_dir;
      ro.checkpoint_every = checkpoint_every;
      if (progress > 0) {
        ro.on_epoch = [&](const train::HistoryRow& row) {
          if (row.epoch % progress == 0) {
            std::cerr << "epoch " << row.epoch << "  loss " << std::setprecision(6) << row.loss.total
                      << "  (pde " << row.loss.pde << ", u " << row.loss.u << ", k " << row.loss.k
                      << ", bnd " << row.loss.bnd << ")  " << row.wall_ms / 1000.0 << " s\n";
          }
        };
      }
      ro.on_warning = [](const std::string& w) { std::cerr << "warning: " << w << '\n'; };
      const auto report = harness::run(c, ro);
      print_report(report);
      return report.aborted ? 2 : 0;
    }
    if (*eval) {
      json embedded;
      const harness::TrainedPair pair = load_pair(checkpoint, &embedded);
      const ExperimentConfig c = build_config(o, {}, embedded.is_null() ? json::object() : embedded);
      const harness::Grid grid{c.problem.eval_box, c.eval_resolution, c.eval_resolution};
      const harness::Evaluation e = harness::evaluate(pair, c.problem, grid);
      std::filesystem::create_directories(out_dir);
      const std::string head = "config: " + c.to_json().dump() + "\ncheckpoint: " + checkpoint;
      harness::write_grid_csv(out_dir / "grid_u.csv", grid, e.u_exact, e.u_pred, e.u_signed, head + "\nfield: u");
      harness::write_grid_csv(out_dir / "grid_k.csv", grid, e.k_exact, e.k_pred, e.k_signed, head + "\nfield: k");
      const json r = {{"config", c.to_json()},
                      {"checkpoint", checkpoint},
                      {"err_u_rel", e.err_u_rel},
                      {"err_k_rel", e.err_k_rel},
                      {"u_scale", e.u_scale},
                      {"k_scale", e.k_scale}};
      write_text(out_dir / "evaluation.json", r.dump(2) + "\n");
      std::cout << std::setprecision(6) << "err_k_rel " << e.err_k_rel << "  err_u_rel " << e.err_u_rel << '\n';
      return 0;
    }
    if (*sarch) {
      const ExperimentConfig c = build_config(o);
      std::vector<std::pair<int, int>> list;
      if (archs.empty()) {
        list = harness::default_architectures(c.family);
      } else {
        std::istringstream in(archs);
        for (std::string a; std::getline(in, a, ',');) list.push_back(parse_arch(a));
      }
      harness::sweep_architectures(c, list, sweep_options(out, jobs));
      return 0;
    }
    if (*sobs) {
      const ExperimentConfig c = build_config(o);
      harness::sweep_observations(c, parse_list<std::size_t>(obs_list), sweep_options(out, jobs));
      return 0;
    }
    if (*snoise) {
      std::vector<ExperimentConfig> bases;
      std::istringstream in(families);
      for (std::string f; std::getline(in, f, ',');) {
        networks::Family fam;
        try {
          fam = networks::parse_family(f);
        } catch (const std::exception& e) {
          throw ConfigError(e.what());
        }
        bases.push_back(build_config(o, fam));
      }
      harness::sweep_noise(bases, parse_list<double>(percents), sweep_options(out, jobs));
      return 0;
    }
    if (*gen) {
      json embedded;
      const harness::TrainedPair pair = load_pair(checkpoint, &embedded);
      const ExperimentConfig c = build_config(o, {}, embedded.is_null() ? json::object() : embedded);
      const sampling::Box in_box = inner.empty() ? c.problem.eval_box : parse_box(inner);
      const sampling::Box out_box = outer.empty() ? c.generalization_box : parse_box(outer);
      if (!harness::contains(out_box, in_box)) throw ConfigError("inner box is not inside the outer box");
      const auto g = harness::generalization_map(pair, c.problem, in_box, out_box, c.eval_resolution);
      std::filesystem::create_directories(out_dir);
      const std::string head = "config: " + c.to_json().dump() + "\ncheckpoint: " + checkpoint +
                               "\ninner box: " + harness::box_to_json(in_box).dump();
      const auto& e = g.outer;
      harness::write_grid_csv(out_dir / "grid_u.csv", e.grid, e.u_exact, e.u_pred, e.u_signed, head + "\nfield: u");
      harness::write_grid_csv(out_dir / "grid_k.csv", e.grid, e.k_exact, e.k_pred, e.k_signed, head + "\nfield: k");
      json r = g.to_json();
      r["config"] = c.to_json();
      write_text(out_dir / "generalization.json", r.dump(2) + "\n");
      write_text(out_dir / "plot.gp",
                 "# gnuplot script; run from this directory: gnuplot plot.gp\n"
                 "set datafile separator ','\nset terminal pngcairo size 900,800\n"
                 "set output 'generalization_k.png'\nset view map\nset size ratio -1\n"
                 "set title 'signed error of k'\n"
                 "splot 'grid_k.csv' every ::1 using 1:2:5 with points pointtype 5 pointsize 0.3 palette notitle\n");
      std::cout << r.dump(2) << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
