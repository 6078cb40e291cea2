#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cvxnn/adversarial.hpp"
#include "cvxnn/attacks.hpp"
#include "cvxnn/dataset.hpp"
#include "cvxnn/json_io.hpp"
#include "cvxnn/scp.hpp"

using namespace cvxnn;
using nlohmann::json;

namespace {

Scalar parse_p(const std::string& p) {
  if (p == "inf" || p == "Inf") return std::numeric_limits<Scalar>::infinity();
  return std::stod(p);
}

// Expands `--config file` (key=value lines, # comments) into --key value
// tokens inserted after the subcommand, so explicit flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  for (size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] != "--config") continue;
    const std::string path = args[i + 1];
    args.erase(args.begin() + i, args.begin() + i + 2);
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path);
    std::vector<std::string> extra;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw UsageError("config line is not key=value: " + line);
      extra.push_back("--" + line.substr(0, eq));
      extra.push_back(line.substr(eq + 1));
    }
    // Insert right after the subcommand name (first non-flag token).
    size_t at = 0;
    while (at < args.size() && args[at].rfind("--", 0) == 0) ++at;
    if (at < args.size()) ++at;
    args.insert(args.begin() + at, extra.begin(), extra.end());
    break;
  }
  return args;
}

std::vector<Vector> model_aggregate_blocks(const NetworkWeights& w) {
  std::vector<Vector> blocks;
  for (Index j = 0; j < w.width(); ++j)
    blocks.push_back(w.hidden.col(j) * w.output(j));
  return blocks;
}

// Exact worst-case perturbation of one sample under frozen activations.
Vector exact_attack_row(const NetworkWeights& w, const Vector& x, Scalar y,
                        LossKind loss, Scalar eps, Index frozen_from) {
  Vector q = Vector::Zero(x.size());
  for (Index j = 0; j < w.width(); ++j)
    if (w.hidden.col(j).dot(x) >= 0) q += w.hidden.col(j) * w.output(j);
  Vector x_adv = x;
  const Index lim = frozen_from >= 0 ? frozen_from : x.size();
  for (Index j = 0; j < lim; ++j) {
    Scalar dir = 0;
    switch (loss) {
      case LossKind::Hinge: dir = -sgn(y * q(j)); break;
      case LossKind::Bce: dir = -sgn((2.0 * y - 1.0) * q(j)); break;
      case LossKind::Squared: {
        const Scalar r = x.dot(q) - y;
        dir = (r >= 0 ? 1.0 : -1.0) * sgn(q(j));
        break;
      }
    }
    x_adv(j) += eps * dir;
  }
  return x_adv;
}

struct TrainArgs {
  std::string data_path, method = "admm", loss = "squared";
  std::string out_path = "report.json", model_path;
  int label_col = -1;
  bool bias = false, timings = false;
  Scalar beta = 1e-3, rho = 0.1, gamma_a = -1, epsilon = 0;
  std::string p = "inf";
  Index patterns = 8, iters = 200, width = 100, epochs = 200, n0 = 50;
  Index Pa = 0, S = 8;
  Scalar psi = 0.5, xi = 0.5;
  std::uint64_t seed = 0;
};

json train_config_json(const TrainArgs& a) {
  return json{{"data", a.data_path}, {"method", a.method}, {"loss", a.loss},
              {"label_col", a.label_col}, {"bias", a.bias}, {"beta", a.beta},
              {"rho", a.rho}, {"gamma_a", a.gamma_a < 0 ? a.rho : a.gamma_a},
              {"epsilon", a.epsilon}, {"p", a.p}, {"patterns", a.patterns},
              {"iters", a.iters}, {"width", a.width}, {"epochs", a.epochs},
              {"n0", a.n0}, {"psi", a.psi}, {"xi", a.xi}, {"seed", a.seed}};
}

int run_train(const TrainArgs& a) {
  const Dataset data = load_csv(a.data_path, a.label_col, a.bias);
  const LossKind loss = loss_from_name(a.loss);
  check_labels(loss, data.y);
  const json config = train_config_json(a);
  json report;
  NetworkWeights weights;

  if (a.method == "admm" || a.method == "admm-rbcd") {
    if (a.epsilon > 0) {
      PerturbationSpec spec{a.epsilon, parse_p(a.p)};
      const Index Pa = a.Pa > 0 ? a.Pa : 4 * a.patterns;
      PatternSet ps = sample_adversarial_patterns(data, spec, Pa, a.S,
                                                  a.patterns, a.seed, true);
      RobustProgram prog =
          build_robust_program(data, std::move(ps), loss, a.beta, spec);
      RobustSolveConfig cfg;
      RobustSolveReport solved = solve_robust(prog, cfg, a.seed);
      weights = solved.weights;
      report = robust_report_to_json(solved, spec, config, a.timings);
    } else {
      PatternSet ps = sample_patterns(data, a.patterns, a.seed, -1, true);
      ConvexProgram prog = build_program(data, std::move(ps), loss, a.beta);
      AdmmConfig cfg;
      cfg.rho = a.rho;
      cfg.gamma_a = a.gamma_a < 0 ? a.rho : a.gamma_a;
      cfg.max_iter = a.iters;
      cfg.use_rbcd = a.method == "admm-rbcd" || loss != LossKind::Squared;
      SolveReport solved = admm_solve(prog, cfg, a.seed);
      weights = solved.weights;
      report = solve_report_to_json(solved, config, a.timings);
    }
  } else if (a.method == "scp") {
    if (loss == LossKind::Hinge)
      throw UsageError("scp training requires a smooth loss (squared or bce)");
    ScpModel model;
    model.U = sample_unit_sphere(a.width, data.d(), a.seed);
    model.H = relu_features(data.X, model.U);
    IstaResult fit = ista_solve(model.H, data.y, loss, a.beta);
    model.alpha = fit.alpha;
    weights = model.as_network();
    report = json{{"version", kLibraryVersion}, {"config", config},
                  {"objective_trace", fit.objective_trace},
                  {"objective", fit.objective_trace.back()},
                  {"converged", fit.converged},
                  {"weights", weights_to_json(weights)}};
  } else if (a.method == "scp-iterative") {
    if (loss == LossKind::Hinge)
      throw UsageError(
          "iterative sampling does not support hinge (dual recovery needs a "
          "smooth loss)");
    IterativeScpResult result = iterative_sampling_train(
        data, loss, a.beta, a.n0, a.psi, a.xi, a.seed);
    weights = result.model.as_network();
    report = json{{"version", kLibraryVersion}, {"config", config},
                  {"objective_per_round", result.objective_per_round},
                  {"rounds", result.rounds},
                  {"certified", result.certificate.certified},
                  {"z_bar", result.certificate.z_bar},
                  {"theta_bound", result.certificate.theta_bound},
                  {"weights", weights_to_json(weights)}};
  } else if (a.method == "sgd") {
    SgdConfig cfg;
    cfg.epochs = a.epochs;
    weights = sgd_baseline_train(data, loss, a.width, a.beta, cfg, a.seed);
    report = json{{"version", kLibraryVersion}, {"config", config},
                  {"objective", nonconvex_objective(weights, data, loss, a.beta)},
                  {"weights", weights_to_json(weights)}};
  } else {
    throw UsageError("unknown training method: " + a.method);
  }

  write_json(report, a.out_path);
  if (!a.model_path.empty()) write_json(weights_to_json(weights), a.model_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    CLI::App app{"Convex training toolkit for one-hidden-layer ReLU networks"};
    app.require_subcommand(1);
    // Config-file values are injected as leading tokens; explicit flags win.
    app.option_defaults()->take_last();
    int threads = 0;
    if (const char* env = std::getenv("CVXNN_THREADS")) threads = std::atoi(env);
    app.add_option("--threads", threads, "Eigen thread count (results identical)");

    // gen2d
    auto* gen = app.add_subcommand("gen2d", "generate a 2D two-cluster dataset");
    Index gen_n = 40;
    std::uint64_t gen_seed = 0;
    std::string gen_out = "data.csv";
    gen->add_option("--n", gen_n, "sample count");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output CSV path");

    // sample-patterns
    auto* sp = app.add_subcommand("sample-patterns", "sample activation masks");
    std::string sp_data, sp_out = "patterns.json", sp_p = "inf";
    int sp_label = -1;
    bool sp_bias = false, sp_adv = false;
    Index sp_count = 8, sp_pa = 0, sp_S = 8;
    Scalar sp_eps = 0;
    std::uint64_t sp_seed = 0;
    sp->add_option("--data", sp_data, "input CSV path")->required();
    sp->add_option("--label-col", sp_label, "label column index (-1 = last)");
    sp->add_flag("--bias", sp_bias, "append a constant bias column");
    sp->add_option("--count", sp_count, "number of distinct masks P_s");
    sp->add_option("--seed", sp_seed, "sampling seed");
    sp->add_option("--out", sp_out, "output JSON path");
    sp->add_flag("--adversarial", sp_adv, "also probe eps-perturbed copies of X");
    sp->add_option("--epsilon", sp_eps, "perturbation radius");
    sp->add_option("--p", sp_p, "perturbation norm: 1, 2 or inf");
    sp->add_option("--pa", sp_pa, "direction budget P_a (adversarial)");
    sp->add_option("--S", sp_S, "perturbed copies per direction (adversarial)");

    // train
    auto* tr = app.add_subcommand("train", "train a network");
    TrainArgs ta;
    tr->add_option("--data", ta.data_path, "training CSV path")->required();
    tr->add_option("--method", ta.method, "admm | admm-rbcd | scp | scp-iterative | sgd");
    tr->add_option("--loss", ta.loss, "squared | hinge | bce");
    tr->add_option("--label-col", ta.label_col, "label column index (-1 = last)");
    tr->add_flag("--bias", ta.bias, "append a constant bias column");
    tr->add_flag("--timings", ta.timings, "include wall-clock fields in the report");
    tr->add_option("--beta", ta.beta, "group-lasso weight");
    tr->add_option("--rho", ta.rho, "ADMM penalty");
    tr->add_option("--gamma-a", ta.gamma_a, "ADMM dual step (default: rho)");
    tr->add_option("--epsilon", ta.epsilon, "robust training radius (0 = standard)");
    tr->add_option("--p", ta.p, "perturbation norm: 1, 2 or inf");
    tr->add_option("--patterns", ta.patterns, "activation pattern count P_s");
    tr->add_option("--iters", ta.iters, "solver iteration cap");
    tr->add_option("--width", ta.width, "hidden width (sgd)");
    tr->add_option("--epochs", ta.epochs, "epochs (sgd)");
    tr->add_option("--n0", ta.n0, "initial sampled weights (scp-iterative)");
    tr->add_option("--pa", ta.Pa, "direction budget P_a (robust sampling)");
    tr->add_option("--S", ta.S, "perturbed copies per direction (robust sampling)");
    tr->add_option("--psi", ta.psi, "violation target (scp-iterative)");
    tr->add_option("--xi", ta.xi, "certificate confidence (scp-iterative)");
    tr->add_option("--seed", ta.seed, "RNG seed");
    tr->add_option("--out", ta.out_path, "training report JSON path");
    tr->add_option("--model", ta.model_path, "model JSON path");

    // attack
    auto* at = app.add_subcommand("attack", "attack a trained model");
    std::string at_model, at_data, at_kind = "pgd", at_loss = "hinge",
                at_out = "attacked.json";
    int at_label = -1;
    bool at_bias = false;
    Scalar at_eps = 0.1;
    Index at_steps = 40;
    at->add_option("--model", at_model, "model JSON path")->required();
    at->add_option("--data", at_data, "CSV of points to attack")->required();
    at->add_option("--kind", at_kind, "fgsm | pgd | exact");
    at->add_option("--loss", at_loss, "squared | hinge | bce");
    at->add_option("--label-col", at_label, "label column index (-1 = last)");
    at->add_flag("--bias", at_bias, "append a constant bias column");
    at->add_option("--epsilon", at_eps, "attack radius");
    at->add_option("--steps", at_steps, "PGD step count");
    at->add_option("--out", at_out, "output JSON path");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate clean and attacked metrics");
    std::string ev_model, ev_data, ev_loss = "hinge", ev_out = "metrics.json",
                ev_attacks = "fgsm,pgd", ev_method = "model";
    int ev_label = -1;
    bool ev_bias = false;
    Scalar ev_eps = 0.1;
    Index ev_steps = 40;
    ev->add_option("--model", ev_model, "model JSON path")->required();
    ev->add_option("--data", ev_data, "evaluation CSV path")->required();
    ev->add_option("--loss", ev_loss, "squared | hinge | bce");
    ev->add_option("--label-col", ev_label, "label column index (-1 = last)");
    ev->add_flag("--bias", ev_bias, "append a constant bias column");
    ev->add_option("--epsilon", ev_eps, "attack radius");
    ev->add_option("--steps", ev_steps, "PGD step count");
    ev->add_option("--attacks", ev_attacks, "comma list of attacks (fgsm,pgd)");
    ev->add_option("--method", ev_method, "method tag copied into the report");
    ev->add_option("--out", ev_out, "metrics JSON path");

    // report
    auto* rp = app.add_subcommand("report", "merge metrics files into a CSV");
    std::vector<std::string> rp_inputs;
    std::string rp_out = "table.csv";
    rp->add_option("inputs", rp_inputs, "metrics JSON files")->required();
    rp->add_option("--out", rp_out, "output CSV path");

    try {
      const auto args = expand_config(argc, argv);
      std::vector<const char*> cargs{argv[0]};
      for (const auto& s : args) cargs.push_back(s.c_str());
      app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
      return app.exit(e) == 0 ? 0 : 1;
    }
    if (threads > 0) Eigen::setNbThreads(threads);

    if (*gen) {
      save_csv(gen_2d_dataset(gen_n, gen_seed), gen_out);
      std::cout << "wrote " << gen_out << " (" << gen_n << " points)\n";
    } else if (*sp) {
      const Dataset data = load_csv(sp_data, sp_label, sp_bias);
      PatternSet ps;
      if (sp_adv) {
        PerturbationSpec spec{sp_eps, parse_p(sp_p)};
        const Index pa = sp_pa > 0 ? sp_pa : 4 * sp_count;
        ps = sample_adversarial_patterns(data, spec, pa, sp_S, sp_count,
                                         sp_seed, true);
      } else {
        ps = sample_patterns(data, sp_count, sp_seed, -1, true);
      }
      write_json(pattern_set_to_json(ps), sp_out);
      std::cout << "wrote " << sp_out << " (" << ps.size() << " patterns)\n";
    } else if (*tr) {
      run_train(ta);
      std::cout << "wrote " << ta.out_path << '\n';
    } else if (*at) {
      const Dataset data = load_csv(at_data, at_label, at_bias);
      const NetworkWeights w = weights_from_json(read_json(at_model));
      const LossKind loss = loss_from_name(at_loss);
      const AttackKind kind = attack_from_name(at_kind);
      const Index frozen = data.has_bias ? data.d() - 1 : -1;
      Matrix X_adv(data.n(), data.d());
      Scalar mean_loss = 0;
      for (Index k = 0; k < data.n(); ++k) {
        const Vector xk = data.X.row(k).transpose();
        Vector x_adv;
        if (kind == AttackKind::Fgsm) {
          x_adv = fgsm(w, xk, data.y(k), loss, at_eps, frozen);
        } else if (kind == AttackKind::Pgd) {
          AttackConfig cfg;
          cfg.kind = AttackKind::Pgd;
          cfg.epsilon = at_eps;
          cfg.steps = at_steps;
          cfg.frozen_from = frozen;
          x_adv = pgd(w, xk, data.y(k), loss, cfg);
        } else {
          x_adv = exact_attack_row(w, xk, data.y(k), loss, at_eps, frozen);
        }
        X_adv.row(k) = x_adv.transpose();
        mean_loss += pointwise_loss(w, x_adv, data.y(k), loss) / data.n();
      }
      Dataset attacked = data;
      attacked.X = X_adv;
      attacked.has_bias = false;  // perturbing real features only, but keep cols
      json out{{"version", kLibraryVersion}, {"kind", at_kind},
               {"epsilon", at_eps}, {"mean_loss", mean_loss},
               {"data", dataset_to_json(attacked)}};
      write_json(out, at_out);
      std::cout << "wrote " << at_out << " (mean loss " << mean_loss << ")\n";
    } else if (*ev) {
      const Dataset data = load_csv(ev_data, ev_label, ev_bias);
      const NetworkWeights w = weights_from_json(read_json(ev_model));
      const LossKind loss = loss_from_name(ev_loss);
      std::vector<AttackConfig> cfgs;
      std::stringstream ss(ev_attacks);
      std::string name;
      while (std::getline(ss, name, ',')) {
        if (name.empty()) continue;
        AttackConfig cfg;
        cfg.kind = attack_from_name(name);
        cfg.epsilon = ev_eps;
        cfg.steps = ev_steps;
        cfgs.push_back(cfg);
      }
      const Metrics m = evaluate(w, data, loss, cfgs);
      json config{{"data", ev_data}, {"loss", ev_loss}, {"epsilon", ev_eps},
                  {"steps", ev_steps}, {"attacks", ev_attacks}};
      write_json(metrics_to_json(m, ev_method, config), ev_out);
      std::cout << "wrote " << ev_out << '\n';
    } else if (*rp) {
      std::ofstream out(rp_out);
      if (!out) throw UsageError("cannot write file: " + rp_out);
      out << "method,clean,fgsm,pgd,objective\n";
      for (const auto& path : rp_inputs) {
        const json j = read_json(path);
        auto col = [&](const char* key) {
          return j.contains(key) ? std::to_string(j[key].get<Scalar>()) : "";
        };
        out << j.value("method", "?") << ',' << col("clean") << ','
            << col("fgsm") << ',' << col("pgd") << ',' << col("objective")
            << '\n';
      }
      std::cout << "wrote " << rp_out << '\n';
    }
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
