// hjgeo command-line driver: validate / solve / verify / geodesic / demo.
//
// Results go to stdout, diagnostics to stderr.  Exit codes: 0 success,
// 1 validation/check failure, 2 usage error.  All sampling is seeded
// (default 0) so identical invocations produce identical output bytes.
// HJGEO_THREADS caps the verify sweep's worker threads (0 = serial,
// default); the reduction order is fixed by sample index either way.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"

#include "hjgeo/complete_integral.hpp"
#include "hjgeo/elliptic.hpp"
#include "hjgeo/geodesic.hpp"
#include "hjgeo/lie_algebra.hpp"
#include "hjgeo/model.hpp"
#include "hjgeo/reduced_hj.hpp"
#include "hjgeo/report.hpp"

namespace {

using hjgeo::AdmissiblePoint;
using hjgeo::AdmissibleSampler;
using hjgeo::CompleteIntegral;
using hjgeo::GeodesicState;
using hjgeo::ModelError;
using hjgeo::ModelSpec;
using hjgeo::Report;

std::string format_double(double value, bool csv) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), csv ? "%.17g" : "% .10e", value);
  return buffer;
}

std::string format_vector(const Eigen::VectorXd& v) {
  std::string out = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%g", v[i]);
    if (i > 0) out += ", ";
    out += buffer;
  }
  return out + ")";
}

int worker_threads() {
  const char* env = std::getenv("HJGEO_THREADS");
  if (env == nullptr) return 0;
  const int value = std::atoi(env);
  return value > 0 ? value : 0;
}

/// Resolves a builtin name or a .model path, with optional constant
/// overrides (`--set key=value`).
ModelSpec resolve_model(const std::string& name_or_path,
                        const std::vector<std::string>& overrides) {
  std::map<std::string, double> values;
  for (const std::string& entry : overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw CLI::ValidationError("--set expects key=value, got \"" + entry +
                                 "\"");
    }
    std::size_t used = 0;
    const double value = std::stod(entry.substr(eq + 1), &used);
    if (used != entry.size() - eq - 1) {
      throw CLI::ValidationError("--set value in \"" + entry +
                                 "\" is not a number");
    }
    values[entry.substr(0, eq)] = value;
  }

  if (name_or_path == "mtt" || name_or_path == "flat4") {
    return ModelSpec::builtin(name_or_path, values);
  }
  ModelSpec spec = ModelSpec::load(name_or_path);
  if (values.empty()) return spec;
  nlohmann::json doc = spec.to_json();
  for (const auto& [key, value] : values) {
    if (!doc.at("constants").contains(key)) {
      throw ModelError("model \"" + spec.name() + "\" has no constant named \"" +
                       key + "\"");
    }
    doc["constants"][key] = value;
  }
  return ModelSpec(doc);
}

Eigen::VectorXd to_vector(const std::vector<double>& values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = values[i];
  }
  return v;
}

// ---------------------------------------------------------------- validate

int run_validate(const ModelSpec& model, int samples, std::uint64_t seed) {
  const Report report = hjgeo::validate_all(model, samples, seed);
  report.print(std::cout);
  const bool ok = report.all_pass();
  std::cout << (ok ? "validation: PASS" : "validation: FAIL") << "\n";
  return ok ? 0 : 1;
}

// ------------------------------------------------------------------- solve

int run_solve(const ModelSpec& model, const std::vector<double>& q,
              const std::vector<double>& j, double m, int branch, bool csv) {
  if (static_cast<int>(j.size()) != model.s()) {
    throw CLI::ValidationError("--j expects " + std::to_string(model.s()) +
                               " value(s) for this model");
  }
  const Eigen::VectorXd j_vec = to_vector(j);

  if (model.r() == 0) {
    const Eigen::VectorXd alpha = j_vec;
    const CompleteIntegral s = CompleteIntegral::from_model(model, alpha,
                                                            branch);
    std::cout << "model " << model.name() << ": point orbit (r = 0); m is "
              << "fixed by the constraint\n";
    std::cout << "m^2 = " << format_double(s.m_squared(), false) << "\n";
    std::cout << "S(x0) = " << format_double(s.value(model.base_point()),
                                             false)
              << "\n";
    return 0;
  }

  if (q.size() != 1) {
    throw CLI::ValidationError("--q expects exactly one value (rank-one "
                               "reduction)");
  }
  Eigen::VectorXd alpha(1 + model.s() + 1);
  alpha[0] = q[0];
  alpha.segment(1, model.s()) = j_vec;
  alpha[1 + model.s()] = m;

  const CompleteIntegral s = CompleteIntegral::from_model(model, alpha,
                                                          branch);
  const auto& solution = s.reduced();
  std::cout << "model " << model.name() << ", j = " << format_vector(j_vec)
            << ", m = " << m << ", branch = " << (branch > 0 ? "+" : "-")
            << "\n";
  std::cout << "reduced domain: [" << format_double(solution.q_lo(), false)
            << ", " << format_double(solution.q_hi(), false) << "]"
            << (solution.truncated_lo() ? " (lower end window-truncated)" : "")
            << (solution.truncated_hi() ? " (upper end window-truncated)" : "")
            << "\n";
  std::cout << "S(x0) = S~(q of alpha) = "
            << format_double(s.value(model.base_point()), false) << "\n";

  // Evaluation table over the interior of the reduced domain.
  const int rows = 11;
  const double width = solution.q_hi() - solution.q_lo();
  const double lo = solution.q_lo() + 0.05 * width;
  const double hi = solution.q_hi() - 0.05 * width;
  if (csv) {
    std::cout << "q,p,S\n";
  } else {
    std::cout << "        q                 p(q)              S~(q)\n";
  }
  for (int row = 0; row < rows; ++row) {
    const double qi = lo + (hi - lo) * row / (rows - 1);
    const double pi = solution.derivative(qi);
    const double si = solution.value(qi);
    if (csv) {
      std::cout << format_double(qi, true) << "," << format_double(pi, true)
                << "," << format_double(si, true) << "\n";
    } else {
      std::cout << format_double(qi, false) << "  " << format_double(pi, false)
                << "  " << format_double(si, false) << "\n";
    }
  }
  return 0;
}

// ------------------------------------------------------------------ verify

struct VerifyRow {
  Eigen::VectorXd x;
  Eigen::VectorXd alpha;
  double residual = 0.0;
  double det = 0.0;
};

int run_verify(const ModelSpec& model, int samples, std::uint64_t seed,
               int branch, bool csv) {
  AdmissibleSampler sampler(model, branch, seed);
  std::vector<AdmissiblePoint> points;
  points.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) points.push_back(sampler.sample());

  std::vector<VerifyRow> rows(static_cast<std::size_t>(samples));
  const auto evaluate = [&](int index) {
    const AdmissiblePoint& point = points[static_cast<std::size_t>(index)];
    const CompleteIntegral s = CompleteIntegral::from_model(
        model, point.alpha, branch, /*preflight_closedness=*/false);
    VerifyRow row;
    row.x = point.x;
    row.alpha = point.alpha;
    row.residual = s.hj_residual(point.x).residual;
    row.det = s.nondegeneracy(point.x);
    rows[static_cast<std::size_t>(index)] = std::move(row);
  };

  const int threads = worker_threads();
  if (threads > 1) {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < samples; i = next.fetch_add(1)) {
          evaluate(i);
        }
      });
    }
    for (std::thread& worker : pool) worker.join();
  } else {
    for (int i = 0; i < samples; ++i) evaluate(i);
  }

  const int n = model.n();
  const auto n_params = rows.empty() ? 0 : rows.front().alpha.size();
  for (int i = 1; i <= n; ++i) std::cout << "x" << i << ",";
  for (Eigen::Index i = 1; i <= n_params; ++i) std::cout << "alpha" << i << ",";
  std::cout << "residual,det\n";
  double max_residual = 0.0;
  double min_det = std::numeric_limits<double>::infinity();
  for (const VerifyRow& row : rows) {
    for (int i = 0; i < n; ++i) std::cout << format_double(row.x[i], csv) << ",";
    for (Eigen::Index i = 0; i < n_params; ++i) {
      std::cout << format_double(row.alpha[i], csv) << ",";
    }
    std::cout << format_double(row.residual, csv) << ","
              << format_double(row.det, csv) << "\n";
    max_residual = std::max(max_residual, row.residual);
    min_det = std::min(min_det, std::fabs(row.det));
  }
  const bool ok = max_residual < 1e-8 && min_det > 1e-6;
  std::cout << "max residual = " << format_double(max_residual, false)
            << " (tol 1e-8), min |det| = " << format_double(min_det, false)
            << " (tol 1e-6): " << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------- geodesic

int run_geodesic(const ModelSpec& model, const std::vector<double>& alpha_in,
                 const std::vector<double>& x_in, double t_max, double dt,
                 int branch, const std::string& out_path) {
  const Eigen::VectorXd alpha = to_vector(alpha_in);
  const CompleteIntegral s = CompleteIntegral::from_model(model, alpha,
                                                          branch);
  Eigen::VectorXd x0 = model.base_point();
  if (!x_in.empty()) {
    if (static_cast<int>(x_in.size()) != model.n()) {
      throw CLI::ValidationError("--x expects " + std::to_string(model.n()) +
                                 " coordinates");
    }
    x0 = to_vector(x_in);
  }

  GeodesicState start;
  start.x = x0;
  start.p = s.grad_x(x0);  // matched initial momentum
  const hjgeo::Trajectory trajectory =
      hjgeo::integrate_geodesic(model, start, t_max, dt);

  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "cannot open output file: " << out_path << "\n";
      return 2;
    }
    hjgeo::write_trajectory_csv(out, model, trajectory);
    std::cerr << "trajectory written to " << out_path << " ("
              << trajectory.size() << " rows)\n";
  } else {
    hjgeo::write_trajectory_csv(std::cout, model, trajectory);
  }

  const double h0 = hjgeo::hamiltonian(model, start.x, start.p);
  double energy_drift = 0.0;
  for (const GeodesicState& state : trajectory) {
    energy_drift = std::max(
        energy_drift,
        std::fabs(hjgeo::hamiltonian(model, state.x, state.p) - h0));
  }
  std::cout << "energy drift = " << format_double(energy_drift, false) << "\n";

  const Report jacobi = hjgeo::jacobi_consistency(s, trajectory, 100);
  jacobi.print(std::cout);
  const bool ok = jacobi.all_pass();
  std::cout << (ok ? "jacobi constants: PASS" : "jacobi constants: FAIL")
            << "\n";
  return ok ? 0 : 1;
}

// -------------------------------------------------------------------- demo

int run_demo(double k, int samples, std::uint64_t seed) {
  const ModelSpec model = ModelSpec::builtin("mtt", {{"k", k}});
  bool all_ok = true;
  const auto line = [&](const std::string& label, const std::string& text,
                        bool ok) {
    all_ok = all_ok && ok;
    std::printf("%-14s %-60s %s\n", label.c_str(), text.c_str(),
                ok ? "pass" : "FAIL");
  };

  std::cout << "four-dimensional curved model, k = " << k << "\n\n";

  const Report algebra = hjgeo::validate_structure(model.structure());
  line("algebra", "antisymmetry + Jacobi identity", algebra.all_pass());

  const int index = hjgeo::lie_index(model.structure(), 20, seed);
  line("index", "minimal Lie-Poisson corank = " + std::to_string(index),
       index == 2);

  {
    hjgeo::Rng rng(seed, 99);
    const Eigen::VectorXd j = sample_box(model.j_box(), rng);
    hjgeo::Subalgebra h;
    h.basis = model.polarization_basis();
    const auto pol = hjgeo::check_polarization(
        model.structure(), h, model.orbit().lambda(j),
        model.n() - model.s());
    line("polarization", "<e1,e3,e4> subordinate to lambda(j)",
         pol.report.all_pass());
  }

  const Report frame = hjgeo::verify_frame(model.frame(), model.structure(),
                                           samples, seed, model.x_box());
  line("frame", "bracket closure + nondegeneracy", frame.all_pass());
  const Report killing = hjgeo::verify_killing(
      model.killing(), model.frame(), model.structure(), samples, seed,
      model.x_box());
  line("killing", "commutation with the frame + algebra brackets",
       killing.all_pass());

  const Report chart =
      hjgeo::verify_chart(model.chart(), model.orbit(), model.structure(),
                          samples, seed, model.q_box(), model.p_box(),
                          model.j_box());
  const Report equiv = hjgeo::verify_equivariance(
      model.chart(), model.frame(), model.base_point(), samples, seed,
      model.x_box(), model.q_box());
  line("chart", "canonical conditions + equivariance",
       chart.all_pass() && equiv.all_pass());

  // Reduced solution vs the closed form in elliptic integrals.
  {
    const double j1 = 1.0, j2 = -1.0, m = 0.5;
    Eigen::VectorXd j(2);
    j << j1, j2;
    const auto rq = hjgeo::assemble_quadratic(model.chart(), model.metric(),
                                              j, m, model.q_window());
    const auto solution = hjgeo::solve_branch(rq, 1);
    double max_diff = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double frac = -0.9 + 1.8 * i / 19.0;
      const double q = 0.5 * (solution.q_lo() + solution.q_hi()) +
                       0.5 * frac * (solution.q_hi() - solution.q_lo());
      const double closed = hjgeo::mtt_reduced_closed_form(q, j1, j2, m, k);
      max_diff = std::max(max_diff, std::fabs(solution.value(q) - closed));
    }
    char text[96];
    std::snprintf(text, sizeof(text),
                  "quadrature vs elliptic closed form: max diff = %.3e",
                  max_diff);
    line("reduced", text, max_diff < 1e-8);
  }

  // Complete integral sweep.
  {
    AdmissibleSampler sampler(model, 1, seed);
    double max_residual = 0.0;
    double min_det = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
      const AdmissiblePoint point = sampler.sample();
      const CompleteIntegral s = CompleteIntegral::from_model(
          model, point.alpha, 1, /*preflight_closedness=*/false);
      max_residual = std::max(max_residual, s.hj_residual(point.x).residual);
      min_det = std::min(min_det, std::fabs(s.nondegeneracy(point.x)));
    }
    char text[96];
    std::snprintf(text, sizeof(text),
                  "max HJ residual = %.3e, min |det| = %.3e", max_residual,
                  min_det);
    line("complete", text, max_residual < 1e-8 && min_det > 1e-6);
  }

  // Matched geodesic: energy conservation and Jacobi constants.
  {
    Eigen::VectorXd alpha(4);
    alpha << 0.0, 1.0, -1.0, 0.1;
    const CompleteIntegral s = CompleteIntegral::from_model(model, alpha, 1);
    GeodesicState start;
    start.x = model.base_point();
    start.p = s.grad_x(start.x);
    // The single-branch integral matches the geodesic only up to the first
    // turning point of the reduced motion, whose onset scales like 1/k.
    const double t_max = 0.4 / k;
    const auto trajectory =
        hjgeo::integrate_geodesic(model, start, t_max, 1e-3);
    const double h0 = hjgeo::hamiltonian(model, start.x, start.p);
    double energy_drift = 0.0;
    for (const GeodesicState& state : trajectory) {
      energy_drift = std::max(
          energy_drift,
          std::fabs(hjgeo::hamiltonian(model, state.x, state.p) - h0));
    }
    const Report jacobi = hjgeo::jacobi_consistency(s, trajectory, 25);
    char text[96];
    std::snprintf(text, sizeof(text),
                  "energy drift = %.3e, jacobi constants max drift = %.3e",
                  energy_drift, jacobi.max_residual());
    line("geodesic", text, energy_drift < 1e-8 && jacobi.all_pass());
  }

  std::cout << "\nsummary: " << (all_ok ? "PASS" : "FAIL") << "\n";
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hamilton-Jacobi complete integrals on group manifolds"};
  app.require_subcommand(1);

  std::string model_arg;
  std::vector<std::string> overrides;
  int samples = 100;
  std::uint64_t seed = 0;
  int branch = 1;
  std::string format = "text";

  const auto add_common = [&](CLI::App* cmd, bool with_model = true) {
    if (with_model) {
      cmd->add_option("model", model_arg,
                      "builtin name (mtt, flat4) or path to a .model file")
          ->required();
    }
    cmd->add_option("--set", overrides,
                    "override a model constant, e.g. --set k=2");
    cmd->add_option("--seed", seed, "RNG seed (default 0)");
  };

  CLI::App* validate = app.add_subcommand("validate",
                                          "run the full validation battery");
  add_common(validate);
  validate->add_option("--samples", samples, "sample count per sweep");

  CLI::App* solve = app.add_subcommand(
      "solve", "solve the reduced equation and tabulate S~");
  add_common(solve);
  std::vector<double> q_values;
  std::vector<double> j_values;
  double m_value = 1.0;
  solve->add_option("--q", q_values, "chart parameter(s) of alpha");
  solve->add_option("--j", j_values, "orbit parameters")->required();
  solve->add_option("--m", m_value, "mass parameter");
  solve->add_option("--branch", branch, "quadratic branch (+1 or -1)");
  solve->add_option("--format", format, "text or csv");

  CLI::App* verify = app.add_subcommand(
      "verify", "HJ residual + nondegeneracy sweep over admissible samples");
  add_common(verify);
  verify->add_option("--samples", samples, "number of admissible samples");
  verify->add_option("--branch", branch, "quadratic branch (+1 or -1)");
  verify->add_option("--format", format, "text or csv");

  CLI::App* geodesic = app.add_subcommand(
      "geodesic", "integrate a matched-momentum geodesic and check the "
                  "Jacobi constants");
  add_common(geodesic);
  std::vector<double> alpha_values;
  std::vector<double> x_values;
  double t_max = 1.0;
  double dt = 1e-3;
  std::string out_path;
  geodesic->add_option("--alpha", alpha_values, "complete-integral parameters")
      ->required();
  geodesic->add_option("--x", x_values, "start point (default: base point)");
  geodesic->add_option("--t-max", t_max, "integration horizon");
  geodesic->add_option("--dt", dt, "RK4 step");
  geodesic->add_option("--branch", branch, "quadratic branch (+1 or -1)");
  geodesic->add_option("--out", out_path, "CSV output path (default stdout)");

  CLI::App* demo = app.add_subcommand(
      "demo", "run the full curved-model walkthrough");
  std::string demo_model = "mtt";
  double demo_k = 1.0;
  demo->add_option("model", demo_model, "builtin demo model (mtt)");
  demo->add_option("--k", demo_k, "curvature constant");
  demo->add_option("--samples", samples, "sample count per sweep");
  demo->add_option("--seed", seed, "RNG seed (default 0)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& help) {
    return app.exit(help);
  } catch (const CLI::ParseError& error) {
    app.exit(error);
    return 2;
  }

  try {
    if (validate->parsed()) {
      return run_validate(resolve_model(model_arg, overrides), samples, seed);
    }
    if (solve->parsed()) {
      return run_solve(resolve_model(model_arg, overrides), q_values,
                       j_values, m_value, branch, format == "csv");
    }
    if (verify->parsed()) {
      return run_verify(resolve_model(model_arg, overrides), samples, seed,
                        branch, format == "csv");
    }
    if (geodesic->parsed()) {
      return run_geodesic(resolve_model(model_arg, overrides), alpha_values,
                          x_values, t_max, dt, branch, out_path);
    }
    if (demo->parsed()) {
      if (demo_model != "mtt") {
        std::cerr << "demo supports the builtin mtt model only\n";
        return 2;
      }
      return run_demo(demo_k, samples, seed);
    }
  } catch (const CLI::ValidationError& error) {
    std::cerr << error.what() << "\n";
    return 2;
  } catch (const ModelError& error) {
    std::cerr << error.what() << "\n";
    return 2;
  } catch (const std::exception& error) {
    std::cerr << error.what() << "\n";
    return 1;
  }
  return 2;
}
