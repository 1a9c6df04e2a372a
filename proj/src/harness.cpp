#include "bundlespectra/harness.hpp"

#include "bundlespectra/errors.hpp"
#include "bundlespectra/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace bspec {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

} // namespace

ComparisonReport run_compare(std::shared_ptr<const FineMesh> mesh, const Bundle& bundle,
                             double epsilon, TwistModeChoice mode_choice, int K, unsigned seed) {
  ComparisonReport rep;
  const int n = bundle.rank;

  Discretization disc = epsilon_net(mesh, epsilon, seed);
  DiscretizationReport dv = validate(disc);
  if (!dv.ok()) throw NumericError("discretization invariants failed: " + dv.detail);

  if (K <= 0) K = std::min(20, n * disc.size());
  K = std::min(K, n * disc.size());

  TwistMode mode = resolve_mode(bundle.class_hint, mode_choice);
  FrameConfig fc = FrameConfig::defaults(n, epsilon);

  rep.manifold_desc = mesh->kind_name();
  rep.bundle_desc = bundle_class_name(bundle.class_hint);
  rep.mode = twist_mode_name(mode);
  rep.epsilon = epsilon;
  rep.delta = fc.delta;
  rep.alpha = fc.alpha;
  rep.seed = seed;
  rep.K = K;
  rep.net_size = disc.size();
  rep.nu_X = disc.nu_X;
  rep.rank = n;

  // Oracle side.
  SymmetricOperator rough = rough_laplacian(bundle);
  SpectrumResult espec = eigs(rough, K);

  // Frames and the twisted pair.
  std::vector<Frame> frames = build_all_frames(bundle, disc, fc);
  for (const Frame& f : frames) {
    rep.max_gram_dev = std::max(rep.max_gram_dev, f.gram_dev);
    rep.frame_lambda1.push_back(f.ball_eigenvalues[0]);
  }
  rep.min_mu = frames.front().mu;
  rep.max_mu = frames.front().mu;
  for (const Frame& f : frames) {
    rep.min_mu = std::min(rep.min_mu, f.mu);
    rep.max_mu = std::max(rep.max_mu, f.mu);
  }

  TwistedGraph graph = connection_matrices(bundle, disc, frames, mode);
  Potential pot = build_potential(disc, frames, mode);
  SymmetricOperator twisted = assemble_twisted(graph, pot);
  SpectrumResult nspec = eigs(twisted, K);

  // Uniform caps (the large-eigenvalue branch data).
  rep.max_A_norm = graph.max_change_norm();
  double c_bound = std::max(1.0, rep.max_A_norm * rep.max_A_norm);
  rep.lemma_cap = 2.0 * c_bound * disc.nu_X + std::max(fc.delta * epsilon * epsilon, 1.0);
  {
    SpectrumResult full = eigs(twisted, twisted.dim());
    rep.lambda_top_net = full.eigenvalues[full.eigenvalues.size() - 1];
  }
  rep.c3_hat = rough.scale();

  // Smoothing constants over the twisted eigenfunctions. Eigenfunctions are
  // unit vectors, so |D_A f|^2 + (Vf,f) equals the eigenvalue.
  const double e2 = epsilon * epsilon;
  double beta1 = 0.0;
  {
    double beta_min = 0.0;
    rep.c0 = 0.0;
    rep.c1 = 0.0;
    rep.Lambda_hat = 0.0;
    rep.c2 = 0.0;
    for (int k = 0; k < K; k++) {
      Eigen::VectorXd f = nspec.eigenvectors.col(k);
      Eigen::VectorXd sf = smooth(bundle, disc, frames, f);
      double sf2 = rough.mass_inner(sf, sf);
      double beta = sf2 / f.squaredNorm();
      if (k == 0) {
        beta1 = beta;
        beta_min = beta;
      }
      beta_min = std::min(beta_min, beta);
      rep.c0 = std::max(rep.c0, beta);
      double energy = nspec.eigenvalues[k];
      if (energy > 1e-12) rep.c1 = std::max(rep.c1, rough.quad(sf) * e2 / energy);
      if (beta_min >= 0.1 * beta1) {
        rep.Lambda_hat = std::max(rep.Lambda_hat, energy);
        rep.c2 = beta_min;
      }
    }
  }

  // Discretizing constants over the oracle eigensections.
  {
    double gamma1 = 0.0, gamma_min = 0.0;
    rep.cp0 = 0.0;
    rep.cp1 = 0.0;
    rep.Lambda_prime_hat = 0.0;
    rep.cp2 = 0.0;
    for (int k = 0; k < K; k++) {
      Eigen::VectorXd s = espec.eigenvectors.col(k);
      Eigen::VectorXd ds = discretize_section(disc, frames, s);
      double gamma = ds.squaredNorm() / rough.mass_inner(s, s);
      if (k == 0) {
        gamma1 = gamma;
        gamma_min = gamma;
      }
      gamma_min = std::min(gamma_min, gamma);
      rep.cp0 = std::max(rep.cp0, gamma);
      double grad2 = rough.quad(s);
      if (grad2 > 1e-12) {
        EdgeFunction daf = apply_DA(graph, ds);
        double energy = edge_inner(graph, daf, daf) + potential_quad(pot, ds, n);
        rep.cp1 = std::max(rep.cp1, energy / (e2 * grad2));
      }
      if (gamma_min >= 0.1 * gamma1) {
        rep.Lambda_prime_hat = std::max(rep.Lambda_prime_hat, espec.eigenvalues[k]);
        rep.cp2 = gamma_min;
      }
    }
  }

  // Comparison table.
  bool have_ratio = false;
  for (int k = 0; k < K; k++) {
    CompareRow row;
    row.k = k + 1;
    row.lambda_E = espec.eigenvalues[k];
    row.lambda_net = nspec.eigenvalues[k];
    row.kernel = row.lambda_E <= 1e-9 || row.lambda_net <= 1e-9;
    if (row.kernel) {
      row.branch = "kernel";
    } else {
      row.ratio_raw = row.lambda_E / row.lambda_net;
      row.ratio_rescaled = e2 * row.lambda_E / row.lambda_net;
      row.branch = row.lambda_net >= rep.Lambda_hat ? "large" : "small";
      if (!have_ratio) {
        rep.c_hat = rep.c_prime_hat = row.ratio_rescaled;
        rep.c_hat_raw = rep.c_prime_hat_raw = row.ratio_raw;
        have_ratio = true;
      } else {
        rep.c_hat = std::max(rep.c_hat, row.ratio_rescaled);
        rep.c_prime_hat = std::min(rep.c_prime_hat, row.ratio_rescaled);
        rep.c_hat_raw = std::max(rep.c_hat_raw, row.ratio_raw);
        rep.c_prime_hat_raw = std::min(rep.c_prime_hat_raw, row.ratio_raw);
      }
    }
    rep.rows.push_back(row);
  }
  return rep;
}

std::shared_ptr<const FineMesh> mesh_from_config(const nlohmann::json& cfg) {
  std::string manifold = cfg.at("manifold").get<std::string>();
  if (manifold == "circle") {
    return std::make_shared<FineMesh>(
        build_circle(cfg.at("L").get<double>(), cfg.at("N").get<int>()));
  }
  if (manifold == "torus") {
    return std::make_shared<FineMesh>(
        build_flat_torus(cfg.at("L1").get<double>(), cfg.at("L2").get<double>(),
                         cfg.at("N1").get<int>(), cfg.at("N2").get<int>()));
  }
  if (manifold == "sphere") {
    return std::make_shared<FineMesh>(
        build_sphere(cfg.at("r").get<double>(), cfg.at("sub").get<int>()));
  }
  throw ValidationError("unknown manifold: " + manifold);
}

Bundle bundle_from_config(const nlohmann::json& cfg, std::shared_ptr<const FineMesh> mesh) {
  std::string kind = cfg.value("kind", "trivial");
  if (kind == "trivial") return trivial_bundle(mesh, cfg.value("rank", 1));
  if (kind == "flat") {
    double phi = cfg.value("holonomy", 0.0);
    std::vector<Eigen::MatrixXd> gens;
    gens.push_back(rotation2(phi));
    if (mesh->kind == ManifoldKind::Torus) gens.push_back(rotation2(cfg.value("holonomy2", 0.0)));
    return flat_bundle_from_representation(mesh, gens);
  }
  if (kind == "landau") return landau_line_bundle(mesh, cfg.value("q", 1));
  if (kind == "sphere_tangent") return sphere_tangent_bundle(mesh);
  throw ValidationError("unknown bundle kind: " + kind);
}

ComparisonReport compare_from_config(const nlohmann::json& cfg) {
  if (cfg.value("schema", 1) != 1) throw ValidationError("unsupported config schema version");
  auto mesh = mesh_from_config(cfg);
  Bundle bundle = bundle_from_config(cfg, mesh);
  TwistModeChoice mode = twist_mode_choice_from_name(cfg.value("mode", "auto"));
  return run_compare(mesh, bundle, cfg.at("eps").get<double>(), mode, cfg.value("k", 0),
                     cfg.value("seed", 0u));
}

SweepSpec sweep_spec_from_config(const nlohmann::json& cfg) {
  SweepSpec spec;
  spec.base = cfg;
  spec.param = cfg.at("param").get<std::string>();
  for (const auto& v : cfg.at("values")) spec.values.push_back(v.get<double>());
  if (spec.values.empty()) throw ValidationError("sweep needs a nonempty value list");
  const std::vector<std::string> known = {"eps", "holonomy", "flux", "seed", "refine"};
  if (std::find(known.begin(), known.end(), spec.param) == known.end())
    throw ValidationError("unknown sweep parameter: " + spec.param);
  return spec;
}

std::vector<ComparisonReport> run_sweep(const SweepSpec& spec) {
  std::vector<ComparisonReport> out;
  for (double v : spec.values) {
    nlohmann::json cfg = spec.base;
    if (spec.param == "eps") {
      cfg["eps"] = v;
    } else if (spec.param == "holonomy") {
      cfg["holonomy"] = v;
    } else if (spec.param == "flux") {
      cfg["q"] = static_cast<int>(v);
    } else if (spec.param == "seed") {
      cfg["seed"] = static_cast<unsigned>(v);
    } else if (spec.param == "refine") {
      int nn = static_cast<int>(v);
      if (cfg.at("manifold") == "circle") {
        cfg["N"] = nn;
      } else {
        cfg["N1"] = nn;
        cfg["N2"] = nn;
      }
    }
    try {
      out.push_back(compare_from_config(cfg));
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "sweep aborted at " << spec.param << "=" << fmt(v) << ": " << e.what();
      throw NumericError(os.str());
    }
  }
  return out;
}

std::string report_to_csv(const ComparisonReport& rep) {
  std::ostringstream os;
  os << "k,lambda_E,lambda_XAV,ratio_raw,ratio_rescaled,branch\n";
  for (const CompareRow& r : rep.rows) {
    os << r.k << "," << fmt(r.lambda_E) << "," << fmt(r.lambda_net) << ","
       << (r.kernel ? "" : fmt(r.ratio_raw)) << "," << (r.kernel ? "" : fmt(r.ratio_rescaled))
       << "," << r.branch << "\n";
  }
  return os.str();
}

std::string sweep_to_csv(const SweepSpec& spec, const std::vector<ComparisonReport>& reports) {
  std::ostringstream os;
  os << "# bundle-spectra sweep param=" << spec.param << "\n";
  double c_hat_max = 0.0, c_prime_min = 0.0;
  bool first = true;
  for (size_t i = 0; i < reports.size(); i++) {
    os << "# " << spec.param << "=" << fmt(spec.values[i]) << "\n";
    os << report_to_csv(reports[i]);
    if (first) {
      c_hat_max = reports[i].c_hat;
      c_prime_min = reports[i].c_prime_hat;
      first = false;
    } else {
      c_hat_max = std::max(c_hat_max, reports[i].c_hat);
      c_prime_min = std::min(c_prime_min, reports[i].c_prime_hat);
    }
  }
  os << "# aggregate c_hat_max=" << fmt(c_hat_max) << " c_prime_hat_min=" << fmt(c_prime_min)
     << "\n";
  return os.str();
}

std::string plot_script_for(const std::string& csv_path) {
  std::ostringstream os;
  os << "#!/usr/bin/env python3\n"
     << "# Plots comparison ratios from a bundle-spectra sweep CSV.\n"
     << "import csv\n"
     << "import matplotlib\n"
     << "matplotlib.use('Agg')\n"
     << "import matplotlib.pyplot as plt\n\n"
     << "path = " << std::quoted(csv_path) << "\n"
     << "blocks, label = [], None\n"
     << "with open(path) as fh:\n"
     << "    for line in fh:\n"
     << "        line = line.strip()\n"
     << "        if line.startswith('#'):\n"
     << "            if '=' in line and 'aggregate' not in line:\n"
     << "                label = line.lstrip('# ')\n"
     << "                blocks.append((label, [], []))\n"
     << "            continue\n"
     << "        if not line or line.startswith('k,'):\n"
     << "            continue\n"
     << "        parts = line.split(',')\n"
     << "        if not blocks:\n"
     << "            blocks.append(('run', [], []))\n"
     << "        if parts[4]:\n"
     << "            blocks[-1][1].append(int(parts[0]))\n"
     << "            blocks[-1][2].append(float(parts[4]))\n"
     << "fig, ax = plt.subplots(figsize=(7, 4.5))\n"
     << "for label, ks, ratios in blocks:\n"
     << "    if ks:\n"
     << "        ax.plot(ks, ratios, marker='o', label=label)\n"
     << "ax.set_xlabel('k')\n"
     << "ax.set_ylabel('eps^2 lambda_k(E) / lambda_k(X,A,V)')\n"
     << "ax.set_yscale('log')\n"
     << "ax.legend(fontsize=7)\n"
     << "fig.tight_layout()\n"
     << "out = path.rsplit('.', 1)[0] + '.png'\n"
     << "fig.savefig(out, dpi=150)\n"
     << "print('wrote', out)\n";
  return os.str();
}

} // namespace bspec
