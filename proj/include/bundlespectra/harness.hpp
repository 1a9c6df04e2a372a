#ifndef BUNDLESPECTRA_HARNESS_HPP
#define BUNDLESPECTRA_HARNESS_HPP

#include "bundlespectra/bundle.hpp"
#include "bundlespectra/frames.hpp"
#include "bundlespectra/geometry.hpp"
#include "bundlespectra/netdisc.hpp"
#include "bundlespectra/twisted.hpp"

#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

namespace bspec {

struct CompareRow {
  int k = 0;
  double lambda_E = 0.0;
  double lambda_net = 0.0;
  double ratio_raw = 0.0;      // lambda_E / lambda_net
  double ratio_rescaled = 0.0; // eps^2 lambda_E / lambda_net
  bool kernel = false;
  std::string branch; // "kernel" | "small" | "large"
};

struct ComparisonReport {
  // configuration echo
  std::string manifold_desc, bundle_desc, mode;
  double epsilon = 0.0, delta = 0.0, alpha = 0.0;
  unsigned seed = 0;
  int K = 0, net_size = 0, nu_X = 0, rank = 0;

  std::vector<CompareRow> rows;
  double c_hat = 0.0, c_prime_hat = 0.0;         // rescaled-ratio envelope
  double c_hat_raw = 0.0, c_prime_hat_raw = 0.0; // raw-ratio envelope

  // branch machinery and uniform caps
  double Lambda_hat = 0.0;      // empirical small-eigenvalue threshold
  double c3_hat = 0.0;          // uniform cap on the oracle spectrum
  double max_A_norm = 0.0;      // max ||A(p,q)||_2
  double lambda_top_net = 0.0;  // lambda_{n|X|}(X,A,V)
  double lemma_cap = 0.0;       // 2 max(1,||A||^2) nu_X + max(delta eps^2, 1)

  // smoothing / discretizing constants, measured on the eigenfunction
  // families (see README for the exact normalizations)
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  double cp0 = 0.0, cp1 = 0.0, cp2 = 0.0;
  double Lambda_prime_hat = 0.0;

  // frame diagnostics
  double max_gram_dev = 0.0;
  int min_mu = 0, max_mu = 0;
  std::vector<double> frame_lambda1; // per net point
};

// Full pipeline: net -> frames -> (A, V) -> both spectra -> report.
// K <= 0 selects the default min(20, n|X|).
ComparisonReport run_compare(std::shared_ptr<const FineMesh> mesh, const Bundle& bundle,
                             double epsilon, TwistModeChoice mode, int K, unsigned seed);

// Config-driven construction (JSON schema 1), shared by the CLI, the sweep
// driver and the C API.
std::shared_ptr<const FineMesh> mesh_from_config(const nlohmann::json& cfg);
Bundle bundle_from_config(const nlohmann::json& cfg, std::shared_ptr<const FineMesh> mesh);
ComparisonReport compare_from_config(const nlohmann::json& cfg);

struct SweepSpec {
  nlohmann::json base;        // compare config
  std::string param;          // eps | holonomy | flux | seed | refine
  std::vector<double> values; // nonempty
};

SweepSpec sweep_spec_from_config(const nlohmann::json& cfg);
// One report per swept value, aborting on the first failure.
std::vector<ComparisonReport> run_sweep(const SweepSpec& spec);

std::string report_to_csv(const ComparisonReport& rep);
std::string sweep_to_csv(const SweepSpec& spec, const std::vector<ComparisonReport>& reports);
// Self-contained matplotlib script reading the given CSV.
std::string plot_script_for(const std::string& csv_path);

} // namespace bspec

#endif
