// exchpoly command line: ray enumeration, triangulation, exact and empirical
// measure distributions, bounds, correlated binary sampling, MLE and the
// exchangeability GLR test. Results go to stdout (or --output), diagnostics
// to stderr. Exit codes: 0 ok, 1 computation error, 2 usage error.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "exchpoly/exchpoly.hpp"

namespace {

using namespace exchpoly;

struct Output {
  std::string path;
  std::ofstream file;

  std::ostream& stream() {
    if (path.empty()) return std::cout;
    if (!file.is_open()) {
      file.open(path);
      if (!file) throw std::runtime_error("cannot open output file '" + path + "'");
    }
    return file;
  }
};

MixtureWeights lambda_from_file(const std::string& path, std::size_t expected) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lambda file '" + path + "'");
  json j;
  in >> j;
  std::vector<double> w;
  if (j.is_array()) {
    w = j.get<std::vector<double>>();
  } else if (j.contains("lambda")) {
    w = j["lambda"].get<std::vector<double>>();
  } else {
    throw std::runtime_error("lambda file must be a JSON array or {\"lambda\": [...]}");
  }
  if (w.size() != expected)
    throw std::runtime_error("lambda has " + std::to_string(w.size()) + " entries, expected " +
                             std::to_string(expected));
  return MixtureWeights(std::move(w));
}

MixtureWeights dirichlet_lambda(std::size_t count, std::uint64_t seed) {
  StreamRng g(seed, ~0ull);
  std::vector<double> w(count);
  double tot = 0.0;
  for (double& v : w) {
    v = g.exponential();
    tot += v;
  }
  for (double& v : w) v /= tot;
  return MixtureWeights(std::move(w));
}

std::vector<std::vector<int>> parse_groups(const std::string& text) {
  std::vector<std::vector<int>> groups;
  std::stringstream outer(text);
  std::string part;
  while (std::getline(outer, part, '|')) {
    std::vector<int> g;
    std::stringstream inner(part);
    std::string tok;
    while (std::getline(inner, tok, ',')) {
      if (!tok.empty()) g.push_back(std::stoi(tok));
    }
    if (!g.empty()) groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

void emit_batch_csv(std::ostream& os, const SampleBatch& batch, bool sum_only) {
  if (sum_only) {
    std::map<int, std::int64_t> hist;
    for (std::int32_t y : batch.sums) ++hist[y];
    for (const auto& [y, count] : hist) os << y << ',' << count << '\n';
    return;
  }
  for (std::int64_t i = 0; i < batch.n; ++i) {
    const std::uint8_t* row = batch.row(i);
    for (int c = 0; c < batch.d; ++c) {
      if (c) os << ',';
      os << static_cast<int>(row[c]);
    }
    os << '\n';
  }
}

int run(int argc, char** argv) {
  CLI::App app{"exchangeable Bernoulli polytopes: rays, volumes, sampling, inference"};
  app.require_subcommand(1);
  Output out;
  app.add_option("-o,--output", out.path, "write results to a file instead of stdout")
      ->configurable(false);

  // ---- rays ----
  auto* cmd_rays = app.add_subcommand("rays", "enumerate the extremal ray densities");
  int rays_d = 0;
  double rays_p = 0.0;
  bool rays_json = false, rays_csv = false;
  cmd_rays->add_option("--d", rays_d, "dimension")->required();
  cmd_rays->add_option("--p", rays_p, "mean in (0,1)")->required();
  cmd_rays->add_flag("--json", rays_json, "JSON output (default)");
  cmd_rays->add_flag("--csv", rays_csv, "CSV output (one ray per column)");
  cmd_rays->callback([&] {
    const auto rays = enumerate_rays(rays_d, rays_p);
    std::ostream& os = out.stream();
    if (rays_csv) {
      for (int y = 0; y <= rays_d; ++y) {
        for (std::size_t i = 0; i < rays.size(); ++i) {
          if (i) os << ',';
          os << fmt(to_sum_pmf(rays[i])[y]);
        }
        os << '\n';
      }
    } else {
      os << rays_to_json(rays_d, rays_p, rays).dump(2) << '\n';
    }
  });

  // ---- triangulate ----
  auto* cmd_tri = app.add_subcommand("triangulate", "triangulate the mean-p polytope");
  int tri_d = 0;
  double tri_p = 0.0;
  cmd_tri->add_option("--d", tri_d, "dimension")->required();
  cmd_tri->add_option("--p", tri_p, "mean in (0,1)")->required();
  cmd_tri->callback([&] {
    const auto tri = triangulate_polytope(tri_d, tri_p);
    out.stream() << triangulation_to_json(tri_d, tri_p, tri).dump(2) << '\n';
  });

  // ---- measure-cdf ----
  auto* cmd_cdf = app.add_subcommand("measure-cdf", "exact distribution of an affine measure");
  int cdf_d = 0;
  double cdf_p = 0.0;
  std::string cdf_measure = "moment:2";
  std::size_t cdf_grid = 1001;
  bool cdf_pdf = false;
  double cdf_delta = 0.0;
  cmd_cdf->add_option("--d", cdf_d, "dimension")->required();
  cmd_cdf->add_option("--p", cdf_p, "mean in (0,1)")->required();
  cmd_cdf->add_option("--measure", cdf_measure, "moment:k | entropic:gamma | excess:k");
  cmd_cdf->add_option("--grid", cdf_grid, "number of grid points (default 1001)");
  cmd_cdf->add_flag("--pdf", cdf_pdf, "append a finite-difference density column");
  cmd_cdf->add_option("--delta", cdf_delta, "density step (default range/10000)");
  cmd_cdf->callback([&] {
    const MeasureSpec spec = MeasureSpec::parse(cdf_measure);
    const auto tri = triangulate_polytope(cdf_d, cdf_p);
    const MeasureCdf cdf = measure_cdf_exact(tri, spec, cdf_grid);
    std::ostream& os = out.stream();
    if (cdf_pdf) {
      const double delta =
          cdf_delta > 0.0 ? cdf_delta : (cdf.grid.back() - cdf.grid.front()) / 10000.0;
      const auto pdf = cdf_to_pdf(cdf, delta);
      os << "t,F,f\n";
      for (std::size_t i = 0; i < cdf.grid.size(); ++i)
        os << fmt(cdf.grid[i]) << ',' << fmt(cdf.values[i]) << ',' << fmt(pdf[i]) << '\n';
    } else {
      os << "t,F\n";
      for (std::size_t i = 0; i < cdf.grid.size(); ++i)
        os << fmt(cdf.grid[i]) << ',' << fmt(cdf.values[i]) << '\n';
    }
  });

  // ---- measure-dist ----
  auto* cmd_dist = app.add_subcommand(
      "measure-dist", "empirical distribution of a measure under uniform sampling");
  int dist_d = 0;
  double dist_p = -1.0;
  std::string dist_measure = "entropy";
  std::int64_t dist_n = 100000;
  std::uint64_t dist_seed = 0;
  bool dist_raw = false;
  cmd_dist->add_option("--d", dist_d, "dimension")->required();
  cmd_dist->add_option("--p", dist_p, "mean (omit to sample the whole simplex)");
  cmd_dist->add_option("--measure", dist_measure,
                       "measure, or comma-separated list with --raw (e.g. mean,correlation)");
  cmd_dist->add_option("--n", dist_n, "sample size");
  cmd_dist->add_option("--seed", dist_seed, "RNG seed")->required();
  cmd_dist->add_flag("--raw", dist_raw, "emit per-sample values instead of the empirical CDF");
  cmd_dist->callback([&] {
    std::optional<double> p;
    if (dist_p >= 0.0) p = dist_p;
    std::ostream& os = out.stream();
    if (dist_raw) {
      std::vector<MeasureSpec> specs;
      std::stringstream ss(dist_measure);
      std::string tok;
      while (std::getline(ss, tok, ',')) specs.push_back(MeasureSpec::parse(tok));
      const auto pmfs = sample_uniform_pmfs(dist_d, p, dist_n, dist_seed);
      for (std::size_t i = 0; i < specs.size(); ++i) os << (i ? "," : "") << specs[i].name();
      os << '\n';
      for (const SumPmf& pmf : pmfs) {
        for (std::size_t i = 0; i < specs.size(); ++i)
          os << (i ? "," : "") << fmt(evaluate(specs[i], pmf));
        os << '\n';
      }
    } else {
      const MeasureCdf cdf = empirical_measure_distribution(
          dist_d, p, MeasureSpec::parse(dist_measure), dist_n, dist_seed);
      os << "t,F\n";
      for (std::size_t i = 0; i < cdf.grid.size(); ++i)
        os << fmt(cdf.grid[i]) << ',' << fmt(cdf.values[i]) << '\n';
    }
  });

  // ---- bounds ----
  auto* cmd_bounds = app.add_subcommand("bounds", "attainable range over the class");
  int bounds_d = 0;
  double bounds_p = 0.0;
  std::string bounds_measure;
  cmd_bounds->add_option("--d", bounds_d, "dimension")->required();
  cmd_bounds->add_option("--p", bounds_p, "mean in (0,1)")->required();
  cmd_bounds->add_option("--measure", bounds_measure,
                         "optional measure; default reports the correlation range");
  cmd_bounds->callback([&] {
    json j;
    j["d"] = bounds_d;
    j["p"] = bounds_p;
    if (bounds_measure.empty() || bounds_measure == "correlation") {
      const auto [lo, hi] = correlation_bounds(bounds_d, bounds_p);
      j["measure"] = "correlation";
      j["min"] = lo;
      j["max"] = hi;
    } else {
      const MeasureSpec spec = MeasureSpec::parse(bounds_measure);
      const auto [lo, hi] = measure_ray_extrema(spec, enumerate_rays(bounds_d, bounds_p));
      j["measure"] = spec.name();
      j["min"] = lo;
      j["max"] = hi;
      j["sharp"] = spec.affine_in_pmf() || spec.kind == MeasureSpec::Kind::quantile;
    }
    out.stream() << j.dump(2) << '\n';
  });

  // ---- measure (single pmf) ----
  auto* cmd_measure = app.add_subcommand("measure", "evaluate a measure on a pmf file");
  std::string measure_pmf_path;
  std::string measure_name = "moment:2";
  cmd_measure->add_option("--pmf", measure_pmf_path, "JSON file: array p_0..p_d")->required();
  cmd_measure->add_option("--measure", measure_name, "measure spec");
  cmd_measure->callback([&] {
    std::ifstream in(measure_pmf_path);
    if (!in) throw std::runtime_error("cannot open pmf file '" + measure_pmf_path + "'");
    json j;
    in >> j;
    const SumPmf pmf(j.is_array() ? j.get<std::vector<double>>()
                                  : j.at("probs").get<std::vector<double>>());
    const MeasureSpec spec = MeasureSpec::parse(measure_name);
    json res;
    res["measure"] = spec.name();
    res["value"] = evaluate(spec, pmf);
    out.stream() << res.dump(2) << '\n';
  });

  // ---- sample ----
  auto* cmd_sample = app.add_subcommand("sample", "draw correlated binary vectors");
  int s_d = 0;
  double s_p = 0.0;
  std::string s_lambda_file;
  bool s_lambda_dirichlet = false;
  double s_rho = std::numeric_limits<double>::quiet_NaN();
  std::string s_model;
  double s_a = 0.0, s_b = 0.0;
  std::int64_t s_n = 1;
  std::uint64_t s_seed = 0;
  bool s_sum_only = false;
  bool s_full = false;
  cmd_sample->add_option("--d", s_d, "dimension")->required();
  cmd_sample->add_option("--p", s_p, "mean in (0,1)")->required();
  cmd_sample->add_option("--lambda", s_lambda_file, "JSON mixture weights over the rays");
  cmd_sample->add_flag("--lambda-dirichlet", s_lambda_dirichlet,
                       "draw the mixture weights once from a flat Dirichlet");
  cmd_sample->add_option("--rho", s_rho, "target correlation (two-ray family)");
  cmd_sample->add_option("--model", s_model, "one-factor | beta");
  cmd_sample->add_option("--a", s_a, "beta shape a (overrides --rho for the beta model)");
  cmd_sample->add_option("--b", s_b, "beta shape b");
  cmd_sample->add_option("--n", s_n, "number of draws")->required();
  cmd_sample->add_option("--seed", s_seed, "RNG seed")->required();
  cmd_sample->add_flag("--sum-only", s_sum_only, "emit y,count pairs (default for d > 10^4)");
  cmd_sample->add_flag("--full", s_full, "force full 0/1 rows");
  cmd_sample->callback([&] {
    const bool sum_only = s_sum_only || (s_d > 10000 && !s_full);
    const SampleMode mode = sum_only ? SampleMode::sum_only : SampleMode::full;
    SampleBatch batch;
    if (s_model == "one-factor") {
      if (std::isnan(s_rho)) throw std::runtime_error("one-factor model needs --rho");
      batch = sample_one_factor(s_d, s_p, s_rho, s_n, s_seed, mode);
    } else if (s_model == "beta") {
      double a = s_a, b = s_b;
      if (a <= 0.0 || b <= 0.0) {
        if (std::isnan(s_rho)) throw std::runtime_error("beta model needs --rho or --a/--b");
        std::tie(a, b) = beta_mixture_params(s_p, s_rho);
        std::cerr << "beta parameters: a=" << a << " b=" << b << '\n';
      }
      batch = sample_beta_mixture(s_d, a, b, s_n, s_seed, mode);
    } else if (!s_model.empty()) {
      throw std::runtime_error("unknown model '" + s_model + "'");
    } else {
      const auto rays = enumerate_rays(s_d, s_p);
      MixtureWeights lambda = !s_lambda_file.empty() ? lambda_from_file(s_lambda_file, rays.size())
                              : s_lambda_dirichlet   ? dirichlet_lambda(rays.size(), s_seed)
                              : !std::isnan(s_rho)
                                  ? correlation_family(s_d, s_p, s_rho)
                                  : throw std::runtime_error(
                                        "need --lambda, --lambda-dirichlet, --rho or --model");
      batch = sample_mixture(s_d, s_p, rays, lambda, s_n, s_seed, mode);
    }
    emit_batch_csv(out.stream(), batch, sum_only);
  });

  // ---- uniform-sample ----
  auto* cmd_uniform = app.add_subcommand("uniform-sample", "uniform pmfs from the polytope");
  int u_d = 0;
  double u_p = -1.0;
  std::int64_t u_n = 1;
  std::uint64_t u_seed = 0;
  cmd_uniform->add_option("--d", u_d, "dimension")->required();
  cmd_uniform->add_option("--p", u_p, "mean (omit for the whole simplex)");
  cmd_uniform->add_option("--n", u_n, "number of pmfs")->required();
  cmd_uniform->add_option("--seed", u_seed, "RNG seed")->required();
  cmd_uniform->callback([&] {
    std::optional<double> p;
    if (u_p >= 0.0) p = u_p;
    const auto pmfs = sample_uniform_pmfs(u_d, p, u_n, u_seed);
    json arr = json::array();
    for (const SumPmf& pmf : pmfs) arr.push_back(pmf.probs());
    out.stream() << arr.dump() << '\n';
  });

  // ---- mle ----
  auto* cmd_mle = app.add_subcommand("mle", "maximum likelihood fit from a 0/1 matrix");
  std::string mle_data;
  double mle_p = -1.0;
  bool mle_header = false;
  cmd_mle->add_option("--data", mle_data, "CSV matrix, one observation per row")->required();
  cmd_mle->add_option("--p", mle_p, "fix the mean (constrained fit)");
  cmd_mle->add_flag("--header", mle_header, "skip the first line");
  cmd_mle->callback([&] {
    const CountData counts = counts_from_matrix(read_binary_csv_file(mle_data, mle_header));
    json j;
    j["d"] = counts.d;
    j["n"] = counts.n;
    if (mle_p > 0.0) {
      const FixedPMle fit = mle_fixed_p(counts, mle_p);
      j["p"] = mle_p;
      j["p_hat"] = fit.pmf.probs();
      j["f_hat"] = map_H_inv(fit.pmf).f();
      j["lambda_hat"] = fit.lambda.weights();
      j["loglik"] = fit.loglik;
    } else {
      const ExchangeablePmf f = mle_unconstrained(counts);
      j["f_hat"] = f.f();
      j["p_hat"] = map_H(f).probs();
      j["loglik"] = log_likelihood(counts, f);
    }
    out.stream() << j.dump(2) << '\n';
  });

  // ---- glr-test ----
  auto* cmd_glr = app.add_subcommand("glr-test", "generalized likelihood ratio exchangeability test");
  std::string glr_data;
  std::string glr_h0 = "exch";
  double glr_p = 0.5;
  double glr_alpha = 0.05;
  bool glr_header = false;
  cmd_glr->add_option("--data", glr_data, "CSV matrix, one observation per row")->required();
  cmd_glr->add_option("--h0", glr_h0, "exch | exch-p");
  cmd_glr->add_option("--p", glr_p, "mean under exch-p");
  cmd_glr->add_option("--alpha", glr_alpha, "test level");
  cmd_glr->add_flag("--header", glr_header, "skip the first line");
  cmd_glr->callback([&] {
    const CountData counts = counts_from_matrix(read_binary_csv_file(glr_data, glr_header));
    Hypothesis h0;
    if (glr_h0 == "exch")
      h0 = Hypothesis::exchangeable;
    else if (glr_h0 == "exch-p")
      h0 = Hypothesis::exchangeable_with_mean;
    else
      throw std::runtime_error("--h0 must be exch or exch-p");
    const GlrResult res = glr_test(counts, h0, glr_p, glr_alpha);
    if (res.low_count_warning)
      std::cerr << "warning: smallest expected cell count is " << res.min_expected
                << " (< 5); the chi-square approximation may be poor\n";
    out.stream() << to_json(res).dump(2) << '\n';
  });

  // ---- pex-rays ----
  auto* cmd_pex = app.add_subcommand("pex-rays", "extremal rays under partial exchangeability");
  int pex_d = 0;
  std::string pex_groups;
  std::string pex_means;
  cmd_pex->add_option("--d", pex_d, "dimension")->required();
  cmd_pex->add_option("--groups", pex_groups, "partition, e.g. \"1,2|3,4\"")->required();
  cmd_pex->add_option("--means", pex_means, "per-group means, e.g. \"0.5,0.25\"")->required();
  cmd_pex->callback([&] {
    const pex::PartitionSpec spec(pex_d, parse_groups(pex_groups));
    const auto rays = pex::pex_rays(spec, parse_reals(pex_means));
    out.stream() << pex_rays_to_json(spec, rays).dump(2) << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
