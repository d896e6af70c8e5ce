// mcmarg: command-line front end.
//
//   mcmarg gen    --k 3 --dim 16 --n 3000 --sep 10 --sigma 1 --seed 1 --out data/
//   mcmarg fit    --vectors data/vectors.bin --k 3 --out model.json
//   mcmarg assign --model model.json --vectors data/vectors.bin --out pred.txt
//   mcmarg eval   --truth data/labels.txt --pred pred.txt [--baseline kmeans ...]
//   mcmarg bench-samples --model model.json --vectors ... --truth ... --out bench.csv
//
// Every command that writes files also writes a key=value manifest next to
// its primary output.

#include <mcmarg/mcmarg.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifndef MCMARG_VERSION
#define MCMARG_VERSION "dev"
#endif

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

class UsageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! Reproducibility record written next to each command's outputs.
struct RunManifest
{
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> flags;
  std::vector<std::pair<std::string, std::string>> inputs;
  std::vector<std::pair<std::string, std::string>> outputs;
  double wall_ms = 0.0;

  void capture_flags(const CLI::App& app)
  {
    for (const CLI::Option* opt : app.get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help") {
        continue;
      }
      std::string value;
      if (opt->count() > 0) {
        for (const auto& r : opt->results()) {
          value += (value.empty() ? "" : ",") + r;
        }
      } else {
        value = opt->get_default_str();
      }
      flags.emplace_back(name, value);
    }
  }

  void write(const fs::path& path) const
  {
    std::ostringstream out;
    out << "command=" << command << "\n";
    out << "version=" << MCMARG_VERSION << "\n";
    out << "seed=" << seed << "\n";
    for (const auto& [k, v] : flags) {
      out << "flag." << k << "=" << v << "\n";
    }
    for (const auto& [k, v] : inputs) {
      out << "input." << k << "=" << v << "\n";
    }
    for (const auto& [k, v] : outputs) {
      out << "output." << k << "=" << v << "\n";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", wall_ms);
    out << "wall_time_ms=" << buf << "\n";
    mcmarg::detail::write_file(path, out.str());
  }
};

fs::path sibling(const fs::path& primary, const std::string& suffix)
{
  return fs::path(primary.string() + suffix);
}

double elapsed_ms(Clock::time_point t0)
{
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

mcmarg::Dataset read_vectors(const std::string& path, const std::string& format)
{
  const auto fmt = format == "auto" ? mcmarg::guess_vector_format(path)
                                    : mcmarg::parse_vector_format(format);
  return mcmarg::load_vectors(path, fmt);
}

void require(bool ok, const std::string& message)
{
  if (!ok) {
    throw UsageError(message);
  }
}

// ---------------------------------------------------------------------------

struct GenArgs
{
  std::size_t k = 3;
  std::size_t dim = 16;
  std::size_t n = 3000;
  double sep = 10.0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "binary";
};

int run_gen(const GenArgs& a, const CLI::App& app)
{
  const auto t0 = Clock::now();
  mcmarg::SyntheticSpec spec{ a.k, a.dim, a.n, a.sep, a.sigma, a.seed };
  spec.validate();
  const auto fmt = mcmarg::parse_vector_format(a.format);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  const fs::path vectors = dir / (fmt == mcmarg::VectorFormat::binary ? "vectors.bin" : "vectors.csv");
  const fs::path labels = dir / "labels.txt";
  const fs::path model = dir / "model.json";

  const auto [data, truth, params] = mcmarg::gen_synthetic(spec);
  mcmarg::save_vectors(data, vectors, fmt);
  mcmarg::save_labels(truth, labels);
  mcmarg::save_model(params, model);

  const auto reread = mcmarg::load_vectors(vectors, fmt);
  require(reread.size() == a.n && reread.dim() == a.dim, "vector file failed validation");
  require(mcmarg::load_labels(labels).size() == a.n, "label file failed validation");
  require(mcmarg::load_model(model) == params, "model file failed validation");

  RunManifest m;
  m.command = "gen";
  m.seed = a.seed;
  m.capture_flags(app);
  m.outputs = { { "vectors", vectors.string() }, { "labels", labels.string() }, { "model", model.string() } };
  m.wall_ms = elapsed_ms(t0);
  m.write(dir / "manifest.txt");
  std::cout << "wrote " << vectors.string() << ", " << labels.string() << ", " << model.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct FitArgs
{
  std::string vectors;
  std::string format = "auto";
  std::size_t k = 64;
  std::size_t steps = 3000;
  double lr = 1e-4;
  std::size_t units = 32;
  std::size_t batch = 0;
  std::size_t bins = 256;
  std::uint64_t seed = 0;
  std::string init = "kmeans++";
  bool standardize = false;
  std::string out;
  std::string trace;
};

//! Maps a model fitted on standardized data back to the original coordinates.
mcmarg::GmmParams unstandardize(mcmarg::GmmParams p, const mcmarg::Standardization& s)
{
  p.means = (p.means.array().rowwise() * s.scale.transpose().array()).rowwise() +
            s.mean.transpose().array();
  p.log_stds = p.log_stds.rowwise() + s.scale.array().log().matrix().transpose();
  return p;
}

int run_fit(const FitArgs& a, const CLI::App& app)
{
  const auto t0 = Clock::now();
  mcmarg::FitConfig config;
  config.steps = a.steps;
  config.lr = a.lr;
  config.units_per_step = a.units;
  config.batch = a.batch;
  config.bins = a.bins;
  config.seed = a.seed;
  config.init = mcmarg::parse_init_strategy(a.init);
  config.validate();

  const mcmarg::Dataset raw = read_vectors(a.vectors, a.format);
  require(a.k >= 1 && a.k <= raw.size(),
          "--k must be in [1, n] (n=" + std::to_string(raw.size()) + ")");

  mcmarg::FitResult result;
  if (a.standardize) {
    const auto [z, stats] = mcmarg::standardize(raw);
    result = mcmarg::fit(z, a.k, config);
    result.params = unstandardize(std::move(result.params), stats);
  } else {
    result = mcmarg::fit(raw, a.k, config);
  }

  const fs::path model(a.out);
  const fs::path trace = a.trace.empty() ? sibling(model, ".trace.csv") : fs::path(a.trace);
  mcmarg::save_model(result.params, model);
  mcmarg::save_trace_csv(result.trace, trace);
  require(mcmarg::load_model(model) == result.params, "model file failed validation");

  RunManifest m;
  m.command = "fit";
  m.seed = a.seed;
  m.capture_flags(app);
  m.inputs = { { "vectors", a.vectors } };
  m.outputs = { { "model", model.string() }, { "trace", trace.string() } };
  m.wall_ms = elapsed_ms(t0);
  m.write(sibling(model, ".manifest"));

  const auto& loss = result.trace.loss;
  std::printf("fitted K=%zu d=%zu in %zu steps; final loss %.6f (%.1f s)\n", a.k, raw.dim(),
              loss.size(), loss.back(), result.trace.wall_ms / 1000.0);
  return 0;
}

// ---------------------------------------------------------------------------

struct AssignArgs
{
  std::string model;
  std::string vectors;
  std::string format = "auto";
  std::size_t samples = 60000;
  std::size_t knn = 50;
  std::uint64_t seed = 0;
  std::string mode = "vote";
  std::string out;
};

mcmarg::AssignConfig assign_config(std::size_t samples, std::size_t knn, std::uint64_t seed,
                                   const std::string& mode)
{
  mcmarg::AssignConfig c;
  c.total_samples = samples;
  c.k_neighbors = knn;
  c.seed = seed;
  c.mode = mcmarg::parse_assign_mode(mode);
  require(knn >= 1, "--knn must be >= 1");
  require(knn <= samples, "--knn must not exceed --samples");
  return c;
}

void check_dims(const mcmarg::GmmParams& model, const mcmarg::Dataset& data)
{
  require(model.dim() == data.dim(), "dimension mismatch: model has d=" + std::to_string(model.dim()) +
                                       ", vectors have d=" + std::to_string(data.dim()));
}

int run_assign(const AssignArgs& a, const CLI::App& app)
{
  const auto t0 = Clock::now();
  const auto config = assign_config(a.samples, a.knn, a.seed, a.mode);
  const auto params = mcmarg::load_model(a.model);
  const auto data = read_vectors(a.vectors, a.format);
  check_dims(params, data);
  config.validate(params.components());

  const auto labels = mcmarg::assign(params, data, config);
  const fs::path out(a.out);
  mcmarg::save_labels(labels, out);
  require(mcmarg::load_labels(out) == labels, "label file failed validation");

  RunManifest m;
  m.command = "assign";
  m.seed = a.seed;
  m.capture_flags(app);
  m.inputs = { { "model", a.model }, { "vectors", a.vectors } };
  m.outputs = { { "labels", out.string() } };
  m.wall_ms = elapsed_ms(t0);
  m.write(sibling(out, ".manifest"));
  std::printf("assigned %zu points\n", labels.size());
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs
{
  std::string truth;
  std::string pred;
  std::string baseline;
  std::string vectors;
  std::string format = "auto";
  std::size_t k = 64;
  std::uint64_t seed = 0;
  std::size_t max_iters = 300;
  double tol = 1e-6;
  std::size_t n_init = 10;
};

int run_eval(const EvalArgs& a)
{
  const auto truth = mcmarg::load_labels(a.truth);
  const auto pred = mcmarg::load_labels(a.pred);
  require(truth.size() == pred.size(), "label files differ in length (" + std::to_string(truth.size()) +
                                         " vs " + std::to_string(pred.size()) + ")");
  const double score = mcmarg::ari(truth, pred);
  std::printf("ari=%.6f\n", score);
  if (a.baseline.empty()) {
    return 0;
  }
  require(a.baseline == "kmeans", "unknown baseline: " + a.baseline);
  require(!a.vectors.empty(), "--baseline kmeans needs --vectors");
  const auto data = read_vectors(a.vectors, a.format);
  require(data.size() == truth.size(), "vector count does not match the label files");
  mcmarg::KMeansOptions opts;
  opts.max_iters = a.max_iters;
  opts.n_init = a.n_init;
  opts.tol = a.tol;
  opts.seed = a.seed;
  const auto km = mcmarg::kmeans_fit(data, a.k, opts);
  const double km_score = mcmarg::ari(truth, km.labels);

  std::printf("%-20s %s\n", "method", "ari");
  std::printf("%-20s %.6f\n", "mcmarg", score);
  std::printf("%-20s %.6f\n", "kmeans", km_score);
  for (const char* absent : { "minibatch-kmeans", "agglomerative", "birch" }) {
    std::printf("%-20s %s\n", absent, "absent");
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs
{
  std::string model;
  std::string vectors;
  std::string format = "auto";
  std::string truth;
  std::vector<std::size_t> sizes{ 1000, 5000, 10000, 60000, 600000 };
  std::size_t knn = 50;
  std::uint64_t seed = 0;
  std::string out;
};

int run_bench(const BenchArgs& a, const CLI::App& app)
{
  const auto t0 = Clock::now();
  const auto params = mcmarg::load_model(a.model);
  const auto data = read_vectors(a.vectors, a.format);
  const auto truth = mcmarg::load_labels(a.truth);
  check_dims(params, data);
  require(truth.size() == data.size(), "truth labels do not match the vector count");
  require(!a.sizes.empty(), "--sizes must list at least one pool size");

  std::string csv = "samples,ari\n";
  for (std::size_t size : a.sizes) {
    const auto config = assign_config(size, a.knn, a.seed, "vote");
    config.validate(params.components());
    const auto labels = mcmarg::assign(params, data, config);
    char row[64];
    std::snprintf(row, sizeof row, "%zu,%.6f\n", size, mcmarg::ari(truth, labels));
    csv += row;
  }
  if (a.out.empty()) {
    std::cout << csv;
    return 0;
  }
  const fs::path out(a.out);
  mcmarg::detail::write_file(out, csv);
  require(mcmarg::detail::read_file(out) == csv, "bench file failed validation");

  RunManifest m;
  m.command = "bench-samples";
  m.seed = a.seed;
  m.capture_flags(app);
  m.inputs = { { "model", a.model }, { "vectors", a.vectors }, { "truth", a.truth } };
  m.outputs = { { "bench", out.string() } };
  m.wall_ms = elapsed_ms(t0);
  m.write(sibling(out, ".manifest"));
  std::cout << csv;
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{ "Gaussian-mixture clustering by Monte-Carlo marginalization" };
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(MCMARG_VERSION));

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a labelled synthetic dataset");
  gen_cmd->add_option("--k", gen.k, "Number of components")->capture_default_str();
  gen_cmd->add_option("--dim", gen.dim, "Dimensionality")->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "Number of points")->capture_default_str();
  gen_cmd->add_option("--sep", gen.sep, "Center spacing")->capture_default_str();
  gen_cmd->add_option("--sigma", gen.sigma, "Per-dimension std")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  gen_cmd->add_option("--format", gen.format, "Vector file format (binary|csv)")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a GMM by Monte-Carlo marginalization");
  fit_cmd->add_option("--vectors", fit.vectors, "Input vector file")->required();
  fit_cmd->add_option("--format", fit.format, "auto|binary|csv")->capture_default_str();
  fit_cmd->add_option("--k", fit.k, "Number of components")->capture_default_str();
  fit_cmd->add_option("--steps", fit.steps, "Adam iterations")->capture_default_str();
  fit_cmd->add_option("--lr", fit.lr, "Learning rate")->capture_default_str();
  fit_cmd->add_option("--units", fit.units, "Unit vectors per step")->capture_default_str();
  fit_cmd->add_option("--batch", fit.batch, "Points per step (0 = min(n, 4096))")->capture_default_str();
  fit_cmd->add_option("--bins", fit.bins, "Grid bins per marginal")->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed, "RNG seed")->capture_default_str();
  fit_cmd->add_option("--init", fit.init, "kmeans++|random")->capture_default_str();
  fit_cmd->add_flag("--standardize", fit.standardize, "Fit on standardized data");
  fit_cmd->add_option("--out", fit.out, "Output model file")->required();
  fit_cmd->add_option("--trace", fit.trace, "Trace CSV (default <out>.trace.csv)");

  AssignArgs asg;
  auto* asg_cmd = app.add_subcommand("assign", "Label vectors with a fitted model");
  asg_cmd->add_option("--model", asg.model, "Model file")->required();
  asg_cmd->add_option("--vectors", asg.vectors, "Vector file")->required();
  asg_cmd->add_option("--format", asg.format, "auto|binary|csv")->capture_default_str();
  asg_cmd->add_option("--samples", asg.samples, "Reference pool size")->capture_default_str();
  asg_cmd->add_option("--knn", asg.knn, "Neighbors per vote")->capture_default_str();
  asg_cmd->add_option("--seed", asg.seed, "RNG seed")->capture_default_str();
  asg_cmd->add_option("--mode", asg.mode, "vote|argmax")->capture_default_str();
  asg_cmd->add_option("--out", asg.out, "Output label file")->required();

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Adjusted Rand Index between two label files");
  ev_cmd->add_option("--truth", ev.truth, "Reference labels")->required();
  ev_cmd->add_option("--pred", ev.pred, "Predicted labels")->required();
  ev_cmd->add_option("--baseline", ev.baseline, "Also evaluate a baseline (kmeans)");
  ev_cmd->add_option("--vectors", ev.vectors, "Vectors for the baseline");
  ev_cmd->add_option("--format", ev.format, "auto|binary|csv")->capture_default_str();
  ev_cmd->add_option("--k", ev.k, "Baseline cluster count")->capture_default_str();
  ev_cmd->add_option("--seed", ev.seed, "Baseline RNG seed")->capture_default_str();
  ev_cmd->add_option("--max-iters", ev.max_iters, "Baseline Lloyd iterations")->capture_default_str();
  ev_cmd->add_option("--n-init", ev.n_init, "Baseline restarts")->capture_default_str();
  ev_cmd->add_option("--tol", ev.tol, "Baseline relative centroid tolerance")->capture_default_str();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench-samples", "ARI as a function of the reference pool size");
  bench_cmd->add_option("--model", bench.model, "Model file")->required();
  bench_cmd->add_option("--vectors", bench.vectors, "Vector file")->required();
  bench_cmd->add_option("--format", bench.format, "auto|binary|csv")->capture_default_str();
  bench_cmd->add_option("--truth", bench.truth, "Reference labels")->required();
  bench_cmd->add_option("--sizes", bench.sizes, "Pool sizes")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--knn", bench.knn, "Neighbors per vote")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "RNG seed")->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "Output CSV (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen_cmd->parsed()) {
      return run_gen(gen, *gen_cmd);
    }
    if (fit_cmd->parsed()) {
      return run_fit(fit, *fit_cmd);
    }
    if (asg_cmd->parsed()) {
      return run_assign(asg, *asg_cmd);
    }
    if (ev_cmd->parsed()) {
      return run_eval(ev);
    }
    if (bench_cmd->parsed()) {
      return run_bench(bench, *bench_cmd);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
