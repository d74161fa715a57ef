#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mldem/bench.hpp"
#include "mldem/descriptor.hpp"
#include "mldem/descriptor_io.hpp"
#include "mldem/image.hpp"
#include "mldem/index_io.hpp"
#include "mldem/parallel.hpp"
#include "mldem/search.hpp"
#include "mldem/synth.hpp"

namespace fs = std::filesystem;
using namespace mldem;

namespace {

struct Grid {
  std::size_t rows = 10;
  std::size_t cols = 10;
};

// "10x10" -> {10, 10}
Grid parse_grid(const std::string& text) {
  const auto x = text.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument("");
    std::size_t used = 0;
    Grid g{std::stoul(text.substr(0, x), &used), 0};
    if (used != x) throw std::invalid_argument("");
    g.cols = std::stoul(text.substr(x + 1), &used);
    if (used != text.size() - x - 1 || g.rows == 0 || g.cols == 0) throw std::invalid_argument("");
    return g;
  } catch (const std::logic_error&) {
    throw std::invalid_argument("grid must look like S1xS2, got '" + text + "'");
  }
}

// Class label from the leading digits of a file name, e.g. "00417_fa.pgm" -> 417.
int label_from_filename(const fs::path& path) {
  const std::string stem = path.stem().string();
  std::size_t n = 0;
  while (n < stem.size() && std::isdigit(static_cast<unsigned char>(stem[n]))) ++n;
  if (n == 0) throw std::invalid_argument("cannot derive a class label from '" + path.filename().string() + "'");
  return std::stoi(stem.substr(0, n));
}

std::vector<fs::path> pgm_files(const fs::path& in) {
  if (!fs::is_directory(in)) return {in};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(in)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no .pgm files in " + in.string());
  return files;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string::npos ? text.size() : comma;
    if (end > start) out.push_back(text.substr(start, end - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// Options shared by every search-running subcommand.
struct SearchOptions {
  std::string method = "mldem";
  std::string methods = "brute,dem,mldem,permsort";
  std::size_t e_max = 0;  // 0 = unlimited
  double emax_frac = 1.0;
  std::size_t m = 64;
  std::size_t t = 1;
  std::string phi = "simplified";
  std::size_t pivots = 32;
  double permsort_fraction = 0.1;
  std::uint64_t seed = 7;
};

SearchConfig make_config(const SearchOptions& o, Method method) {
  SearchConfig cfg;
  cfg.method = method;
  cfg.e_max = o.e_max > 0 ? o.e_max : SearchConfig::kUnlimited;
  cfg.m = o.m;
  cfg.t = o.t;
  if (o.phi == "full") {
    cfg.phi_variant = PhiVariant::kFull;
  } else if (o.phi != "simplified") {
    throw std::invalid_argument("--phi must be simplified or full");
  }
  cfg.permsort_pivots = o.pivots;
  cfg.permsort_fraction = o.permsort_fraction;
  return cfg;
}

void add_search_options(CLI::App* cmd, SearchOptions& o) {
  cmd->add_option("--m", o.m, "DEM candidate set size")->capture_default_str();
  cmd->add_option("--t", o.t, "number of parallel partitions")->capture_default_str();
  cmd->add_option("--phi", o.phi, "ML-DEM penalty: simplified or full")->capture_default_str();
  cmd->add_option("--pivots", o.pivots, "perm-sort pivot count")->capture_default_str();
  cmd->add_option("--permsort-fraction", o.permsort_fraction, "share of models perm-sort evaluates")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "perm-sort pivot seed")->capture_default_str();
}

SearchIndex build_index(const std::string& models_path, const std::string& metric, std::size_t delta, double beta) {
  auto models = load_descriptors(models_path);
  if (models.empty()) throw std::invalid_argument(models_path + " holds no descriptors");
  return SearchIndex::build(std::move(models), MetricConfig{parse_metric_kind(metric), delta}, beta);
}

int run_extract(const std::string& in, const std::string& out, const std::string& grid, std::size_t bins, double sigma,
                bool no_weight, bool median) {
  const Grid g = parse_grid(grid);
  const auto kernel = build_smoothing_kernel(bins, sigma);
  const HogParams params{g.rows, g.cols, !no_weight};
  std::vector<GridDescriptor> set;
  for (const auto& file : pgm_files(in)) {
    GrayImage img = read_pgm(file);
    if (median) img = median_filter(img);
    set.push_back(extract_descriptor(img, params, kernel, label_from_filename(file)));
  }
  save_descriptors(out, set);
  std::cerr << "wrote " << set.size() << " descriptors to " << out << '\n';
  return 0;
}

int run_synth(std::size_t classes, const std::string& grid, std::size_t bins, std::size_t samples, std::size_t queries,
              std::uint64_t seed, double alpha, double sigma, const std::string& prefix) {
  const Grid g = parse_grid(grid);
  SynthSpec spec;
  spec.classes = classes;
  spec.rows = g.rows;
  spec.cols = g.cols;
  spec.bins = bins;
  spec.samples_per_block = samples;
  spec.queries_per_class = queries;
  spec.seed = seed;
  spec.dirichlet_alpha = alpha;
  spec.sigma = sigma;
  const auto data = generate_synthetic(spec);
  save_descriptors(prefix + "_models.hgd", data.models);
  save_descriptors(prefix + "_queries.hgd", data.queries);
  std::cerr << "wrote " << prefix << "_models.hgd (" << data.models.size() << ") and " << prefix << "_queries.hgd ("
            << data.queries.size() << ")\n";
  return 0;
}

int run_index(const std::string& desc, const std::string& metric, std::size_t delta, double beta,
              const std::string& out) {
  const auto index = build_index(desc, metric, delta, beta);
  save_index(out, index);
  std::cerr << "indexed " << index.size() << " models, rho0 " << index.rho0() << ", first model " << index.r1()
            << '\n';
  return 0;
}

int run_query(const std::string& idx, const std::string& desc, const SearchOptions& o, const std::string& csv) {
  SearchIndex index = load_index(idx);
  const auto queries = load_descriptors(desc);
  SearchConfig cfg = make_config(o, parse_method(o.method));
  const SearchConfig cfgs[] = {cfg};
  prepare_index(index, cfgs, o.seed);
  std::unique_ptr<PartitionedIndex> parts;
  if (cfg.t > 1) parts = std::make_unique<PartitionedIndex>(index, cfg.t);

  std::ofstream file;
  if (!csv.empty()) file = open_out(csv);
  std::ostream& out = csv.empty() ? std::cout : file;
  out << "query_id,predicted,true,distance,l_checks,elapsed_us,early\n";
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const SearchResult r = parts ? parallel_search(*parts, queries[q], cfg) : search(index, queries[q], cfg);
    out << q << ',' << r.predicted_label << ',' << queries[q].label() << ',' << format_double(r.distance) << ','
        << r.l_checks << ',' << format_double(std::chrono::duration<double, std::micro>(r.elapsed).count()) << ','
        << (r.terminated_early ? 1 : 0) << '\n';
  }
  return 0;
}

int run_bench(const std::string& models, const std::string& queries_path, const std::string& metric,
              std::size_t delta, double beta, const SearchOptions& o, std::size_t workers, const std::string& csv) {
  SearchIndex index = build_index(models, metric, delta, beta);
  const auto queries = load_descriptors(queries_path);
  if (!(o.emax_frac > 0.0 && o.emax_frac <= 1.0)) throw std::invalid_argument("--emax-frac must lie in (0, 1]");
  std::vector<SearchConfig> cfgs;
  for (const auto& name : split_list(o.methods)) {
    SearchConfig cfg = make_config(o, parse_method(name));
    if (cfg.method != Method::kBrute) {
      cfg.e_max = static_cast<std::size_t>(std::ceil(o.emax_frac * static_cast<double>(index.size()) * (1.0 - 1e-12)));
    }
    cfgs.push_back(cfg);
  }
  prepare_index(index, cfgs, o.seed);
  const BenchReport report = run_benchmark(index, queries, cfgs, BenchOptions{workers, true});
  if (csv.empty()) {
    write_report_csv(std::cout, report);
  } else {
    auto out = open_out(csv);
    write_report_csv(out, report);
  }
  return 0;
}

int run_sweep(const std::string& models, const std::string& queries_path, const std::string& metric, std::size_t delta,
              double beta, const SearchOptions& o, const std::string& fractions, const std::string& csv) {
  SearchIndex index = build_index(models, metric, delta, beta);
  const auto queries = load_descriptors(queries_path);
  const SearchConfig cfg = make_config(o, parse_method(o.method));
  const SearchConfig cfgs[] = {cfg};
  prepare_index(index, cfgs, o.seed);
  std::vector<double> fs;
  for (const auto& f : split_list(fractions)) fs.push_back(std::stod(f));
  const auto rows = sweep_emax(index, queries, cfg, fs);
  if (csv.empty()) {
    write_sweep_csv(std::cout, method_label(cfg), rows);
  } else {
    auto out = open_out(csv);
    write_sweep_csv(out, method_label(cfg), rows);
  }
  return 0;
}

int run_validate(std::size_t trials, double tolerance, const std::string& grid, std::size_t bins, std::size_t samples,
                 std::uint64_t seed) {
  const Grid g = parse_grid(grid);
  SynthSpec spec;
  spec.rows = g.rows;
  spec.cols = g.cols;
  spec.bins = bins;
  spec.samples_per_block = samples;
  spec.seed = seed;
  const auto rep = validate_asymptotics(spec, trials, AsymptoticsTolerance{tolerance, 2 * tolerance, 2 * tolerance});
  std::printf("trials %zu  blocks %zu  p %g  n %g\n", rep.trials, rep.blocks, rep.p, rep.n);
  std::printf("same-class mean      %.4f  reference %.4f  error %.2f%%  %s\n", rep.same_mean, rep.reference_mean,
              100 * rep.mean_error, rep.mean_ok ? "ok" : "FAIL");
  std::printf("same-class variance  %.4f  reference %.4f  error %.2f%%  %s\n", rep.same_variance,
              rep.reference_variance, 100 * rep.variance_error, rep.variance_ok ? "ok" : "FAIL");
  std::printf("other-class shift    %.6f  reference %.6f  error %.2f%%  %s\n", rep.shift_mean, rep.reference_shift,
              100 * rep.shift_error, rep.shift_ok ? "ok" : "off");
  std::printf("%s\n", rep.passed() ? "PASS" : "FAIL");
  return rep.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid-of-HOG descriptors and maximum-likelihood directed enumeration search"};
  app.require_subcommand(1);

  // extract
  std::string in, out, grid = "10x10";
  std::size_t bins = 8;
  double sigma = 0.0;
  bool no_weight = false, median = false;
  auto* extract = app.add_subcommand("extract", "compute descriptors for PGM images");
  extract->add_option("--in", in, "PGM file or directory")->required();
  extract->add_option("--out", out, "descriptor file")->required();
  extract->add_option("--grid", grid, "S1xS2")->capture_default_str();
  extract->add_option("--bins", bins, "orientation bins")->capture_default_str();
  extract->add_option("--sigma", sigma, "bin smoothing width, 0 disables")->capture_default_str();
  extract->add_flag("--no-weight", no_weight, "count pixels instead of summing gradient magnitude");
  extract->add_flag("--median", median, "3x3 median filter before gradients");

  // synth
  std::size_t classes = 1000, samples = 200, queries_per_class = 2;
  std::uint64_t seed = 1;
  double alpha = 1.0;
  auto* synth = app.add_subcommand("synth", "generate a Dirichlet-multinomial dataset");
  synth->add_option("--classes", classes)->capture_default_str();
  synth->add_option("--grid", grid)->capture_default_str();
  synth->add_option("--bins", bins)->capture_default_str();
  synth->add_option("--samples", samples, "samples per block")->capture_default_str();
  synth->add_option("--queries", queries_per_class, "queries per class")->capture_default_str();
  synth->add_option("--seed", seed)->capture_default_str();
  synth->add_option("--alpha", alpha, "Dirichlet concentration")->capture_default_str();
  synth->add_option("--sigma", sigma, "bin smoothing width")->capture_default_str();
  synth->add_option("--out", out, "prefix; writes <prefix>_models.hgd and <prefix>_queries.hgd")->required();

  // index
  std::string desc, metric = "kl";
  std::size_t delta = 0;
  double beta = 0.01;
  auto* index = app.add_subcommand("index", "build a search index");
  index->add_option("--desc", desc, "model descriptor file")->required();
  index->add_option("--metric", metric, "kl or htpnn")->capture_default_str();
  index->add_option("--delta", delta, "block alignment radius")->capture_default_str();
  index->add_option("--beta", beta, "false-accept rate for the threshold")->capture_default_str();
  index->add_option("--out", out, "index file")->required();

  // query
  SearchOptions so;
  std::string idx, csv;
  auto* query = app.add_subcommand("query", "search an index, one CSV row per query");
  query->add_option("--idx", idx, "index file")->required();
  query->add_option("--desc", desc, "query descriptor file")->required();
  query->add_option("--method", so.method, "brute, dem, mldem or permsort")->capture_default_str();
  query->add_option("--emax", so.e_max, "evaluation budget, 0 = all models")->capture_default_str();
  query->add_option("--csv", csv, "output file (stdout if omitted)");
  add_search_options(query, so);

  // bench
  std::string models, queries;
  std::size_t workers = 1;
  auto* bench = app.add_subcommand("bench", "compare search methods on a labelled query set");
  bench->add_option("--models", models)->required();
  bench->add_option("--queries", queries)->required();
  bench->add_option("--metric", metric)->capture_default_str();
  bench->add_option("--delta", delta)->capture_default_str();
  bench->add_option("--beta", beta)->capture_default_str();
  bench->add_option("--methods", so.methods, "comma-separated")->capture_default_str();
  bench->add_option("--emax-frac", so.emax_frac, "budget as a share of R for non-brute methods")
      ->capture_default_str();
  bench->add_option("--workers", workers, "query threads; 1 gives clean timings")->capture_default_str();
  bench->add_option("--csv", csv, "output file (stdout if omitted)");
  add_search_options(bench, so);

  // sweep
  std::string fractions = "0.05,0.1,0.2,0.5,1.0";
  auto* sweep = app.add_subcommand("sweep", "error and checks as a function of the budget");
  sweep->add_option("--models", models)->required();
  sweep->add_option("--queries", queries)->required();
  sweep->add_option("--metric", metric)->capture_default_str();
  sweep->add_option("--delta", delta)->capture_default_str();
  sweep->add_option("--beta", beta)->capture_default_str();
  sweep->add_option("--method", so.method)->capture_default_str();
  sweep->add_option("--fractions", fractions, "comma-separated shares of R")->capture_default_str();
  sweep->add_option("--csv", csv, "output file (stdout if omitted)");
  add_search_options(sweep, so);

  // validate
  std::size_t trials = 5000;
  double tolerance = 0.15;
  std::string vgrid = "2x2";
  std::size_t vsamples = 1000;
  auto* validate = app.add_subcommand("validate", "Monte-Carlo check of the large-sample distance law");
  validate->add_option("--trials", trials)->capture_default_str();
  validate->add_option("--tolerance", tolerance, "relative error allowed on the mean (twice that on the variance)")
      ->capture_default_str();
  validate->add_option("--grid", vgrid)->capture_default_str();
  validate->add_option("--bins", bins)->capture_default_str();
  validate->add_option("--samples", vsamples)->capture_default_str();
  validate->add_option("--seed", seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*extract) return run_extract(in, out, grid, bins, sigma, no_weight, median);
    if (*synth) return run_synth(classes, grid, bins, samples, queries_per_class, seed, alpha, sigma, out);
    if (*index) return run_index(desc, metric, delta, beta, out);
    if (*query) return run_query(idx, desc, so, csv);
    if (*bench) return run_bench(models, queries, metric, delta, beta, so, workers, csv);
    if (*sweep) return run_sweep(models, queries, metric, delta, beta, so, fractions, csv);
    if (*validate) return run_validate(trials, tolerance, vgrid, bins, vsamples, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
