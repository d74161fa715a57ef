#include "mldem/search.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <thread>

namespace mldem {

DistanceMatrix::DistanceMatrix(std::size_t size, std::vector<double> values)
    : size_(size), values_(std::move(values)) {
  if (values_.size() != size_ * size_) throw std::invalid_argument("distance matrix must be R x R");
}

DistanceMatrix DistanceMatrix::submatrix(std::span<const std::size_t> ids) const {
  DistanceMatrix sub(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = 0; j < ids.size(); ++j) sub.at(i, j) = (*this)(ids[i], ids[j]);
  }
  return sub;
}

DistanceMatrix build_distance_matrix(std::span<const PreparedDescriptor> models, const MetricConfig& metric) {
  if (models.empty()) throw std::invalid_argument("distance matrix needs at least one model");
  for (const auto& m : models) {
    if (!m.descriptor().same_shape(models.front().descriptor())) {
      throw std::invalid_argument("models have different dimensions");
    }
  }
  const std::size_t r = models.size();
  DistanceMatrix matrix(r);
  auto fill_rows = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        if (i != j) matrix.at(i, j) = grid_distance(models[i], models[j], metric);
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, r);
  if (workers == 1) {
    fill_rows(0, r);
    return matrix;
  }
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back(fill_rows, w * r / workers, (w + 1) * r / workers);
    }
  }
  return matrix;
}

DistanceMatrix build_distance_matrix(std::span<const GridDescriptor> models, const MetricConfig& metric) {
  std::vector<PreparedDescriptor> prepared;
  prepared.reserve(models.size());
  for (const auto& m : models) prepared.emplace_back(m, metric.epsilon);
  return build_distance_matrix(std::span<const PreparedDescriptor>(prepared), metric);
}

double compute_threshold(const DistanceMatrix& matrix, double beta) {
  const std::size_t r = matrix.size();
  if (r < 2) throw std::invalid_argument("threshold undefined");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  std::vector<double> off;
  off.reserve(r * (r - 1));
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      if (i != j) off.push_back(matrix(i, j));
    }
  }
  // relative slack keeps products like 0.25 * 4 from rounding up a rank
  const double scaled = beta * static_cast<double>(off.size());
  auto rank = static_cast<std::size_t>(std::ceil(scaled * (1.0 - 1e-12)));
  rank = std::clamp<std::size_t>(rank, 1, off.size());
  auto nth = off.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(off.begin(), nth, off.end());
  return *nth;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace {

// ln Phi(x) for x >= 0, accurate in the tail where Phi is close to 1.
double log_upper_cdf(double x) { return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2)); }

// Beyond this argument |ln Phi(x)| < 1e-23, below any double's resolution of
// a sum that already contains ln(1/2) from the r == v factor.
constexpr double kNegligibleArgument = 10.0;

}  // namespace

std::size_t select_first_model(const DistanceMatrix& matrix, double nK) {
  const std::size_t r = matrix.size();
  if (r == 0) throw std::invalid_argument("empty distance matrix");
  if (!(nK > 0.0)) throw std::invalid_argument("nK must be positive");
  const double scale = std::sqrt(nK) / 2.0;

  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<double> roots(r);
  std::vector<double> log_products(r);
  for (std::size_t mu = 0; mu < r; ++mu) {
    for (std::size_t i = 0; i < r; ++i) roots[i] = std::sqrt(std::max(matrix(i, mu), 0.0));
    std::sort(roots.begin(), roots.end());
    // Each v's product only depends on its position in the sorted column.
    for (std::size_t v = 0; v < r; ++v) {
      double acc = 0.0;
      for (std::size_t k = v + 1; k-- > 0;) {
        const double arg = scale * (roots[v] - roots[k]);
        if (arg >= kNegligibleArgument) break;
        acc += log_upper_cdf(arg);
      }
      for (std::size_t k = v + 1; k < r; ++k) {
        const double arg = scale * (roots[k] - roots[v]);
        if (arg >= kNegligibleArgument) break;
        acc += log_upper_cdf(arg);
      }
      log_products[v] = acc;
    }
    const double peak = *std::max_element(log_products.begin(), log_products.end());
    double sum = 0.0;
    for (double lp : log_products) sum += std::exp(lp - peak);
    const double score = peak + std::log(sum);
    if (score > best_score) {
      best_score = score;
      best = mu;
    }
  }
  return best;
}

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::kBrute:
      return "brute";
    case Method::kDem:
      return "dem";
    case Method::kMlDem:
      return "mldem";
    case Method::kPermSort:
      return "permsort";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "brute") return Method::kBrute;
  if (name == "dem") return Method::kDem;
  if (name == "mldem") return Method::kMlDem;
  if (name == "permsort") return Method::kPermSort;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

double phi(double rho_query, double rho_model, const PhiParams& params, bool* degenerate) {
  if (params.variant == PhiVariant::kFull) {
    const double denom = 4.0 * rho_model + params.p / params.n;
    const double diff = rho_query - rho_model - params.p / (2.0 * params.n);
    return diff * diff / denom + std::log(denom) / (4.0 * params.n * params.blocks);
  }
  const double diff = rho_query - rho_model;
  if (rho_model <= 0.0) {
    if (degenerate) *degenerate = true;
    return diff * diff / (params.p / params.n);
  }
  return diff * diff / (4.0 * rho_model);
}

namespace {

std::size_t effective_emax(const SearchConfig& cfg, std::size_t models) {
  return std::clamp<std::size_t>(cfg.e_max, 1, models);
}

bool cancelled(const std::atomic<bool>* cancel) {
  return cancel != nullptr && cancel->load(std::memory_order_relaxed);
}

// Shared bookkeeping for every enumeration: evaluation count, order and best.
class Tracker {
 public:
  Tracker(std::size_t models, const DistanceOracle& oracle) : oracle_(oracle), checked_(models, 0) {}

  double evaluate(std::size_t j) {
    const double d = oracle_(j);
    checked_[j] = 1;
    result_.checked.push_back(j);
    ++result_.l_checks;
    if (d < result_.distance || (d == result_.distance && j < result_.model_index)) {
      result_.distance = d;
      result_.model_index = j;
    }
    return d;
  }

  bool is_checked(std::size_t j) const { return checked_[j] != 0; }
  std::span<const std::uint8_t> checked() const { return checked_; }
  std::size_t l_checks() const { return result_.l_checks; }
  SearchResult& result() { return result_; }

 private:
  const DistanceOracle& oracle_;
  std::vector<std::uint8_t> checked_;
  SearchResult result_;
};

}  // namespace

SearchResult enumerate_brute(std::size_t models, const DistanceOracle& oracle, const std::atomic<bool>* cancel) {
  if (models == 0) throw std::invalid_argument("empty index");
  Tracker t(models, oracle);
  for (std::size_t j = 0; j < models; ++j) {
    if (cancelled(cancel)) break;
    t.evaluate(j);
  }
  return std::move(t.result());
}

SearchResult enumerate_dem(const EnumerationSpace& space, const SearchConfig& cfg, const DistanceOracle& oracle,
                           const std::atomic<bool>* cancel) {
  const std::size_t r = space.matrix.size();
  if (r == 0) throw std::invalid_argument("empty index");
  const std::size_t emax = effective_emax(cfg, r);
  const std::size_t m = std::clamp<std::size_t>(cfg.m, 1, r);
  Tracker t(r, oracle);
  if (cancelled(cancel)) return std::move(t.result());

  const double d1 = t.evaluate(space.r1);
  if (d1 < space.rho0) {
    t.result().terminated_early = true;
    return std::move(t.result());
  }

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  queue.emplace(d1, space.r1);
  std::vector<Entry> candidates;
  candidates.reserve(r);

  while (!queue.empty() && t.l_checks() < emax) {
    const auto [di, i] = queue.top();
    queue.pop();
    // Models whose distance to X_i deviates least from rho(X, X_i).
    candidates.clear();
    for (std::size_t j = 0; j < r; ++j) {
      if (!t.is_checked(j)) candidates.emplace_back(std::abs(space.matrix(j, i) - di), j);
    }
    const std::size_t take = std::min(m, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end());
    for (std::size_t c = 0; c < take; ++c) {
      if (t.l_checks() >= emax || cancelled(cancel)) return std::move(t.result());
      const std::size_t j = candidates[c].second;
      const double d = t.evaluate(j);
      if (d < space.rho0) {
        t.result().terminated_early = true;
        return std::move(t.result());
      }
      queue.emplace(d, j);
    }
  }
  return std::move(t.result());
}

SearchResult enumerate_mldem(const EnumerationSpace& space, const SearchConfig& cfg, const DistanceOracle& oracle,
                             const std::atomic<bool>* cancel, const MlDemObserver* observer) {
  const std::size_t r = space.matrix.size();
  if (r == 0) throw std::invalid_argument("empty index");
  const std::size_t emax = effective_emax(cfg, r);
  Tracker t(r, oracle);
  if (cancelled(cancel)) return std::move(t.result());

  std::size_t last = space.r1;
  double d = t.evaluate(last);
  if (d < space.rho0) {
    t.result().terminated_early = true;
    return std::move(t.result());
  }

  std::vector<double> scores(r, 0.0);
  while (t.l_checks() < emax) {
    std::size_t next = r;
    double next_score = std::numeric_limits<double>::infinity();
    for (std::size_t mu = 0; mu < r; ++mu) {
      if (t.is_checked(mu)) continue;
      bool degenerate = false;
      scores[mu] += phi(d, space.matrix(mu, last), space.phi, &degenerate);
      if (degenerate) ++t.result().phi_degeneracies;
      if (next == r || scores[mu] < next_score) {
        next = mu;
        next_score = scores[mu];
      }
    }
    if (observer != nullptr && *observer) (*observer)(MlDemStep{t.l_checks(), scores, t.checked()});
    if (next == r || cancelled(cancel)) break;
    last = next;
    d = t.evaluate(last);
    if (d < space.rho0) {
      t.result().terminated_early = true;
      break;
    }
  }
  return std::move(t.result());
}

// --- SearchIndex ------------------------------------------------------------

double mean_sample_mass(std::span<const GridDescriptor> models) {
  if (models.empty()) return 1.0;
  double total = 0.0;
  for (const auto& m : models) total += static_cast<double>(m.total_count());
  const double mean = total / static_cast<double>(models.size());
  return mean > 0.0 ? mean : static_cast<double>(models.front().blocks());
}

SearchIndex SearchIndex::build(std::vector<GridDescriptor> models, const MetricConfig& metric, double beta) {
  if (models.empty()) throw std::invalid_argument("empty index");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  SearchIndex index;
  index.metric_ = metric;
  index.beta_ = beta;
  index.nK_ = mean_sample_mass(models);
  index.models_.reserve(models.size());
  for (auto& m : models) index.models_.emplace_back(std::move(m), metric.epsilon);
  index.matrix_ = build_distance_matrix(std::span<const PreparedDescriptor>(index.models_), metric);
  index.rho0_ = index.size() >= 2 ? compute_threshold(index.matrix_, beta) : 0.0;
  index.r1_ = select_first_model(index.matrix_, index.nK_);
  return index;
}

SearchIndex SearchIndex::from_parts(std::vector<GridDescriptor> models, DistanceMatrix matrix,
                                    const MetricConfig& metric, double beta, double rho0, std::size_t r1, double nK) {
  if (models.empty()) throw std::invalid_argument("empty index");
  if (matrix.size() != models.size()) throw std::invalid_argument("matrix size differs from model count");
  if (r1 >= models.size()) throw std::invalid_argument("first model index out of range");
  if (!(nK > 0.0)) throw std::invalid_argument("nK must be positive");
  for (const auto& m : models) {
    if (!m.same_shape(models.front())) throw std::invalid_argument("models have different dimensions");
  }
  SearchIndex index;
  index.metric_ = metric;
  index.beta_ = beta;
  index.rho0_ = rho0;
  index.r1_ = r1;
  index.nK_ = nK;
  index.matrix_ = std::move(matrix);
  index.models_.reserve(models.size());
  for (auto& m : models) index.models_.emplace_back(std::move(m), metric.epsilon);
  return index;
}

void SearchIndex::build_permsort(std::size_t pivots, std::uint64_t seed) {
  permsort_ = permsort_build(matrix_, pivots, seed);
}

PhiParams SearchIndex::phi_params(const SearchConfig& cfg) const {
  PhiParams params;
  params.variant = cfg.phi_variant;
  params.blocks = static_cast<double>(blocks());
  params.p = cfg.p > 0 ? static_cast<double>(cfg.p) : static_cast<double>(std::max<std::size_t>(bins(), 2) - 1);
  params.n = nK_ / params.blocks;
  return params;
}

namespace {

SearchResult finish(const SearchIndex& index, SearchResult result, std::chrono::steady_clock::time_point start) {
  result.elapsed = std::chrono::steady_clock::now() - start;
  if (result.found()) result.predicted_label = index.model(result.model_index).descriptor().label();
  return result;
}

void check_query(const SearchIndex& index, const GridDescriptor& query) {
  if (!query.same_shape(index.model(0).descriptor())) {
    throw std::invalid_argument("query shape differs from the indexed models");
  }
}

}  // namespace

SearchResult search(const SearchIndex& index, const GridDescriptor& query, const SearchConfig& cfg,
                    const std::atomic<bool>* cancel) {
  const auto start = std::chrono::steady_clock::now();
  check_query(index, query);
  const PreparedDescriptor prepared(query, index.metric().epsilon);
  const DistanceOracle oracle = [&](std::size_t j) { return grid_distance(prepared, index.model(j), index.metric()); };
  const EnumerationSpace space{index.matrix(), cfg.rho0_override.value_or(index.rho0()), index.r1(),
                               index.phi_params(cfg)};
  switch (cfg.method) {
    case Method::kBrute:
      return finish(index, enumerate_brute(index.size(), oracle, cancel), start);
    case Method::kDem:
      return finish(index, enumerate_dem(space, cfg, oracle, cancel), start);
    case Method::kMlDem:
      return finish(index, enumerate_mldem(space, cfg, oracle, cancel), start);
    case Method::kPermSort:
      if (index.permsort() == nullptr) throw std::logic_error("perm-sort table not built for this index");
      return finish(index, enumerate_permsort(index.matrix(), *index.permsort(), cfg, oracle, cancel), start);
  }
  throw std::invalid_argument("unknown search method");
}

SearchResult brute_force_search(const SearchIndex& index, const GridDescriptor& query) {
  SearchConfig cfg;
  cfg.method = Method::kBrute;
  return search(index, query, cfg);
}

SearchResult dem_search(const SearchIndex& index, const GridDescriptor& query, const SearchConfig& cfg) {
  SearchConfig c = cfg;
  c.method = Method::kDem;
  return search(index, query, c);
}

SearchResult mldem_search(const SearchIndex& index, const GridDescriptor& query, const SearchConfig& cfg,
                          const MlDemObserver* observer) {
  const auto start = std::chrono::steady_clock::now();
  check_query(index, query);
  const PreparedDescriptor prepared(query, index.metric().epsilon);
  const DistanceOracle oracle = [&](std::size_t j) { return grid_distance(prepared, index.model(j), index.metric()); };
  const EnumerationSpace space{index.matrix(), cfg.rho0_override.value_or(index.rho0()), index.r1(),
                               index.phi_params(cfg)};
  return finish(index, enumerate_mldem(space, cfg, oracle, nullptr, observer), start);
}

SearchResult permsort_search(const SearchIndex& index, const GridDescriptor& query, const SearchConfig& cfg) {
  SearchConfig c = cfg;
  c.method = Method::kPermSort;
  return search(index, query, c);
}

}  // namespace mldem
