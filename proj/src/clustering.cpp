#include "dsmplan/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "dsmplan/error.hpp"

namespace dsmplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t chain_seed(std::uint64_t master, std::uint64_t chain) { return mix(mix(master) ^ mix(chain + 1)); }

// std::mt19937_64 output is fixed by the standard; the distributions are not,
// so draws are derived here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::size_t below(std::size_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
  }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

std::vector<double> size_units(const Dsm& dsm, SizeMode mode) {
  const std::size_t n = dsm.size();
  if (mode == SizeMode::ElementCount) return std::vector<double>(n, 1.0);
  const auto& tokens = dsm.element_tokens();
  double mean = 0.0;
  for (auto t : tokens) mean += static_cast<double>(t);
  mean /= static_cast<double>(n);
  std::vector<double> units(n, 0.0);
  if (mean > 0.0) {
    for (std::size_t i = 0; i < n; ++i) units[i] = static_cast<double>(tokens[i]) / mean;
  }
  return units;
}

std::vector<std::size_t> canonical(const std::vector<std::size_t>& labels) {
  std::vector<std::size_t> out(labels.size());
  std::vector<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& p) { return p.first == labels[i]; });
    if (it == seen.end()) {
      seen.emplace_back(labels[i], seen.size());
      out[i] = seen.size() - 1;
    } else {
      out[i] = it->second;
    }
  }
  return out;
}

ClusterAssignment finish(const Dsm& dsm, const std::vector<std::size_t>& labels, const ClusterParams& params) {
  auto assignment = ClusterAssignment::from_labels(labels);
  const auto cost = cost_breakdown(dsm, assignment.cluster_of, params);
  assignment.j_size_term = cost.size_term;
  assignment.j_interaction_term = cost.interaction_term;
  assignment.j_total = cost.total;
  return assignment;
}

struct ChainResult {
  std::vector<std::size_t> labels;
  double j = kInf;
};

class Annealer {
 public:
  Annealer(const Dsm& dsm, const ClusterParams& params)
      : dsm_(dsm), params_(params), n_(dsm.size()), units_(size_units(dsm, params.size_mode)) {
    coupling_.assign(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        coupling_[i * n_ + j] = static_cast<double>(dsm(i, j)) + static_cast<double>(dsm(j, i));
      }
    }
  }

  ChainResult run(std::uint64_t chain) const {
    Rng rng(chain_seed(params_.seed, chain));
    std::vector<std::size_t> labels = initial(chain, rng);

    std::vector<double> size(n_, 0.0);
    std::vector<std::uint64_t> tokens(n_, 0);
    std::vector<std::size_t> members(n_, 0);
    for (std::size_t e = 0; e < n_; ++e) {
      size[labels[e]] += units_[e];
      tokens[labels[e]] += dsm_.element_tokens()[e];
      ++members[labels[e]];
    }

    double j = cost_breakdown(dsm_, labels, params_).total;
    ChainResult best{labels, j};

    const double t0 = initial_temperature(labels, members, size, rng);
    const double t_end = t0 * 1e-3;
    const double cooling = std::pow(t_end / t0, 1.0 / std::max(1u, params_.iterations_per_restart));
    double temperature = t0;

    for (unsigned it = 0; it < params_.iterations_per_restart; ++it, temperature *= cooling) {
      const std::size_t e = rng.below(n_);
      const std::size_t from = labels[e];
      const std::size_t to = propose_target(e, labels, members, rng);
      if (to == from) continue;
      if (params_.max_cluster_tokens && tokens[to] + dsm_.element_tokens()[e] > *params_.max_cluster_tokens) continue;

      const double delta = move_delta(e, from, to, labels, size);
      if (delta <= 0.0 || rng.unit() < std::exp(-delta / temperature)) {
        labels[e] = to;
        size[from] -= units_[e];
        size[to] += units_[e];
        tokens[from] -= dsm_.element_tokens()[e];
        tokens[to] += dsm_.element_tokens()[e];
        --members[from];
        ++members[to];
        j += delta;
        if (j < best.j) best = {labels, j};
      }
    }
    best.labels = canonical(best.labels);
    best.j = cost_breakdown(dsm_, best.labels, params_).total;
    return best;
  }

 private:
  std::vector<std::size_t> initial(std::uint64_t chain, Rng& rng) const {
    if (chain == 1) {
      std::vector<std::size_t> merged(n_, 0);
      if (cost_breakdown(dsm_, merged, params_).feasible) return merged;
    }
    std::vector<std::size_t> labels(n_);
    for (std::size_t e = 0; e < n_; ++e) labels[e] = e;
    if (chain >= 2) {
      std::vector<std::size_t> random(n_);
      for (auto& l : random) l = rng.below(n_);
      if (cost_breakdown(dsm_, random, params_).feasible) labels = std::move(random);
    }
    return labels;
  }

  // A uniformly chosen occupied cluster, or a fresh one.
  std::size_t propose_target(std::size_t e, const std::vector<std::size_t>& labels,
                             const std::vector<std::size_t>& members, Rng& rng) const {
    std::size_t occupied = 0;
    for (auto m : members) occupied += m > 0;
    std::size_t pick = rng.below(occupied + 1);
    for (std::size_t slot = 0; slot < n_; ++slot) {
      if (members[slot] == 0) continue;
      if (pick-- == 0) return slot;
    }
    if (members[labels[e]] == 1) return labels[e];
    for (std::size_t slot = 0; slot < n_; ++slot) {
      if (members[slot] == 0) return slot;
    }
    return labels[e];
  }

  double move_delta(std::size_t e, std::size_t from, std::size_t to, const std::vector<std::size_t>& labels,
                    const std::vector<double>& size) const {
    const double u = units_[e];
    const double size_delta = (size[from] - u) * (size[from] - u) - size[from] * size[from] +
                              (size[to] + u) * (size[to] + u) - size[to] * size[to];
    double interaction_delta = 0.0;
    for (std::size_t o = 0; o < n_; ++o) {
      if (o == e) continue;
      if (labels[o] == from) interaction_delta += coupling_[e * n_ + o];
      else if (labels[o] == to) interaction_delta -= coupling_[e * n_ + o];
    }
    return params_.alpha * size_delta + params_.beta * interaction_delta;
  }

  double initial_temperature(const std::vector<std::size_t>& labels, const std::vector<std::size_t>& members,
                             const std::vector<double>& size, Rng& rng) const {
    double total = 0.0;
    std::size_t count = 0;
    for (int s = 0; s < 64; ++s) {
      const std::size_t e = rng.below(n_);
      const std::size_t to = propose_target(e, labels, members, rng);
      if (to == labels[e]) continue;
      const double d = move_delta(e, labels[e], to, labels, size);
      if (d > 0.0) {
        total += d;
        ++count;
      }
    }
    return count > 0 ? std::max(total / static_cast<double>(count), 1e-9) : 1.0;
  }

  const Dsm& dsm_;
  const ClusterParams& params_;
  std::size_t n_;
  std::vector<double> units_;
  std::vector<double> coupling_;
};

}  // namespace

void ClusterParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidParameter, "alpha", "alpha must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw Error(ErrorCode::InvalidParameter, "beta", "beta must be positive");
  if (restarts == 0) throw Error(ErrorCode::InvalidParameter, "restarts", "restarts must be positive");
  if (iterations_per_restart == 0) {
    throw Error(ErrorCode::InvalidParameter, "iterations", "iterations per restart must be positive");
  }
  if (max_cluster_tokens && *max_cluster_tokens == 0) {
    throw Error(ErrorCode::InvalidParameter, "max_cluster_tokens", "max_cluster_tokens must be positive");
  }
}

std::vector<std::vector<std::string>> ClusterAssignment::clusters(const Dsm& dsm) const {
  std::vector<std::vector<std::string>> groups(cluster_count);
  for (std::size_t i = 0; i < cluster_of.size(); ++i) groups[cluster_of[i]].push_back(dsm.id(i));
  return groups;
}

ClusterAssignment ClusterAssignment::from_labels(std::vector<std::size_t> labels) {
  ClusterAssignment a;
  a.cluster_of = canonical(labels);
  a.cluster_count = a.cluster_of.empty() ? 0 : *std::max_element(a.cluster_of.begin(), a.cluster_of.end()) + 1;
  return a;
}

ClusterAssignment ClusterAssignment::singletons(std::size_t n) {
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i;
  return from_labels(std::move(labels));
}

ClusterAssignment ClusterAssignment::single_cluster(std::size_t n) { return from_labels(std::vector<std::size_t>(n, 0)); }

ClusterAssignment ClusterAssignment::from_groups(const Dsm& dsm, const std::vector<std::vector<std::string>>& groups) {
  const std::size_t n = dsm.size();
  constexpr auto unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> labels(n, unset);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (const auto& id : groups[g]) {
      const auto i = dsm.index_of(id);
      if (labels[i] != unset) throw Error(ErrorCode::DuplicateId, id, "element '" + id + "' listed in two clusters");
      labels[i] = g;
    }
  }
  std::size_t next = groups.size();
  for (auto& l : labels) {
    if (l == unset) l = next++;
  }
  return from_labels(std::move(labels));
}

CostBreakdown cost_breakdown(const Dsm& dsm, const std::vector<std::size_t>& labels, const ClusterParams& params) {
  const std::size_t n = dsm.size();
  if (labels.size() != n) {
    throw Error(ErrorCode::IncompleteAssignment, "",
                "assignment covers " + std::to_string(labels.size()) + " of " + std::to_string(n) + " elements");
  }
  const auto canon = canonical(labels);
  const auto units = size_units(dsm, params.size_mode);
  std::vector<double> size(n, 0.0);
  std::vector<std::uint64_t> tokens(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    size[canon[i]] += units[i];
    tokens[canon[i]] += dsm.element_tokens()[i];
  }

  CostBreakdown cost;
  for (std::size_t c = 0; c < n; ++c) {
    cost.size_term += size[c] * size[c];
    if (params.max_cluster_tokens && tokens[c] > *params.max_cluster_tokens) cost.feasible = false;
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (canon[r] != canon[c]) cost.interaction_term += static_cast<double>(dsm(r, c));
    }
  }
  cost.total = cost.feasible ? params.alpha * cost.size_term + params.beta * cost.interaction_term : kInf;
  return cost;
}

double cost_J(const Dsm& dsm, const ClusterAssignment& assignment, const ClusterParams& params) {
  return cost_breakdown(dsm, assignment.cluster_of, params).total;
}

ClusterAssignment cluster(const Dsm& dsm, const ClusterParams& params) {
  params.validate();
  const std::size_t n = dsm.size();
  if (n == 0) throw Error(ErrorCode::EmptyMatrix, "", "cannot cluster an empty matrix");
  if (params.max_cluster_tokens) {
    for (std::size_t i = 0; i < n; ++i) {
      if (dsm.element_tokens()[i] > *params.max_cluster_tokens) {
        throw Error(ErrorCode::InvalidParameter, dsm.id(i),
                    "element '" + dsm.id(i) + "' alone exceeds max_cluster_tokens");
      }
    }
  }
  if (n == 1) return finish(dsm, {0}, params);

  Annealer annealer(dsm, params);
  std::vector<ChainResult> chains(params.restarts);
  unsigned workers = params.threads != 0 ? params.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, params.restarts);
  if (workers <= 1) {
    for (unsigned c = 0; c < params.restarts; ++c) chains[c] = annealer.run(c);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (unsigned c = w; c < params.restarts; c += workers) chains[c] = annealer.run(c);
      });
    }
    for (auto& t : pool) t.join();
  }

  std::vector<std::size_t> best = ClusterAssignment::singletons(n).cluster_of;
  double best_j = cost_breakdown(dsm, best, params).total;
  const auto merged = ClusterAssignment::single_cluster(n).cluster_of;
  if (const double j = cost_breakdown(dsm, merged, params).total; j < best_j) {
    best = merged;
    best_j = j;
  }
  for (const auto& chain : chains) {
    if (chain.j < best_j) {
      best = chain.labels;
      best_j = chain.j;
    }
  }
  return finish(dsm, best, params);
}

ClusterAssignment brute_force_cluster(const Dsm& dsm, const ClusterParams& params) {
  params.validate();
  const std::size_t n = dsm.size();
  if (n == 0) throw Error(ErrorCode::EmptyMatrix, "", "cannot cluster an empty matrix");
  if (n > kBruteForceLimit) {
    throw Error(ErrorCode::TooLarge, std::to_string(n),
                "exhaustive clustering supports at most " + std::to_string(kBruteForceLimit) + " elements");
  }

  // Restricted growth strings in lexicographic order: a[0] = 0 and
  // a[i] <= 1 + max(a[0..i-1]).
  std::vector<std::size_t> labels(n, 0);
  std::vector<std::size_t> prefix_max(n, 0);
  std::vector<std::size_t> best;
  double best_j = kInf;
  while (true) {
    const double j = cost_breakdown(dsm, labels, params).total;
    if (j < best_j) {
      best_j = j;
      best = labels;
    }
    std::size_t i = n - 1;
    while (i > 0 && labels[i] > prefix_max[i - 1]) --i;
    if (i == 0) break;
    ++labels[i];
    prefix_max[i] = std::max(prefix_max[i - 1], labels[i]);
    for (std::size_t k = i + 1; k < n; ++k) {
      labels[k] = 0;
      prefix_max[k] = prefix_max[k - 1];
    }
  }
  if (best.empty()) throw Error(ErrorCode::InvalidParameter, "", "no partition satisfies max_cluster_tokens");
  return finish(dsm, best, params);
}

}  // namespace dsmplan
