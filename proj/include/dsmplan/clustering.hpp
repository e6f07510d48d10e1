#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsmplan/dsm.hpp"

namespace dsmplan {

enum class SizeMode {
  ElementCount,
  // Summed element tokens divided by the mean element token count.
  TokenSum,
};

struct ClusterParams {
  double alpha = 2.0;
  double beta = 1.0;
  SizeMode size_mode = SizeMode::ElementCount;
  // Clusters whose raw token sum exceeds the cap cost +infinity.
  std::optional<std::uint64_t> max_cluster_tokens;
  std::uint64_t seed = 42;
  unsigned restarts = 32;
  unsigned iterations_per_restart = 2000;
  // Worker threads for restart chains; 0 picks the hardware concurrency.
  // Results do not depend on this value.
  unsigned threads = 0;

  void validate() const;
};

struct ClusterAssignment {
  // Cluster index per matrix element, contiguous 0..cluster_count-1 and
  // numbered by first appearance.
  std::vector<std::size_t> cluster_of;
  std::size_t cluster_count = 0;
  double j_total = 0.0;
  double j_size_term = 0.0;         // sum of squared cluster sizes, unweighted
  double j_interaction_term = 0.0;  // weight crossing cluster boundaries, unweighted

  std::vector<std::vector<std::string>> clusters(const Dsm& dsm) const;

  // Relabels by first appearance; costs are left untouched.
  static ClusterAssignment from_labels(std::vector<std::size_t> labels);
  static ClusterAssignment singletons(std::size_t n);
  static ClusterAssignment single_cluster(std::size_t n);
  // Named groups; every element not listed becomes its own singleton.
  static ClusterAssignment from_groups(const Dsm& dsm, const std::vector<std::vector<std::string>>& groups);
};

struct CostBreakdown {
  double size_term = 0.0;
  double interaction_term = 0.0;
  double total = 0.0;
  bool feasible = true;
};

// J = alpha * sum(C_i^2) + beta * I0. Labels need not be contiguous.
CostBreakdown cost_breakdown(const Dsm& dsm, const std::vector<std::size_t>& labels, const ClusterParams& params);
double cost_J(const Dsm& dsm, const ClusterAssignment& assignment, const ClusterParams& params);

// Simulated annealing over assignment vectors, with both trivial baselines
// evaluated explicitly.
ClusterAssignment cluster(const Dsm& dsm, const ClusterParams& params = {});

// Exhaustive search over all set partitions (N <= 10). Ties go to the
// lexicographically smallest canonical label vector.
ClusterAssignment brute_force_cluster(const Dsm& dsm, const ClusterParams& params = {});

inline constexpr std::size_t kBruteForceLimit = 10;

}  // namespace dsmplan
