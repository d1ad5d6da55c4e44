#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "sqlconf/embedder.hpp"
#include "sqlconf/sql_exec.hpp"

namespace sqlconf {

enum class ClusterMethod { Execution, Embedding, Schema };

/// Sample-agreement clustering. Cluster ids are contiguous from 0 in
/// discovery order; with execution clustering, every failing sample lands in
/// one shared failure cluster.
struct Clustering {
  std::vector<int> assignments;  // parallel to the input samples
  ClusterMethod method = ClusterMethod::Execution;
  std::optional<int> failure_cluster;

  int cluster_count() const;
};

/// Groups samples whose execution results match as multisets. Queries that
/// error or time out share the failure cluster.
Clustering cluster_by_execution(const std::vector<std::string>& samples, Database& db,
                                std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));

/// Groups samples with equal schema links (keyword case, aliasing and
/// whitespace invariant by construction).
Clustering cluster_by_schema(const std::vector<std::string>& samples);

/// Greedy centroid clustering: each sample joins the first cluster whose
/// centroid cosine similarity reaches `threshold`, else opens a new cluster.
/// Centroids update after every assignment.
Clustering cluster_by_embedding(const std::vector<std::string>& samples, Embedder& embedder,
                                double threshold = 0.92);

/// Agreement confidence of one sample: its cluster's share of all samples.
/// Members of the failure cluster score 0.
double consistency_score(const Clustering& clustering, size_t sample_index);

const char* to_string(ClusterMethod method);

}  // namespace sqlconf
