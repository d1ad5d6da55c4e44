#include "sqlconf/consistency.hpp"

#include <algorithm>
#include <cmath>

#include "sqlconf/errors.hpp"
#include "sqlconf/schema_link.hpp"

namespace sqlconf {

int Clustering::cluster_count() const {
  int max_id = -1;
  for (int a : assignments) max_id = std::max(max_id, a);
  return max_id + 1;
}

Clustering cluster_by_execution(const std::vector<std::string>& samples, Database& db,
                                std::chrono::milliseconds timeout) {
  Clustering out;
  out.method = ClusterMethod::Execution;
  out.assignments.assign(samples.size(), -1);

  std::vector<ExecResult> representatives;  // result of each cluster's first member
  std::vector<int> cluster_ids;
  int next_id = 0;
  for (size_t i = 0; i < samples.size(); ++i) {
    ExecResult result = db.execute(samples[i], timeout);
    if (!result.ok()) {
      if (!out.failure_cluster) out.failure_cluster = next_id++;
      out.assignments[i] = *out.failure_cluster;
      continue;
    }
    int assigned = -1;
    for (size_t c = 0; c < representatives.size(); ++c) {
      if (results_equal(result, representatives[c])) {
        assigned = cluster_ids[c];
        break;
      }
    }
    if (assigned < 0) {
      assigned = next_id++;
      representatives.push_back(std::move(result));
      cluster_ids.push_back(assigned);
    }
    out.assignments[i] = assigned;
  }
  return out;
}

Clustering cluster_by_schema(const std::vector<std::string>& samples) {
  Clustering out;
  out.method = ClusterMethod::Schema;
  out.assignments.assign(samples.size(), -1);

  std::vector<SchemaLinks> representatives;
  for (size_t i = 0; i < samples.size(); ++i) {
    const SchemaLinks links = extract(samples[i]);
    int assigned = -1;
    for (size_t c = 0; c < representatives.size(); ++c) {
      if (links_equal(links, representatives[c])) {
        assigned = static_cast<int>(c);
        break;
      }
    }
    if (assigned < 0) {
      assigned = static_cast<int>(representatives.size());
      representatives.push_back(links);
    }
    out.assignments[i] = assigned;
  }
  return out;
}

namespace {

std::vector<double> unit(std::vector<double> v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 && nb == 0.0) return 1.0;  // two empty embeddings agree
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

Clustering cluster_by_embedding(const std::vector<std::string>& samples, Embedder& embedder,
                                double threshold) {
  Clustering out;
  out.method = ClusterMethod::Embedding;
  out.assignments.assign(samples.size(), -1);

  std::vector<std::vector<double>> vectors;
  vectors.reserve(samples.size());
  size_t dims = 0;
  for (const std::string& s : samples) {
    std::vector<double> v = unit(embedder.embed(s));
    if (dims == 0) dims = v.size();
    if (v.size() != dims) {
      throw EmbedderUnavailable("embedder returned inconsistent dimensions");
    }
    vectors.push_back(std::move(v));
  }

  std::vector<std::vector<double>> centroid_sums;  // sum of member unit vectors
  std::vector<size_t> member_counts;
  for (size_t i = 0; i < samples.size(); ++i) {
    int assigned = -1;
    for (size_t c = 0; c < centroid_sums.size(); ++c) {
      if (cosine(vectors[i], centroid_sums[c]) >= threshold) {
        assigned = static_cast<int>(c);
        break;
      }
    }
    if (assigned < 0) {
      assigned = static_cast<int>(centroid_sums.size());
      centroid_sums.push_back(vectors[i]);
      member_counts.push_back(1);
    } else {
      for (size_t d = 0; d < dims; ++d) centroid_sums[assigned][d] += vectors[i][d];
      ++member_counts[assigned];
    }
    out.assignments[i] = assigned;
  }
  return out;
}

double consistency_score(const Clustering& clustering, size_t sample_index) {
  const int mine = clustering.assignments.at(sample_index);
  if (clustering.failure_cluster && mine == *clustering.failure_cluster) return 0.0;
  size_t members = 0;
  for (int a : clustering.assignments) {
    if (a == mine) ++members;
  }
  return static_cast<double>(members) / static_cast<double>(clustering.assignments.size());
}

const char* to_string(ClusterMethod method) {
  switch (method) {
    case ClusterMethod::Execution: return "execution";
    case ClusterMethod::Embedding: return "embedding";
    case ClusterMethod::Schema: return "schema";
  }
  return "?";
}

}  // namespace sqlconf
