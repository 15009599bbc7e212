#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "smn/clustering.hpp"
#include "smn/dataset.hpp"

namespace smn {

/// Per-class clustering statistics. A class is problematic when strictly less
/// than half of its clustered members sit in its majority cluster.
struct ClassAffiliation {
  std::map<int, std::size_t> histogram;  // cluster -> member count
  int majority_cluster = 0;
  double affiliation_pct = 0.0;          // [0,100]
  bool is_problematic = false;
  std::size_t member_total = 0;
};

struct AffiliationTable {
  std::vector<ClassAffiliation> classes;  // indexed by class_id
};

struct VoteRecord {
  int class_id = 0;
  std::vector<std::pair<std::string, int>> member_choices;  // clip -> cluster, -1 = abstain
  int winning_cluster = 0;
  std::map<int, std::size_t> tally;
};

struct StreamPlan {
  std::size_t num_streams = 0;
  std::vector<int> class_to_stream;
  std::vector<int> class_to_cluster;
  std::vector<std::vector<int>> stream_rosters;  // class ids, ascending
  // provenance
  std::vector<VoteRecord> votes;
  std::vector<std::pair<int, std::vector<std::pair<int, double>>>> cluster_orderings;
  std::string assignment_mode = "cvdp";
};

AffiliationTable build_affiliations(const ClusterAssignment& ca, const Dataset& ds);

// Per-member nearest-neighbor voting among members of non-problematic classes
// assigned to the candidate clusters (the clusters in the class's own
// histogram). A member votes for the candidate contributing strictly more of
// its knn_k neighbors and abstains on ties; if every member abstains the
// majority cluster stands.
VoteRecord consensus_vote(int pc_class, const ClusterAssignment& ca, const Dataset& ds,
                          const AffiliationTable& aff,
                          const std::map<std::string, std::vector<double>>& reduced,
                          std::size_t knn_k);

// Deals classes cluster by cluster (ascending id), in descending affiliation
// percentage, to the least-loaded stream not yet used in the current round.
StreamPlan decreasing_percentages(const AffiliationTable& aff, std::size_t num_streams);

enum class AssignmentMode { CvDp, Random };

StreamPlan build_plan(const ClusterAssignment& ca, const Dataset& ds,
                      const std::map<std::string, std::vector<double>>& reduced,
                      std::size_t num_streams, std::size_t knn_k,
                      AssignmentMode mode = AssignmentMode::CvDp, std::uint64_t random_seed = 0);

std::string plan_to_json(const StreamPlan& plan);
void save_plan(const StreamPlan& plan, const std::filesystem::path& path);
StreamPlan load_plan(const std::filesystem::path& path);

}  // namespace smn
