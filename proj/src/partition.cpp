#include "smn/partition.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "smn/error.hpp"
#include "smn/knn.hpp"
#include "smn/rng.hpp"

namespace smn {

using nlohmann::json;

AffiliationTable build_affiliations(const ClusterAssignment& ca, const Dataset& ds) {
  AffiliationTable table;
  table.classes.resize(ds.num_classes());

  std::map<std::string, int> clip_class;
  for (const auto& clip : ds.clips) clip_class[clip.clip_id] = clip.class_id;

  for (const auto& [clip_id, cluster] : ca.labels) {
    auto it = clip_class.find(clip_id);
    if (it == clip_class.end()) fail(Err::UnknownClass, "clustered clip " + clip_id + " not in dataset");
    auto& entry = table.classes[static_cast<std::size_t>(it->second)];
    entry.histogram[cluster]++;
    entry.member_total++;
  }

  for (std::size_t c = 0; c < table.classes.size(); ++c) {
    auto& entry = table.classes[c];
    if (entry.member_total == 0)
      fail(Err::EmptyClass, "class " + ds.class_names[c] + " has no clustered members");
    std::size_t best = 0;
    for (const auto& [cluster, count] : entry.histogram) {
      if (count > best) {  // map iteration is ascending: ties keep the lowest id
        best = count;
        entry.majority_cluster = cluster;
      }
    }
    entry.affiliation_pct =
        100.0 * static_cast<double>(best) / static_cast<double>(entry.member_total);
    entry.is_problematic = entry.affiliation_pct < 50.0;  // strictly below half
  }
  return table;
}

VoteRecord consensus_vote(int pc_class, const ClusterAssignment& ca, const Dataset& ds,
                          const AffiliationTable& aff,
                          const std::map<std::string, std::vector<double>>& reduced,
                          std::size_t knn_k) {
  if (knn_k < 1) fail(Err::InvalidSpec, "knn_k must be >= 1");
  const auto& pc = aff.classes.at(static_cast<std::size_t>(pc_class));

  std::map<std::string, int> clip_class;
  for (const auto& clip : ds.clips) clip_class[clip.clip_id] = clip.class_id;

  // candidate clusters = clusters in the PC's own histogram
  std::vector<int> candidates;
  for (const auto& [cluster, count] : pc.histogram) candidates.push_back(cluster);

  // neighbor pool: clustered members of non-problematic classes whose class is
  // assigned to a candidate cluster
  std::vector<const std::vector<double>*> pool_vecs;
  std::vector<int> pool_cluster;
  std::vector<std::string> voters;
  for (const auto& clip_id : ca.included_clips) {
    const int cls = clip_class.at(clip_id);
    if (cls == pc_class) {
      voters.push_back(clip_id);
      continue;
    }
    const auto& entry = aff.classes[static_cast<std::size_t>(cls)];
    if (entry.is_problematic) continue;
    if (!std::binary_search(candidates.begin(), candidates.end(), entry.majority_cluster))
      continue;
    auto it = reduced.find(clip_id);
    if (it == reduced.end()) fail(Err::UnknownClass, "no reduced vector for clip " + clip_id);
    pool_vecs.push_back(&it->second);
    pool_cluster.push_back(entry.majority_cluster);
  }
  if (pool_vecs.empty())
    fail(Err::NoCandidateNeighbors, "no non-problematic members in any candidate cluster of class " +
                                        ds.class_names[static_cast<std::size_t>(pc_class)]);

  Matrix pool(pool_vecs.size(), pool_vecs.front()->size());
  for (std::size_t i = 0; i < pool_vecs.size(); ++i)
    std::copy(pool_vecs[i]->begin(), pool_vecs[i]->end(), pool.row(i));

  VoteRecord rec;
  rec.class_id = pc_class;
  for (int c : candidates) rec.tally[c] = 0;

  for (const auto& clip_id : voters) {
    auto it = reduced.find(clip_id);
    if (it == reduced.end()) fail(Err::UnknownClass, "no reduced vector for clip " + clip_id);
    const auto nn = knn_indices(pool, it->second.data(), knn_k);
    std::map<int, std::size_t> counts;
    for (std::size_t idx : nn) counts[pool_cluster[idx]]++;

    // strict neighbor majority between candidates; equality = abstain
    int choice = -1;
    std::size_t best = 0;
    bool unique = false;
    for (const auto& [cluster, count] : counts) {
      if (count > best) {
        best = count;
        choice = cluster;
        unique = true;
      } else if (count == best) {
        unique = false;
      }
    }
    if (!unique) choice = -1;
    rec.member_choices.emplace_back(clip_id, choice);
    if (choice >= 0) rec.tally[choice]++;
  }

  // winner: most votes; ties -> higher affiliation count in the PC's own
  // histogram, then lowest cluster id. All abstained -> majority cluster.
  std::size_t total_votes = 0;
  for (const auto& [cluster, votes] : rec.tally) total_votes += votes;
  if (total_votes == 0) {
    rec.winning_cluster = pc.majority_cluster;
    return rec;
  }
  int winner = -1;
  std::size_t winner_votes = 0;
  std::size_t winner_affil = 0;
  for (const auto& [cluster, votes] : rec.tally) {  // ascending cluster id
    const std::size_t affil = pc.histogram.count(cluster) ? pc.histogram.at(cluster) : 0;
    if (winner < 0 || votes > winner_votes ||
        (votes == winner_votes && affil > winner_affil)) {
      winner = cluster;
      winner_votes = votes;
      winner_affil = affil;
    }
  }
  rec.winning_cluster = winner;
  return rec;
}

StreamPlan decreasing_percentages(const AffiliationTable& aff, std::size_t num_streams) {
  if (num_streams < 1) fail(Err::InvalidCounts, "need at least one stream");
  const std::size_t m = aff.classes.size();

  std::map<int, std::vector<std::pair<int, double>>> clusters;  // cluster -> (class, pct)
  for (std::size_t c = 0; c < m; ++c)
    clusters[aff.classes[c].majority_cluster].emplace_back(static_cast<int>(c),
                                                           aff.classes[c].affiliation_pct);

  StreamPlan plan;
  plan.num_streams = num_streams;
  plan.class_to_stream.assign(m, -1);
  plan.class_to_cluster.assign(m, -1);
  plan.stream_rosters.resize(num_streams);
  std::vector<std::size_t> load(num_streams, 0);

  for (auto& [cluster_id, members] : clusters) {  // ascending cluster id
    std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;  // descending pct
      return a.first < b.first;                              // ties: lower class id first
    });
    plan.cluster_orderings.emplace_back(cluster_id, members);

    std::vector<char> used(num_streams, 0);
    std::size_t used_count = 0;
    for (const auto& [class_id, pct] : members) {
      std::size_t pick = num_streams;
      for (std::size_t s = 0; s < num_streams; ++s) {
        if (used[s]) continue;
        if (pick == num_streams || load[s] < load[pick]) pick = s;  // least loaded, lowest id
      }
      plan.class_to_stream[static_cast<std::size_t>(class_id)] = static_cast<int>(pick);
      plan.class_to_cluster[static_cast<std::size_t>(class_id)] = cluster_id;
      plan.stream_rosters[pick].push_back(class_id);
      load[pick]++;
      used[pick] = 1;
      if (++used_count == num_streams) {  // round complete: all streams seen once
        std::fill(used.begin(), used.end(), 0);
        used_count = 0;
      }
    }
  }

  for (auto& roster : plan.stream_rosters) std::sort(roster.begin(), roster.end());
  return plan;
}

StreamPlan build_plan(const ClusterAssignment& ca, const Dataset& ds,
                      const std::map<std::string, std::vector<double>>& reduced,
                      std::size_t num_streams, std::size_t knn_k, AssignmentMode mode,
                      std::uint64_t random_seed) {
  AffiliationTable aff = build_affiliations(ca, ds);

  if (mode == AssignmentMode::Random) {
    const std::size_t m = aff.classes.size();
    StreamPlan plan;
    plan.num_streams = num_streams;
    plan.assignment_mode = "random";
    plan.class_to_stream.assign(m, -1);
    plan.class_to_cluster.assign(m, -1);
    plan.stream_rosters.resize(num_streams);
    std::vector<int> order(m);
    for (std::size_t c = 0; c < m; ++c) order[c] = static_cast<int>(c);
    Rng rng(random_seed);
    rng.shuffle(order);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t s = i % num_streams;
      plan.class_to_stream[static_cast<std::size_t>(order[i])] = static_cast<int>(s);
      plan.stream_rosters[s].push_back(order[i]);
    }
    for (std::size_t c = 0; c < m; ++c)
      plan.class_to_cluster[c] = aff.classes[c].majority_cluster;
    for (auto& roster : plan.stream_rosters) std::sort(roster.begin(), roster.end());
    // keep the cluster orderings for audit parity with cvdp plans
    std::map<int, std::vector<std::pair<int, double>>> clusters;
    for (std::size_t c = 0; c < m; ++c)
      clusters[aff.classes[c].majority_cluster].emplace_back(static_cast<int>(c),
                                                             aff.classes[c].affiliation_pct);
    for (auto& [cluster_id, members] : clusters) {
      std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      plan.cluster_orderings.emplace_back(cluster_id, members);
    }
    return plan;
  }

  // Consensus Voting: every problematic class moves to its vote-winning
  // cluster; its effective percentage becomes its member share there.
  std::vector<VoteRecord> votes;
  for (std::size_t c = 0; c < aff.classes.size(); ++c) {
    if (!aff.classes[c].is_problematic) continue;
    votes.push_back(consensus_vote(static_cast<int>(c), ca, ds, aff, reduced, knn_k));
  }
  AffiliationTable final_table = aff;
  for (const auto& vote : votes) {
    auto& entry = final_table.classes[static_cast<std::size_t>(vote.class_id)];
    entry.majority_cluster = vote.winning_cluster;
    const std::size_t in_winner =
        entry.histogram.count(vote.winning_cluster) ? entry.histogram.at(vote.winning_cluster) : 0;
    entry.affiliation_pct =
        100.0 * static_cast<double>(in_winner) / static_cast<double>(entry.member_total);
  }

  StreamPlan plan = decreasing_percentages(final_table, num_streams);
  plan.votes = std::move(votes);
  return plan;
}

std::string plan_to_json(const StreamPlan& plan) {
  json j;
  j["N"] = plan.num_streams;
  j["mode"] = plan.assignment_mode;
  json clusters = json::array();
  for (const auto& [cluster_id, members] : plan.cluster_orderings) {
    json cls = json::array();
    for (const auto& [class_id, pct] : members)
      cls.push_back({{"class_id", class_id}, {"affiliation_pct", pct}});
    clusters.push_back({{"id", cluster_id}, {"classes", cls}});
  }
  j["clusters"] = clusters;
  j["streams"] = plan.stream_rosters;
  json votes = json::array();
  for (const auto& vote : plan.votes) {
    json members = json::array();
    for (const auto& [clip, choice] : vote.member_choices)
      members.push_back({{"clip_id", clip}, {"choice", choice}});
    json tally = json::array();
    for (const auto& [cluster, count] : vote.tally)
      tally.push_back({{"cluster", cluster}, {"votes", count}});
    votes.push_back({{"class_id", vote.class_id},
                     {"winning_cluster", vote.winning_cluster},
                     {"tally", tally},
                     {"members", members}});
  }
  j["votes"] = votes;
  return j.dump(2) + "\n";
}

void save_plan(const StreamPlan& plan, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) fail(Err::IoFailure, "cannot write " + path.string());
  f << plan_to_json(plan);
  if (!f) fail(Err::IoFailure, "write failed for " + path.string());
}

StreamPlan load_plan(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) fail(Err::MissingFile, "cannot open " + path.string());
  json j;
  try {
    f >> j;
  } catch (...) {
    fail(Err::CorruptHeader, "unparseable plan " + path.string());
  }
  StreamPlan plan;
  try {
    plan.num_streams = j.at("N").get<std::size_t>();
    plan.assignment_mode = j.value("mode", "cvdp");
    plan.stream_rosters = j.at("streams").get<std::vector<std::vector<int>>>();
    std::size_t m = 0;
    for (const auto& roster : plan.stream_rosters)
      for (int c : roster) m = std::max(m, static_cast<std::size_t>(c) + 1);
    plan.class_to_stream.assign(m, -1);
    plan.class_to_cluster.assign(m, -1);
    for (std::size_t s = 0; s < plan.stream_rosters.size(); ++s)
      for (int c : plan.stream_rosters[s])
        plan.class_to_stream[static_cast<std::size_t>(c)] = static_cast<int>(s);
    for (const auto& cluster : j.at("clusters")) {
      const int cid = cluster.at("id").get<int>();
      std::vector<std::pair<int, double>> members;
      for (const auto& cls : cluster.at("classes")) {
        const int class_id = cls.at("class_id").get<int>();
        members.emplace_back(class_id, cls.at("affiliation_pct").get<double>());
      }
      plan.cluster_orderings.emplace_back(cid, members);
    }
    for (const auto& vote : j.at("votes")) {
      VoteRecord rec;
      rec.class_id = vote.at("class_id").get<int>();
      rec.winning_cluster = vote.at("winning_cluster").get<int>();
      for (const auto& t : vote.at("tally"))
        rec.tally[t.at("cluster").get<int>()] = t.at("votes").get<std::size_t>();
      for (const auto& mlist : vote.at("members"))
        rec.member_choices.emplace_back(mlist.at("clip_id").get<std::string>(),
                                        mlist.at("choice").get<int>());
      plan.votes.push_back(std::move(rec));
    }
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(Err::CorruptHeader, "plan " + path.string() + " missing required fields");
  }
  // class -> cluster from the vote-adjusted orderings
  for (const auto& [cluster_id, members] : plan.cluster_orderings)
    for (const auto& [class_id, pct] : members) {
      if (static_cast<std::size_t>(class_id) < plan.class_to_cluster.size() &&
          plan.class_to_stream[static_cast<std::size_t>(class_id)] >= 0)
        plan.class_to_cluster[static_cast<std::size_t>(class_id)] = cluster_id;
    }
  return plan;
}

}  // namespace smn
