#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lpo {

// One human annotation: "winner beats loser" for a (user, prompt) context.
struct PairwiseJudgment {
  std::string user_id;
  std::string prompt_id;
  std::string winner_id;
  std::string loser_id;
  bool is_tie = false;
};

inline void validate(const PairwiseJudgment& j) {
  if (j.user_id.empty() || j.prompt_id.empty() || j.winner_id.empty() ||
      j.loser_id.empty()) {
    throw std::invalid_argument("judgment: empty id");
  }
  if (!j.is_tie && j.winner_id == j.loser_id) {
    throw std::invalid_argument("judgment: winner equals loser");
  }
}

struct GroupKey {
  std::string user_id;
  std::string prompt_id;

  auto operator<=>(const GroupKey&) const = default;
};

// All non-tie judgments sharing one (user, prompt) key.
struct PreferenceGroup {
  GroupKey key;
  std::vector<PairwiseJudgment> judgments;
  std::set<std::string> node_ids;
};

struct GroupingResult {
  std::vector<PreferenceGroup> groups;  // sorted by key
  std::uint64_t ties_dropped = 0;
};

// Partition judgments by (user, prompt). Ties never enter a graph; they are
// dropped here and surfaced through the ties_dropped counter.
inline GroupingResult group_judgments(
    const std::vector<PairwiseJudgment>& records) {
  GroupingResult out;
  std::map<GroupKey, PreferenceGroup> by_key;
  for (const auto& rec : records) {
    validate(rec);
    if (rec.is_tie) {
      ++out.ties_dropped;
      continue;
    }
    GroupKey key{rec.user_id, rec.prompt_id};
    auto [it, inserted] = by_key.try_emplace(key);
    if (inserted) {
      it->second.key = key;
    }
    it->second.judgments.push_back(rec);
    it->second.node_ids.insert(rec.winner_id);
    it->second.node_ids.insert(rec.loser_id);
  }
  out.groups.reserve(by_key.size());
  for (auto& [key, group] : by_key) {
    out.groups.push_back(std::move(group));
  }
  return out;
}

enum class DagStatus { Consistent, Inconsistent };

// Winner->loser edge relation for one group. Edges are deduplicated; the
// number of collapsed duplicates is kept as metadata only.
struct PreferenceDag {
  GroupKey key;
  std::set<std::string> nodes;
  std::set<std::pair<std::string, std::string>> edges;
  DagStatus status = DagStatus::Consistent;
  // Non-empty iff Inconsistent; first and last entries are the same node and
  // every consecutive pair is an edge.
  std::vector<std::string> cycle_witness;
  std::uint64_t duplicate_edges = 0;
};

namespace detail {

// Finds a cycle among the nodes Kahn elimination could not remove. Every
// such node keeps at least one predecessor in the set (that is why its
// in-degree never reached zero), so a backwards walk along the smallest
// surviving predecessor must revisit a node. The revisited segment,
// reversed, is a directed cycle; it is rotated to start at its smallest
// node and closed by repeating that node.
inline std::vector<std::string> extract_cycle(
    const std::set<std::string>& remaining,
    const std::set<std::pair<std::string, std::string>>& edges) {
  std::map<std::string, std::vector<std::string>> predecessors;
  for (const auto& [from, to] : edges) {
    if (remaining.contains(from) && remaining.contains(to)) {
      predecessors[to].push_back(from);
    }
  }
  for (auto& [node, preds] : predecessors) {
    std::sort(preds.begin(), preds.end());
  }

  std::vector<std::string> walk;
  std::map<std::string, std::size_t> position;
  std::string current = *remaining.begin();
  while (!position.contains(current)) {
    position[current] = walk.size();
    walk.push_back(current);
    current = predecessors.at(current).front();
  }
  std::vector<std::string> cycle(walk.begin() +
                                     static_cast<std::ptrdiff_t>(
                                         position[current]),
                                 walk.end());
  std::reverse(cycle.begin(), cycle.end());

  const auto smallest = std::min_element(cycle.begin(), cycle.end());
  std::rotate(cycle.begin(), smallest, cycle.end());
  cycle.push_back(cycle.front());
  return cycle;
}

}  // namespace detail

inline PreferenceDag build_dag(const PreferenceGroup& group) {
  if (group.judgments.empty()) {
    throw std::invalid_argument("build_dag: empty group");
  }
  PreferenceDag dag;
  dag.key = group.key;
  dag.nodes = group.node_ids;
  for (const auto& j : group.judgments) {
    auto [it, inserted] = dag.edges.emplace(j.winner_id, j.loser_id);
    if (!inserted) {
      ++dag.duplicate_edges;
    }
  }

  // Kahn elimination; whatever survives contains a cycle.
  std::map<std::string, std::set<std::string>> successors;
  std::map<std::string, int> in_degree;
  for (const auto& node : dag.nodes) {
    successors[node];
    in_degree[node] = 0;
  }
  for (const auto& [from, to] : dag.edges) {
    successors[from].insert(to);
    ++in_degree[to];
  }
  std::set<std::string> frontier;
  for (const auto& [node, deg] : in_degree) {
    if (deg == 0) frontier.insert(node);
  }
  std::set<std::string> remaining = dag.nodes;
  while (!frontier.empty()) {
    const std::string node = *frontier.begin();
    frontier.erase(frontier.begin());
    remaining.erase(node);
    for (const auto& succ : successors[node]) {
      if (--in_degree[succ] == 0) frontier.insert(succ);
    }
  }
  if (!remaining.empty()) {
    dag.status = DagStatus::Inconsistent;
    dag.cycle_witness = detail::extract_cycle(remaining, dag.edges);
  }
  return dag;
}

// Ordered image list extracted from one DAG path (or a window of one).
struct RankedList {
  GroupKey key;
  std::vector<std::string> ranking;
  std::uint64_t source_pair_count = 0;
};

struct EnumerationResult {
  std::vector<RankedList> lists;  // lexicographic by ranking
  bool truncated = false;
};

namespace detail {

// All maximal directed paths = all source-to-sink paths (in a DAG any
// in-edge of the head or out-edge of the tail extends the path). Emitted in
// lexicographic order because successors are visited in sorted order.
inline std::vector<std::vector<std::string>> maximal_paths(
    const PreferenceDag& dag, std::size_t hard_limit) {
  std::map<std::string, std::vector<std::string>> successors;
  std::set<std::string> has_incoming;
  for (const auto& node : dag.nodes) successors[node];
  for (const auto& [from, to] : dag.edges) {
    successors[from].push_back(to);
    has_incoming.insert(to);
  }
  for (auto& [node, succ] : successors) {
    std::sort(succ.begin(), succ.end());
  }

  std::vector<std::vector<std::string>> paths;
  std::vector<std::string> current;

  // explicit stack of (node, next successor index to try)
  std::vector<std::pair<std::string, std::size_t>> stack;
  for (const auto& node : dag.nodes) {
    if (has_incoming.contains(node)) continue;  // not a source
    stack.clear();
    stack.emplace_back(node, 0);
    current.assign(1, node);
    while (!stack.empty()) {
      auto& [top, next_idx] = stack.back();
      const auto& succ = successors[top];
      if (succ.empty()) {  // sink: current is a maximal path
        if (paths.size() >= hard_limit) {
          throw std::runtime_error(
              "enumerate_ranked_lists: path explosion, group exceeds " +
              std::to_string(hard_limit) + " maximal paths");
        }
        paths.push_back(current);
        stack.pop_back();
        current.pop_back();
        continue;
      }
      if (next_idx == succ.size()) {
        stack.pop_back();
        current.pop_back();
        continue;
      }
      const std::string& child = succ[next_idx];
      ++next_idx;
      stack.emplace_back(child, 0);
      current.push_back(child);
    }
  }
  return paths;
}

// Windows of length max_len with stride max_len-1, so adjacent windows share
// one element and every consecutive pair of the path stays inside a window.
inline std::vector<std::vector<std::string>> split_path(
    const std::vector<std::string>& path, std::size_t max_len) {
  if (path.size() <= max_len) {
    return {path};
  }
  std::vector<std::vector<std::string>> windows;
  const std::size_t stride = max_len - 1;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = std::min(start + max_len, path.size());
    windows.emplace_back(path.begin() + start, path.begin() + end);
    if (end == path.size()) break;
    start += stride;
  }
  return windows;
}

}  // namespace detail

// Enumerates the group's ranked lists: every maximal path, split into
// overlapping windows when longer than max_len, deduplicated and sorted.
// max_lists_per_group == 0 means unlimited (a hard internal guard still
// protects against degenerate dense graphs).
inline EnumerationResult enumerate_ranked_lists(
    const PreferenceDag& dag, std::size_t max_len = 8,
    std::size_t max_lists_per_group = 64,
    std::size_t hard_path_limit = 1'000'000) {
  if (dag.status != DagStatus::Consistent) {
    throw std::invalid_argument(
        "enumerate_ranked_lists: DAG is inconsistent");
  }
  if (max_len < 2) {
    throw std::invalid_argument("enumerate_ranked_lists: max_len < 2");
  }

  std::set<std::vector<std::string>> unique;
  for (const auto& path : detail::maximal_paths(dag, hard_path_limit)) {
    for (auto& window : detail::split_path(path, max_len)) {
      unique.insert(std::move(window));
    }
  }

  EnumerationResult out;
  for (const auto& ranking : unique) {
    if (max_lists_per_group > 0 && out.lists.size() == max_lists_per_group) {
      out.truncated = true;
      break;
    }
    RankedList list;
    list.key = dag.key;
    list.ranking = ranking;
    const std::set<std::string> members(ranking.begin(), ranking.end());
    for (const auto& [from, to] : dag.edges) {
      if (members.contains(from) && members.contains(to)) {
        ++list.source_pair_count;
      }
    }
    out.lists.push_back(std::move(list));
  }
  return out;
}

struct BucketPercent {
  std::uint64_t count = 0;
  double percent = 0.0;
};

struct DatasetStats {
  std::uint64_t total_pairs = 0;
  BucketPercent pairs_in_size2_lists;
  BucketPercent pairs_in_larger_lists;
  BucketPercent inconsistent_pairs;
  std::uint64_t group_count = 0;
  std::uint64_t list_count = 0;
  std::map<std::size_t, std::uint64_t> list_length_histogram;
  // metadata outside the three-way pair partition
  std::uint64_t ties_dropped = 0;
  std::uint64_t duplicate_pairs = 0;
};

// Buckets every original pair: pairs of inconsistent groups are discarded
// wholesale; otherwise a pair goes to the size-2 bucket iff the longest list
// containing both of its images has length 2. `lists` must be the uncapped
// enumeration of the consistent groups.
inline DatasetStats dataset_stats(
    const std::vector<PreferenceGroup>& groups,
    const std::vector<RankedList>& lists,
    const std::vector<GroupKey>& inconsistent_groups,
    std::uint64_t ties_dropped = 0, std::uint64_t duplicate_pairs = 0) {
  DatasetStats stats;
  stats.group_count = groups.size();
  stats.list_count = lists.size();
  stats.ties_dropped = ties_dropped;
  stats.duplicate_pairs = duplicate_pairs;

  std::set<GroupKey> known_keys;
  for (const auto& g : groups) known_keys.insert(g.key);
  std::map<GroupKey, std::vector<const RankedList*>> lists_by_key;
  for (const auto& list : lists) {
    if (!known_keys.contains(list.key)) {
      throw std::invalid_argument(
          "dataset_stats: list references unknown group (" +
          list.key.user_id + ", " + list.key.prompt_id + ")");
    }
    lists_by_key[list.key].push_back(&list);
    ++stats.list_length_histogram[list.ranking.size()];
  }
  const std::set<GroupKey> inconsistent(inconsistent_groups.begin(),
                                        inconsistent_groups.end());

  for (const auto& group : groups) {
    stats.total_pairs += group.judgments.size();
    if (inconsistent.contains(group.key)) {
      stats.inconsistent_pairs.count += group.judgments.size();
      continue;
    }
    const auto& group_lists = lists_by_key[group.key];
    // longest list containing both endpoints, per deduplicated edge
    std::map<std::pair<std::string, std::string>, std::size_t> longest;
    for (const auto& j : group.judgments) {
      longest[{j.winner_id, j.loser_id}] = 0;
    }
    for (const RankedList* list : group_lists) {
      const std::set<std::string> members(list->ranking.begin(),
                                          list->ranking.end());
      for (auto& [edge, best] : longest) {
        if (members.contains(edge.first) && members.contains(edge.second)) {
          best = std::max(best, list->ranking.size());
        }
      }
    }
    for (const auto& j : group.judgments) {
      const std::size_t len = longest.at({j.winner_id, j.loser_id});
      if (len < 2) {
        throw std::invalid_argument(
            "dataset_stats: pair not covered by any list; lists must be the "
            "uncapped enumeration");
      }
      if (len == 2) {
        ++stats.pairs_in_size2_lists.count;
      } else {
        ++stats.pairs_in_larger_lists.count;
      }
    }
  }

  if (stats.total_pairs > 0) {
    const double denom = static_cast<double>(stats.total_pairs);
    stats.pairs_in_size2_lists.percent =
        100.0 * static_cast<double>(stats.pairs_in_size2_lists.count) / denom;
    stats.pairs_in_larger_lists.percent =
        100.0 * static_cast<double>(stats.pairs_in_larger_lists.count) / denom;
    stats.inconsistent_pairs.percent =
        100.0 * static_cast<double>(stats.inconsistent_pairs.count) / denom;
  }
  return stats;
}

}  // namespace lpo
