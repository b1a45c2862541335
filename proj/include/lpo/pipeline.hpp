#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

#include "lpo/preference_graph.hpp"

namespace lpo {

struct CompileOptions {
  std::size_t max_len = 8;
  std::size_t max_lists_per_group = 64;  // emission cap; 0 = unlimited
  unsigned threads = 1;
};

struct CompiledDataset {
  GroupingResult grouping;
  std::vector<PreferenceDag> dags;        // aligned with grouping.groups
  std::vector<RankedList> all_lists;      // uncapped; feeds dataset_stats
  std::vector<RankedList> emitted_lists;  // per-group cap applied
  std::vector<GroupKey> inconsistent_keys;
  std::uint64_t truncated_groups = 0;
  DatasetStats stats;
};

// Runs the whole compilation: group -> DAG -> lists -> stats. Groups are
// independent, so they may be processed on several threads; results are
// merged in sorted-key order, which makes the output identical for any
// thread count.
inline CompiledDataset compile_preferences(
    const std::vector<PairwiseJudgment>& records,
    const CompileOptions& options = {}) {
  CompiledDataset out;
  out.grouping = group_judgments(records);

  const std::size_t n = out.grouping.groups.size();
  struct GroupOutput {
    PreferenceDag dag;
    std::vector<RankedList> lists;  // uncapped
  };
  std::vector<GroupOutput> per_group(n);

  auto process = [&](std::size_t i) {
    GroupOutput& slot = per_group[i];
    slot.dag = build_dag(out.grouping.groups[i]);
    if (slot.dag.status == DagStatus::Consistent) {
      slot.lists =
          enumerate_ranked_lists(slot.dag, options.max_len, 0).lists;
    }
  };

  const unsigned workers =
      std::max(1u, std::min<unsigned>(options.threads,
                                      n == 0 ? 1u : static_cast<unsigned>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) process(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n;
             i = next.fetch_add(1)) {
          process(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  std::uint64_t duplicate_pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    GroupOutput& slot = per_group[i];
    duplicate_pairs += slot.dag.duplicate_edges;
    if (slot.dag.status == DagStatus::Inconsistent) {
      out.inconsistent_keys.push_back(slot.dag.key);
    } else {
      const std::size_t cap = options.max_lists_per_group;
      if (cap > 0 && slot.lists.size() > cap) {
        ++out.truncated_groups;
        out.emitted_lists.insert(out.emitted_lists.end(), slot.lists.begin(),
                                 slot.lists.begin() + static_cast<long>(cap));
      } else {
        out.emitted_lists.insert(out.emitted_lists.end(), slot.lists.begin(),
                                 slot.lists.end());
      }
      out.all_lists.insert(out.all_lists.end(),
                           std::make_move_iterator(slot.lists.begin()),
                           std::make_move_iterator(slot.lists.end()));
    }
    out.dags.push_back(std::move(slot.dag));
  }

  out.stats =
      dataset_stats(out.grouping.groups, out.all_lists, out.inconsistent_keys,
                    out.grouping.ties_dropped, duplicate_pairs);
  return out;
}

}  // namespace lpo
