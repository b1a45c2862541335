#pragma once

#include <cstdint>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lpo/preference_graph.hpp"

namespace lpo {

// Carries the 1-based line number of the offending input line.
class JsonlError : public std::runtime_error {
 public:
  JsonlError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// One judgment per line:
//   {"user_id":str,"prompt_id":str,"winner":str,"loser":str,"tie":bool?}
// Unknown extra fields are ignored; missing or mistyped required fields and
// malformed JSON abort with the line number.
inline std::vector<PairwiseJudgment> read_judgments(std::istream& in) {
  std::vector<PairwiseJudgment> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw JsonlError(line_no, e.what());
    }
    if (!doc.is_object()) {
      throw JsonlError(line_no, "expected a JSON object");
    }
    PairwiseJudgment j;
    try {
      j.user_id = doc.at("user_id").get<std::string>();
      j.prompt_id = doc.at("prompt_id").get<std::string>();
      j.winner_id = doc.at("winner").get<std::string>();
      j.loser_id = doc.at("loser").get<std::string>();
      if (doc.contains("tie")) {
        j.is_tie = doc.at("tie").get<bool>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw JsonlError(line_no, e.what());
    }
    try {
      validate(j);
    } catch (const std::invalid_argument& e) {
      throw JsonlError(line_no, e.what());
    }
    records.push_back(std::move(j));
  }
  return records;
}

inline std::string to_jsonl_line(const RankedList& list) {
  nlohmann::ordered_json doc;
  doc["user_id"] = list.key.user_id;
  doc["prompt_id"] = list.key.prompt_id;
  doc["ranking"] = list.ranking;
  doc["source_pairs"] = list.source_pair_count;
  return doc.dump();
}

inline std::string lists_to_jsonl(const std::vector<RankedList>& lists) {
  std::ostringstream out;
  for (const auto& list : lists) {
    out << to_jsonl_line(list) << '\n';
  }
  return out.str();
}

inline nlohmann::ordered_json stats_to_json(const DatasetStats& stats) {
  nlohmann::ordered_json doc;
  doc["total_pairs"] = stats.total_pairs;
  doc["pairs_in_size2_lists"] = {{"count", stats.pairs_in_size2_lists.count},
                                 {"percent", stats.pairs_in_size2_lists.percent}};
  doc["pairs_in_larger_lists"] = {
      {"count", stats.pairs_in_larger_lists.count},
      {"percent", stats.pairs_in_larger_lists.percent}};
  doc["inconsistent_pairs"] = {{"count", stats.inconsistent_pairs.count},
                               {"percent", stats.inconsistent_pairs.percent}};
  doc["group_count"] = stats.group_count;
  doc["list_count"] = stats.list_count;
  nlohmann::ordered_json histogram = nlohmann::ordered_json::object();
  for (const auto& [length, count] : stats.list_length_histogram) {
    histogram[std::to_string(length)] = count;
  }
  doc["list_length_histogram"] = histogram;
  doc["ties_dropped"] = stats.ties_dropped;
  doc["duplicate_pairs"] = stats.duplicate_pairs;
  return doc;
}

}  // namespace lpo
