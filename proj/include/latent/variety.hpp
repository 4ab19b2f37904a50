#pragma once

#include <cstddef>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "latent/embeddings.hpp"
#include "latent/simsearch.hpp"

namespace latent {

// One result per query, in query order.
using QueryRun = std::vector<SuggestionResult>;

// For each algorithm, 100 x (suggestion slots whose sentence id appears in no
// other algorithm's result for the same query) / (its suggestion slots).
// Every run must cover the same number of queries with the same t; throws
// kMismatchedRuns otherwise.
std::map<std::string, double> UniqueSuggestionPct(
    const std::map<std::string, QueryRun>& runs);

struct IntraJaccard {
  double mean = 0.0;            // over the queries that were used
  std::size_t queries_used = 0;
  std::size_t queries_skipped = 0;  // fewer than 2 suggestions or no defined pair
};

// Mean over queries of the mean pairwise Jaccard between the token sets of
// that query's suggestions. With remove_stopwords the sets exclude stopwords;
// a pair whose sets are both empty has no defined similarity and is skipped.
IntraJaccard IntraAlgorithmJaccard(const QueryRun& run, const StopwordSet& stopwords,
                                   bool remove_stopwords);

struct VarietyReport {
  std::size_t queries = 0;
  std::size_t t = 0;
  std::map<std::string, double> unique_pct;
  // (algorithm, stopwords removed) -> intra-algorithm Jaccard
  std::map<std::pair<std::string, bool>, IntraJaccard> intra_jaccard;
};

VarietyReport BuildVarietyReport(const std::map<std::string, QueryRun>& runs,
                                 const StopwordSet& stopwords);

// TSV with one column per algorithm: a unique-percentage row, then the
// intra-Jaccard rows with stopwords kept and removed.
void WriteVarietyTsv(std::ostream& out, const VarietyReport& report);

}  // namespace latent
