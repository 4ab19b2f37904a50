#include "latent/variety.hpp"

#include <set>

#include "latent/divergence.hpp"
#include "latent/error.hpp"
#include "latent/output.hpp"

namespace latent {

namespace {

void CheckAligned(const std::map<std::string, QueryRun>& runs) {
  if (runs.empty()) return;
  const auto& [first_name, first] = *runs.begin();
  for (const auto& [name, run] : runs) {
    if (run.size() != first.size()) {
      throw Error(ErrorCode::kMismatchedRuns,
                  "'" + name + "' ran " + std::to_string(run.size()) + " queries, '" +
                      first_name + "' ran " + std::to_string(first.size()));
    }
    for (std::size_t q = 0; q < run.size(); ++q) {
      if (run[q].query != first[q].query || run[q].params.t != first[q].params.t) {
        throw Error(ErrorCode::kMismatchedRuns,
                    "query " + std::to_string(q) + " differs between '" + name +
                        "' and '" + first_name + "'");
      }
    }
  }
}

TokenSet SuggestionSet(const Suggestion& s, const StopwordSet& stopwords, bool remove) {
  TokenSet out;
  for (const auto& t : s.tokens) {
    if (!remove || !stopwords.contains(t)) out.insert(t);
  }
  return out;
}

}  // namespace

std::map<std::string, double> UniqueSuggestionPct(
    const std::map<std::string, QueryRun>& runs) {
  CheckAligned(runs);
  std::map<std::string, double> out;
  for (const auto& [name, run] : runs) {
    std::size_t total = 0, unique = 0;
    for (std::size_t q = 0; q < run.size(); ++q) {
      std::set<std::string> others;
      for (const auto& [other_name, other] : runs) {
        if (other_name == name) continue;
        for (const auto& s : other[q].suggestions) others.insert(s.sentence_id);
      }
      for (const auto& s : run[q].suggestions) {
        ++total;
        unique += !others.contains(s.sentence_id);
      }
    }
    out[name] = total == 0 ? 0.0
                           : 100.0 * static_cast<double>(unique) / static_cast<double>(total);
  }
  return out;
}

IntraJaccard IntraAlgorithmJaccard(const QueryRun& run, const StopwordSet& stopwords,
                                   bool remove_stopwords) {
  IntraJaccard result;
  std::vector<double> per_query;
  for (const auto& r : run) {
    std::vector<TokenSet> sets;
    for (const auto& s : r.suggestions) {
      sets.push_back(SuggestionSet(s, stopwords, remove_stopwords));
    }
    std::vector<double> pairs;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      for (std::size_t j = i + 1; j < sets.size(); ++j) {
        if (auto jac = Jaccard(sets[i], sets[j])) pairs.push_back(*jac);
      }
    }
    if (pairs.empty()) {
      ++result.queries_skipped;
      continue;
    }
    per_query.push_back(PairwiseSum(pairs) / static_cast<double>(pairs.size()));
  }
  result.queries_used = per_query.size();
  if (!per_query.empty()) {
    result.mean = PairwiseSum(per_query) / static_cast<double>(per_query.size());
  }
  return result;
}

VarietyReport BuildVarietyReport(const std::map<std::string, QueryRun>& runs,
                                 const StopwordSet& stopwords) {
  VarietyReport report;
  report.unique_pct = UniqueSuggestionPct(runs);
  if (!runs.empty()) {
    const auto& first = runs.begin()->second;
    report.queries = first.size();
    report.t = first.empty() ? 0 : first.front().params.t;
  }
  for (const auto& [name, run] : runs) {
    for (bool remove : {false, true}) {
      report.intra_jaccard[{name, remove}] = IntraAlgorithmJaccard(run, stopwords, remove);
    }
  }
  return report;
}

void WriteVarietyTsv(std::ostream& out, const VarietyReport& report) {
  out << "metric\tqueries\trm_stop";
  for (const auto& [name, pct] : report.unique_pct) out << '\t' << name;
  out << '\n';
  out << "unique_pct\t" << report.queries << "\t-";
  for (const auto& [name, pct] : report.unique_pct) out << '\t' << FormatDouble(pct);
  out << '\n';
  for (bool remove : {false, true}) {
    out << "intra_jaccard\t" << report.queries << '\t' << (remove ? "yes" : "no");
    for (const auto& [name, pct] : report.unique_pct) {
      out << '\t' << FormatDouble(report.intra_jaccard.at({name, remove}).mean);
    }
    out << '\n';
  }
}

}  // namespace latent
