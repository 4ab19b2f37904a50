// Acceptance runner: one PASS/FAIL line per criterion. With an argument, runs
// only the named criterion. Exit status is non-zero if any selected criterion
// fails.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "latent/divergence.hpp"
#include "latent/error.hpp"
#include "latent/service.hpp"
#include "latent/simsearch.hpp"
#include "latent/variety.hpp"
#include "latent/zipf.hpp"
#include "support/fixtures.hpp"
#include "support/instances.hpp"
#include "support/live_server.hpp"
#include "support/oracles.hpp"
#include "support/parity.hpp"
#include "support/variety_fixture.hpp"

using namespace latent;

namespace {

// Collects sub-checks of one criterion; the first failures go into the line.
class Verdict {
 public:
  void Check(bool ok, const std::string& what) {
    ++checks_;
    if (!ok) failures_.push_back(what);
  }
  void Note(const std::string& note) { notes_.push_back(note); }
  bool ok() const { return failures_.empty(); }

  std::string Line(const std::string& name) const {
    std::ostringstream s;
    s << (ok() ? "PASS " : "FAIL ") << name;
    for (const auto& n : notes_) s << " " << n;
    if (!ok()) {
      s << " failed=" << failures_.size() << "/" << checks_ << " [";
      for (std::size_t i = 0; i < std::min<std::size_t>(failures_.size(), 4); ++i) {
        s << (i ? "; " : "") << failures_[i];
      }
      if (failures_.size() > 4) s << "; ...";
      s << "]";
    }
    return s.str();
  }

 private:
  std::size_t checks_ = 0;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string Fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

template <typename Fn>
bool Throws(ErrorCode code, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

// ---- divergence -------------------------------------------------------------

Verdict KlGaussian() {
  Verdict v;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  std::vector<double> estimates;
  double slowest = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(1000 + seed);
    PointSet x = fixture::Gaussian(10000, 2, 0.0, rng, 0);
    PointSet y = fixture::Gaussian(10000, 2, 1.0, rng, 1 << 20);
    const auto start = std::chrono::steady_clock::now();
    estimates.push_back(EstimateKl(x, y, 3, 1e-5).value);
    slowest = std::max(slowest, Seconds(start));
  }
  omp_set_num_threads(saved);
  const double med = Median(estimates);
  v.Note("median=" + Fmt(med) + " slowest_run_s=" + Fmt(slowest, 3));
  v.Check(std::abs(med - 0.5) <= 0.05, "median " + Fmt(med) + " outside 0.5 +- 0.05");
  v.Check(slowest < 60.0, "single-threaded run took " + Fmt(slowest) + " s");
  return v;
}

Verdict KlNull() {
  Verdict v;
  const std::size_t d = 300;
  // every k on each of 5 independent draws
  std::string est;
  double knn_s = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(77 + seed);
    PointSet x = fixture::Gaussian(5000, d, 0.0, rng, 0);
    PointSet y = fixture::Gaussian(5000, d, 0.0, rng, 1 << 20);
    const auto start = std::chrono::steady_clock::now();
    const NeighborDistances dists(x, y, 10);
    knn_s = std::max(knn_s, Seconds(start));
    est += seed ? " " : "";
    for (std::size_t k : {3, 5, 10}) {
      const double e = KlFromDistances(dists, k).value;
      est += (k == 3 ? "" : ",") + Fmt(e, 3);
      v.Check(std::abs(e) < 0.05,
              "seed " + std::to_string(seed) + " k=" + std::to_string(k) + " est " + Fmt(e, 3));
    }
  }
  v.Note("d=300 N=M=5000 est(k=3,5,10 per seed)=" + est + " knn_s=" + Fmt(knn_s, 3));
  // median |estimate| over 5 seeds per size, k = 3
  std::vector<double> medians;
  for (std::size_t n : {500, 2000, 8000}) {
    std::vector<double> abs_est;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(seed * 104729 + n);
      PointSet x = fixture::Gaussian(n, d, 0.0, rng, 0);
      PointSet y = fixture::Gaussian(n, d, 0.0, rng, 1 << 20);
      abs_est.push_back(std::abs(EstimateKl(x, y, 3).value));
    }
    medians.push_back(Median(abs_est));
  }
  v.Note("median_abs N=500,2000,8000: " + Fmt(medians[0]) + "," + Fmt(medians[1]) + "," +
         Fmt(medians[2]));
  v.Check(medians[0] > medians[1] && medians[1] > medians[2], "medians not shrinking");
  return v;
}

Verdict BKAlphaCriterion() {
  Verdict v;
  v.Check(BKAlpha(3, 1.0) == 1.0, "B(3,1) != 1");
  const double above = BKAlpha(3, 1.0 + 1e-5);
  const double below = BKAlpha(3, 1.0 - 1e-5);
  v.Note("B(3,1+eps)=" + Fmt(above, 12) + " B(3,1-eps)=" + Fmt(below, 12));
  v.Check(std::abs(above - 1.0) < 1e-4, "B(3, 1+1e-5) = " + Fmt(above, 12));
  v.Check(std::abs(below - 1.0) < 1e-4, "B(3, 1-1e-5) = " + Fmt(below, 12));
  // k <= |alpha - 1| is rejected, including the boundary
  v.Check(Throws(ErrorCode::kDomain, [] { BKAlpha(1, 2.0); }), "k=1 alpha=2 accepted");
  v.Check(Throws(ErrorCode::kDomain, [] { BKAlpha(1, 0.0); }), "k=1 alpha=0 accepted");
  v.Check(Throws(ErrorCode::kDomain, [] { BKAlpha(2, -1.5); }), "k=2 alpha=-1.5 accepted");
  v.Check(Throws(ErrorCode::kDomain, [] { BKAlpha(3, 4.5); }), "k=3 alpha=4.5 accepted");
  v.Check(Throws(ErrorCode::kDomain, [] { BKAlpha(0, 1.0); }), "k=0 accepted");
  v.Check(!Throws(ErrorCode::kDomain, [] { BKAlpha(2, 2.5); }), "k=2 alpha=2.5 rejected");
  return v;
}

Verdict CategoricalKl() {
  Verdict v;
  using V = std::vector<std::string>;
  const auto same = EmpiricalKl(V{"x", "y", "y"}, V{"x", "y", "y"});
  v.Check(same && std::abs(*same) <= 1e-12, "identical lists");
  const auto equal = EmpiricalKl(V{"a", "b"}, V{"a", "a", "b", "b"});
  v.Check(equal && std::abs(*equal) <= 1e-12, "equal empirical distributions");
  const auto hand = EmpiricalKl(V{"a", "a", "b"}, V{"a", "b", "b"});
  const double expect = (2.0 / 3) * std::log(2.0) + (1.0 / 3) * std::log(0.5);
  v.Check(hand && std::abs(*hand - expect) <= 1e-12, "(2/3)log2 + (1/3)log(1/2)");

  Rng rng(20240611);
  std::size_t nonzero = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    V p;
    const std::size_t n = 1 + rng.UniformBelow(40);
    const std::size_t vocab = 1 + rng.UniformBelow(15);
    for (std::size_t i = 0; i < n; ++i) p.push_back("w" + std::to_string(rng.UniformBelow(vocab)));
    const auto d = EmpiricalKl(p, p);
    if (!d || *d != 0.0) ++nonzero;
  }
  v.Note("D(P||P)!=0 in " + std::to_string(nonzero) + "/1000");
  v.Check(nonzero == 0, "D(P||P) != 0 on random fixtures");
  return v;
}

// ---- zipf -------------------------------------------------------------------

LogLogFit ExactFit(double c, double alpha) {
  RankTable t;
  std::size_t rank = 1;
  for (int i = 0; i < 12; ++i) {
    t.rows.push_back({rank, static_cast<std::size_t>(c / std::pow(double(rank), alpha)), ""});
    rank *= 2;
  }
  return FitLogLog(t);
}

Verdict ZipfFit() {
  Verdict v;
  for (double alpha : {1.0, 2.0}) {
    const auto fit = ExactFit(std::pow(2.0, 24), alpha);
    v.Check(std::abs(fit.slope + alpha) < 1e-9, "planted slope -" + Fmt(alpha) + " got " +
                                                    Fmt(fit.slope, 15));
  }

  // 1e5 tokens drawn from Zipf(1.1) over 5000 types by inverse CDF
  const std::size_t types = 5000, tokens = 100000;
  std::vector<double> cdf(types);
  double total = 0;
  for (std::size_t r = 0; r < types; ++r) cdf[r] = (total += std::pow(double(r + 1), -1.1));
  Rng rng(11);
  Corpus corpus;
  Document doc;
  doc.id = "zipf";
  Sentence s;
  s.id = "zipf-0";
  for (std::size_t i = 0; i < tokens; ++i) {
    const double u = rng.Uniform01() * total;
    const std::size_t r = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    s.tokens.push_back("t" + std::to_string(std::min(r, types - 1)));
  }
  doc.sentences.push_back(std::move(s));
  corpus.documents.push_back(std::move(doc));
  FitOptions head;
  head.max_rank = 100;
  const auto fit = FitLogLog(WordRankTable(corpus), head);
  v.Note("sampled slope=" + Fmt(fit.slope) + " (ranks 1-100)");
  v.Check(std::abs(fit.slope + 1.1) <= 0.05, "sampled slope " + Fmt(fit.slope));

  // c / (beta + r)^alpha against the closed form evaluated directly
  double worst = 0;
  for (double r : {1.0, 2.0, 7.0, 100.0, 5000.0}) {
    for (double beta : {0.0, 0.5, 2.7}) {
      for (double alpha : {0.8, 1.0, 1.1, 2.0}) {
        const double expect = 3.5 * std::exp(-alpha * std::log(beta + r));
        worst = std::max(worst, std::abs(ZipfMandelbrot(r, 3.5, beta, alpha) - expect) / expect);
      }
    }
  }
  v.Check(worst < 1e-12, "Zipf-Mandelbrot relative error " + Fmt(worst));
  v.Check(ZipfMandelbrot(4, 8, 0, 1) == 2.0, "8 / 4 != 2");
  return v;
}

LabeledPoints Blobs(const std::vector<std::vector<double>>& centres,
                    const std::vector<std::size_t>& sizes, double sd, Rng& rng,
                    std::vector<std::size_t>* labels) {
  LabeledPoints pts(centres[0].size());
  std::size_t id = 0;
  for (std::size_t c = 0; c < centres.size(); ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      std::vector<double> p = centres[c];
      for (auto& x : p) x += sd * rng.Normal();
      pts.Add("p" + std::to_string(id++), p);
      if (labels) labels->push_back(c);
    }
  }
  return pts;
}

Verdict Clustering() {
  Verdict v;
  Rng rng(1);
  std::vector<std::size_t> truth;
  const auto pts = Blobs({{0, 0}, {10, 0}, {0, 10}}, {300, 300, 300}, 1.0, rng, &truth);
  double worst_ari = 1.0;
  bool monotone = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    // KMeansFit itself throws if the inertia rises between Lloyd steps
    const ClusterModel m = KMeansFit(pts, 3, seed);
    worst_ari = std::min(worst_ari, oracle::AdjustedRandIndex(truth, m.assignments));
    for (std::size_t i = 1; i < m.inertia_trace.size(); ++i) {
      monotone = monotone && m.inertia_trace[i] <= m.inertia_trace[i - 1];
    }
  }
  v.Note("min_ARI=" + Fmt(worst_ari));
  v.Check(worst_ari >= 0.99, "ARI " + Fmt(worst_ari));
  v.Check(monotone, "inertia trace increased");

  // cluster sizes round(1000 / r), r = 1..10, in separated blobs
  const std::size_t k = 10;
  std::vector<std::vector<double>> centres(k, std::vector<double>(k, 0.0));
  std::vector<std::size_t> sizes;
  for (std::size_t r = 0; r < k; ++r) {
    centres[r][r] = 50.0;
    sizes.push_back(static_cast<std::size_t>(std::llround(1000.0 / double(r + 1))));
  }
  const auto planted = Blobs(centres, sizes, 1.0, rng, nullptr);
  const auto fit = FitLogLog(ClusterRankTable(KMeansFit(planted, k, 9)));
  v.Note("planted_slope=" + Fmt(fit.slope));
  v.Check(std::abs(fit.slope + 1.0) <= 0.15, "planted power-law slope " + Fmt(fit.slope));
  return v;
}

Verdict PosPurityCriterion() {
  Verdict v;
  const PosTag classes[] = {PosTag::kNoun, PosTag::kVerb, PosTag::kAdjective,
                            PosTag::kAdverb, PosTag::kPronoun, PosTag::kOther};
  const std::vector<std::size_t> ks = {1, 3, 5, 10, 20, 50};
  Rng rng(7);
  {
    EmbeddingTable table(8);
    PosTagMap tags;
    for (int c = 0; c < 6; ++c) {
      for (int i = 0; i < 100; ++i) {
        std::vector<double> p(8);
        for (auto& x : p) x = rng.Normal();
        p[c] += 100;
        const std::string w = "c" + std::to_string(c) + "_" + std::to_string(i);
        table.Add(w, p);
        tags[w] = classes[c];
      }
    }
    for (const auto& [k, pct] : PosPurity(table, tags, ks).per_k) {
      v.Check(pct == 100.0, "separated k=" + std::to_string(k) + " " + Fmt(pct));
    }
  }
  {
    // 1e4 points with unequal tag frequencies, tags assigned independently of
    // position. The chance a neighbour shares the tag is sum f_c^2.
    const double freq[] = {0.4, 0.25, 0.15, 0.1, 0.06, 0.04};
    const std::size_t n = 10000;
    std::vector<PosTag> pool;
    for (int c = 0; c < 6; ++c) {
      for (std::size_t i = 0; i < static_cast<std::size_t>(freq[c] * n); ++i) pool.push_back(classes[c]);
    }
    rng.Shuffle(std::span<PosTag>(pool));
    EmbeddingTable table(8);
    PosTagMap tags;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> p(8);
      for (auto& x : p) x = rng.Normal();
      const std::string w = "w" + std::to_string(i);
      table.Add(w, p);
      tags[w] = pool[i];
    }
    double null = 0;
    for (double f : freq) null += 100.0 * f * f;
    std::string got;
    for (const auto& [k, pct] : PosPurity(table, tags, ks).per_k) {
      got += (got.empty() ? "" : ",") + Fmt(pct);
      v.Check(std::abs(pct - null) <= 3.0, "permuted k=" + std::to_string(k) + " " + Fmt(pct));
    }
    v.Note("null=" + Fmt(null) + " permuted=" + got);
  }
  return v;
}

// ---- simsearch --------------------------------------------------------------

Verdict SetCover() {
  using namespace instances;
  Verdict v;
  Rng rng(31337);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Instance inst(rng, 8 + rng.UniformBelow(5), 15);
    const SentenceDatabase db(inst.corpus, inst.table, inst.stop, AnyLength());
    const Query q = rng.UniformBelow(2)
                        ? Query::FromEntry(db.entries()[rng.UniformBelow(db.size())])
                        : Query::FromText("w3 w5 w0 w9");
    SuggestParams p;
    p.t = 1 + rng.UniformBelow(4);
    p.r = rng.UniformBelow(5);
    p.rho = std::array<double, 3>{0.0, 0.5, 1.0}[rng.UniformBelow(3)];
    const auto got = SetCoverSuggest(db, q, p);
    const auto expect =
        oracle::StraightLineGreedy(Candidates(db, q), OracleTarget(db, q, p.r, true), p.t, p.rho);
    bool same = got.suggestions.size() == expect.size();
    for (std::size_t i = 0; same && i < expect.size(); ++i) {
      const auto& s = got.suggestions[i];
      same = s.sentence_id == expect[i].id &&
             std::abs(s.score - expect[i].score) <= 1e-12 * expect[i].score &&
             std::set<std::string>(s.covered.begin(), s.covered.end()) == expect[i].covered;
    }
    mismatches += !same;
  }
  v.Note("trace_mismatches=" + std::to_string(mismatches) + "/200");
  v.Check(mismatches == 0, "greedy trace differs from the straight-line oracle");

  const double bound = 1.0 - 1.0 / std::numbers::e;
  double worst_ratio = 1.0;
  for (int trial = 0; trial < 200; ++trial) {
    Instance inst(rng, 12, 20);
    const SentenceDatabase db(inst.corpus, inst.table, inst.stop, AnyLength());
    const Query q = Query::FromText("w2 w4 w6 w8 w10 w12");
    SuggestParams p;
    p.t = 1 + rng.UniformBelow(3);
    p.r = rng.UniformBelow(4);
    p.rho = 0.0;
    std::size_t covered = 0;
    for (const auto& s : SetCoverSuggest(db, q, p).suggestions) covered += s.covered.size();
    const auto best = oracle::BestCoverage(Candidates(db, q), OracleTarget(db, q, p.r, true), p.t);
    if (best > 0) worst_ratio = std::min(worst_ratio, double(covered) / double(best));
  }
  v.Note("worst_coverage_ratio=" + Fmt(worst_ratio));
  v.Check(worst_ratio >= bound, "coverage ratio " + Fmt(worst_ratio) + " below 1-1/e");

  std::size_t overlap_misses = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Instance inst(rng, 10, 12);
    const SentenceDatabase db(inst.corpus, inst.table, inst.stop, AnyLength());
    const Query q = Query::FromText("w2 w3 w4 w0 w7");
    const TokenSet query_words(q.tokens.begin(), q.tokens.end());
    SuggestParams p;
    p.t = 1;
    p.r = 0;
    p.rho = 0;
    auto overlap = [&](const DatabaseEntry& e) {
      std::size_t o = 0;
      for (const auto& w : query_words) o += !inst.stop.contains(w) && e.content_set.contains(w);
      return o;
    };
    std::size_t best = 0;
    for (const auto& e : db.entries()) best = std::max(best, overlap(e));
    const auto got = SetCoverSuggest(db, q, p);
    if (best == 0) {
      overlap_misses += !got.suggestions.empty();
    } else {
      overlap_misses += got.suggestions.size() != 1 ||
                        overlap(db.entries()[*db.Find(got.suggestions[0].sentence_id)]) != best;
    }
  }
  v.Check(overlap_misses == 0, "r=0 rho=0 round 1 missed the max overlap " +
                                   std::to_string(overlap_misses) + " times");
  return v;
}

Verdict BaselineOracles() {
  Verdict v;
  Rng rng(2718);
  EmbeddingTable t(4);
  for (int w = 0; w < 12; ++w) {
    t.Add("v" + std::to_string(w),
          std::vector<double>{rng.Normal(), rng.Normal(), rng.Normal(), rng.Normal()});
  }
  auto sentence = [&] {
    std::vector<std::string> s;
    for (std::size_t n = 1 + rng.UniformBelow(6); n > 0; --n) {
      s.push_back("v" + std::to_string(rng.UniformBelow(12)));
    }
    return s;
  };
  double worst_lp = 0, worst_sym = 0;
  bool zero_ok = true, nonneg = true;
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = sentence();
    const auto b = sentence();
    std::map<std::string, double> ca, cb;
    for (const auto& w : a) ca[w] += 1.0 / double(a.size());
    for (const auto& w : b) cb[w] += 1.0 / double(b.size());
    std::vector<double> supply, demand;
    std::vector<std::vector<double>> cost;
    for (const auto& [wa, ma] : ca) {
      supply.push_back(ma);
      cost.emplace_back();
      for (const auto& [wb, mb] : cb) {
        const auto u = *t.Find(wa);
        const auto x = *t.Find(wb);
        double s = 0;
        for (std::size_t i = 0; i < 4; ++i) s += (u[i] - x[i]) * (u[i] - x[i]);
        cost.back().push_back(std::sqrt(s));
      }
    }
    for (const auto& [wb, mb] : cb) demand.push_back(mb);
    const double w = Wmd(a, b, t, {});
    worst_lp = std::max(worst_lp, std::abs(w - oracle::TransportLp(supply, demand, cost)));
    worst_sym = std::max(worst_sym, std::abs(w - Wmd(b, a, t, {})));
    zero_ok = zero_ok && Wmd(a, a, t, {}) == 0.0;
    nonneg = nonneg && w >= 0.0;
  }
  v.Note("wmd_lp_max_err=" + Fmt(worst_lp));
  v.Check(worst_lp <= 1e-9, "WMD vs LP " + Fmt(worst_lp));
  v.Check(worst_sym <= 1e-9, "WMD asymmetry " + Fmt(worst_sym));
  v.Check(zero_ok, "WMD(a, a) != 0");
  v.Check(nonneg, "negative WMD");

  // Word sets of the monarch example, counted with case kept
  const TokenSet q = {"Queen", "Elizabeth", "II", "of", "England", "is", "one",
                      "the", "longest", "ruling", "monarchs", "in", "history"};
  const TokenSet s1 = {"The", "rock", "band", "Queen", "is", "famous",
                       "for", "songs", "like", "Bohemian", "Rhapsody"};
  const TokenSet s2 = {"King", "Louis", "XIV", "former", "ruler", "of", "France",
                       "reigned", "more", "days", "than", "any", "other", "sovereign"};
  v.Check(Jaccard(q, s1) == 2.0 / 22.0, "Jaccard(q, s1) != 2/22");
  v.Check(Jaccard(q, s2) == 1.0 / 26.0, "Jaccard(q, s2) != 1/26");

  const std::u32string alphabet = U"abcdé€𝄞 ";
  auto random_string = [&] {
    std::u32string s;
    for (std::size_t i = rng.UniformBelow(12); i > 0; --i) {
      s += alphabet[rng.UniformBelow(alphabet.size())];
    }
    return s;
  };
  std::size_t ld_misses = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto a = random_string();
    const auto b = random_string();
    ld_misses += Levenshtein(oracle::EncodeUtf8(a), oracle::EncodeUtf8(b)) !=
                 oracle::EditDistance(a, b);
  }
  v.Note("levenshtein_mismatches=" + std::to_string(ld_misses) + "/10000");
  v.Check(ld_misses == 0, "Levenshtein differs from the DP oracle");
  return v;
}

// ---- variety ----------------------------------------------------------------

// Topical synthetic library: 20 topics of 40 words clustered in 16-d, ten
// stopwords, 2000 sentences of 5-15 tokens mostly from one topic.
struct SyntheticLibrary {
  EmbeddingTable table{16};
  StopwordSet stop;
  Corpus corpus;

  explicit SyntheticLibrary(std::uint64_t seed) {
    Rng rng(seed);
    for (const char* w : {"the", "a", "of", "and", "in", "on", "was", "it", "to", "by"}) {
      stop.insert(w);
    }
    const std::size_t topics = 20, words = 40;
    for (std::size_t c = 0; c < topics; ++c) {
      std::vector<double> centre(16);
      for (auto& x : centre) x = 4.0 * rng.Normal();
      for (std::size_t i = 0; i < words; ++i) {
        std::vector<double> p = centre;
        for (auto& x : p) x += rng.Normal();
        table.Add("t" + std::to_string(c) + "w" + std::to_string(i), p);
      }
    }
    // within-topic word weights ~ 1 / (i + 1)
    std::vector<double> cdf(words);
    double total = 0;
    for (std::size_t i = 0; i < words; ++i) cdf[i] = (total += 1.0 / double(i + 1));
    const std::vector<std::string> stop_list(stop.begin(), stop.end());
    std::vector<std::string> sorted_stop = stop_list;
    std::sort(sorted_stop.begin(), sorted_stop.end());
    for (std::size_t d = 0; d < topics; ++d) {
      Document doc;
      doc.id = "doc" + std::to_string(d);
      for (std::size_t s = 0; s < 100; ++s) {
        Sentence sent;
        char id[32];
        std::snprintf(id, sizeof id, "doc%02zu-%03zu", d, s);
        sent.id = id;
        const std::size_t topic = rng.Uniform01() < 0.8 ? d : rng.UniformBelow(topics);
        for (std::size_t n = 5 + rng.UniformBelow(11); n > 0; --n) {
          if (rng.Uniform01() < 0.3) {
            sent.tokens.push_back(sorted_stop[rng.UniformBelow(sorted_stop.size())]);
          } else {
            const double u = rng.Uniform01() * total;
            const std::size_t w = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
            sent.tokens.push_back("t" + std::to_string(topic) + "w" +
                                  std::to_string(std::min(w, words - 1)));
          }
        }
        for (const auto& tok : sent.tokens) sent.raw_text += (sent.raw_text.empty() ? "" : " ") + tok;
        doc.sentences.push_back(std::move(sent));
      }
      corpus.documents.push_back(std::move(doc));
    }
    corpus.stopwords = stop;
  }
};

Verdict Variety() {
  Verdict v;
  {
    const auto runs = variety_fixture::Runs();
    const auto pct = UniqueSuggestionPct(runs);
    v.Check(std::abs(pct.at("A") - 100.0 / 6) <= 1e-12, "unique% A");
    v.Check(std::abs(pct.at("B") - 200.0 / 6) <= 1e-12, "unique% B");
    v.Check(std::abs(pct.at("C") - 500.0 / 6) <= 1e-12, "unique% C");
    const StopwordSet stop = {"the"};
    const double keep = IntraAlgorithmJaccard(runs.at("A"), stop, false).mean;
    const double drop = IntraAlgorithmJaccard(runs.at("A"), stop, true).mean;
    v.Check(std::abs(keep - (1.0 / 9 + 5.0 / 9) / 2) <= 1e-12, "intra Jaccard A, stopwords kept");
    v.Check(std::abs(drop - (1.0 / 9 + 1.0 / 3) / 2) <= 1e-12, "intra Jaccard A, stopwords removed");
    v.Check(IntraAlgorithmJaccard(runs.at("C"), stop, false).mean == 0.0, "intra Jaccard C");
  }
  {
    const SyntheticLibrary lib(99);
    const SentenceDatabase db(lib.corpus, lib.table, lib.stop);
    std::vector<std::size_t> order(db.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(DeriveSeed(99, "variety-queries"));
    rng.Shuffle(std::span<std::size_t>(order));
    SuggestParams p;  // t = 5, r = 10, rho = 0.5
    QueryRun cover, jaccard;
    for (std::size_t i = 0; i < 200; ++i) {
      const Query q = Query::FromEntry(db.entries()[order[i]]);
      cover.push_back(Suggest(db, q, Algorithm::kSetCover, p));
      jaccard.push_back(Suggest(db, q, Algorithm::kJaccard, p));
    }
    for (bool remove : {true, false}) {
      const auto c = IntraAlgorithmJaccard(cover, lib.stop, remove);
      const auto j = IntraAlgorithmJaccard(jaccard, lib.stop, remove);
      const std::string tag = remove ? "stopwords_removed" : "stopwords_kept";
      v.Note(tag + ": set_cover=" + Fmt(c.mean) + " jaccard=" + Fmt(j.mean));
      v.Check(c.mean < j.mean, "set_cover intra-Jaccard not below jaccard (" + tag + ")");
    }
  }
  return v;
}

// ---- cli / service ----------------------------------------------------------

const SuggestService& FixtureService() {
  static const Corpus corpus = fixture::Corpus();
  static const EmbeddingTable table = fixture::Vectors();
  static const SuggestService service(corpus, table);
  return service;
}

Verdict CliServiceParity() {
  Verdict v;
  fixture::LiveServer server(FixtureService());
  auto client = server.Client();
  std::size_t compared = 0, refused = 0;
  for (const auto& c : parity::FixtureCases()) {
    const std::string label = c.algorithm + " \"" + c.query.substr(0, 20) + "\"";
    const auto run = fixture::RunCli(parity::CliArgs(c));
    auto res = client.Post("/api/suggest", parity::RequestBody(c), "application/json");
    if (!res) {
      v.Check(false, label + ": no HTTP response");
      continue;
    }
    if (run.code != 0) {
      ++refused;
      v.Check(res->status != 200, label + ": CLI failed but service answered 200");
      continue;
    }
    if (res->status != 200) {
      v.Check(false, label + ": HTTP " + std::to_string(res->status));
      continue;
    }
    ++compared;
    v.Check(parity::CanonicalFromTsv(run.out) ==
                parity::CanonicalFromJson(nlohmann::json::parse(res->body)),
            label + ": outputs differ");
  }
  v.Note("cases_compared=" + std::to_string(compared) +
         " refused_by_both=" + std::to_string(refused));
  v.Check(compared >= 20, "too few comparable cases");
  return v;
}

Verdict Reproducibility() {
  Verdict v;
  const int saved = omp_get_max_threads();
  std::size_t runs = 0;
  for (const auto& args : fixture::SeededPipelines()) {
    const auto first = fixture::RunCli(args);
    if (first.code != 0) {
      v.Check(false, args.front() + ": exit " + std::to_string(first.code));
      continue;
    }
    // rerun from the recorded header, then again with another thread count
    const auto replay = fixture::RunCli(fixture::ReplayArgs(first.out));
    v.Check(replay.out == first.out, args.front() + ": header replay differs");
    omp_set_num_threads(saved == 1 ? 4 : 1);
    const auto threaded = fixture::RunCli(args);
    omp_set_num_threads(saved);
    v.Check(threaded.out == first.out, args.front() + ": thread count changes output");
    ++runs;
  }
  v.Note("pipelines=" + std::to_string(runs));
  return v;
}

struct Criterion {
  const char* name;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {"kl_gaussian", KlGaussian},
      {"kl_null", KlNull},
      {"b_k_alpha", BKAlphaCriterion},
      {"categorical_kl", CategoricalKl},
      {"zipf_fit", ZipfFit},
      {"clustering", Clustering},
      {"pos_purity", PosPurityCriterion},
      {"set_cover", SetCover},
      {"baseline_oracles", BaselineOracles},
      {"variety", Variety},
      {"cli_service_parity", CliServiceParity},
      {"reproducibility", Reproducibility},
  };
  const std::string only = argc > 1 ? argv[1] : "";
  bool matched = false, all_ok = true;
  for (const auto& c : criteria) {
    if (!only.empty() && only != c.name) continue;
    matched = true;
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.Check(false, std::string("exception: ") + e.what());
    }
    std::cout << v.Line(c.name) << std::endl;
    all_ok = all_ok && v.ok();
  }
  if (!matched) {
    std::cerr << "unknown criterion: " << only << "\n";
    return 2;
  }
  return all_ok ? 0 : 1;
}
