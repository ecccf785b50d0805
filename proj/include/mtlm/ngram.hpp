// ngram.hpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Flat hybrid word/character n-gram model with interpolated modified
// Kneser-Ney smoothing.
//
// Histories are classed by their last symbol: word-internal (H_i, last
// symbol in C) or word-boundary (H_b, anything else, including the
// empty history at utterance start). A history may only generate
// symbols from its class's allowed set,
//     H_b: W u C u {EOS},    H_i: C u {EOW},
// and the constraint is enforced by restricting and renormalizing the
// estimate at every backoff level, so every conditional distribution
// sums to one exactly over its allowed set. Since backoff drops the
// oldest symbol, the class is invariant along a backoff chain; the only
// level shared between classes is the empty history, which therefore
// carries one unigram distribution per class.
//
// Estimation recursion, identical in the model and in the independent
// test oracle (order n, count table tbl[k] is raw windowed counts at
// k = n and left-extension continuation counts below; A is the allowed
// set of the query's class):
//
//   p_k(s|h) = (tbl[k](h,s) - D_k(c))_+ / T(h)  +  gamma_k(h) p_{k-1}(s|h')
//   gamma_k(h) = (D1 N1(h) + D2 N2(h) + D3 N3+(h)) / T(h)
//   p_1(s) = (u(s) - D_1(c))_+ / T + gamma_1 / |A|     (u restricted to A)
//
// with T(h) the total count of h's continuations, h' = h minus its
// oldest symbol, and unseen histories (T = 0) skipped with weight one.
// Discounts per order come from count-of-counts (Y = n1/(n1+2 n2),
// D1 = 1-2Y n2/n1, D2 = 2-3Y n3/n2, D3 = 3-4Y n4/n3); if n1, n2 or n3
// is zero or any discount is not strictly positive the order falls back
// to a single absolute discount of 0.75. A zero discount would let a
// history assign zero mass to unseen continuations, which the
// open-vocabulary contract rules out.
//
// 6- and 7-gram entries whose history consists entirely of word symbols
// are pruned from the raw count tables before anything is derived from
// them, and from the derived continuation tables again, so the stored
// model never contains such histories and backoff mass stays
// consistent.

#ifndef MTLM_NGRAM_HPP_
#define MTLM_NGRAM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mtlm/error.hpp"
#include "mtlm/symbols.hpp"

namespace mtlm {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log2(2^a + 2^b), stable.
inline double Log2Add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log2(1.0 + std::exp2(lo - hi));
}

// %.17g round-trips doubles exactly.
inline std::string FormatG17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

enum class HistClass { kBoundary, kInternal };

inline HistClass ClassOfHistory(std::span<const SymId> h,
                                const SymbolTable& table) {
  if (h.empty()) return HistClass::kBoundary;
  return table.IsChar(h.back()) ? HistClass::kInternal : HistClass::kBoundary;
}

inline bool Allowed(HistClass cls, SymId s, const SymbolTable& table) {
  if (cls == HistClass::kBoundary) return s != SymbolTable::kEow;
  return table.IsChar(s) || s == SymbolTable::kEow;
}

inline std::size_t AllowedSetSize(HistClass cls, const SymbolTable& table) {
  // H_b: W u C u {EOS};  H_i: C u {EOW}.
  if (cls == HistClass::kBoundary) {
    return table.num_words() + table.num_chars() + 1;
  }
  return table.num_chars() + 1;
}

struct Discounts {
  double d1 = 0.75, d2 = 0.75, d3 = 0.75;
  bool fallback = true;

  double For(std::uint64_t count) const {
    if (count == 0) return 0.0;
    if (count == 1) return d1;
    if (count == 2) return d2;
    return d3;
  }
};

namespace ngram_detail {

// count tables keyed by history; values keyed by continuation symbol.
using HistMap = std::map<SymVec, std::map<SymId, std::uint64_t>>;

inline Discounts ComputeDiscounts(const HistMap& table) {
  std::uint64_t n1 = 0, n2 = 0, n3 = 0, n4 = 0;
  for (const auto& [h, conts] : table) {
    for (const auto& [s, c] : conts) {
      if (c == 1) ++n1;
      else if (c == 2) ++n2;
      else if (c == 3) ++n3;
      else if (c == 4) ++n4;
    }
  }
  Discounts d;
  if (n1 == 0 || n2 == 0 || n3 == 0) return d;
  const double y = static_cast<double>(n1) / (n1 + 2.0 * n2);
  d.d1 = 1.0 - 2.0 * y * n2 / n1;
  d.d2 = 2.0 - 3.0 * y * n3 / n2;
  d.d3 = 3.0 - 4.0 * y * n4 / n3;
  if (d.d1 <= 0 || d.d2 <= 0 || d.d3 <= 0) return Discounts{};
  d.fallback = false;
  return d;
}

struct HistAgg {
  std::uint64_t total = 0;
  double gamma = 0.0;
};

inline std::map<SymVec, HistAgg> Aggregate(const HistMap& table,
                                           const Discounts& d) {
  std::map<SymVec, HistAgg> out;
  for (const auto& [h, conts] : table) {
    HistAgg agg;
    double reserved = 0.0;
    for (const auto& [s, c] : conts) {
      agg.total += c;
      reserved += d.For(c);
    }
    agg.gamma = reserved / static_cast<double>(agg.total);
    out[h] = agg;
  }
  return out;
}

}  // namespace ngram_detail

// Model file layout: symbol table, then per order one section of
// n-gram lines and one of context backoff lines, all probabilities in
// log2 printed with 17 significant digits.
inline constexpr char kNgramMagic[] = "mtlm-ngram v1";

class NgramModel {
 public:
  struct Context {
    double backoff_log2 = 0.0;
    std::map<SymId, double> probs_log2;
  };

  NgramModel() = default;

  int order() const { return order_; }
  const HybridVocabulary& vocab() const { return vocab_; }
  const SymbolTable& table() const { return vocab_.table(); }

  // log2 p(s | history); history may be any length, truncation to
  // order-1 happens here. Standard backoff walk over the stored model.
  double ConditionalLog2(std::span<const SymId> history, SymId s) const {
    if (s < 0 || s >= table().Size()) {
      ThrowInternal("symbol id out of range in scoring");
    }
    // Class before truncation: an order-1 model still distinguishes
    // word-internal from word-boundary states even though it keeps no
    // context symbols.
    const HistClass cls = ClassOfHistory(history, table());
    const std::size_t max_h = static_cast<std::size_t>(order_ - 1);
    if (history.size() > max_h) {
      history = history.subspan(history.size() - max_h);
    }
    if (!Allowed(cls, s, table())) {
      ThrowInternal("symbol " + table().Info(s).text +
                    " not generatable from this history class; "
                    "stream was not produced by encode()");
    }
    double acc = 0.0;
    SymVec key(history.begin(), history.end());
    while (!key.empty()) {
      const auto& ctxs = contexts_[key.size()];
      auto it = ctxs.find(key);
      if (it != ctxs.end()) {
        auto pit = it->second.probs_log2.find(s);
        if (pit != it->second.probs_log2.end()) return acc + pit->second;
        acc += it->second.backoff_log2;
      }
      key.erase(key.begin());
    }
    const auto& uni =
        cls == HistClass::kBoundary ? uni_boundary_log2_ : uni_internal_log2_;
    const double p = uni[static_cast<std::size_t>(s)];
    if (p == kNegInf) {
      ThrowInternal("zero probability at every backoff level for symbol " +
                    table().Info(s).text);
    }
    return acc + p;
  }

  // log2 probability of one complete symbol stream (one derivation).
  double ScoreStreamLog2(std::span<const SymId> stream) const {
    double total = 0.0;
    for (std::size_t i = 0; i < stream.size(); ++i) {
      total += ConditionalLog2(stream.subspan(0, i), stream[i]);
    }
    return total;
  }

  // log2 of the total utterance probability, summed over every way of
  // realizing in-vocabulary tokens as word symbols or character
  // spell-outs. Forward DP whose state is the (order-1)-truncated
  // symbol history; states that collide after truncation merge by
  // probability addition.
  double UtteranceLogProb(const std::vector<std::string>& tokens) const {
    std::map<SymVec, double> states;
    states[SymVec{}] = 0.0;
    // States keep at least one symbol so the history class survives
    // truncation under an order-1 model.
    const std::size_t max_h =
        std::max<std::size_t>(static_cast<std::size_t>(order_ - 1), 1);
    for (const auto& tok : tokens) {
      std::vector<SymVec> realizations;
      SymVec spelled = vocab_.SpellOut(tok);
      spelled.push_back(SymbolTable::kEow);
      const SymId word = table().WordId(tok);
      if (word >= 0) realizations.push_back({word});
      realizations.push_back(std::move(spelled));

      std::map<SymVec, double> next;
      for (const auto& [state, lp] : states) {
        for (const auto& real : realizations) {
          double add = 0.0;
          SymVec h = state;
          for (SymId s : real) {
            add += ConditionalLog2(h, s);
            h.push_back(s);
            if (h.size() > max_h) h.erase(h.begin());
          }
          double& slot = next.try_emplace(h, kNegInf).first->second;
          slot = Log2Add(slot, lp + add);
        }
      }
      states.swap(next);
    }
    double total = kNegInf;
    for (const auto& [state, lp] : states) {
      total = Log2Add(total, lp + ConditionalLog2(state, SymbolTable::kEos));
    }
    return total;
  }

  // Stored contexts by history length; exposed for structural checks
  // (pruning, normalization sweeps) and serialization.
  const std::vector<std::map<SymVec, Context>>& contexts() const {
    return contexts_;
  }
  const std::vector<double>& unigram_log2(HistClass cls) const {
    return cls == HistClass::kBoundary ? uni_boundary_log2_
                                       : uni_internal_log2_;
  }

  void Save(std::ostream& out) const {
    out << kNgramMagic << "\norder " << order_ << "\n";
    out << "\\symbols\\\n";
    for (SymId id = 0; id < table().Size(); ++id) {
      const SymbolInfo& info = table().Info(id);
      out << info.text << '\t' << static_cast<char>(info.cls) << '\n';
    }
    auto dump_uni = [&](const char* name, const std::vector<double>& uni) {
      out << name << '\n';
      for (std::size_t s = 0; s < uni.size(); ++s) {
        if (uni[s] != kNegInf) {
          out << FormatG17(uni[s]) << '\t' << s << '\n';
        }
      }
    };
    dump_uni("\\1b-grams:", uni_boundary_log2_);
    dump_uni("\\1i-grams:", uni_internal_log2_);
    for (std::size_t len = 1; len < contexts_.size(); ++len) {
      if (contexts_[len].empty()) continue;
      out << '\\' << (len + 1) << "-grams:\n";
      for (const auto& [h, ctx] : contexts_[len]) {
        for (const auto& [s, p] : ctx.probs_log2) {
          out << FormatG17(p) << '\t';
          for (SymId hs : h) out << hs << ' ';
          out << s << '\n';
        }
      }
      out << '\\' << (len + 1) << "-contexts:\n";
      for (const auto& [h, ctx] : contexts_[len]) {
        out << FormatG17(ctx.backoff_log2) << '\t';
        for (std::size_t i = 0; i < h.size(); ++i) {
          if (i) out << ' ';
          out << h[i];
        }
        out << '\n';
      }
    }
    out << "\\end\\\n";
  }

  static NgramModel Load(std::istream& in) {
    NgramModel m;
    std::string line;
    auto next_line = [&]() -> bool {
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
      return false;
    };
    if (!next_line() || line != kNgramMagic) {
      ThrowModel("not an n-gram model file");
    }
    if (!next_line() || line.rfind("order ", 0) != 0) {
      ThrowModel("missing order line");
    }
    m.order_ = std::stoi(line.substr(6));
    if (!next_line() || line != "\\symbols\\") ThrowModel("missing symbols");
    SymbolTable& table = m.vocab_.mutable_table();
    // Section headers start with a backslash and carry no tab; symbol
    // and n-gram lines always contain one (a lone backslash can itself
    // be a legitimate symbol).
    auto is_header = [](const std::string& l) {
      return !l.empty() && l[0] == '\\' && l.find('\t') == std::string::npos;
    };
    while (next_line()) {
      if (is_header(line)) break;
      const auto tab = line.rfind('\t');
      if (tab == std::string::npos) ThrowModel("malformed symbol line");
      const std::string text = line.substr(0, tab);
      const char cls = line[tab + 1];
      if (cls == 'S') {
        // EOW and EOS are created by the table constructor.
      } else if (cls == 'W') {
        table.AddWord(text);
      } else if (cls == 'C') {
        auto cps = DecodeUtf8(text, "symbol table");
        if (cps.size() != 1) ThrowModel("character symbol must be one char");
        table.AddChar(cps[0]);
      } else {
        ThrowModel("unknown symbol class");
      }
    }
    const auto size = static_cast<std::size_t>(table.Size());
    m.uni_boundary_log2_.assign(size, kNegInf);
    m.uni_internal_log2_.assign(size, kNegInf);
    m.contexts_.assign(static_cast<std::size_t>(m.order_), {});

    // `line` currently holds a section header.
    while (line != "\\end\\") {
      const std::string section = line;
      std::vector<double>* uni = nullptr;
      bool is_context = false;
      std::size_t k = 0;
      if (section == "\\1b-grams:") {
        uni = &m.uni_boundary_log2_;
      } else if (section == "\\1i-grams:") {
        uni = &m.uni_internal_log2_;
      } else {
        char kind[16];
        unsigned kk = 0;
        if (std::sscanf(section.c_str(), "\\%u-%15s", &kk, kind) != 2) {
          ThrowModel("unknown section " + section);
        }
        k = kk;
        is_context = std::string(kind) == "contexts:";
        if (k < 2 || static_cast<int>(k) > m.order_) {
          ThrowModel("section order out of range: " + section);
        }
      }
      bool more = false;
      while ((more = next_line()) && !is_header(line)) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) ThrowModel("malformed model line");
        const double value = std::strtod(line.c_str(), nullptr);
        std::istringstream ids(line.substr(tab + 1));
        SymVec syms;
        SymId id;
        while (ids >> id) syms.push_back(id);
        if (uni) {
          if (syms.size() != 1) ThrowModel("malformed unigram line");
          (*uni)[static_cast<std::size_t>(syms[0])] = value;
        } else if (is_context) {
          m.contexts_[k - 1][syms].backoff_log2 = value;
        } else {
          const SymId s = syms.back();
          syms.pop_back();
          m.contexts_[k - 1][syms].probs_log2[s] = value;
        }
      }
      if (!more) ThrowModel("truncated model file (no \\end\\)");
    }
    return m;
  }

 private:
  friend NgramModel TrainKneserNey(const std::vector<SymVec>&,
                                   const HybridVocabulary&, int, int);

  int order_ = 0;
  HybridVocabulary vocab_;
  std::vector<std::map<SymVec, Context>> contexts_;  // index = |history|
  std::vector<double> uni_boundary_log2_;  // by symbol id; -inf if disallowed
  std::vector<double> uni_internal_log2_;
};

// Estimates an interpolated modified Kneser-Ney model over hybrid
// symbol streams. `prune_all_word_span` is the longest all-word history
// retained (entries with longer all-word histories are pruned from the
// counts before estimation).
inline NgramModel TrainKneserNey(const std::vector<SymVec>& streams,
                                 const HybridVocabulary& vocab, int order,
                                 int prune_all_word_span = 4) {
  if (order < 1 || order > 7) {
    ThrowConfig("n-gram order must be between 1 and 7, got " +
                std::to_string(order));
  }
  if (streams.empty()) ThrowData("no training streams");
  const SymbolTable& table = vocab.table();
  const auto n = static_cast<std::size_t>(order);

  // Raw windowed counts at every order; windows never cross utterances
  // and there is no begin padding, so utterance-initial predictions are
  // served by the lower orders.
  std::vector<ngram_detail::HistMap> raw(n + 1);
  for (const SymVec& stream : streams) {
    if (stream.empty() || stream.back() != SymbolTable::kEos) {
      ThrowInternal("training stream does not end in EOS");
    }
    // The automaton constraint holds against the true stream context
    // (short windows at utterance starts see a truncated history whose
    // class may differ from the real one).
    for (std::size_t i = 0; i < stream.size(); ++i) {
      const HistClass cls =
          i == 0 ? HistClass::kBoundary
                 : ClassOfHistory(std::span(&stream[i - 1], 1), table);
      if (!Allowed(cls, stream[i], table) ||
          (i + 1 < stream.size() && stream[i] == SymbolTable::kEos)) {
        ThrowInternal("stream violates the history-class automaton");
      }
    }
    for (std::size_t k = 1; k <= n; ++k) {
      if (stream.size() < k) continue;
      for (std::size_t i = k - 1; i < stream.size(); ++i) {
        SymVec h(stream.begin() + (i - k + 1), stream.begin() + i);
        ++raw[k][std::move(h)][stream[i]];
      }
    }
  }

  // Structural pruning: entries with long all-word histories are
  // dropped from the raw counts before anything is derived from them,
  // and again from the derived tables (a surviving mixed-history
  // (k+1)-gram would otherwise reintroduce an all-word history one
  // order down via its suffix).
  auto prune = [&](ngram_detail::HistMap& tbl) {
    for (auto it = tbl.begin(); it != tbl.end();) {
      const SymVec& h = it->first;
      const bool all_word =
          h.size() > static_cast<std::size_t>(prune_all_word_span) &&
          std::all_of(h.begin(), h.end(),
                      [&](SymId s) { return table.IsWord(s); });
      it = all_word ? tbl.erase(it) : ++it;
    }
  };
  for (std::size_t k = 1; k <= n; ++k) prune(raw[k]);

  // Lower orders use left-extension continuation counts: the number of
  // distinct one-symbol extensions of the history under which the
  // n-gram was observed.
  std::vector<ngram_detail::HistMap> tbl(n + 1);
  tbl[n] = raw[n];
  for (std::size_t k = n; k >= 2; --k) {
    for (const auto& [h, conts] : raw[k]) {
      SymVec suffix(h.begin() + 1, h.end());
      auto& row = tbl[k - 1][suffix];
      for (const auto& [s, c] : conts) ++row[s];
    }
  }
  for (std::size_t k = 1; k <= n; ++k) prune(tbl[k]);

  std::vector<Discounts> disc(n + 1);
  std::vector<std::map<SymVec, ngram_detail::HistAgg>> agg(n + 1);
  for (std::size_t k = 1; k <= n; ++k) {
    disc[k] = ngram_detail::ComputeDiscounts(tbl[k]);
    agg[k] = ngram_detail::Aggregate(tbl[k], disc[k]);
  }

  // Class-restricted unigram totals and reserved mass.
  const auto size = static_cast<std::size_t>(table.Size());
  std::vector<std::uint64_t> uni_counts(size, 0);
  if (!tbl[1].empty()) {
    for (const auto& [s, c] : tbl[1].begin()->second) {
      uni_counts[static_cast<std::size_t>(s)] = c;
    }
  }
  struct UniAgg {
    double total = 0, gamma = 0;
    std::size_t allowed = 0;
  };
  auto uni_agg = [&](HistClass cls) {
    UniAgg u;
    u.allowed = AllowedSetSize(cls, table);
    double reserved = 0;
    for (SymId s = 0; s < table.Size(); ++s) {
      if (!Allowed(cls, s, table)) continue;
      const std::uint64_t c = uni_counts[static_cast<std::size_t>(s)];
      u.total += static_cast<double>(c);
      reserved += disc[1].For(c);
    }
    u.gamma = u.total > 0 ? reserved / u.total : 0.0;
    return u;
  };
  const UniAgg uni_b = uni_agg(HistClass::kBoundary);
  const UniAgg uni_i = uni_agg(HistClass::kInternal);

  // The estimation recursion. Linear domain; conditionals at toy and
  // desk scale stay comfortably inside double range.
  auto uni_prob = [&](SymId s, HistClass cls) {
    const UniAgg& u = cls == HistClass::kBoundary ? uni_b : uni_i;
    if (!Allowed(cls, s, table)) return 0.0;
    if (u.total == 0) return 1.0 / static_cast<double>(u.allowed);
    const std::uint64_t c = uni_counts[static_cast<std::size_t>(s)];
    const double kept =
        std::max(static_cast<double>(c) - disc[1].For(c), 0.0);
    return kept / u.total + u.gamma / static_cast<double>(u.allowed);
  };
  auto prob = [&](std::span<const SymId> h, SymId s, HistClass cls) {
    double factor = 1.0, result = 0.0;
    while (!h.empty()) {
      const std::size_t k = h.size() + 1;
      SymVec key(h.begin(), h.end());
      auto ait = agg[k].find(key);
      if (ait != agg[k].end()) {
        const auto& conts = tbl[k].find(key)->second;
        auto cit = conts.find(s);
        if (cit != conts.end()) {
          const double kept = std::max(
              static_cast<double>(cit->second) - disc[k].For(cit->second),
              0.0);
          result += factor * kept / static_cast<double>(ait->second.total);
        }
        factor *= ait->second.gamma;
      }
      h = h.subspan(1);
    }
    return result + factor * uni_prob(s, cls);
  };

  NgramModel model;
  model.order_ = order;
  model.vocab_ = vocab;
  model.contexts_.assign(n, {});
  model.uni_boundary_log2_.assign(size, kNegInf);
  model.uni_internal_log2_.assign(size, kNegInf);
  for (SymId s = 0; s < table.Size(); ++s) {
    if (Allowed(HistClass::kBoundary, s, table)) {
      model.uni_boundary_log2_[static_cast<std::size_t>(s)] =
          std::log2(uni_prob(s, HistClass::kBoundary));
    }
    if (Allowed(HistClass::kInternal, s, table)) {
      model.uni_internal_log2_[static_cast<std::size_t>(s)] =
          std::log2(uni_prob(s, HistClass::kInternal));
    }
  }
  for (std::size_t k = 2; k <= n; ++k) {
    for (const auto& [h, conts] : tbl[k]) {
      const HistClass cls = ClassOfHistory(h, table);
      NgramModel::Context ctx;
      ctx.backoff_log2 = std::log2(agg[k].find(h)->second.gamma);
      for (const auto& [s, c] : conts) {
        ctx.probs_log2[s] = std::log2(prob(h, s, cls));
      }
      model.contexts_[k - 1].emplace(h, std::move(ctx));
    }
  }
  return model;
}

}  // namespace mtlm

#endif  // MTLM_NGRAM_HPP_
