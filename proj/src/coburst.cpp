#include "spamhmm/coburst.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>

#include "spamhmm/error.hpp"
#include "spamhmm/parallel.hpp"

namespace spamhmm {

namespace {

using PairCounts = std::unordered_map<std::uint64_t, std::uint64_t>;

std::uint64_t pair_key(std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

struct UserIndex {
  std::vector<std::string> ids;          // sorted
  std::vector<std::size_t> of_review;    // review -> user position
};

UserIndex index_users(const Dataset& ds) {
  UserIndex ui;
  ui.of_review.resize(ds.size());
  for (const auto& [user, idx] : ds.by_user()) {
    for (auto r : idx) ui.of_review[r] = ui.ids.size();
    ui.ids.push_back(user);
  }
  return ui;
}

UserGraph graph_from_counts(const std::vector<std::string>& ids, const PairCounts& counts) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> rows(counts.begin(), counts.end());
  std::sort(rows.begin(), rows.end());
  std::vector<std::size_t> remap(ids.size(), static_cast<std::size_t>(-1));
  for (const auto& [key, w] : rows) {
    remap[key >> 32] = 0;
    remap[key & 0xffffffffULL] = 0;
  }
  UserGraph g;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (remap[i] == static_cast<std::size_t>(-1)) continue;
    remap[i] = g.nodes.size();
    g.nodes.push_back(ids[i]);
  }
  g.edges.reserve(rows.size());
  // Remapping is monotone, so (a, b) order is preserved.
  for (const auto& [key, w] : rows) g.edges.push_back({remap[key >> 32], remap[key & 0xffffffffULL], w});
  return g;
}

}  // namespace

void CoburstConfig::validate() const {
  if (omega <= 0) throw ConfigError("co-burst window omega must be positive");
}

std::vector<std::uint8_t> review_states_from_path(std::span<const std::uint8_t> path, std::size_t n_reviews) {
  std::vector<std::uint8_t> out(n_reviews, 0);
  if (n_reviews <= 1) return out;
  if (path.size() + 1 != n_reviews) throw DomainError("decoded path length does not match the review count");
  out[0] = path[0];
  for (std::size_t i = 0; i < path.size(); ++i) out[i + 1] = path[i];
  return out;
}

namespace {

template <typename ParamsFor>
StateAnnotatedDataset annotate_impl(Dataset ds, unsigned threads, ParamsFor params_for) {
  const auto sequences = build_user_sequences(ds);
  std::vector<std::vector<std::uint8_t>> per_user(sequences.size());
  parallel_for(sequences.size(), threads, [&](std::size_t u) {
    const auto& seq = sequences[u];
    if (seq.deltas.empty()) {
      per_user[u].assign(seq.timestamps.size(), 0);
      return;
    }
    const auto path = viterbi_decode(seq, params_for(seq));
    per_user[u] = review_states_from_path(path.states, seq.timestamps.size());
  });
  StateAnnotatedDataset ads;
  ads.states.assign(ds.size(), 0);
  std::size_t u = 0;
  for (const auto& [user, idx] : ds.by_user()) {
    for (std::size_t k = 0; k < idx.size(); ++k) ads.states[idx[k]] = per_user[u][k];
    ++u;
  }
  ads.dataset = std::move(ds);
  return ads;
}

}  // namespace

StateAnnotatedDataset annotate_states(Dataset ds, const HmmParams& params, unsigned threads) {
  params.validate();
  return annotate_impl(std::move(ds), threads, [&](const UserSequence&) -> const HmmParams& { return params; });
}

StateAnnotatedDataset annotate_states(Dataset ds, const LhmmParams& params, unsigned threads) {
  params.validate();
  return annotate_impl(std::move(ds), threads, [&](const UserSequence& seq) -> const HmmParams& {
    return lhmm_classify(seq, params).predicted == Label::Spam ? params.spam : params.genuine;
  });
}

StateAnnotatedDataset annotate_with(Dataset ds, std::vector<std::uint8_t> states) {
  if (states.size() != ds.size()) throw ValidationError("state count does not match review count");
  for (auto s : states)
    if (s > 1) throw ValidationError("review state must be 0 or 1");
  return {std::move(ds), std::move(states)};
}

TimeIndex::TimeIndex(std::vector<Entry> entries) : entries_(std::move(entries)) {
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const Entry& a, const Entry& b) { return a.timestamp < b.timestamp; });
}

std::span<const TimeIndex::Entry> TimeIndex::range(std::int64_t lo, std::int64_t hi) const {
  if (lo > hi) return {};
  auto first = std::lower_bound(entries_.begin(), entries_.end(), lo,
                                [](const Entry& e, std::int64_t t) { return e.timestamp < t; });
  auto last = std::upper_bound(first, entries_.end(), hi,
                               [](std::int64_t t, const Entry& e) { return t < e.timestamp; });
  return {first, last};
}

std::uint64_t UserGraph::weight(const std::string& u, const std::string& v) const {
  auto a = std::lower_bound(nodes.begin(), nodes.end(), u);
  auto b = std::lower_bound(nodes.begin(), nodes.end(), v);
  if (a == nodes.end() || *a != u || b == nodes.end() || *b != v) return 0;
  std::size_t ia = static_cast<std::size_t>(a - nodes.begin());
  std::size_t ib = static_cast<std::size_t>(b - nodes.begin());
  if (ia > ib) std::swap(ia, ib);
  auto it = std::lower_bound(edges.begin(), edges.end(), std::pair{ia, ib}, [](const UserEdge& e, const auto& key) {
    return std::pair{e.a, e.b} < key;
  });
  return (it != edges.end() && it->a == ia && it->b == ib) ? it->weight : 0;
}

CoburstGraph build_coburst_graph(const StateAnnotatedDataset& ads, const CoburstConfig& config) {
  config.validate();
  const Dataset& ds = ads.dataset;
  if (ads.states.size() != ds.size()) throw ValidationError("state annotation does not cover the dataset");
  const UserIndex users = index_users(ds);

  std::map<std::string_view, TimeIndex> index;
  for (const auto& [rest, idx] : ds.by_restaurant()) {
    std::vector<TimeIndex::Entry> entries;
    entries.reserve(idx.size());
    for (auto r : idx) entries.push_back({ds[r].timestamp, r});
    index.emplace(rest, TimeIndex(std::move(entries)));
  }

  const std::vector<const std::vector<std::size_t>*> user_reviews = [&] {
    std::vector<const std::vector<std::size_t>*> v;
    for (const auto& [user, idx] : ds.by_user()) v.push_back(&idx);
    return v;
  }();

  const std::size_t shards = std::min<std::size_t>(resolve_threads(config.threads), std::max<std::size_t>(1, user_reviews.size()));
  std::vector<PairCounts> partial(shards);
  const std::size_t chunk = (user_reviews.size() + shards - 1) / shards;
  parallel_for(shards, config.threads, [&](std::size_t shard) {
    PairCounts& h = partial[shard];
    const std::size_t end = std::min(user_reviews.size(), (shard + 1) * chunk);
    for (std::size_t u = shard * chunk; u < end; ++u) {
      for (auto r : *user_reviews[u]) {
        if (ads.states[r] != 1) continue;
        const TimeIndex& ti = index.at(ds[r].restaurant_id);
        for (const auto& c : ti.within(ds[r].timestamp, config.omega)) {
          // Count each unordered review pair once, from its earlier canonical member.
          if (c.review <= r || ads.states[c.review] != 1) continue;
          const std::size_t v = users.of_review[c.review];
          if (v == u) continue;
          ++h[pair_key(u, v)];
        }
      }
    }
  });
  PairCounts total = std::move(partial[0]);
  for (std::size_t s = 1; s < shards; ++s)
    for (const auto& [k, w] : partial[s]) total[k] += w;
  return graph_from_counts(users.ids, total);
}

CoburstGraph naive_coburst_oracle(const StateAnnotatedDataset& ads, const CoburstConfig& config) {
  config.validate();
  const Dataset& ds = ads.dataset;
  if (ads.states.size() != ds.size()) throw ValidationError("state annotation does not cover the dataset");
  const UserIndex users = index_users(ds);
  PairCounts h;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = i + 1; j < ds.size(); ++j) {
      const Review& a = ds[i];
      const Review& b = ds[j];
      const std::int64_t dt = a.timestamp > b.timestamp ? a.timestamp - b.timestamp : b.timestamp - a.timestamp;
      if (a.user_id != b.user_id && a.restaurant_id == b.restaurant_id && dt < config.omega &&
          ads.states[i] == 1 && ads.states[j] == 1)
        ++h[pair_key(users.of_review[i], users.of_review[j])];
    }
  }
  return graph_from_counts(users.ids, h);
}

UserGraph build_coreview_graph(const Dataset& ds) {
  const UserIndex users = index_users(ds);
  PairCounts h;
  for (const auto& [rest, idx] : ds.by_restaurant()) {
    std::vector<std::size_t> present;
    present.reserve(idx.size());
    for (auto r : idx) present.push_back(users.of_review[r]);
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());
    for (std::size_t i = 0; i < present.size(); ++i)
      for (std::size_t j = i + 1; j < present.size(); ++j) ++h[pair_key(present[i], present[j])];
  }
  return graph_from_counts(users.ids, h);
}

void write_graph_tsv(std::ostream& out, const UserGraph& g) {
  out << "user_a\tuser_b\tweight\n";
  for (const auto& e : g.edges) out << g.nodes[e.a] << '\t' << g.nodes[e.b] << '\t' << e.weight << '\n';
}

UserGraph read_graph_tsv(std::istream& in) {
  std::map<std::pair<std::string, std::string>, std::uint64_t> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line == "user_a\tuser_b\tweight") continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos)
      throw ParseError(line_no, "expected three tab-separated fields");
    std::string a = line.substr(0, t1), b = line.substr(t1 + 1, t2 - t1 - 1);
    const std::string w = line.substr(t2 + 1);
    std::uint64_t weight = 0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), weight);
    if (w.empty() || ec != std::errc{} || ptr != w.data() + w.size() || weight == 0)
      throw ParseError(line_no, "weight must be a positive integer");
    if (a.empty() || b.empty()) throw ParseError(line_no, "empty user id");
    if (a == b) throw ParseError(line_no, "self-loop on '" + a + "'");
    if (b < a) std::swap(a, b);
    if (!rows.emplace(std::pair{a, b}, weight).second) throw ParseError(line_no, "duplicate edge " + a + " - " + b);
  }
  std::map<std::string, std::size_t> ids;
  for (const auto& [k, w] : rows) {
    ids.emplace(k.first, 0);
    ids.emplace(k.second, 0);
  }
  UserGraph g;
  for (auto& [id, pos] : ids) {
    pos = g.nodes.size();
    g.nodes.push_back(id);
  }
  for (const auto& [k, w] : rows) g.edges.push_back({ids[k.first], ids[k.second], w});
  return g;
}

void write_states_csv(std::ostream& out, const StateAnnotatedDataset& ads) {
  out << "review_id,user_id,restaurant_id,timestamp,state\n";
  for (std::size_t i = 0; i < ads.dataset.size(); ++i) {
    const Review& r = ads.dataset[i];
    out << csv_escape(r.review_id) << ',' << csv_escape(r.user_id) << ',' << csv_escape(r.restaurant_id) << ','
        << r.timestamp << ',' << static_cast<int>(ads.states[i]) << '\n';
  }
}

}  // namespace spamhmm
