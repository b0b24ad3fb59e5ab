#include "spamhmm/datamodel.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "spamhmm/error.hpp"

namespace spamhmm {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::int64_t parse_timestamp(std::string_view text, std::size_t line_no) {
  text = trim(text);
  std::int64_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end)
    throw ParseError(line_no, "timestamp is not an integer: '" + std::string(text) + "'");
  return value;
}

std::optional<Label> parse_label_field(std::string_view text, std::size_t line_no) {
  try {
    return parse_label(trim(text));
  } catch (const ValidationError& e) {
    throw ParseError(line_no, e.what());
  }
}

}  // namespace

std::string_view to_string(Label label) { return label == Label::Spam ? "spam" : "genuine"; }

std::optional<Label> parse_label(std::string_view text) {
  const std::string l = lower(text);
  if (l.empty()) return std::nullopt;
  if (l == "spam") return Label::Spam;
  if (l == "genuine") return Label::Genuine;
  throw ValidationError("unknown label '" + std::string(text) + "'");
}

Dataset::Dataset(std::vector<Review> reviews) : reviews_(std::move(reviews)) {
  std::set<std::string_view> seen;
  for (const auto& r : reviews_) {
    if (r.timestamp < 0)
      throw ValidationError("review '" + r.review_id + "' has negative timestamp " + std::to_string(r.timestamp));
    if (!seen.insert(r.review_id).second) throw ValidationError("duplicate review_id '" + r.review_id + "'");
  }
  std::sort(reviews_.begin(), reviews_.end(), [](const Review& a, const Review& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.review_id < b.review_id;
  });
  for (std::size_t i = 0; i < reviews_.size(); ++i) {
    by_user_[reviews_[i].user_id].push_back(i);
    by_restaurant_[reviews_[i].restaurant_id].push_back(i);
  }
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      if (!cur.empty() || was_quoted) throw ParseError(line_no, "unexpected quote inside field");
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else if (c == '\r' && i + 1 == line.size()) {
      // tolerate CRLF
    } else {
      if (was_quoted) throw ParseError(line_no, "text after closing quote");
      cur += c;
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

Dataset read_reviews_csv(std::istream& in) {
  static const std::vector<std::string> kColumns = {"review_id", "user_id", "restaurant_id", "timestamp", "label"};
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> pos;  // column -> field position
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) return Dataset{};
  {
    auto header = split_csv_line(line, line_no);
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
    for (const auto& col : kColumns) {
      auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) { return trim(h) == col; });
      if (it == header.end()) {
        if (col == "label") {
          pos.push_back(static_cast<std::size_t>(-1));
          continue;
        }
        throw ParseError(line_no, "header is missing column '" + col + "'");
      }
      pos.push_back(static_cast<std::size_t>(it - header.begin()));
    }
  }
  std::vector<Review> reviews;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line, line_no);
    auto field = [&](std::size_t col) -> std::string_view {
      if (pos[col] == static_cast<std::size_t>(-1)) return {};
      if (pos[col] >= fields.size()) {
        if (col == 4) return {};
        throw ParseError(line_no, "missing field '" + kColumns[col] + "'");
      }
      return fields[pos[col]];
    };
    Review r;
    r.review_id = std::string(field(0));
    r.user_id = std::string(field(1));
    r.restaurant_id = std::string(field(2));
    for (std::size_t c = 0; c < 3; ++c)
      if (field(c).empty()) throw ParseError(line_no, "empty field '" + kColumns[c] + "'");
    r.timestamp = parse_timestamp(field(3), line_no);
    r.label = parse_label_field(field(4), line_no);
    reviews.push_back(std::move(r));
  }
  return Dataset(std::move(reviews));
}

Dataset read_reviews_jsonl(std::istream& in) {
  using nlohmann::json;
  std::vector<Review> reviews;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line_no, "record is not a JSON object");
    auto id_field = [&](const char* key) {
      auto it = obj.find(key);
      if (it == obj.end()) throw ParseError(line_no, std::string("missing field '") + key + "'");
      std::string value;
      if (it->is_string())
        value = it->get<std::string>();
      else if (it->is_number_integer())
        value = std::to_string(it->get<std::int64_t>());
      else
        throw ParseError(line_no, std::string("field '") + key + "' must be a string");
      if (value.empty()) throw ParseError(line_no, std::string("empty field '") + key + "'");
      return value;
    };
    Review r;
    r.review_id = id_field("review_id");
    r.user_id = id_field("user_id");
    r.restaurant_id = id_field("restaurant_id");
    auto ts = obj.find("timestamp");
    if (ts == obj.end()) throw ParseError(line_no, "missing field 'timestamp'");
    if (ts->is_number_integer())
      r.timestamp = ts->get<std::int64_t>();
    else if (ts->is_string())
      r.timestamp = parse_timestamp(ts->get<std::string>(), line_no);
    else
      throw ParseError(line_no, "timestamp is not an integer");
    auto lab = obj.find("label");
    if (lab != obj.end() && !lab->is_null()) {
      if (!lab->is_string()) throw ParseError(line_no, "label must be a string");
      r.label = parse_label_field(lab->get<std::string>(), line_no);
    }
    reviews.push_back(std::move(r));
  }
  return Dataset(std::move(reviews));
}

Dataset read_reviews(std::istream& in, ReviewFormat format) {
  return format == ReviewFormat::Jsonl ? read_reviews_jsonl(in) : read_reviews_csv(in);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : lower(path.substr(dot));
  return read_reviews(in, (ext == ".jsonl" || ext == ".json") ? ReviewFormat::Jsonl : ReviewFormat::Csv);
}

void write_reviews_csv(std::ostream& out, const Dataset& ds) {
  out << "review_id,user_id,restaurant_id,timestamp,label\n";
  for (const auto& r : ds.reviews()) {
    out << csv_escape(r.review_id) << ',' << csv_escape(r.user_id) << ',' << csv_escape(r.restaurant_id) << ','
        << r.timestamp << ',' << (r.label ? to_string(*r.label) : "") << '\n';
  }
}

void write_reviews_jsonl(std::ostream& out, const Dataset& ds) {
  for (const auto& r : ds.reviews()) {
    nlohmann::ordered_json obj;
    obj["review_id"] = r.review_id;
    obj["user_id"] = r.user_id;
    obj["restaurant_id"] = r.restaurant_id;
    obj["timestamp"] = r.timestamp;
    obj["label"] = r.label ? nlohmann::ordered_json(std::string(to_string(*r.label))) : nlohmann::ordered_json();
    out << obj.dump() << '\n';
  }
}

std::optional<Label> majority_label(const Dataset& ds, const std::vector<std::size_t>& review_indices) {
  std::size_t spam = 0, genuine = 0;
  for (auto i : review_indices) {
    if (!ds[i].label) continue;
    (*ds[i].label == Label::Spam ? spam : genuine) += 1;
  }
  if (spam == 0 && genuine == 0) return std::nullopt;
  return spam >= genuine ? Label::Spam : Label::Genuine;
}

std::map<std::string, Label> user_labels(const Dataset& ds) {
  std::map<std::string, Label> out;
  for (const auto& [user, idx] : ds.by_user())
    if (auto l = majority_label(ds, idx)) out.emplace(user, *l);
  return out;
}

std::vector<UserSequence> build_user_sequences(const Dataset& ds) {
  std::vector<UserSequence> out;
  out.reserve(ds.by_user().size());
  for (const auto& [user, idx] : ds.by_user()) {
    UserSequence seq;
    seq.user_id = user;
    seq.timestamps.reserve(idx.size());
    for (auto i : idx) seq.timestamps.push_back(ds[i].timestamp);
    seq.deltas.reserve(idx.empty() ? 0 : idx.size() - 1);
    for (std::size_t i = 1; i < seq.timestamps.size(); ++i) {
      const double d = static_cast<double>(seq.timestamps[i] - seq.timestamps[i - 1]);
      seq.deltas.push_back(std::max(d, kMinDeltaSeconds));
    }
    seq.label = majority_label(ds, idx);
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace spamhmm
