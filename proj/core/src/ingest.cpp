#include "attnet/ingest.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <iterator>
#include <ostream>

#include <nlohmann/json.hpp>

#include "attnet/csv.hpp"
#include "parallel.hpp"

namespace attnet {
namespace {

using json = nlohmann::json;

// One scalar field of an event record as seen by the SAX parser.
struct Field {
  enum class Type : std::uint8_t { kMissing, kNull, kString, kInt, kUint, kFloat, kOther };
  Type type = Type::kMissing;
  std::string text;
  std::int64_t i = 0;
  std::uint64_t u = 0;
  double d = 0.0;

  bool present() const { return type != Type::kMissing && type != Type::kNull; }

  // Ids may be strings or integers.
  std::optional<std::string> id() const {
    switch (type) {
      case Type::kString: return text;
      case Type::kInt: return std::to_string(i);
      case Type::kUint: return std::to_string(u);
      default: return std::nullopt;
    }
  }
};

enum FieldKey : std::size_t { kId, kAuthor, kTs, kKind, kRtAuthor, kRtId, kLoc, kNumKeys, kUnknown };

// Flat record reader: top-level scalars land in `fields`; nested values are
// skipped unless they sit under a known key, which makes that key kOther.
class EventSax : public nlohmann::json_sax<json> {
 public:
  std::array<Field, kNumKeys> fields;
  bool top_level_object = false;

  bool null() override { return scalar([](Field& f) { f.type = Field::Type::kNull; }); }
  bool boolean(bool) override { return scalar([](Field& f) { f.type = Field::Type::kOther; }); }
  bool number_integer(number_integer_t v) override {
    return scalar([v](Field& f) {
      f.type = Field::Type::kInt;
      f.i = v;
    });
  }
  bool number_unsigned(number_unsigned_t v) override {
    return scalar([v](Field& f) {
      f.type = Field::Type::kUint;
      f.u = v;
    });
  }
  bool number_float(number_float_t v, const string_t&) override {
    return scalar([v](Field& f) {
      f.type = Field::Type::kFloat;
      f.d = v;
    });
  }
  bool string(string_t& v) override {
    return scalar([&v](Field& f) {
      f.type = Field::Type::kString;
      f.text = std::move(v);
    });
  }
  bool binary(binary_t&) override { return scalar([](Field& f) { f.type = Field::Type::kOther; }); }
  bool start_object(std::size_t) override { return open(); }
  bool end_object() override { return close(); }
  bool start_array(std::size_t) override {
    if (depth_ == 0) return false;
    return open();
  }
  bool end_array() override { return close(); }
  bool key(string_t& k) override {
    if (depth_ == 1) current_ = lookup(k);
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override {
    return false;
  }

 private:
  static FieldKey lookup(const std::string& k) {
    static constexpr std::array<std::string_view, kNumKeys> kKeys = {
        "id", "author_id", "ts", "kind", "rt_author_id", "rt_id", "loc"};
    for (std::size_t i = 0; i < kKeys.size(); ++i) {
      if (kKeys[i] == k) return static_cast<FieldKey>(i);
    }
    return kUnknown;
  }

  template <typename Fn>
  bool scalar(Fn&& set) {
    if (depth_ == 0) return false;  // top-level scalar
    if (depth_ == 1 && current_ != kUnknown) {
      fields[current_] = Field{};
      set(fields[current_]);
    }
    return true;
  }
  bool open() {
    if (depth_ == 0) {
      top_level_object = true;
    } else if (depth_ == 1 && current_ != kUnknown) {
      fields[current_] = Field{};
      fields[current_].type = Field::Type::kOther;
    }
    ++depth_;
    return true;
  }
  bool close() {
    --depth_;
    return true;
  }

  int depth_ = 0;
  FieldKey current_ = kUnknown;
};

}  // namespace

std::optional<TweetEvent> parse_event_line(std::string_view line) {
  EventSax sax;
  if (!json::sax_parse(line.begin(), line.end(), &sax) || !sax.top_level_object) {
    return std::nullopt;
  }
  auto& f = sax.fields;

  TweetEvent e;
  auto id = f[kId].id();
  auto author = f[kAuthor].id();
  if (!id || id->empty() || !author || author->empty()) return std::nullopt;
  e.tweet_id = std::move(*id);
  e.author_id = std::move(*author);

  switch (f[kTs].type) {
    case Field::Type::kInt: e.timestamp = f[kTs].i; break;
    case Field::Type::kUint:
      if (f[kTs].u > static_cast<std::uint64_t>(std::numeric_limits<Timestamp>::max())) {
        return std::nullopt;
      }
      e.timestamp = static_cast<Timestamp>(f[kTs].u);
      break;
    case Field::Type::kFloat:
      if (!(std::abs(f[kTs].d) < 9.2e18)) return std::nullopt;
      e.timestamp = static_cast<Timestamp>(f[kTs].d);
      break;
    case Field::Type::kString: {
      auto parsed = parse_timestamp(f[kTs].text);
      if (!parsed) return std::nullopt;
      e.timestamp = *parsed;
      break;
    }
    default: return std::nullopt;
  }

  if (f[kKind].type != Field::Type::kString) return std::nullopt;
  const auto& k = f[kKind].text;
  if (k == "tweet") {
    e.kind = EventKind::kOriginal;
    if (f[kRtAuthor].present() || f[kRtId].present()) return std::nullopt;
  } else if (k == "retweet") {
    e.kind = EventKind::kRetweet;
    auto rt_author = f[kRtAuthor].id();
    if (!rt_author || rt_author->empty()) return std::nullopt;
    e.retweeted_author_id = std::move(rt_author);
    if (f[kRtId].present()) {
      auto rt_id = f[kRtId].id();
      if (!rt_id || rt_id->empty()) return std::nullopt;
      e.retweeted_tweet_id = std::move(rt_id);
    }
  } else {
    return std::nullopt;
  }

  if (f[kLoc].present()) {
    if (f[kLoc].type != Field::Type::kString) return std::nullopt;
    e.raw_location = std::move(f[kLoc].text);
  }
  return e;
}

IngestResult parse_events(std::span<const std::string> lines,
                          const ObservationWindow& window, unsigned threads) {
  IngestResult result;
  IngestReport& report = result.report;
  report.lines = lines.size();

  constexpr std::size_t kChunk = 1 << 14;
  const std::size_t chunks = (lines.size() + kChunk - 1) / kChunk;
  std::vector<std::optional<TweetEvent>> parsed(lines.size());
  detail::parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t end = std::min(lines.size(), (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) parsed[i] = parse_event_line(lines[i]);
  });

  std::vector<TweetEvent> in_window;
  in_window.reserve(lines.size());
  for (auto& p : parsed) {
    if (!p) {
      ++report.malformed;
    } else if (!window.contains(p->timestamp)) {
      ++report.out_of_window;
    } else {
      in_window.push_back(std::move(*p));
    }
  }
  parsed.clear();
  parsed.shrink_to_fit();

  // One event per tweet_id: earliest timestamp, then earliest line.
  std::unordered_map<std::string_view, std::uint32_t> first;
  first.reserve(in_window.size());
  for (std::uint32_t i = 0; i < in_window.size(); ++i) {
    auto [it, fresh] = first.try_emplace(in_window[i].tweet_id, i);
    if (fresh) continue;
    ++report.duplicates;
    if (in_window[i].timestamp < in_window[it->second].timestamp) it->second = i;
  }
  std::vector<std::uint32_t> keep;
  keep.reserve(first.size());
  for (const auto& [id, i] : first) keep.push_back(i);
  std::sort(keep.begin(), keep.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto& x = in_window[a];
    const auto& y = in_window[b];
    if (x.timestamp != y.timestamp) return x.timestamp < y.timestamp;
    return x.tweet_id < y.tweet_id;
  });

  result.events.reserve(keep.size());
  for (std::uint32_t i : keep) {
    TweetEvent& e = in_window[i];
    if (e.is_retweet()) {
      ++report.retweets;
      if (e.is_self_retweet()) ++report.self_retweets;
    } else {
      ++report.originals;
    }
    result.events.push_back(std::move(e));
  }
  report.events = result.events.size();

  if (report.events == 0 && report.lines > 0) {
    report.warnings.push_back("no events survived ingestion out of " +
                              std::to_string(report.lines) + " input lines");
  }
  if (report.self_retweets > 0) {
    report.warnings.push_back(std::to_string(report.self_retweets) +
                              " self-retweets kept in the stream but excluded from graph edges");
  }
  return result;
}

IngestResult parse_events(std::istream& in, const ObservationWindow& window,
                          unsigned threads) {
  std::vector<std::string> lines;
  std::string line;
  while (csv::read_line(in, line)) lines.push_back(line);
  return parse_events(lines, window, threads);
}

namespace {

void append_json_string(std::string& out, const std::string& v) {
  out += json(v).dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace

// Keys in lexicographic order, matching a serialized json object.
std::string to_json_line(const TweetEvent& e) {
  std::string out = "{\"author_id\":";
  append_json_string(out, e.author_id);
  out += ",\"id\":";
  append_json_string(out, e.tweet_id);
  out += e.is_retweet() ? ",\"kind\":\"retweet\"" : ",\"kind\":\"tweet\"";
  if (e.raw_location) {
    out += ",\"loc\":";
    append_json_string(out, *e.raw_location);
  }
  if (e.retweeted_author_id) {
    out += ",\"rt_author_id\":";
    append_json_string(out, *e.retweeted_author_id);
  }
  if (e.retweeted_tweet_id) {
    out += ",\"rt_id\":";
    append_json_string(out, *e.retweeted_tweet_id);
  }
  out += ",\"ts\":";
  out += std::to_string(e.timestamp);
  out += '}';
  return out;
}

void write_events(std::ostream& out, std::span<const TweetEvent> events) {
  for (const auto& e : events) out << to_json_line(e) << '\n';
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "snapshot I/O assumes a little-endian host");

enum EventFlags : std::uint8_t { kIsRetweet = 1, kHasRtAuthor = 2, kHasRtId = 4, kHasLoc = 8 };

template <typename T>
void put(std::string& buf, T v) {
  buf.append(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::string& buf, const std::string& s) {
  if (s.size() > std::numeric_limits<std::uint32_t>::max()) throw DomainError("string too long");
  put(buf, static_cast<std::uint32_t>(s.size()));
  buf += s;
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof v);
    pos_ += sizeof v;
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw ParseError("truncated event snapshot");
  }
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_event_snapshot(std::ostream& out, std::span<const TweetEvent> events) {
  std::string buf = "ATNE";
  put(buf, kEventSnapshotVersion);
  put(buf, static_cast<std::uint64_t>(events.size()));
  for (const auto& e : events) {
    std::uint8_t flags = 0;
    if (e.is_retweet()) flags |= kIsRetweet;
    if (e.retweeted_author_id) flags |= kHasRtAuthor;
    if (e.retweeted_tweet_id) flags |= kHasRtId;
    if (e.raw_location) flags |= kHasLoc;
    put(buf, flags);
    put(buf, e.timestamp);
    put_string(buf, e.tweet_id);
    put_string(buf, e.author_id);
    if (e.retweeted_author_id) put_string(buf, *e.retweeted_author_id);
    if (e.retweeted_tweet_id) put_string(buf, *e.retweeted_tweet_id);
    if (e.raw_location) put_string(buf, *e.raw_location);
    if (buf.size() > (1u << 22)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::vector<TweetEvent> read_event_snapshot(std::istream& in) {
  std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (data.size() < 4 || data.compare(0, 4, "ATNE") != 0) {
    throw ParseError("not an event snapshot (bad magic)");
  }
  Reader r(std::move(data));
  r.get<std::uint32_t>();  // magic
  const auto version = r.get<std::uint32_t>();
  if (version != kEventSnapshotVersion) {
    throw ParseError("unsupported event snapshot version " + std::to_string(version));
  }
  const auto n = r.get<std::uint64_t>();
  std::vector<TweetEvent> events;
  events.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 26)));
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto flags = r.get<std::uint8_t>();
    TweetEvent e;
    e.timestamp = r.get<Timestamp>();
    e.kind = (flags & kIsRetweet) != 0 ? EventKind::kRetweet : EventKind::kOriginal;
    e.tweet_id = r.get_string();
    e.author_id = r.get_string();
    if ((flags & kHasRtAuthor) != 0) e.retweeted_author_id = r.get_string();
    if ((flags & kHasRtId) != 0) e.retweeted_tweet_id = r.get_string();
    if ((flags & kHasLoc) != 0) e.raw_location = r.get_string();
    events.push_back(std::move(e));
  }
  if (!r.done()) throw ParseError("trailing bytes in event snapshot");
  return events;
}

std::unordered_map<UserId, Category> load_categories(std::istream& in) {
  std::unordered_map<UserId, Category> table;
  std::string line;
  if (!csv::read_line(in, line)) throw ParseError("category file is empty");
  auto header = csv::split(line);
  if (header.size() != 2 || header[0] != "user_id" || header[1] != "category") {
    throw ParseError("category file must start with header 'user_id,category'");
  }
  std::size_t line_no = 1;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = csv::split(line);
    if (fields.size() != 2 || fields[0].empty()) {
      throw ParseError("category file line " + std::to_string(line_no) +
                       ": expected 'user_id,category'");
    }
    auto category = parse_category(fields[1]);
    if (!category) {
      throw ParseError("category file line " + std::to_string(line_no) +
                       ": unknown category '" + fields[1] + "'");
    }
    table.insert_or_assign(std::move(fields[0]), *category);
  }
  return table;
}

}  // namespace attnet
