#include "gwm/repo_mining.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "gwm/csv.hpp"
#include "gwm/error.hpp"

namespace gwm {

namespace {

// Days since 1970-01-01 of a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2);
}

bool is_leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

class Cursor {
public:
  explicit Cursor(std::string_view s) : s_(s) {}

  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }
  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  int digits(std::size_t n) {
    int v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (done() || !std::isdigit(static_cast<unsigned char>(s_[pos_]))) fail();
      v = v * 10 + (s_[pos_++] - '0');
    }
    return v;
  }
  [[noreturn]] void fail() const { throw Error("invalid timestamp '" + std::string(s_) + "'"); }

private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void require_sorted_releases(std::span<const ReleaseMarker> releases) {
  for (std::size_t i = 1; i < releases.size(); ++i)
    if (releases[i].timestamp <= releases[i - 1].timestamp)
      throw Error("releases must be strictly increasing in time ('" + releases[i - 1].id + "' then '" +
                  releases[i].id + "')");
}

void require_sorted_commits(std::span<const CommitEvent> commits) {
  for (std::size_t i = 1; i < commits.size(); ++i)
    if (commits[i].timestamp < commits[i - 1].timestamp)
      throw Error("commits must be in time order (commit " + std::to_string(i + 1) + " is older than commit " +
                  std::to_string(i) + ")");
}

std::vector<std::string> unique_files(const CommitEvent& c) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& f : c.files)
    if (seen.insert(f).second) out.push_back(f);
  return out;
}

constexpr double kHour = 3600.0;

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  const auto trimmed = csv::trim(text);
  std::string_view s = trimmed;
  if (s.empty()) throw Error("empty timestamp");

  // Plain epoch seconds.
  if (s.find_first_not_of("0123456789", s[0] == '-' ? 1 : 0) == std::string_view::npos) {
    Timestamp v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("invalid timestamp '" + std::string(s) + "'");
    return v;
  }

  Cursor c(s);
  const int year = c.digits(4);
  if (!c.accept('-')) c.fail();
  const int month = c.digits(2);
  if (!c.accept('-')) c.fail();
  const int day = c.digits(2);
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month < 1 || month > 12) c.fail();
  if (day < 1 || day > kDays[month - 1] + (month == 2 && is_leap(year))) c.fail();

  int hour = 0, minute = 0, second = 0;
  if (c.accept('T') || c.accept(' ')) {
    hour = c.digits(2);
    if (!c.accept(':')) c.fail();
    minute = c.digits(2);
    if (c.accept(':')) {
      second = c.digits(2);
      if (c.accept('.'))
        while (std::isdigit(static_cast<unsigned char>(c.peek()))) c.accept(c.peek());
    }
    if (hour > 23 || minute > 59 || second > 60) c.fail();
  }

  int offset = 0;
  if (c.accept('Z') || c.accept('z')) {
  } else if (c.peek() == '+' || c.peek() == '-') {
    const int sign = c.accept('-') ? -1 : (c.accept('+'), 1);
    const int oh = c.digits(2);
    c.accept(':');
    const int om = c.digits(2);
    if (oh > 23 || om > 59) c.fail();
    offset = sign * (oh * 3600 + om * 60);
  }
  if (!c.done()) c.fail();

  return days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)) * 86400 + hour * 3600 +
         minute * 60 + second - offset;
}

std::string format_timestamp(Timestamp t) {
  std::int64_t days = t / 86400, secs = t % 86400;
  if (secs < 0) {
    secs += 86400;
    --days;
  }
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02d:%02d:%02dZ", static_cast<long long>(y), m, d,
                static_cast<int>(secs / 3600), static_cast<int>(secs / 60 % 60), static_cast<int>(secs % 60));
  return buf;
}

void CommitEvent::validate() const {
  if (author.empty()) throw Error("commit without author");
  if (files.empty()) throw Error("commit by " + author + " touches no file");
  for (const auto& f : files)
    if (f.empty()) throw Error("commit by " + author + " lists an empty file name");
}

std::string to_string(IntervalKind k) {
  switch (k) {
    case IntervalKind::kEdit: return "edit";
    case IntervalKind::kIdle: return "idle";
    case IntervalKind::kConflict: return "conflict";
  }
  return "unknown";
}

IntervalKind parse_interval_kind(const std::string& s) {
  if (s == "edit") return IntervalKind::kEdit;
  if (s == "idle") return IntervalKind::kIdle;
  if (s == "conflict") return IntervalKind::kConflict;
  throw Error("unknown interval kind '" + s + "' (edit, idle, conflict)");
}

std::vector<Interval> IntervalSequence::intervals() const {
  std::vector<Interval> out;
  for (const auto& st : steps) {
    out.push_back({IntervalKind::kEdit, st.edit_hours});
    if (!st.handed_over) continue;
    if (st.conflict_hours > 0)
      out.push_back({IntervalKind::kConflict, st.conflict_hours});
    else
      out.push_back({IntervalKind::kIdle, st.idle_hours});
  }
  return out;
}

std::vector<double> IntervalSequence::hours(IntervalKind kind) const {
  std::vector<double> out;
  for (const auto& iv : intervals())
    if (iv.kind == kind) out.push_back(iv.hours);
  return out;
}

std::vector<IntervalSequence> compute_edit_idle(std::span<const CommitEvent> commits) {
  require_sorted_commits(commits);
  for (const auto& c : commits) c.validate();

  std::map<std::string, std::vector<std::size_t>> by_file;
  std::unordered_map<std::string, std::vector<std::size_t>> by_author;
  for (std::size_t i = 0; i < commits.size(); ++i) {
    by_author[commits[i].author].push_back(i);
    for (const auto& f : unique_files(commits[i])) by_file[f].push_back(i);
  }
  // Latest commit by `author` strictly before commit index `i`.
  auto previous = [&](const std::string& author, std::size_t i) -> std::optional<std::size_t> {
    const auto& list = by_author.at(author);
    auto it = std::lower_bound(list.begin(), list.end(), i);
    if (it == list.begin()) return std::nullopt;
    return *std::prev(it);
  };

  std::vector<IntervalSequence> out;
  for (const auto& [file, idx] : by_file) {
    IntervalSequence seq{file, {}};
    for (std::size_t j = 1; j < idx.size(); ++j) {
      const auto& x = commits[idx[j]];
      CommitIntervals st;
      st.commit = idx[j];
      if (auto prev = previous(x.author, idx[j]))
        st.edit_hours = static_cast<double>(x.timestamp - commits[*prev].timestamp) / kHour;
      if (j + 1 < idx.size() && commits[idx[j + 1]].author != x.author) {
        const auto& next = commits[idx[j + 1]];
        st.handed_over = true;
        // Without an earlier commit the next developer starts at the file commit itself.
        const auto y = previous(next.author, idx[j + 1]);
        const Timestamp start = y ? commits[*y].timestamp : next.timestamp;
        if (start < x.timestamp)
          st.conflict_hours = static_cast<double>(x.timestamp - start) / kHour;
        else
          st.idle_hours = static_cast<double>(start - x.timestamp) / kHour;
      }
      seq.steps.push_back(st);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

BugMatcher::BugMatcher() : BugMatcher({"fix", "bug", "defect", "fault", "crash", "error", "patch"}) {}

BugMatcher::BugMatcher(std::vector<std::string> keywords) {
  for (auto& k : keywords) {
    auto w = lower(csv::trim(k));
    if (w.empty()) throw Error("empty bug keyword");
    keywords_.push_back(std::move(w));
  }
  if (keywords_.empty()) throw Error("no bug keywords");
}

bool BugMatcher::matches(std::string_view message) const {
  const auto text = lower(message);
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && std::isalnum(static_cast<unsigned char>(text[j]))) ++j;
    const std::string_view word(text.data() + i, j - i);
    for (const auto& k : keywords_)
      if (word.starts_with(k)) return true;
    i = j;
  }
  return false;
}

BugCounts post_release_bug_count(std::span<const CommitEvent> commits, std::span<const ReleaseMarker> releases,
                                 const BugMatcher& matcher) {
  if (releases.empty()) throw Error("bug counting needs at least one release");
  require_sorted_releases(releases);
  BugCounts out;
  const std::size_t windows = releases.size() - 1;
  for (std::size_t w = 0; w < windows; ++w) out.windows.push_back(releases[w].id);
  for (const auto& c : commits) {
    c.validate();
    const auto files = unique_files(c);
    for (const auto& f : files) out.per_file.try_emplace(f, windows, 0);
    if (windows == 0 || !matcher.matches(c.message)) continue;
    // Window w covers [r_w, r_w+1).
    auto it = std::upper_bound(releases.begin(), releases.end(), c.timestamp,
                               [](Timestamp t, const ReleaseMarker& r) { return t < r.timestamp; });
    if (it == releases.begin() || it == releases.end()) continue;
    const auto w = static_cast<std::size_t>(it - releases.begin()) - 1;
    for (const auto& f : files) ++out.per_file[f][w];
  }
  return out;
}

OwnershipHistory ownership_sequence(std::string file, std::span<const ReleaseChurn> history, char owner_symbol,
                                    char other_symbol) {
  if (owner_symbol == other_symbol) throw Error("owner and other symbols must differ");
  OwnershipHistory out;
  out.file = std::move(file);

  std::vector<std::string> order;  // authors by first positive contribution
  std::unordered_map<std::string, std::uint64_t> total;
  for (const auto& r : history)
    for (const auto& [author, churn] : r.churn) {
      if (churn == 0) continue;
      if (!total.count(author)) order.push_back(author);
      total[author] += churn;
    }
  if (order.empty()) throw Error("no churn recorded for " + out.file);

  // Most churn; ties to the earliest contributor.
  auto leader = [&](const std::unordered_map<std::string, std::uint64_t>& m, bool& tied) {
    std::string best;
    std::uint64_t best_churn = 0;
    tied = false;
    for (const auto& a : order) {
      auto it = m.find(a);
      if (it == m.end() || it->second == 0) continue;
      if (it->second > best_churn) {
        best = a;
        best_churn = it->second;
        tied = false;
      } else if (it->second == best_churn) {
        tied = true;
      }
    }
    return best;
  };

  out.owner = leader(total, out.owner_tied);
  for (const auto& r : history) {
    std::unordered_map<std::string, std::uint64_t> m;
    for (const auto& [author, churn] : r.churn) m[author] += churn;
    bool tied = false;
    auto lead = leader(m, tied);
    if (lead.empty()) continue;
    out.releases.push_back(r.release);
    out.symbols.push_back(lead == out.owner ? owner_symbol : other_symbol);
    out.leaders.push_back(std::move(lead));
    out.leader_tied.push_back(tied);
  }
  return out;
}

std::vector<OwnershipHistory> ownership_from_commits(std::span<const CommitEvent> commits,
                                                     std::span<const ReleaseMarker> releases, char owner_symbol,
                                                     char other_symbol) {
  if (releases.empty()) throw Error("ownership needs at least one release");
  require_sorted_releases(releases);
  require_sorted_commits(commits);

  std::map<std::string, std::vector<ReleaseChurn>> per_file;
  for (const auto& c : commits) {
    c.validate();
    auto it = std::lower_bound(releases.begin(), releases.end(), c.timestamp,
                               [](const ReleaseMarker& r, Timestamp t) { return r.timestamp < t; });
    if (it == releases.end()) continue;
    const auto r = static_cast<std::size_t>(it - releases.begin());
    for (const auto& f : unique_files(c)) {
      auto& hist = per_file[f];
      if (hist.empty())
        for (const auto& rel : releases) hist.push_back({rel.id, {}});
      auto ch = c.churn.find(f);
      const std::uint64_t churn = ch == c.churn.end() ? 0 : ch->second;
      auto& list = hist[r].churn;
      auto slot = std::find_if(list.begin(), list.end(), [&](const auto& p) { return p.first == c.author; });
      if (slot == list.end())
        list.emplace_back(c.author, churn);
      else
        slot->second += churn;
    }
  }
  std::vector<OwnershipHistory> out;
  for (const auto& [file, hist] : per_file) {
    const bool any = std::any_of(hist.begin(), hist.end(), [](const ReleaseChurn& r) {
      return std::any_of(r.churn.begin(), r.churn.end(), [](const auto& p) { return p.second > 0; });
    });
    if (any) out.push_back(ownership_sequence(file, hist, owner_symbol, other_symbol));
  }
  return out;
}

std::vector<double> release_cycles(std::span<const ReleaseMarker> releases) {
  if (releases.size() < 2) throw Error("release cycles need at least two releases");
  require_sorted_releases(releases);
  std::vector<double> out;
  for (std::size_t i = 1; i < releases.size(); ++i)
    out.push_back(static_cast<double>(releases[i].timestamp - releases[i - 1].timestamp) / 86400.0);
  return out;
}

std::vector<CommitEvent> parse_commits_jsonl(const std::string& text) {
  std::vector<CommitEvent> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (csv::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw Error("expected a JSON object");
      CommitEvent c;
      const auto& ts = j.at("timestamp");
      if (ts.is_number_integer())
        c.timestamp = ts.get<Timestamp>();
      else if (ts.is_string())
        c.timestamp = parse_timestamp(ts.get<std::string>());
      else
        throw Error("timestamp must be an integer or an ISO 8601 string");
      c.author = j.at("author").get<std::string>();
      if (j.contains("files")) c.files = j.at("files").get<std::vector<std::string>>();
      if (j.contains("churn"))
        for (const auto& [f, v] : j.at("churn").items()) c.churn[f] = v.get<std::uint64_t>();
      if (j.contains("message")) c.message = j.at("message").get<std::string>();
      c.validate();
      out.push_back(std::move(c));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

std::vector<CommitEvent> read_commits_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_commits_jsonl(ss.str());
  } catch (const ParseError& e) {
    throw Error(path + ": " + e.what());
  }
}

std::map<std::string, std::vector<ReleaseMarker>> parse_releases_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool with_project = false;
  std::map<std::string, std::vector<ReleaseMarker>> out;
  while (csv::read_line(in, line, lineno == 0)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    auto fields = csv::split_line(line);
    for (auto& f : fields) f = csv::trim(f);
    if (lineno == 1) {
      if (fields == std::vector<std::string>{"project", "release_id", "timestamp"})
        with_project = true;
      else if (fields != std::vector<std::string>{"release_id", "timestamp"})
        throw ParseError("expected header 'release_id,timestamp' or 'project,release_id,timestamp'", lineno);
      continue;
    }
    const std::size_t want = with_project ? 3 : 2;
    if (fields.size() != want)
      throw ParseError("expected " + std::to_string(want) + " fields, got " + std::to_string(fields.size()), lineno);
    try {
      const std::string project = with_project ? fields[0] : "";
      const auto& id = fields[want - 2];
      if (id.empty()) throw Error("empty release id");
      out[project].push_back({id, parse_timestamp(fields[want - 1])});
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  if (lineno == 0) throw Error("empty releases file");
  return out;
}

std::map<std::string, std::vector<ReleaseMarker>> read_releases_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_releases_csv(ss.str());
  } catch (const ParseError& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace gwm
