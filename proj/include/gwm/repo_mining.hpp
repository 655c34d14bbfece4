#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gwm {

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

/// Integer seconds, or ISO 8601 `YYYY-MM-DD[THH:MM[:SS]][Z|+HH:MM|-HH:MM]`.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

struct CommitEvent {
  Timestamp timestamp = 0;
  std::string author;
  std::vector<std::string> files;
  std::map<std::string, std::uint64_t> churn;  // added + changed lines per file
  std::string message;

  void validate() const;
};

struct ReleaseMarker {
  std::string id;
  Timestamp timestamp = 0;
};

enum class IntervalKind { kEdit, kIdle, kConflict };

std::string to_string(IntervalKind k);
IntervalKind parse_interval_kind(const std::string& s);

struct Interval {
  IntervalKind kind = IntervalKind::kEdit;
  double hours = 0.0;
};

/// What one non-creating commit to a file contributes.
struct CommitIntervals {
  std::size_t commit = 0;  // index into the commit list
  double edit_hours = 0.0;
  double idle_hours = 0.0;
  double conflict_hours = 0.0;
  bool handed_over = false;  // a different developer commits to the file next
};

struct IntervalSequence {
  std::string file;
  std::vector<CommitIntervals> steps;  // commit order

  /// Edit, then idle or conflict when the file changes hands.
  std::vector<Interval> intervals() const;
  /// Durations of one kind, in order. Idle and conflict only where the file changes hands.
  std::vector<double> hours(IntervalKind kind) const;
};

/// Edit, idle and conflict intervals per file from a time-ordered commit log.
///
/// The commit creating a file is skipped. For a later commit at A by X,
/// edit = A - (X's previous commit anywhere). With P the next developer to
/// commit the file and Y P's last commit before that: conflict = A - Y when
/// Y < A, otherwise idle = Y - A. When the same developer commits next only
/// the edit is recorded. Files are returned in name order.
std::vector<IntervalSequence> compute_edit_idle(std::span<const CommitEvent> commits);

/// Case-insensitive keyword test on commit messages. A word matches when it
/// starts with a keyword, so "fixed" and "bugs" count.
class BugMatcher {
public:
  BugMatcher();
  explicit BugMatcher(std::vector<std::string> keywords);

  bool matches(std::string_view message) const;
  const std::vector<std::string>& keywords() const noexcept { return keywords_; }

private:
  std::vector<std::string> keywords_;  // lower case
};

struct BugCounts {
  std::vector<std::string> windows;  // release opening each window [r_i, r_i+1)
  std::map<std::string, std::vector<std::uint64_t>> per_file;
};

/// Bug-fixing commits per file in each window between consecutive releases.
/// Files touched by any commit appear, with zeros where nothing matched.
BugCounts post_release_bug_count(std::span<const CommitEvent> commits, std::span<const ReleaseMarker> releases,
                                 const BugMatcher& matcher);

struct ReleaseChurn {
  std::string release;
  std::vector<std::pair<std::string, std::uint64_t>> churn;  // authors in order of first contribution
};

struct OwnershipHistory {
  std::string file;
  std::string owner;
  bool owner_tied = false;
  std::vector<std::string> releases;  // releases with positive churn on the file
  std::vector<std::string> leaders;
  std::vector<bool> leader_tied;
  std::string symbols;  // owner_symbol where the owner led the release, else other_symbol
};

/// Overall owner = most churn in total, ties to the earliest contributor
/// (flagged). Releases without churn on the file are skipped. Throws when
/// nobody has churn.
OwnershipHistory ownership_sequence(std::string file, std::span<const ReleaseChurn> history, char owner_symbol = 'A',
                                    char other_symbol = 'B');

/// Ownership per file, assigning each commit to the first release at or
/// after it. Commits after the last release are not released yet and are
/// ignored, as are files without churn.
std::vector<OwnershipHistory> ownership_from_commits(std::span<const CommitEvent> commits,
                                                     std::span<const ReleaseMarker> releases,
                                                     char owner_symbol = 'A', char other_symbol = 'B');

/// Days between consecutive releases.
std::vector<double> release_cycles(std::span<const ReleaseMarker> releases);

/// One JSON object per line: timestamp, author, files[], churn{}, message.
std::vector<CommitEvent> parse_commits_jsonl(const std::string& text);
std::vector<CommitEvent> read_commits_jsonl(const std::string& path);

/// `release_id,timestamp`, optionally preceded by a `project` column.
/// Releases of each project keep file order.
std::map<std::string, std::vector<ReleaseMarker>> parse_releases_csv(const std::string& text);
std::map<std::string, std::vector<ReleaseMarker>> read_releases_csv(const std::string& path);

}  // namespace gwm
