#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gwm/alphabet.hpp"
#include "gwm/automaton.hpp"
#include "gwm/encoding.hpp"
#include "gwm/pattern.hpp"

namespace gwm {

using NodeId = std::uint32_t;

/// Symbol sets a word shows, or a language allows: symbols used, symbols
/// required, first and last symbols, and adjacent pairs (bit x*8+y).
struct Shape {
  unsigned used = 0;
  unsigned required = 0;
  unsigned first = 0;
  unsigned last = 0;
  std::uint64_t pairs = 0;
};

struct HierarchyNode {
  NodeId id = 0;
  PatternExpr expr;
  std::string text;  // canonical rendering of expr
  int depth = 0;     // longest path from the root
  std::vector<NodeId> parents;
  std::vector<NodeId> children;
};

/// Inclusion-ordered lattice of restricted regular expressions.
///
/// Node ids follow (depth, canonical text) order; id 0 is the root. Edges are
/// the transitive reduction of strict language inclusion. Immutable once
/// built, and every query is safe to call concurrently.
class Hierarchy {
public:
  static constexpr std::size_t kMaxEnumeratedAlphabet = 5;

  /// Every expression of the grammar over `alphabet`, deduplicated by
  /// language equivalence.
  static Hierarchy enumerate(const Alphabet& alphabet);

  /// Builds from explicit nodes and (parent, child) index pairs, e.g. a
  /// user-supplied file. Ids are reassigned in canonical order. Throws if an
  /// edge does not respect inclusion, the graph has a cycle, or there is not
  /// exactly one root.
  static Hierarchy from_edges(const Alphabet& alphabet, const std::vector<PatternExpr>& exprs,
                              const std::vector<std::pair<std::size_t, std::size_t>>& edges);

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<HierarchyNode>& nodes() const noexcept { return nodes_; }
  const HierarchyNode& node(NodeId id) const { return nodes_.at(id); }
  NodeId root() const noexcept { return 0; }
  int max_depth() const noexcept;

  /// Node whose language equals that of `text`, if present.
  std::optional<NodeId> find(std::string_view text) const;
  std::optional<NodeId> find(const PatternExpr& expr) const;

  const Dfa& automaton(NodeId id) const { return dfas_.at(id); }
  bool matches(NodeId id, std::string_view s) const { return dfas_.at(id).accepts(s, alphabet_); }

  /// True iff `ancestor` lies strictly above `node`.
  bool is_ancestor(NodeId ancestor, NodeId node) const;
  const std::vector<NodeId>& ancestors(NodeId node) const { return ancestors_.at(node); }

  /// Deepest node whose language contains `s`; ties go to the smaller id.
  NodeId classify(std::string_view s) const;

  /// Preorder of a depth-first walk from the root, children in id order.
  const std::vector<NodeId>& dfs_order() const noexcept { return dfs_order_; }
  /// Position of each node in dfs_order().
  const std::vector<std::size_t>& dfs_rank() const noexcept { return dfs_rank_; }

  std::string to_json() const;
  static Hierarchy from_json(const std::string& text);
  std::string to_csv() const;
  static Hierarchy from_csv(const std::string& text, const Alphabet& alphabet);
  /// Loads JSON, or CSV (`id,expr,parent_ids`) when the extension is .csv.
  /// CSV files need the alphabet supplied; JSON carries its own.
  static Hierarchy load(const std::filesystem::path& path, const std::optional<Alphabet>& alphabet = {});

private:
  Alphabet alphabet_;
  std::vector<HierarchyNode> nodes_;
  std::vector<Dfa> dfas_;
  std::vector<std::vector<NodeId>> ancestors_;  // sorted
  std::vector<NodeId> dfs_order_;
  std::vector<std::size_t> dfs_rank_;
  struct Filter {
    std::uint32_t allowed = 0;  // used | first << 8 | last << 16
    std::uint32_t required = 0;
    std::uint64_t pairs = 0;
    int depth = 0;
    int deepest_below = 0;
  };
  std::vector<Filter> filters_;  // per node, for quick rejection in classify

  static Hierarchy assemble(const Alphabet& alphabet, std::vector<PatternExpr> exprs, std::vector<Dfa> dfas,
                            std::vector<std::vector<std::size_t>> parents);
};

/// Result of classifying every row of a dataset.
struct Classification {
  std::vector<NodeId> node_of_row;
  std::vector<std::vector<std::size_t>> members;  // per node id, ascending rows
};

Classification classify_all(const Hierarchy& hierarchy, const Dataset& data);
Classification classify_all(const Hierarchy& hierarchy, const std::vector<std::string>& strings);

/// `s` with every run of length >= 3 shortened to 2. Membership in any
/// expression of the grammar is invariant under this reduction.
std::string cap_runs(std::string_view s);

}  // namespace gwm
