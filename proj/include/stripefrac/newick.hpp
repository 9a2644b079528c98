#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stripefrac/common.hpp"

namespace stripefrac {

struct TreeNode {
  int parent = -1;     // -1 only for the root
  double length = 0.0; // branch above this node; finite, >= 0; 0 for the root
  std::string name;    // leaves: unique, nonempty; internals: optional
};

/*
 * Rooted phylogeny. `postorder` lists every non-root node, children before
 * parents — the traversal the embedding and the brute-force reference both
 * walk. `leaf_names` is in parse/construction encounter order.
 */
struct PhyloTree {
  std::vector<TreeNode> nodes;
  std::vector<std::vector<int>> children;  // parallel to nodes
  int root = -1;
  std::vector<int> postorder;
  std::vector<std::string> leaf_names;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_leaves() const { return static_cast<int>(leaf_names.size()); }
  bool is_leaf(int i) const { return children[static_cast<std::size_t>(i)].empty(); }
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Parse a single Newick string ending in ';'. Quoted labels ('' escapes a
// quote), whitespace-insensitive, multifurcations allowed, missing branch
// lengths default to 0, a root length parses but is discarded. Errors carry
// the character offset of the failure.
PhyloTree parse_newick(std::string_view text);

// Read a tree file: everything through the first ';' is the tree.
PhyloTree parse_newick_file(const std::string& path);

// Serialize; parse(to_newick(t)) reproduces t exactly (lengths emitted with
// shortest round-trip formatting).
std::string to_newick(const PhyloTree& tree);

// Restrict to the given leaves: drop other leaves and now-childless
// internals, collapse non-root unary nodes by summing lengths onto the
// surviving child. `keep` is a set (duplicates ignored); every name must be
// a leaf of the tree and the set must be nonempty.
PhyloTree shear(const PhyloTree& tree, const std::vector<std::string>& keep);

// (node index, branch length) for every non-root node, children first.
std::vector<std::pair<int, double>> postorder_nodes(const PhyloTree& tree);

// Rebuild children / postorder / leaf_names from nodes[].parent links and
// verify the structural invariants (single root, lengths finite and >= 0,
// unique nonempty leaf names). Throws Error on violation.
void finalize_topology(PhyloTree& tree);

}  // namespace stripefrac
