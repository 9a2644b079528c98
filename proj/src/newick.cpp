#include "stripefrac/newick.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace stripefrac {

ParseError::ParseError(const std::string& msg, std::size_t offset)
    : Error(msg + " (at character " + std::to_string(offset) + ")"),
      offset_(offset) {}

namespace {

constexpr std::string_view kUnquotedStop = "()[]{}:;,'";

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

struct Parser {
  std::string_view text;
  std::size_t pos = 0;
  PhyloTree tree;
  std::unordered_set<std::string> seen;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos); }

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }

  void skip_ws() {
    while (!eof() && is_space(peek())) ++pos;
  }

  std::string parse_label() {
    skip_ws();
    if (eof()) return {};
    if (peek() == '\'') {
      ++pos;
      std::string out;
      for (;;) {
        if (eof()) fail("unterminated quoted label");
        char c = text[pos++];
        if (c == '\'') {
          if (!eof() && peek() == '\'') {  // '' is a literal quote
            out.push_back('\'');
            ++pos;
          } else {
            return out;
          }
        } else {
          out.push_back(c);
        }
      }
    }
    std::size_t begin = pos;
    while (!eof() && !is_space(peek()) &&
           kUnquotedStop.find(peek()) == std::string_view::npos) {
      ++pos;
    }
    return std::string(text.substr(begin, pos - begin));
  }

  double parse_length() {
    skip_ws();  // ':' already consumed
    if (!eof() && peek() == '+') ++pos;
    double value = 0.0;
    auto [end, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), value);
    if (ec != std::errc() || end == text.data() + pos) fail("expected a branch length");
    pos = static_cast<std::size_t>(end - text.data());
    if (!std::isfinite(value)) fail("branch length must be finite");
    if (value < 0.0) fail("branch length must be non-negative");
    return value;
  }

  int new_node() {
    tree.nodes.emplace_back();
    return static_cast<int>(tree.nodes.size()) - 1;
  }

  // Children are recorded in a scratch adjacency keyed by creation order;
  // finalize_topology rebuilds the real one from parent links.
  int parse_subtree() {
    skip_ws();
    if (eof()) fail("unexpected end of input");
    if (peek() == '(') {
      ++pos;
      std::vector<int> kids;
      for (;;) {
        kids.push_back(parse_subtree());
        skip_ws();
        if (eof()) fail("unbalanced parentheses");
        char c = peek();
        if (c == ',') {
          ++pos;
          continue;
        }
        if (c == ')') {
          ++pos;
          break;
        }
        fail("expected ',' or ')'");
      }
      int node = new_node();
      tree.nodes[static_cast<std::size_t>(node)].name = parse_label();
      for (int k : kids) tree.nodes[static_cast<std::size_t>(k)].parent = node;
      skip_ws();
      if (!eof() && peek() == ':') {
        ++pos;
        tree.nodes[static_cast<std::size_t>(node)].length = parse_length();
      }
      return node;
    }
    std::size_t label_pos = pos;
    std::string label = parse_label();
    if (label.empty()) {
      pos = label_pos;
      fail("expected a leaf name");
    }
    if (!seen.insert(label).second) {
      pos = label_pos;
      fail("duplicate leaf name '" + label + "'");
    }
    int node = new_node();
    tree.nodes[static_cast<std::size_t>(node)].name = std::move(label);
    skip_ws();
    if (!eof() && peek() == ':') {
      ++pos;
      tree.nodes[static_cast<std::size_t>(node)].length = parse_length();
    }
    return node;
  }
};

}  // namespace

PhyloTree parse_newick(std::string_view text) {
  Parser p;
  p.text = text;
  p.skip_ws();
  if (p.eof()) p.fail("empty input");
  int root = p.parse_subtree();
  p.skip_ws();
  if (p.eof()) p.fail("unbalanced parentheses");
  if (p.peek() != ';') p.fail("expected ';'");
  ++p.pos;
  p.skip_ws();
  if (!p.eof()) p.fail("trailing text after ';'");
  p.tree.root = root;
  p.tree.nodes[static_cast<std::size_t>(root)].length = 0.0;  // root length is ignored
  finalize_topology(p.tree);
  return p.tree;
}

PhyloTree parse_newick_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open tree file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  std::size_t semi = text.find(';');
  if (semi == std::string::npos) throw Error("tree file '" + path + "' has no ';'");
  return parse_newick(std::string_view(text).substr(0, semi + 1));
}

void finalize_topology(PhyloTree& tree) {
  const int n = tree.n_nodes();
  if (n == 0) throw Error("tree has no nodes");
  tree.children.assign(static_cast<std::size_t>(n), {});
  int root = -1;
  for (int i = 0; i < n; ++i) {
    const TreeNode& nd = tree.nodes[static_cast<std::size_t>(i)];
    if (!std::isfinite(nd.length) || nd.length < 0.0)
      throw Error("branch length must be finite and non-negative");
    if (nd.parent < 0) {
      if (root >= 0) throw Error("tree has more than one root");
      root = i;
    } else {
      if (nd.parent >= n) throw Error("parent index out of range");
      tree.children[static_cast<std::size_t>(nd.parent)].push_back(i);
    }
  }
  if (root < 0) throw Error("tree has no root");
  tree.root = root;

  // Iterative post-order from the root; excludes the root itself.
  tree.postorder.clear();
  tree.postorder.reserve(static_cast<std::size_t>(n) - 1);
  std::vector<std::pair<int, std::size_t>> stack;  // (node, next child slot)
  stack.emplace_back(root, 0);
  std::size_t visited = 0;
  while (!stack.empty()) {
    auto& [node, slot] = stack.back();
    const auto& kids = tree.children[static_cast<std::size_t>(node)];
    if (slot < kids.size()) {
      int next = kids[slot++];
      stack.emplace_back(next, 0);
    } else {
      ++visited;
      if (node != root) tree.postorder.push_back(node);
      stack.pop_back();
    }
  }
  if (visited != static_cast<std::size_t>(n))
    throw Error("tree has nodes unreachable from the root");

  tree.leaf_names.clear();
  std::unordered_set<std::string> seen;
  for (int i = 0; i < n; ++i) {
    if (!tree.is_leaf(i)) continue;
    const std::string& nm = tree.nodes[static_cast<std::size_t>(i)].name;
    if (nm.empty()) throw Error("leaf with empty name");
    if (!seen.insert(nm).second) throw Error("duplicate leaf name '" + nm + "'");
    tree.leaf_names.push_back(nm);
  }
}

namespace {

std::string format_length(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

bool needs_quoting(const std::string& label) {
  for (char c : label) {
    if (is_space(c) || kUnquotedStop.find(c) != std::string_view::npos) return true;
  }
  return false;
}

void append_label(std::string& out, const std::string& label) {
  if (!needs_quoting(label)) {
    out += label;
    return;
  }
  out.push_back('\'');
  for (char c : label) {
    out.push_back(c);
    if (c == '\'') out.push_back('\'');
  }
  out.push_back('\'');
}

void append_subtree(const PhyloTree& t, int node, std::string& out) {
  const auto& kids = t.children[static_cast<std::size_t>(node)];
  if (!kids.empty()) {
    out.push_back('(');
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if (i) out.push_back(',');
      append_subtree(t, kids[i], out);
    }
    out.push_back(')');
  }
  append_label(out, t.nodes[static_cast<std::size_t>(node)].name);
  if (node != t.root) {
    out.push_back(':');
    out += format_length(t.nodes[static_cast<std::size_t>(node)].length);
  }
}

}  // namespace

std::string to_newick(const PhyloTree& tree) {
  std::string out;
  append_subtree(tree, tree.root, out);
  out.push_back(';');
  return out;
}

std::vector<std::pair<int, double>> postorder_nodes(const PhyloTree& tree) {
  std::vector<std::pair<int, double>> out;
  out.reserve(tree.postorder.size());
  for (int v : tree.postorder)
    out.emplace_back(v, tree.nodes[static_cast<std::size_t>(v)].length);
  return out;
}

namespace {

// Copies the subtree rooted at `node`, skipping unkept branches and folding
// non-root unary chains; `carry` is length accumulated from folded ancestors.
int rebuild_sheared(const PhyloTree& t, const std::vector<char>& kept, int node,
                    double carry, PhyloTree& out) {
  const TreeNode& src = t.nodes[static_cast<std::size_t>(node)];
  std::vector<int> live;
  for (int c : t.children[static_cast<std::size_t>(node)])
    if (kept[static_cast<std::size_t>(c)]) live.push_back(c);

  if (node != t.root && live.size() == 1)
    return rebuild_sheared(t, kept, live[0], carry + src.length, out);

  out.nodes.emplace_back();
  int idx = static_cast<int>(out.nodes.size()) - 1;
  out.nodes[static_cast<std::size_t>(idx)].name = src.name;
  out.nodes[static_cast<std::size_t>(idx)].length = src.length + carry;
  for (int c : live) {
    int child = rebuild_sheared(t, kept, c, 0.0, out);
    out.nodes[static_cast<std::size_t>(child)].parent = idx;
  }
  return idx;
}

}  // namespace

PhyloTree shear(const PhyloTree& tree, const std::vector<std::string>& keep) {
  if (keep.empty()) throw Error("shear: leaf set is empty");
  std::unordered_set<std::string> want(keep.begin(), keep.end());
  std::unordered_set<std::string> have(tree.leaf_names.begin(), tree.leaf_names.end());
  for (const std::string& nm : want)
    if (!have.count(nm)) throw Error("shear: '" + nm + "' is not a leaf of the tree");

  std::vector<char> kept(static_cast<std::size_t>(tree.n_nodes()), 0);
  for (int i = 0; i < tree.n_nodes(); ++i)
    if (tree.is_leaf(i) && want.count(tree.nodes[static_cast<std::size_t>(i)].name))
      kept[static_cast<std::size_t>(i)] = 1;
  for (int v : tree.postorder)  // children precede parents: one sweep marks ancestors
    if (kept[static_cast<std::size_t>(v)])
      kept[static_cast<std::size_t>(tree.nodes[static_cast<std::size_t>(v)].parent)] = 1;

  PhyloTree out;
  int root = rebuild_sheared(tree, kept, tree.root, 0.0, out);
  out.nodes[static_cast<std::size_t>(root)].length = 0.0;
  finalize_topology(out);
  return out;
}

}  // namespace stripefrac
