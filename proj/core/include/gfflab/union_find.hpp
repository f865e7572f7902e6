#pragma once

#include <numeric>
#include <vector>

namespace gfflab {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

  int size() const { return static_cast<int>(parent_.size()); }

  // Component label per element, numbered by first occurrence.
  std::vector<int> labels() {
    std::vector<int> root_label(parent_.size(), -1), out(parent_.size());
    int next = 0;
    for (int i = 0; i < size(); ++i) {
      int r = find(i);
      if (root_label[r] < 0) root_label[r] = next++;
      out[i] = root_label[r];
    }
    return out;
  }

 private:
  std::vector<int> parent_;
  std::vector<int> rank_;
};

}  // namespace gfflab
