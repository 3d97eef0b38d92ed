#pragma once

#include <cstddef>
#include <vector>

namespace neuroglue {

// Binary max-heap over variables 1..n keyed by an external score table.
// Ties are broken towards the lower variable index.
class VarHeap {
 public:
  explicit VarHeap(const std::vector<double>& scores) : scores_(&scores) {}

  void resize(int num_vars) {
    position_.assign(static_cast<std::size_t>(num_vars) + 1, kAbsent);
  }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  bool contains(int var) const { return position_[var] != kAbsent; }
  int top() const { return heap_.front(); }

  void insert(int var) {
    if (contains(var)) return;
    position_[var] = static_cast<int>(heap_.size());
    heap_.push_back(var);
    sift_up(position_[var]);
  }

  // Call after the score of `var` increased.
  void increased(int var) {
    if (contains(var)) sift_up(position_[var]);
  }

  int pop() {
    const int var = heap_.front();
    position_[var] = kAbsent;
    const int last = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
      heap_[0] = last;
      position_[last] = 0;
      sift_down(0);
    }
    return var;
  }

  void rebuild(const std::vector<int>& vars) {
    for (int v : heap_) position_[v] = kAbsent;
    heap_.clear();
    for (int v : vars) {
      position_[v] = static_cast<int>(heap_.size());
      heap_.push_back(v);
    }
    for (int i = static_cast<int>(heap_.size()) / 2 - 1; i >= 0; --i) sift_down(i);
  }

 private:
  static constexpr int kAbsent = -1;

  bool before(int a, int b) const {
    const double sa = (*scores_)[a];
    const double sb = (*scores_)[b];
    return sa > sb || (sa == sb && a < b);
  }

  void sift_up(int i) {
    const int var = heap_[i];
    while (i > 0) {
      const int parent = (i - 1) / 2;
      if (!before(var, heap_[parent])) break;
      heap_[i] = heap_[parent];
      position_[heap_[i]] = i;
      i = parent;
    }
    heap_[i] = var;
    position_[var] = i;
  }

  void sift_down(int i) {
    const int var = heap_[i];
    const int n = static_cast<int>(heap_.size());
    while (true) {
      int child = 2 * i + 1;
      if (child >= n) break;
      if (child + 1 < n && before(heap_[child + 1], heap_[child])) ++child;
      if (!before(heap_[child], var)) break;
      heap_[i] = heap_[child];
      position_[heap_[i]] = i;
      i = child;
    }
    heap_[i] = var;
    position_[var] = i;
  }

  const std::vector<double>* scores_;
  std::vector<int> heap_;
  std::vector<int> position_;
};

}  // namespace neuroglue
