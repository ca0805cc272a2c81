#pragma once

#include <map>
#include <optional>
#include <vector>

#include "llsm/types.hpp"

namespace llsm {

// In-memory write buffer; iterates in strictly increasing key order.
// Size accounting is entry_count * 116 bytes.
class MemTable {
  public:
    explicit MemTable(std::size_t capacity_bytes = 1 << 20) : capacity_bytes_(capacity_bytes) {}

    void put(const Key& key, const Value& value) { entries_[key] = value; }

    std::optional<Value> get(const Key& key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t entry_count() const { return entries_.size(); }
    std::size_t current_bytes() const { return entries_.size() * kEntrySize; }
    std::size_t capacity_bytes() const { return capacity_bytes_; }
    bool empty() const { return entries_.empty(); }

    // True when no further entry fits without exceeding capacity.
    bool full() const { return current_bytes() + kEntrySize > capacity_bytes_; }

    std::vector<Entry> sorted_entries() const {
        std::vector<Entry> out;
        out.reserve(entries_.size());
        for (const auto& [k, v] : entries_) out.push_back({k, v});
        return out;
    }

    void clear() { entries_.clear(); }

    // Largest entry count that fits in capacity_bytes.
    std::size_t entry_capacity() const { return capacity_bytes_ / kEntrySize; }

  private:
    std::map<Key, Value> entries_;
    std::size_t capacity_bytes_;
};

}  // namespace llsm
