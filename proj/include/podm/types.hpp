#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "podm/errors.hpp"

namespace podm {

enum class EventKind : std::int64_t { kClick = 1, kAddCart = 2, kQuery = 3 };

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::kClick: return "click";
    case EventKind::kAddCart: return "add_cart";
    case EventKind::kQuery: return "query";
  }
  return "?";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
  if (s == "click") return EventKind::kClick;
  if (s == "add_cart") return EventKind::kAddCart;
  if (s == "query") return EventKind::kQuery;
  return std::nullopt;
}

// One step of a user's behavior flow. Item events carry item_id, query
// events carry query_id; 0 means "none" for every id field.
struct BehaviorEvent {
  EventKind kind = EventKind::kClick;
  std::int64_t item_id = 0;
  std::int64_t query_id = 0;
  std::int64_t brand_id = 0;
  std::int64_t shop_id = 0;
  std::int64_t position = 0;

  friend bool operator==(const BehaviorEvent&, const BehaviorEvent&) = default;
};

struct CandidateItem {
  std::int64_t item_id = 0;
  std::int64_t brand_id = 0;
  std::int64_t shop_id = 0;
  std::vector<double> relevance_features;

  friend bool operator==(const CandidateItem&, const CandidateItem&) = default;
};

struct SessionRecord {
  std::string session_id;
  std::string user_id;
  std::optional<double> intent_d;  // synthetic ground truth only
  std::vector<BehaviorEvent> history;
  std::vector<CandidateItem> candidates;
  std::vector<int> labels;  // purchase labels z, one per candidate

  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

struct CatalogItem {
  std::int64_t item_id = 0;
  std::int64_t brand_id = 0;
  std::int64_t shop_id = 0;
  double quality = 0.0;

  friend bool operator==(const CatalogItem&, const CatalogItem&) = default;
};

// Table sizes including the reserved id 0.
struct VocabSizes {
  std::size_t items = 1;
  std::size_t brands = 1;
  std::size_t shops = 1;
  std::size_t queries = 1;

  friend bool operator==(const VocabSizes&, const VocabSizes&) = default;
};

}  // namespace podm
