#ifndef FOIL_CATEGORIES_HPP
#define FOIL_CATEGORIES_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace foil {

/// One object category. `id` is dense (0..n-1); `source_id` is the id used
/// by the annotation files the inventory was read from (for the bundled
/// MSCOCO inventory these are the original sparse COCO ids).
struct ObjectCategory {
  int id = 0;
  std::string name;
  std::string super_category;
  int source_id = 0;

  bool operator==(const ObjectCategory&) const = default;
};

class CategoryInventory {
public:
  CategoryInventory() = default;
  explicit CategoryInventory(std::vector<ObjectCategory> categories);

  /// The standard 80-category MSCOCO inventory with its 12 super-categories.
  static const CategoryInventory& mscoco();

  std::size_t size() const { return categories_.size(); }
  const std::vector<ObjectCategory>& categories() const { return categories_; }
  const ObjectCategory& at(int dense_id) const;

  std::optional<int> id_by_name(const std::string& name) const;
  std::optional<int> id_by_source_id(int source_id) const;

  /// Dense ids of same-super-category categories, excluding `dense_id` itself.
  const std::vector<int>& siblings(int dense_id) const;

  /// Longest category-name token length (2 for MSCOCO: "traffic light").
  std::size_t max_name_tokens() const { return max_name_tokens_; }

  /// Name tokens of a category ("traffic light" -> {"traffic","light"}).
  const std::vector<std::string>& name_tokens(int dense_id) const;

  bool operator==(const CategoryInventory& other) const {
    return categories_ == other.categories_;
  }

private:
  std::vector<ObjectCategory> categories_;
  std::map<std::string, int> by_name_;
  std::map<int, int> by_source_;
  std::vector<std::vector<int>> siblings_;
  std::vector<std::vector<std::string>> name_tokens_;
  std::size_t max_name_tokens_ = 0;
};

}  // namespace foil

#endif
