#include "foil/categories.hpp"

#include <stdexcept>

#include "foil/tokenize.hpp"
#include "foil/types.hpp"

namespace foil {
namespace {

struct CocoEntry {
  int source_id;
  const char* name;
  const char* super_category;
};

// The 80 MSCOCO object categories in original id order. source_id is the
// sparse id used by COCO annotation files.
constexpr CocoEntry kCoco[] = {
    {1, "person", "person"},
    {2, "bicycle", "vehicle"},
    {3, "car", "vehicle"},
    {4, "motorcycle", "vehicle"},
    {5, "airplane", "vehicle"},
    {6, "bus", "vehicle"},
    {7, "train", "vehicle"},
    {8, "truck", "vehicle"},
    {9, "boat", "vehicle"},
    {10, "traffic light", "outdoor"},
    {11, "fire hydrant", "outdoor"},
    {13, "stop sign", "outdoor"},
    {14, "parking meter", "outdoor"},
    {15, "bench", "outdoor"},
    {16, "bird", "animal"},
    {17, "cat", "animal"},
    {18, "dog", "animal"},
    {19, "horse", "animal"},
    {20, "sheep", "animal"},
    {21, "cow", "animal"},
    {22, "elephant", "animal"},
    {23, "bear", "animal"},
    {24, "zebra", "animal"},
    {25, "giraffe", "animal"},
    {27, "backpack", "accessory"},
    {28, "umbrella", "accessory"},
    {31, "handbag", "accessory"},
    {32, "tie", "accessory"},
    {33, "suitcase", "accessory"},
    {34, "frisbee", "sports"},
    {35, "skis", "sports"},
    {36, "snowboard", "sports"},
    {37, "sports ball", "sports"},
    {38, "kite", "sports"},
    {39, "baseball bat", "sports"},
    {40, "baseball glove", "sports"},
    {41, "skateboard", "sports"},
    {42, "surfboard", "sports"},
    {43, "tennis racket", "sports"},
    {44, "bottle", "kitchen"},
    {46, "wine glass", "kitchen"},
    {47, "cup", "kitchen"},
    {48, "fork", "kitchen"},
    {49, "knife", "kitchen"},
    {50, "spoon", "kitchen"},
    {51, "bowl", "kitchen"},
    {52, "banana", "food"},
    {53, "apple", "food"},
    {54, "sandwich", "food"},
    {55, "orange", "food"},
    {56, "broccoli", "food"},
    {57, "carrot", "food"},
    {58, "hot dog", "food"},
    {59, "pizza", "food"},
    {60, "donut", "food"},
    {61, "cake", "food"},
    {62, "chair", "furniture"},
    {63, "couch", "furniture"},
    {64, "potted plant", "furniture"},
    {65, "bed", "furniture"},
    {67, "dining table", "furniture"},
    {70, "toilet", "furniture"},
    {72, "tv", "electronic"},
    {73, "laptop", "electronic"},
    {74, "mouse", "electronic"},
    {75, "remote", "electronic"},
    {76, "keyboard", "electronic"},
    {77, "cell phone", "electronic"},
    {78, "microwave", "appliance"},
    {79, "oven", "appliance"},
    {80, "toaster", "appliance"},
    {81, "sink", "appliance"},
    {82, "refrigerator", "appliance"},
    {84, "book", "indoor"},
    {85, "clock", "indoor"},
    {86, "vase", "indoor"},
    {87, "scissors", "indoor"},
    {88, "teddy bear", "indoor"},
    {89, "hair drier", "indoor"},
    {90, "toothbrush", "indoor"},
};

}  // namespace

CategoryInventory::CategoryInventory(std::vector<ObjectCategory> categories)
    : categories_(std::move(categories)) {
  siblings_.resize(categories_.size());
  name_tokens_.resize(categories_.size());
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    const auto& cat = categories_[i];
    if (cat.id != static_cast<int>(i)) {
      throw DataError("category ids must be dense 0..n-1; got id " +
                      std::to_string(cat.id) + " at position " +
                      std::to_string(i));
    }
    if (!by_name_.emplace(cat.name, cat.id).second) {
      throw DataError("duplicate category name '" + cat.name + "'");
    }
    if (!by_source_.emplace(cat.source_id, cat.id).second) {
      throw DataError("duplicate category source id " +
                      std::to_string(cat.source_id));
    }
    name_tokens_[i] = tokenize(cat.name);
    if (name_tokens_[i].empty()) {
      throw DataError("category name '" + cat.name + "' has no tokens");
    }
    max_name_tokens_ = std::max(max_name_tokens_, name_tokens_[i].size());
  }
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    for (std::size_t j = 0; j < categories_.size(); ++j) {
      if (i != j &&
          categories_[i].super_category == categories_[j].super_category) {
        siblings_[i].push_back(static_cast<int>(j));
      }
    }
  }
}

const CategoryInventory& CategoryInventory::mscoco() {
  static const CategoryInventory inventory = [] {
    std::vector<ObjectCategory> cats;
    cats.reserve(std::size(kCoco));
    int dense = 0;
    for (const auto& entry : kCoco) {
      cats.push_back(
          {dense++, entry.name, entry.super_category, entry.source_id});
    }
    return CategoryInventory(std::move(cats));
  }();
  return inventory;
}

const ObjectCategory& CategoryInventory::at(int dense_id) const {
  if (dense_id < 0 || dense_id >= static_cast<int>(categories_.size())) {
    throw DataError("category id " + std::to_string(dense_id) +
                    " out of range (inventory size " +
                    std::to_string(categories_.size()) + ")");
  }
  return categories_[dense_id];
}

std::optional<int> CategoryInventory::id_by_name(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> CategoryInventory::id_by_source_id(int source_id) const {
  auto it = by_source_.find(source_id);
  if (it == by_source_.end()) return std::nullopt;
  return it->second;
}

const std::vector<int>& CategoryInventory::siblings(int dense_id) const {
  at(dense_id);
  return siblings_[dense_id];
}

const std::vector<std::string>& CategoryInventory::name_tokens(
    int dense_id) const {
  at(dense_id);
  return name_tokens_[dense_id];
}

}  // namespace foil
