#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lps/core.hpp"

namespace lps {

enum class ClassKind { thing, stuff, other };

std::string_view to_string(ClassKind k);

/// One mapping line from a vocabulary config. `name` is the fine-grained raw
/// class name; display names of vocabulary classes are derived from it.
struct VocabEntry {
  std::uint32_t raw_id = 0;
  std::uint32_t class_id = 0;
  ClassKind kind = ClassKind::other;
  std::string name;
};

// Config format, '#' starts a comment:
//   K = <number of known classes>
//   ignore = <raw ids dropped from evaluation and segmentation>
//   <raw_id> <class_id> <thing|stuff|other> <name>
// Class ids must cover 1..K+1 with K+1 reserved for the catch-all `other`
// class; `other` entries must map to K+1 and nothing else may.
class Vocabulary {
 public:
  static Vocabulary parse(std::string_view text, const std::string& origin);

  std::uint32_t num_known() const { return k_; }
  std::uint32_t other_class() const { return k_ + 1; }
  std::uint32_t num_classes() const { return k_ + 1; }  // known plus other

  ClassKind class_kind(std::uint32_t class_id) const;
  const std::string& class_name(std::uint32_t class_id) const;
  bool is_thing(std::uint32_t class_id) const { return class_kind(class_id) == ClassKind::thing; }
  bool is_stuff(std::uint32_t class_id) const { return class_kind(class_id) == ClassKind::stuff; }
  /// Instance-bearing classes: known things plus the other class.
  bool is_segmentable(std::uint32_t class_id) const {
    return class_id != kIgnoreClass && !is_stuff(class_id);
  }

  bool is_ignored_raw(std::uint32_t raw_id) const { return ignore_.count(raw_id) > 0; }
  /// Vocabulary class for a raw id; kIgnoreClass if ignored; throws
  /// mapping_error if the raw id is not covered at all.
  std::uint32_t map_raw(std::uint32_t raw_id) const;

  const std::vector<VocabEntry>& entries() const { return entries_; }
  const std::vector<std::uint32_t>& ignored_raw_ids() const { return ignore_sorted_; }

 private:
  std::uint32_t k_ = 0;
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::uint32_t, std::uint32_t> raw_to_class_;
  std::unordered_map<std::uint32_t, char> ignore_;
  std::vector<std::uint32_t> ignore_sorted_;
  std::vector<ClassKind> kind_by_class_;        // index 0 unused
  std::vector<std::string> name_by_class_;      // index 0 unused
};

Vocabulary load_vocabulary(const std::filesystem::path& path);

/// Bundled configs: "vocab1" (small known set) and "vocab2" (larger known
/// set), both over the public SemanticKITTI raw id space.
Vocabulary builtin_vocabulary(std::string_view name);

/// Raw labels -> vocabulary labels. Ignored raw ids become (0, 0); stuff
/// points lose their instance id; thing/other points keep it. A raw id that
/// is neither mapped nor ignored raises mapping_error listing the ids.
LabelMap remap_labels(const LabelMap& raw, const Vocabulary& vocab);

}  // namespace lps
