#include "lps/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace lps {

std::string_view to_string(ClassKind k) {
  switch (k) {
    case ClassKind::thing: return "thing";
    case ClassKind::stuff: return "stuff";
    case ClassKind::other: return "other";
  }
  return "?";
}

namespace {

ClassKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "thing") return ClassKind::thing;
  if (s == "stuff") return ClassKind::stuff;
  if (s == "other") return ClassKind::other;
  throw config_error(where + ": unknown kind '" + s + "'");
}

bool parse_u32(const std::string& s, std::uint32_t& out) {
  if (s.empty()) return false;
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
    if (v > 0xffffffffull) return false;
  }
  out = static_cast<std::uint32_t>(v);
  return true;
}

}  // namespace

Vocabulary Vocabulary::parse(std::string_view text, const std::string& origin) {
  Vocabulary v;
  bool have_k = false;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<std::string> tok;
    std::string t;
    while (ss >> t) tok.push_back(t);
    if (tok.empty()) continue;

    if (tok[0] == "K" || tok[0] == "ignore") {
      if (tok.size() < 2 || tok[1] != "=") throw config_error(where + ": expected '='");
      if (tok[0] == "K") {
        if (have_k) throw config_error(where + ": duplicate K header");
        if (tok.size() != 3 || !parse_u32(tok[2], v.k_) )
          throw config_error(where + ": bad K value");
        have_k = true;
      } else {
        for (std::size_t i = 2; i < tok.size(); ++i) {
          std::uint32_t id;
          if (!parse_u32(tok[i], id)) throw config_error(where + ": bad ignore id '" + tok[i] + "'");
          if (!v.ignore_.emplace(id, 1).second)
            throw config_error(where + ": duplicate ignore id " + tok[i]);
        }
      }
      continue;
    }

    if (tok.size() != 4) throw config_error(where + ": expected 'raw class kind name'");
    VocabEntry e;
    if (!parse_u32(tok[0], e.raw_id)) throw config_error(where + ": bad raw id '" + tok[0] + "'");
    if (!parse_u32(tok[1], e.class_id) || e.class_id == 0)
      throw config_error(where + ": bad class id '" + tok[1] + "'");
    e.kind = parse_kind(tok[2], where);
    e.name = tok[3];
    if (v.raw_to_class_.count(e.raw_id) || v.ignore_.count(e.raw_id))
      throw config_error(where + ": duplicate raw id " + tok[0]);
    v.raw_to_class_.emplace(e.raw_id, e.class_id);
    v.entries_.push_back(std::move(e));
  }

  if (!have_k) throw config_error(origin + ": missing 'K =' header");
  const std::uint32_t other = v.k_ + 1;

  v.kind_by_class_.assign(other + 1, ClassKind::other);
  v.name_by_class_.assign(other + 1, std::string());
  std::vector<char> seen(other + 1, 0);
  for (const VocabEntry& e : v.entries_) {
    if (e.class_id > other)
      throw config_error(origin + ": class id " + std::to_string(e.class_id) + " exceeds K+1");
    if ((e.kind == ClassKind::other) != (e.class_id == other))
      throw config_error(origin + ": kind 'other' is exactly the class id " + std::to_string(other) +
                         " (raw id " + std::to_string(e.raw_id) + ")");
    if (!seen[e.class_id]) {
      seen[e.class_id] = 1;
      v.kind_by_class_[e.class_id] = e.kind;
      v.name_by_class_[e.class_id] = e.class_id == other ? "other" : e.name;
    } else if (v.kind_by_class_[e.class_id] != e.kind) {
      throw config_error(origin + ": class " + std::to_string(e.class_id) +
                         " mixes kinds across entries");
    }
  }
  for (std::uint32_t c = 1; c <= other; ++c) {
    if (!seen[c])
      throw config_error(origin + ": class id " + std::to_string(c) +
                         " missing; ids must cover 1..K+1");
  }

  v.ignore_sorted_.reserve(v.ignore_.size());
  for (const auto& [id, _] : v.ignore_) v.ignore_sorted_.push_back(id);
  std::sort(v.ignore_sorted_.begin(), v.ignore_sorted_.end());
  return v;
}

ClassKind Vocabulary::class_kind(std::uint32_t class_id) const {
  if (class_id == 0 || class_id >= kind_by_class_.size())
    throw std::out_of_range("class_kind: class id " + std::to_string(class_id));
  return kind_by_class_[class_id];
}

const std::string& Vocabulary::class_name(std::uint32_t class_id) const {
  if (class_id == 0 || class_id >= name_by_class_.size())
    throw std::out_of_range("class_name: class id " + std::to_string(class_id));
  return name_by_class_[class_id];
}

std::uint32_t Vocabulary::map_raw(std::uint32_t raw_id) const {
  if (ignore_.count(raw_id)) return kIgnoreClass;
  auto it = raw_to_class_.find(raw_id);
  if (it == raw_to_class_.end())
    throw mapping_error("raw id " + std::to_string(raw_id) + " is not covered by the vocabulary");
  return it->second;
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open vocabulary " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return Vocabulary::parse(ss.str(), path.string());
}

namespace {

// SemanticKITTI raw id space. Moving variants fold into their static class,
// lane-marking into road, bus and on-rails into the other-vehicle bucket.
constexpr const char* kVocab1 = R"(# small known set, everything else is `other`
K = 9
ignore = 0 1

10  1 thing car
252 1 thing car
18  2 thing truck
258 2 thing truck
30  3 thing human
31  3 thing human
32  3 thing human
253 3 thing human
254 3 thing human
255 3 thing human

40  4 stuff road
60  4 stuff road
48  5 stuff sidewalk
51  6 stuff fence
70  7 stuff vegetation
72  8 stuff terrain
50  9 stuff building

11  10 other bicycle
15  10 other motorcycle
13  10 other other-vehicle
16  10 other other-vehicle
20  10 other other-vehicle
257 10 other other-vehicle
256 10 other other-vehicle
259 10 other other-vehicle
44  10 other parking
49  10 other other-ground
52  10 other other-structure
71  10 other trunk
80  10 other pole
81  10 other traffic-sign
99  10 other other-object
)";

constexpr const char* kVocab2 = R"(# larger known set
K = 15
ignore = 0 1

10  1 thing car
252 1 thing car
11  2 thing bicycle
15  3 thing motorcycle
18  4 thing truck
258 4 thing truck
30  5 thing human
31  5 thing human
32  5 thing human
253 5 thing human
254 5 thing human
255 5 thing human
71  6 stuff trunk
80  7 stuff pole
81  8 stuff traffic-sign

40  9 stuff road
60  9 stuff road
48  10 stuff sidewalk
51  11 stuff fence
70  12 stuff vegetation
72  13 stuff terrain
44  14 stuff parking
50  15 stuff building

13  16 other other-vehicle
16  16 other other-vehicle
20  16 other other-vehicle
256 16 other other-vehicle
257 16 other other-vehicle
259 16 other other-vehicle
49  16 other other-ground
52  16 other other-structure
99  16 other other-object
)";

}  // namespace

Vocabulary builtin_vocabulary(std::string_view name) {
  if (name == "vocab1") return Vocabulary::parse(kVocab1, "builtin:vocab1");
  if (name == "vocab2") return Vocabulary::parse(kVocab2, "builtin:vocab2");
  throw config_error("unknown builtin vocabulary '" + std::string(name) + "'");
}

LabelMap remap_labels(const LabelMap& raw, const Vocabulary& vocab) {
  if (raw.space != LabelSpace::raw)
    throw std::invalid_argument("remap_labels: input is already in vocabulary space");
  if (raw.semantic.size() != raw.instance.size())
    throw std::invalid_argument("remap_labels: semantic/instance length mismatch");
  LabelMap out;
  out.space = LabelSpace::vocab;
  const std::size_t n = raw.size();
  out.semantic.resize(n);
  out.instance.resize(n);
  std::set<std::uint32_t> missing;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t r = raw.semantic[i];
    if (vocab.is_ignored_raw(r)) {
      out.semantic[i] = kIgnoreClass;
      out.instance[i] = 0;
      continue;
    }
    std::uint32_t c;
    try {
      c = vocab.map_raw(r);
    } catch (const mapping_error&) {
      missing.insert(r);
      continue;
    }
    out.semantic[i] = c;
    out.instance[i] = vocab.is_stuff(c) ? 0 : raw.instance[i];
  }
  if (!missing.empty()) {
    std::string ids;
    for (std::uint32_t id : missing) ids += (ids.empty() ? "" : ", ") + std::to_string(id);
    throw mapping_error("raw ids not covered by the vocabulary: " + ids);
  }
  return out;
}

}  // namespace lps
