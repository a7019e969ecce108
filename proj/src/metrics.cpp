#include "lps/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace lps {

namespace {

void check_pair(const PanopticPrediction& pred, const LabelMap& gt) {
  if (pred.space != LabelSpace::vocab || gt.space != LabelSpace::vocab) {
    throw std::invalid_argument("evaluation inputs must be in vocabulary space");
  }
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("prediction and ground truth differ in point count");
  }
}

struct ClassSegments {
  std::vector<std::uint32_t> ids;
  std::vector<std::vector<int>> pts;
};

// Segments of one class, restricted to kept points. Thing/other classes
// contribute one segment per instance id > 0; stuff contributes a single
// region carrying id 0. Order is ascending by id, so downstream counts are
// deterministic.
ClassSegments collect_segments(const LabelMap& lm, std::uint32_t class_id, const Vocabulary& vocab,
                               const std::vector<char>& keep) {
  ClassSegments out;
  if (vocab.is_stuff(class_id)) {
    std::vector<int> region;
    for (std::size_t i = 0; i < lm.size(); ++i) {
      if (keep[i] && lm.semantic[i] == class_id) region.push_back(static_cast<int>(i));
    }
    if (!region.empty()) {
      out.ids.push_back(0);
      out.pts.push_back(std::move(region));
    }
    return out;
  }
  std::map<std::uint32_t, std::vector<int>> by_id;
  for (std::size_t i = 0; i < lm.size(); ++i) {
    if (keep[i] && lm.semantic[i] == class_id && lm.instance[i] > 0) {
      by_id[lm.instance[i]].push_back(static_cast<int>(i));
    }
  }
  for (auto& [id, pts] : by_id) {
    out.ids.push_back(id);
    out.pts.push_back(std::move(pts));
  }
  return out;
}

// IoU > 0.5 matching between two segment families over the same point space.
MatchSet match_segments(const ClassSegments& pred, const ClassSegments& gt, std::size_t n) {
  MatchSet m;
  std::vector<int> pred_of(n, -1);
  for (std::size_t s = 0; s < pred.pts.size(); ++s) {
    for (int i : pred.pts[s]) pred_of[static_cast<std::size_t>(i)] = static_cast<int>(s);
  }

  std::vector<char> pred_matched(pred.pts.size(), 0);
  for (std::size_t g = 0; g < gt.pts.size(); ++g) {
    std::map<int, std::int64_t> overlap;
    for (int i : gt.pts[g]) {
      const int p = pred_of[static_cast<std::size_t>(i)];
      if (p >= 0) overlap[p]++;
    }
    bool matched = false;
    for (const auto& [p, inter] : overlap) {
      const double uni = static_cast<double>(pred.pts[static_cast<std::size_t>(p)].size()) +
                         static_cast<double>(gt.pts[g].size()) - static_cast<double>(inter);
      const double iou = static_cast<double>(inter) / uni;
      if (iou > 0.5) {
        m.tp.push_back({pred.ids[static_cast<std::size_t>(p)], gt.ids[g], iou});
        m.iou_sum += iou;
        pred_matched[static_cast<std::size_t>(p)] = 1;
        matched = true;
        break;  // IoU > 0.5 admits at most one partner
      }
    }
    if (!matched) m.fn++;
  }
  for (char c : pred_matched) {
    if (!c) m.fp++;
  }
  return m;
}

std::vector<char> keep_mask(const LabelMap& gt) {
  std::vector<char> keep(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) keep[i] = gt.semantic[i] != kIgnoreClass;
  return keep;
}

}  // namespace

ClassCounts to_counts(const MatchSet& m) {
  return {static_cast<std::int64_t>(m.tp.size()), m.fp, m.fn, m.iou_sum};
}

MatchSet match_instances(const PanopticPrediction& pred, const LabelMap& gt,
                         std::uint32_t class_id, const Vocabulary& vocab) {
  check_pair(pred, gt);
  if (class_id == kIgnoreClass || class_id > vocab.other_class()) {
    throw std::invalid_argument("match_instances: class id out of range");
  }
  const std::vector<char> keep = keep_mask(gt);
  const ClassSegments p = collect_segments(pred, class_id, vocab, keep);
  const ClassSegments g = collect_segments(gt, class_id, vocab, keep);
  return match_segments(p, g, gt.size());
}

PqStats pq_sq_rq(const MatchSet& m) { return pq_sq_rq(to_counts(m)); }

PqStats pq_sq_rq(const ClassCounts& c) {
  PqStats s;
  if (c.tp > 0) s.sq = c.iou_sum / static_cast<double>(c.tp);
  const double denom = static_cast<double>(c.tp) + 0.5 * static_cast<double>(c.fp) +
                       0.5 * static_cast<double>(c.fn);
  if (denom > 0.0) s.rq = static_cast<double>(c.tp) / denom;
  s.pq = s.sq * s.rq;
  return s;
}

UnknownStats unknown_quality(const PanopticPrediction& pred, const LabelMap& gt,
                             const Vocabulary& vocab) {
  check_pair(pred, gt);
  const std::vector<char> keep = keep_mask(gt);
  const ClassSegments p = collect_segments(pred, vocab.other_class(), vocab, keep);
  const ClassSegments g = collect_segments(gt, vocab.other_class(), vocab, keep);
  const MatchSet m = match_segments(p, g, gt.size());

  UnknownStats u;
  u.tp = static_cast<std::int64_t>(m.tp.size());
  u.fn = m.fn;
  u.iou_sum = m.iou_sum;
  if (u.tp > 0) {
    u.sq = u.iou_sum / static_cast<double>(u.tp);
    u.recall = static_cast<double>(u.tp) / static_cast<double>(u.tp + u.fn);
  }
  u.uq = u.sq * u.recall;
  return u;
}

IouStats miou(const PanopticPrediction& pred, const LabelMap& gt, const Vocabulary& vocab) {
  check_pair(pred, gt);
  const std::uint32_t top = vocab.other_class();
  IouStats s;
  s.inter.assign(top + 1, 0);
  s.pred_pts.assign(top + 1, 0);
  s.gt_pts.assign(top + 1, 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const std::uint32_t g = gt.semantic[i];
    if (g == kIgnoreClass) continue;
    const std::uint32_t p = pred.semantic[i];
    if (g > top) throw mapping_error("miou: ground-truth class " + std::to_string(g) + " out of range");
    if (p > top) throw mapping_error("miou: predicted class " + std::to_string(p) + " out of range");
    s.gt_pts[g]++;
    if (p != kIgnoreClass) s.pred_pts[p]++;
    if (p == g) s.inter[g]++;
  }
  double sum = 0.0;
  int present = 0;
  for (std::uint32_t c = 1; c <= top; ++c) {
    if (s.gt_pts[c] > 0) {
      sum += s.class_iou(c);
      ++present;
    }
  }
  s.miou = present > 0 ? sum / present : 0.0;
  return s;
}

PrStats instance_pr(std::span<const MatchSet> thing_matches) {
  ClassCounts pooled;
  for (const MatchSet& m : thing_matches) {
    pooled.tp += static_cast<std::int64_t>(m.tp.size());
    pooled.fp += m.fp;
    pooled.fn += m.fn;
  }
  return instance_pr(pooled);
}

PrStats instance_pr(const ClassCounts& pooled) {
  PrStats s;
  if (pooled.tp + pooled.fp > 0) {
    s.precision = static_cast<double>(pooled.tp) / static_cast<double>(pooled.tp + pooled.fp);
    s.precision_defined = true;
  }
  if (pooled.tp + pooled.fn > 0) {
    s.recall = static_cast<double>(pooled.tp) / static_cast<double>(pooled.tp + pooled.fn);
    s.recall_defined = true;
  }
  return s;
}

ExtendedConfusion extended_confusion(const PanopticPrediction& pred, const LabelMap& gt,
                                     const Vocabulary& vocab) {
  if (pred.space != LabelSpace::vocab) {
    throw std::invalid_argument("extended_confusion: prediction must be in vocabulary space");
  }
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("extended_confusion: point count mismatch");
  }
  const std::uint32_t K = vocab.num_known();

  ExtendedConfusion c;
  for (std::uint32_t cls = 1; cls <= K + 1; ++cls) c.row_names.push_back(vocab.class_name(cls));
  for (std::uint32_t cls = 1; cls <= K; ++cls) c.col_names.push_back(vocab.class_name(cls));

  // Fine columns for the catch-all class in config order; raw ids sharing a
  // name (moving/static variants) share a column.
  std::map<std::uint32_t, std::size_t> fine_col;  // raw id -> column
  if (gt.space == LabelSpace::raw) {
    std::map<std::string, std::size_t> by_name;
    for (const VocabEntry& e : vocab.entries()) {
      if (e.class_id != vocab.other_class()) continue;
      auto it = by_name.find(e.name);
      if (it == by_name.end()) {
        it = by_name.emplace(e.name, c.col_names.size()).first;
        c.col_names.push_back(e.name);
      }
      fine_col[e.raw_id] = it->second;
    }
  } else {
    c.col_names.push_back(vocab.class_name(vocab.other_class()));
  }

  c.counts.assign(c.row_names.size() * c.col_names.size(), 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    std::size_t col;
    if (gt.space == LabelSpace::raw) {
      const std::uint32_t raw = gt.semantic[i];
      if (vocab.is_ignored_raw(raw)) continue;
      const std::uint32_t cls = vocab.map_raw(raw);  // throws on uncovered ids
      col = cls <= K ? cls - 1 : fine_col.at(raw);
    } else {
      const std::uint32_t cls = gt.semantic[i];
      if (cls == kIgnoreClass) continue;
      if (cls > K + 1) throw mapping_error("extended_confusion: ground-truth class out of range");
      col = cls - 1;
    }
    const std::uint32_t p = pred.semantic[i];
    if (p == kIgnoreClass) continue;
    if (p > K + 1) throw mapping_error("extended_confusion: predicted class out of range");
    c.counts[(p - 1) * c.col_names.size() + col]++;
  }
  return c;
}

ScanStats evaluate_scan(const PanopticPrediction& pred, const LabelMap& gt,
                        const LabelMap& gt_fine, const Vocabulary& vocab) {
  check_pair(pred, gt);
  ScanStats s;
  s.num_classes = vocab.num_classes();
  s.per_class.assign(vocab.other_class() + 1, {});
  for (std::uint32_t c = 1; c <= vocab.num_known(); ++c) {
    s.per_class[c] = to_counts(match_instances(pred, gt, c, vocab));
  }
  const UnknownStats u = unknown_quality(pred, gt, vocab);
  s.unknown = {u.tp, 0, u.fn, u.iou_sum};

  const IouStats iou = miou(pred, gt, vocab);
  s.inter = iou.inter;
  s.pred_pts = iou.pred_pts;
  s.gt_pts = iou.gt_pts;

  s.confusion = extended_confusion(pred, gt_fine, vocab);
  return s;
}

EvalReport aggregate_report(std::span<const ScanStats> stats, const Vocabulary& vocab) {
  const std::uint32_t K = vocab.num_known();
  ScanStats total;
  total.num_classes = vocab.num_classes();
  total.per_class.assign(vocab.other_class() + 1, {});
  total.inter.assign(vocab.other_class() + 1, 0);
  total.pred_pts.assign(vocab.other_class() + 1, 0);
  total.gt_pts.assign(vocab.other_class() + 1, 0);

  for (const ScanStats& s : stats) {
    if (s.num_classes != total.num_classes || s.per_class.size() != total.per_class.size()) {
      throw config_error("aggregate_report: scans were evaluated under different vocabularies");
    }
    for (std::size_t c = 0; c < total.per_class.size(); ++c) {
      total.per_class[c].tp += s.per_class[c].tp;
      total.per_class[c].fp += s.per_class[c].fp;
      total.per_class[c].fn += s.per_class[c].fn;
      total.per_class[c].iou_sum += s.per_class[c].iou_sum;
    }
    total.unknown.tp += s.unknown.tp;
    total.unknown.fn += s.unknown.fn;
    total.unknown.iou_sum += s.unknown.iou_sum;
    for (std::size_t c = 0; c < total.inter.size(); ++c) {
      total.inter[c] += s.inter[c];
      total.pred_pts[c] += s.pred_pts[c];
      total.gt_pts[c] += s.gt_pts[c];
    }
    if (total.confusion.counts.empty()) {
      total.confusion = s.confusion;
    } else {
      if (s.confusion.col_names != total.confusion.col_names ||
          s.confusion.row_names != total.confusion.row_names) {
        throw config_error("aggregate_report: confusion layouts disagree across scans");
      }
      for (std::size_t i = 0; i < total.confusion.counts.size(); ++i) {
        total.confusion.counts[i] += s.confusion.counts[i];
      }
    }
  }

  EvalReport r;
  r.num_known = K;
  r.scans = static_cast<std::int64_t>(stats.size());
  r.confusion = std::move(total.confusion);
  if (r.confusion.row_names.empty()) {
    // No scans: keep a well-formed empty layout.
    for (std::uint32_t c = 1; c <= K + 1; ++c) r.confusion.row_names.push_back(vocab.class_name(c));
    for (std::uint32_t c = 1; c <= K; ++c) r.confusion.col_names.push_back(vocab.class_name(c));
    r.confusion.col_names.push_back(vocab.class_name(vocab.other_class()));
    r.confusion.counts.assign(r.confusion.row_names.size() * r.confusion.col_names.size(), 0);
  }

  IouStats iou;
  iou.inter = total.inter;
  iou.pred_pts = total.pred_pts;
  iou.gt_pts = total.gt_pts;

  double pq_sum = 0, sq_sum = 0, rq_sum = 0;
  int present = 0;
  double pq_things_sum = 0, pq_stuff_sum = 0;
  int things_present = 0, stuff_present = 0;
  ClassCounts things_pool;
  for (std::uint32_t c = 1; c <= K; ++c) {
    const ClassCounts& counts = total.per_class[c];
    ClassReport cr;
    cr.id = c;
    cr.name = vocab.class_name(c);
    cr.kind = vocab.class_kind(c);
    cr.tp = counts.tp;
    cr.fp = counts.fp;
    cr.fn = counts.fn;
    cr.present = counts.tp + counts.fp + counts.fn > 0;
    const PqStats pq = pq_sq_rq(counts);
    cr.pq = pq.pq;
    cr.sq = pq.sq;
    cr.rq = pq.rq;
    cr.iou_defined = total.gt_pts[c] > 0;
    cr.iou = iou.class_iou(c);
    if (cr.present) {
      pq_sum += pq.pq;
      sq_sum += pq.sq;
      rq_sum += pq.rq;
      ++present;
      if (cr.kind == ClassKind::thing) {
        pq_things_sum += pq.pq;
        ++things_present;
      } else {
        pq_stuff_sum += pq.pq;
        ++stuff_present;
      }
    }
    if (cr.kind == ClassKind::thing) {
      things_pool.tp += counts.tp;
      things_pool.fp += counts.fp;
      things_pool.fn += counts.fn;
    }
    r.per_class.push_back(std::move(cr));
  }
  if (present > 0) {
    r.pq = pq_sum / present;
    r.sq = sq_sum / present;
    r.rq = rq_sum / present;
  }
  if (things_present > 0) r.pq_things = pq_things_sum / things_present;
  if (stuff_present > 0) r.pq_stuff = pq_stuff_sum / stuff_present;
  r.things_pr = instance_pr(things_pool);

  double miou_sum = 0;
  int miou_present = 0;
  for (std::uint32_t c = 1; c <= K + 1; ++c) {
    if (total.gt_pts[c] > 0) {
      miou_sum += iou.class_iou(c);
      ++miou_present;
    }
  }
  r.miou = miou_present > 0 ? miou_sum / miou_present : 0.0;

  r.unknown.tp = total.unknown.tp;
  r.unknown.fn = total.unknown.fn;
  if (total.unknown.tp > 0) {
    r.unknown.sq = total.unknown.iou_sum / static_cast<double>(total.unknown.tp);
    r.unknown.recall = static_cast<double>(total.unknown.tp) /
                       static_cast<double>(total.unknown.tp + total.unknown.fn);
  }
  r.unknown.uq = r.unknown.sq * r.unknown.recall;
  r.unknown.iou_defined = total.gt_pts[vocab.other_class()] > 0;
  r.unknown.iou = iou.class_iou(vocab.other_class());
  return r;
}

std::string render_report_json(const EvalReport& r) {
  using json = nlohmann::ordered_json;
  json j;
  j["scans"] = r.scans;
  j["num_known_classes"] = r.num_known;

  json classes = json::array();
  for (const ClassReport& c : r.per_class) {
    json jc;
    jc["id"] = c.id;
    jc["name"] = c.name;
    jc["kind"] = std::string(to_string(c.kind));
    jc["present"] = c.present;
    jc["pq"] = c.pq;
    jc["sq"] = c.sq;
    jc["rq"] = c.rq;
    jc["iou"] = c.iou_defined ? json(c.iou) : json(nullptr);
    jc["tp"] = c.tp;
    jc["fp"] = c.fp;
    jc["fn"] = c.fn;
    classes.push_back(std::move(jc));
  }
  j["classes"] = std::move(classes);

  json agg;
  agg["pq"] = r.pq;
  agg["pq_things"] = r.pq_things;
  agg["pq_stuff"] = r.pq_stuff;
  agg["sq"] = r.sq;
  agg["rq"] = r.rq;
  agg["miou"] = r.miou;
  agg["precision_things"] = r.things_pr.precision;
  agg["precision_defined"] = r.things_pr.precision_defined;
  agg["recall_things"] = r.things_pr.recall;
  agg["recall_defined"] = r.things_pr.recall_defined;
  j["aggregates"] = std::move(agg);

  json unk;
  unk["uq"] = r.unknown.uq;
  unk["recall"] = r.unknown.recall;
  unk["sq"] = r.unknown.sq;
  unk["iou"] = r.unknown.iou_defined ? json(r.unknown.iou) : json(nullptr);
  unk["tp"] = r.unknown.tp;
  unk["fn"] = r.unknown.fn;
  j["unknown"] = std::move(unk);

  json conf;
  conf["rows"] = r.confusion.row_names;
  conf["cols"] = r.confusion.col_names;
  json rows = json::array();
  for (std::size_t row = 0; row < r.confusion.row_names.size(); ++row) {
    json one = json::array();
    for (std::size_t col = 0; col < r.confusion.col_names.size(); ++col) {
      one.push_back(r.confusion.at(row, col));
    }
    rows.push_back(std::move(one));
  }
  conf["counts"] = std::move(rows);
  j["confusion"] = std::move(conf);

  return j.dump(2) + "\n";
}

std::string render_report_text(const EvalReport& r) {
  std::string out;
  char buf[256];
  auto emit = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof(buf), fmt, args...);
    out += buf;
  };

  emit("scans: %lld\n\n", static_cast<long long>(r.scans));
  emit("%-4s %-16s %-6s %8s %8s %8s %8s %7s %7s %7s\n", "id", "class", "kind", "PQ", "SQ", "RQ",
       "IoU", "TP", "FP", "FN");
  for (const ClassReport& c : r.per_class) {
    char iou[16];
    if (c.iou_defined) {
      std::snprintf(iou, sizeof(iou), "%8.4f", c.iou);
    } else {
      std::snprintf(iou, sizeof(iou), "%8s", "-");
    }
    emit("%-4u %-16s %-6s %8.4f %8.4f %8.4f %s %7lld %7lld %7lld\n", c.id, c.name.c_str(),
         std::string(to_string(c.kind)).c_str(), c.pq, c.sq, c.rq, iou,
         static_cast<long long>(c.tp), static_cast<long long>(c.fp),
         static_cast<long long>(c.fn));
  }
  out += "\n";
  emit("PQ %.4f  PQ_things %.4f  PQ_stuff %.4f  SQ %.4f  RQ %.4f  mIoU %.4f\n", r.pq, r.pq_things,
       r.pq_stuff, r.sq, r.rq, r.miou);
  emit("things precision %.4f%s  recall %.4f%s\n", r.things_pr.precision,
       r.things_pr.precision_defined ? "" : " (undefined)", r.things_pr.recall,
       r.things_pr.recall_defined ? "" : " (undefined)");
  if (r.unknown.iou_defined) {
    emit("unknown UQ %.4f  recall %.4f  SQ %.4f  IoU %.4f  TP %lld  FN %lld\n", r.unknown.uq,
         r.unknown.recall, r.unknown.sq, r.unknown.iou, static_cast<long long>(r.unknown.tp),
         static_cast<long long>(r.unknown.fn));
  } else {
    emit("unknown UQ %.4f  recall %.4f  SQ %.4f  IoU -  TP %lld  FN %lld\n", r.unknown.uq,
         r.unknown.recall, r.unknown.sq, static_cast<long long>(r.unknown.tp),
         static_cast<long long>(r.unknown.fn));
  }

  out += "\nconfusion (rows predicted, cols ground truth)\n";
  emit("%-16s", "");
  for (const std::string& c : r.confusion.col_names) emit(" %12s", c.c_str());
  out += "\n";
  for (std::size_t row = 0; row < r.confusion.row_names.size(); ++row) {
    emit("%-16s", r.confusion.row_names[row].c_str());
    for (std::size_t col = 0; col < r.confusion.col_names.size(); ++col) {
      emit(" %12lld", static_cast<long long>(r.confusion.at(row, col)));
    }
    out += "\n";
  }
  return out;
}

}  // namespace lps
