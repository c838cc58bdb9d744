#pragma once

// Versioned JSON documents for single classifiers and cascades. Doubles are
// written in shortest round-trip form, so a save/load cycle is lossless.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oslda/cascade.hpp"
#include "oslda/error.hpp"
#include "oslda/online.hpp"

namespace oslda {

inline constexpr const char* kModelFormat = "oslda-model";
inline constexpr const char* kCascadeFormat = "oslda-cascade";
inline constexpr int kFormatVersion = 1;

using json = nlohmann::json;

namespace detail {

inline json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vec vec_from(const json& j, Eigen::Index n, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
    throw ParseError(std::string(what) + ": expected " + std::to_string(n) + " entries");
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

inline SymMat mat_from(const json& j, Eigen::Index n, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
    throw ParseError(std::string(what) + ": expected " + std::to_string(n) + " rows");
  SymMat m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) m.row(r) = vec_from(j.at(static_cast<std::size_t>(r)), n, what).transpose();
  return m;
}

inline void check_header(const json& doc, const char* format) {
  if (!doc.is_object() || !doc.contains("format") || !doc.contains("version"))
    throw ParseError("document lacks format/version fields");
  if (doc.at("format").get<std::string>() != format)
    throw ParseError("expected a '" + std::string(format) + "' document, got '" +
                     doc.at("format").get<std::string>() + "'");
  const int v = doc.at("version").get<int>();
  if (v != kFormatVersion)
    throw VersionMismatch("document version " + std::to_string(v) + ", supported " +
                          std::to_string(kFormatVersion));
}

template <class Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error&) {
    throw;
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
}

}  // namespace detail

inline json state_to_json(const ScatterState& s) {
  return {{"n1", s.n1},
          {"n2", s.n2},
          {"m1", detail::to_json(s.m1)},
          {"m2", detail::to_json(s.m2)},
          {"sigma1", detail::to_json(s.sigma1)},
          {"sigma2", detail::to_json(s.sigma2)},
          {"sb", detail::to_json(s.sb)},
          {"sw_inv", detail::to_json(s.sw_inv)},
          {"ridge", s.ridge},
          {"updates_since_refresh", s.updates_since_refresh}};
}

inline ScatterState state_from_json(const json& j, Eigen::Index dim) {
  ScatterState s;
  s.n1 = j.at("n1").get<std::size_t>();
  s.n2 = j.at("n2").get<std::size_t>();
  s.m1 = detail::vec_from(j.at("m1"), dim, "m1");
  s.m2 = detail::vec_from(j.at("m2"), dim, "m2");
  s.sigma1 = detail::mat_from(j.at("sigma1"), dim, "sigma1");
  s.sigma2 = detail::mat_from(j.at("sigma2"), dim, "sigma2");
  s.sb = detail::mat_from(j.at("sb"), dim, "sb");
  s.sw_inv = detail::mat_from(j.at("sw_inv"), dim, "sw_inv");
  s.ridge = j.at("ridge").get<double>();
  s.updates_since_refresh = j.at("updates_since_refresh").get<std::size_t>();
  return s;
}

/// Classifier body: selected ids, stumps, w, w0, criterion, state, counters.
inline json classifier_to_json(const OnlineClassifier& c) {
  json stumps = json::array();
  for (const auto& s : c.stumps())
    stumps.push_back({{"feature", s.feature}, {"threshold", s.threshold}, {"polarity", s.polarity}});
  return {{"criterion", c.criterion().to_string()},
          {"selected", c.model().selected},
          {"stumps", stumps},
          {"w", detail::to_json(c.model().w)},
          {"w0", c.model().w0},
          {"state", state_to_json(c.state())},
          {"counters",
           {{"inserts", c.insert_count()},
            {"direct_inversions", c.direct_inversions()},
            {"threshold_fallbacks", c.threshold_fallbacks()},
            {"refresh_interval", c.refresh_interval()}}}};
}

inline OnlineClassifier classifier_from_json(const json& j) {
  return detail::guarded([&] {
    LinearModel m;
    m.selected = j.at("selected").get<std::vector<std::size_t>>();
    const auto dim = static_cast<Eigen::Index>(m.selected.size());
    std::vector<Stump> stumps;
    for (const auto& s : j.at("stumps")) {
      const int pol = s.at("polarity").get<int>();
      if (pol != 1 && pol != -1) throw ParseError("stump polarity must be +1 or -1");
      stumps.push_back({s.at("feature").get<std::size_t>(), s.at("threshold").get<double>(), pol});
    }
    if (static_cast<Eigen::Index>(stumps.size()) != dim) throw ParseError("stump count differs from selection");
    m.w = detail::vec_from(j.at("w"), dim, "w");
    m.w0 = j.at("w0").get<double>();
    Criterion crit;
    try {
      crit = Criterion::parse(j.at("criterion").get<std::string>());
    } catch (const ConfigError& e) {
      throw ParseError(e.what());
    }
    OnlineClassifier c(std::move(stumps), std::move(m), state_from_json(j.at("state"), dim), crit);
    const auto& k = j.at("counters");
    c.restore_counters(k.at("inserts").get<std::size_t>(), k.at("direct_inversions").get<std::size_t>(),
                       k.at("threshold_fallbacks").get<std::size_t>());
    c.set_refresh_interval(k.at("refresh_interval").get<std::size_t>());
    return c;
  });
}

/// Extra fields describing the feature space (raw columns or a Haar pool).
struct FeatureSpace {
  std::string kind = "raw";  // "raw" or "haar"
  std::size_t dim = 0;       // raw: column count
  int base = kBaseWindow;    // haar
  int stride = 1;            // haar
};

inline json model_document(const OnlineClassifier& c, const FeatureSpace& fs) {
  json doc = classifier_to_json(c);
  doc["format"] = kModelFormat;
  doc["version"] = kFormatVersion;
  doc["feature_space"] = fs.kind == "haar"
                             ? json{{"kind", "haar"}, {"base", fs.base}, {"stride", fs.stride}}
                             : json{{"kind", "raw"}, {"dim", fs.dim}};
  return doc;
}

struct LoadedModel {
  OnlineClassifier classifier;
  FeatureSpace space;
};

inline LoadedModel model_from_document(const json& doc) {
  return detail::guarded([&] {
    detail::check_header(doc, kModelFormat);
    LoadedModel out{classifier_from_json(doc), {}};
    const auto& fs = doc.at("feature_space");
    out.space.kind = fs.at("kind").get<std::string>();
    if (out.space.kind == "raw") {
      out.space.dim = fs.at("dim").get<std::size_t>();
    } else if (out.space.kind == "haar") {
      out.space.base = fs.at("base").get<int>();
      out.space.stride = fs.at("stride").get<int>();
    } else {
      throw ParseError("unknown feature space '" + out.space.kind + "'");
    }
    return out;
  });
}

inline json cascade_document(const Cascade& c) {
  json stages = json::array();
  for (const auto& st : c.stages) {
    json haar = json::array();
    for (const auto& s : st.classifier.stumps()) {
      const auto& f = c.pool.at(s.feature);
      haar.push_back({{"kind", std::string(to_string(f.kind))},
                      {"x", f.x}, {"y", f.y}, {"block_w", f.block_w}, {"block_h", f.block_h}});
    }
    stages.push_back({{"goal",
                       {{"min_detection", st.goal.min_detection},
                        {"max_false_positive", st.goal.max_false_positive},
                        {"max_learners", st.goal.max_learners}}},
                      {"report",
                       {{"learners", st.report.learners},
                        {"positives", st.report.positives},
                        {"negatives", st.report.negatives},
                        {"detection", st.report.detection},
                        {"false_positive", st.report.false_positive},
                        {"goal_met", st.report.goal_met}}},
                      {"classifier", classifier_to_json(st.classifier)},
                      {"haar", haar}});
  }
  return {{"format", kCascadeFormat},
          {"version", kFormatVersion},
          {"base", c.base},
          {"pool_stride", c.pool_stride},
          {"stages", stages}};
}

inline Cascade cascade_from_document(const json& doc) {
  return detail::guarded([&] {
    detail::check_header(doc, kCascadeFormat);
    Cascade c(doc.at("pool_stride").get<int>(), doc.at("base").get<int>());
    for (const auto& js : doc.at("stages")) {
      Stage st;
      const auto& g = js.at("goal");
      st.goal = {g.at("min_detection").get<double>(), g.at("max_false_positive").get<double>(),
                 g.at("max_learners").get<std::size_t>()};
      const auto& r = js.at("report");
      st.report = {r.at("learners").get<std::size_t>(),  r.at("positives").get<std::size_t>(),
                   r.at("negatives").get<std::size_t>(), r.at("detection").get<double>(),
                   r.at("false_positive").get<double>(), r.at("goal_met").get<bool>()};
      st.classifier = classifier_from_json(js.at("classifier"));
      const auto& haar = js.at("haar");
      if (haar.size() != st.classifier.stumps().size()) throw ParseError("Haar list differs from stump count");
      for (std::size_t i = 0; i < haar.size(); ++i) {
        const std::size_t f = st.classifier.stumps()[i].feature;
        if (f >= c.pool.size()) throw ParseError("stump feature outside the Haar pool");
        const HaarFeature want{haar_kind_from_string(haar[i].at("kind").get<std::string>()),
                               haar[i].at("x").get<int>(), haar[i].at("y").get<int>(),
                               haar[i].at("block_w").get<int>(), haar[i].at("block_h").get<int>()};
        if (!(c.pool[f] == want)) throw ParseError("Haar pool does not match the stored features");
      }
      c.stages.push_back(std::move(st));
    }
    return c;
  });
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << doc.dump(1) << '\n';
}

inline void save_model(const std::string& path, const OnlineClassifier& c, const FeatureSpace& fs) {
  write_json_file(path, model_document(c, fs));
}
inline LoadedModel load_model(const std::string& path) { return model_from_document(read_json_file(path)); }

inline void save_cascade(const std::string& path, const Cascade& c) { write_json_file(path, cascade_document(c)); }
inline Cascade load_cascade(const std::string& path) { return cascade_from_document(read_json_file(path)); }

}  // namespace oslda
