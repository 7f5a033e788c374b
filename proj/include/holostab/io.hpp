#pragma once

#include "holostab/complex.hpp"
#include "holostab/error.hpp"
#include "holostab/format.hpp"
#include "holostab/weights.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace holostab {

using Json = nlohmann::ordered_json;

namespace detail {

inline void emit_string(std::ostream& out, const std::string& s) {
  out << Json(s).dump();
}

inline void emit(std::ostream& out, const Json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) { out << "{}"; return; }
      out << '{' << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out << ',' << nl;
        first = false;
        out << pad;
        emit_string(out, it.key());
        out << (indent > 0 ? ": " : ":");
        emit(out, it.value(), indent, depth + 1);
      }
      out << nl << close << '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) { out << "[]"; return; }
      // short numeric arrays stay on one line
      bool flat = true;
      for (auto& v : j) flat &= v.is_primitive();
      if (flat) {
        out << '[';
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out << (indent > 0 ? ", " : ",");
          emit(out, j[i], indent, depth + 1);
        }
        out << ']';
        return;
      }
      out << '[' << nl;
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out << ',' << nl;
        out << pad;
        emit(out, j[i], indent, depth + 1);
      }
      out << nl << close << ']';
      return;
    }
    case Json::value_t::number_float: {
      double v = j.get<double>();
      if (std::isfinite(v)) out << format_double(v);
      else out << "null";
      return;
    }
    default:
      out << j.dump();
  }
}

}  // namespace detail

// JSON text with every double at 17 significant digits
inline std::string dump_json(const Json& j, int indent = 2) {
  std::ostringstream out;
  detail::emit(out, j, indent, 0);
  out << '\n';
  return out.str();
}

// write to a temporary next to the target, then rename
inline void write_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorCode::Io, "cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct WeightedComplex {
  SimplicialComplex complex;
  WeightProfile profile;
};

// {"vertices": [...], "edges": [[a,b],...], "triangles": [[a,b,c],...] (optional,
// 3-cliques when absent), "edge_weights": [...] (optional, default 1),
// "triangle_weights": [...] (optional, default 1), "rho": r (optional)}
inline WeightedComplex complex_from_json(const Json& j) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!j.is_object()) fail("complex file must hold a JSON object");
  std::vector<Label> verts;
  std::vector<std::array<Label, 2>> edges;
  std::optional<std::vector<std::array<Label, 3>>> tris;
  try {
    if (j.contains("vertices")) verts = j.at("vertices").get<std::vector<Label>>();
    if (j.contains("edges")) edges = j.at("edges").get<std::vector<std::array<Label, 2>>>();
    if (j.contains("triangles") && !j.at("triangles").is_null())
      tris = j.at("triangles").get<std::vector<std::array<Label, 3>>>();
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("bad simplex list: ") + e.what());
  }
  if (verts.empty() && !edges.empty()) {
    for (auto& e : edges) verts.insert(verts.end(), e.begin(), e.end());
    std::sort(verts.begin(), verts.end());
    verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
  }
  WeightedComplex wc{build_complex(verts, edges, tris), {}};
  const auto& c = wc.complex;
  wc.profile = WeightProfile::uniform(c);
  try {
    if (j.contains("edge_weights")) {
      auto w = j.at("edge_weights").get<std::vector<double>>();
      if (w.size() != edges.size()) fail("edge_weights must match edges");
      for (std::size_t k = 0; k < edges.size(); ++k) {
        auto a = c.vertex_index(edges[k][0]), b = c.vertex_index(edges[k][1]);
        wc.profile.w1(*c.edge_index(*a, *b)) = w[k];
      }
    }
    if (j.contains("triangle_weights")) {
      if (!tris) fail("triangle_weights given without triangles");
      auto w = j.at("triangle_weights").get<std::vector<double>>();
      if (w.size() != tris->size()) fail("triangle_weights must match triangles");
      for (std::size_t k = 0; k < tris->size(); ++k) {
        const auto& t = (*tris)[k];
        auto idx = c.triangle_index(*c.vertex_index(t[0]), *c.vertex_index(t[1]), *c.vertex_index(t[2]));
        wc.profile.w2_init(*idx) = w[k];
      }
    }
    if (j.contains("rho")) wc.profile.rho = j.at("rho").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("bad weights: ") + e.what());
  }
  wc.profile.validate(c);
  return wc;
}

inline WeightedComplex load_complex(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, "malformed JSON in " + path.string() + ": " + e.what());
  }
  return complex_from_json(j);
}

inline Json complex_to_json(const SimplicialComplex& c, const WeightProfile& p) {
  Json j;
  j["vertices"] = c.labels();
  Json e = Json::array(), w = Json::array();
  for (int k = 0; k < c.num_edges(); ++k) {
    auto l = c.edge_labels(k);
    e.push_back({l[0], l[1]});
    w.push_back(p.w1(k));
  }
  Json t = Json::array(), tw = Json::array();
  for (int k = 0; k < c.num_triangles(); ++k) {
    const auto& tr = c.triangles()[k];
    t.push_back({c.labels()[tr[0]], c.labels()[tr[1]], c.labels()[tr[2]]});
    tw.push_back(p.w2_init(k));
  }
  j["edges"] = e;
  j["triangles"] = t;
  j["edge_weights"] = w;
  j["triangle_weights"] = tw;
  j["rho"] = p.rho;
  return j;
}

inline void save_complex(const std::filesystem::path& path, const SimplicialComplex& c, const WeightProfile& p) {
  write_atomic(path, dump_json(complex_to_json(c, p)));
}

// minimal CSV row builder, '.' decimal separator always
class CsvRow {
 public:
  CsvRow& add(const std::string& s) {
    sep();
    bool quote = s.find_first_of(",\"\n") != std::string::npos;
    if (!quote) {
      row_ += s;
    } else {
      row_ += '"';
      for (char ch : s) {
        if (ch == '"') row_ += '"';
        row_ += ch;
      }
      row_ += '"';
    }
    return *this;
  }
  CsvRow& add(const char* s) { return add(std::string(s)); }
  CsvRow& add(double v) {
    sep();
    row_ += format_double(v);
    return *this;
  }
  template <typename I>
    requires std::is_integral_v<I>
  CsvRow& add(I v) {
    sep();
    row_ += std::to_string(v);
    return *this;
  }
  std::string str() const { return row_ + "\n"; }

 private:
  void sep() {
    if (!first_) row_ += ',';
    first_ = false;
  }
  std::string row_;
  bool first_ = true;
};

}  // namespace holostab
