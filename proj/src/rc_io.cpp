#include "ddikg/rc_io.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "ddikg/error.hpp"
#include "ddikg/text.hpp"

namespace ddikg {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

TokenSpan parse_span(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer() ||
      j[0].get<long long>() < 0 || j[1].get<long long>() < 0) {
    throw ValidationError(std::string(name) + " must be a pair of non-negative integers");
  }
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

std::optional<std::string> parse_optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(std::string(key) + " must be a string or null");
  return it->get<std::string>();
}

RcInstance parse_instance(const json& obj, std::size_t dim) {
  if (!obj.is_object()) throw ValidationError("instance line is not a JSON object");
  RcInstance inst;
  inst.id = obj.at("id").get<std::string>();
  if (auto label = parse_optional_string(obj, "label")) inst.label = parse_label(*label);
  const auto& hidden = obj.at("hidden");
  if (!hidden.is_array()) throw ValidationError("hidden must be an array of rows");
  inst.hidden = Matrix(hidden.size(), dim);
  for (std::size_t t = 0; t < hidden.size(); ++t) {
    const auto& row = hidden[t];
    if (!row.is_array() || row.size() != dim) {
      throw ShapeError("hidden row " + std::to_string(t) + " does not have the declared dim " + std::to_string(dim));
    }
    for (std::size_t c = 0; c < dim; ++c) {
      if (!row[c].is_number()) throw ValidationError("hidden entries must be numbers");
      inst.hidden(t, c) = row[c].get<double>();
    }
  }
  inst.span1 = parse_span(obj.at("span1"), "span1");
  inst.span2 = parse_span(obj.at("span2"), "span2");
  inst.drug1 = parse_optional_string(obj, "drug1");
  inst.drug2 = parse_optional_string(obj, "drug2");
  inst.mention1 = parse_optional_string(obj, "mention1").value_or("");
  inst.mention2 = parse_optional_string(obj, "mention2").value_or("");
  return inst;
}

}  // namespace

RcDataset read_instances(std::istream& in, const std::string& source, std::size_t max_seq_len) {
  RcDataset data;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (text::read_line(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(source, lineno, std::string("invalid JSON: ") + e.what());
    }
    try {
      if (!have_header) {
        if (!obj.is_object() || !obj.contains("dim") || !obj.contains("classes")) {
          throw ValidationError("first line must be a {\"dim\": d, \"classes\": [...]} header");
        }
        data.dim = obj.at("dim").get<std::size_t>();
        if (data.dim == 0) throw ValidationError("dim must be positive");
        data.classes = obj.at("classes").get<std::vector<std::string>>();
        std::array<bool, kNumClasses> seen{};
        for (const auto& c : data.classes) seen[index_of(parse_label(c))] = true;
        if (data.classes.size() != kNumClasses || std::find(seen.begin(), seen.end(), false) != seen.end()) {
          throw ValidationError("classes must list Mechanism, Effect, Advice, Int and Other exactly once");
        }
        have_header = true;
        continue;
      }
      auto inst = parse_instance(obj, data.dim);
      validate(inst, max_seq_len);
      data.instances.push_back(std::move(inst));
    } catch (const json::exception& e) {
      throw ValidationError(source + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ValidationError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw ParseError(source, lineno, "missing header line");
  return data;
}

RcDataset read_instances(const std::filesystem::path& path, std::size_t max_seq_len) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_instances(in, path.string(), max_seq_len);
}

void write_instances(const RcDataset& data, std::ostream& out) {
  ordered_json header;
  header["dim"] = data.dim;
  header["classes"] = data.classes;
  out << header.dump() << '\n';
  for (const auto& inst : data.instances) {
    if (inst.hidden.cols() != data.dim) throw ShapeError("instance '" + inst.id + "' does not match the dataset dim");
    ordered_json j;
    j["id"] = inst.id;
    if (inst.label) j["label"] = to_string(*inst.label);
    ordered_json hidden = ordered_json::array();
    for (std::size_t t = 0; t < inst.hidden.rows(); ++t) {
      const auto row = inst.hidden.row(t);
      hidden.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["hidden"] = std::move(hidden);
    j["span1"] = {inst.span1.first, inst.span1.last};
    j["span2"] = {inst.span2.first, inst.span2.last};
    j["drug1"] = inst.drug1 ? ordered_json(*inst.drug1) : ordered_json(nullptr);
    j["drug2"] = inst.drug2 ? ordered_json(*inst.drug2) : ordered_json(nullptr);
    j["mention1"] = inst.mention1;
    j["mention2"] = inst.mention2;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing instances");
}

void write_instances(const RcDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_instances(data, out);
}

}  // namespace ddikg
