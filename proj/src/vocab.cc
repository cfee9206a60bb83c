/*
 * Copyright 2026 The vlscore Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "vlscore/vocab.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <utility>

#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "vlscore/status_macros.h"

namespace vlscore {
namespace {

using Json = nlohmann::ordered_json;

absl::Status ParseError(absl::string_view location, absl::string_view what) {
  return absl::InvalidArgumentError(
      absl::StrCat("vocab config ", location, ": ", what));
}

std::string Key(absl::string_view parent, absl::string_view key) {
  return absl::StrCat(parent, "[\"", key, "\"]");
}

std::string Key(absl::string_view parent, size_t i) {
  return absl::StrCat(parent, "[", i, "]");
}

absl::StatusOr<std::vector<std::string>> StringList(const Json& j,
                                                    const std::string& where) {
  if (!j.is_array()) return ParseError(where, "expected a list of strings");
  std::vector<std::string> out;
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) return ParseError(Key(where, i), "expected a string");
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

absl::StatusOr<Merging> ParseMerging(const Json& j, std::string name,
                                     const std::string& where) {
  if (!j.is_object()) {
    return ParseError(where, "expected an object of superclass -> classes");
  }
  Merging m{std::move(name), {}};
  for (const auto& [super, members] : j.items()) {
    ASSIGN_OR_RETURN(auto list, StringList(members, Key(where, super)));
    m.superclasses.push_back({super, std::move(list)});
  }
  return m;
}

absl::Status CheckMerging(const VocabConfig& cfg, const Merging& m,
                          const std::string& where) {
  if (m.superclasses.empty()) return ParseError(where, "has no superclasses");
  std::map<std::string, std::string> owner;
  for (const Superclass& s : m.superclasses) {
    const std::string loc = Key(where, s.name);
    if (s.members.empty()) return ParseError(loc, "has no member classes");
    for (size_t i = 0; i < s.members.size(); ++i) {
      const std::string& member = s.members[i];
      if (cfg.ConceptsOf(member) == nullptr) {
        return ParseError(Key(loc, i),
                          absl::StrCat("unknown class \"", member, "\""));
      }
      auto [it, inserted] = owner.emplace(member, s.name);
      if (!inserted) {
        return ParseError(Key(loc, i),
                          absl::StrCat("class \"", member,
                                       "\" is already in superclass \"",
                                       it->second, "\""));
      }
    }
  }
  for (const std::string& c : cfg.classes) {
    if (!owner.contains(c)) {
      return ParseError(where,
                        absl::StrCat("class \"", c, "\" is in no superclass"));
    }
  }
  return absl::OkStatus();
}

}  // namespace

const Merging* VocabConfig::FindMerging(absl::string_view name) const {
  for (const Merging& m : mergings) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

const OodPromptSet* VocabConfig::FindOodPromptSet(absl::string_view name) const {
  for (const OodPromptSet& s : ood_prompt_sets) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const std::vector<std::string>* VocabConfig::ConceptsOf(
    absl::string_view class_name) const {
  for (size_t k = 0; k < classes.size(); ++k) {
    if (classes[k] == class_name && k < concepts.size()) return &concepts[k];
  }
  return nullptr;
}

absl::Status ValidateVocabConfig(const VocabConfig& cfg) {
  if (cfg.classes.empty()) return ParseError("classes", "is empty");
  if (cfg.concepts.size() != cfg.classes.size()) {
    return ParseError("concepts", "must have one entry per class");
  }
  std::set<std::string> seen;
  for (size_t k = 0; k < cfg.classes.size(); ++k) {
    if (!seen.insert(cfg.classes[k]).second) {
      return ParseError(Key("classes", k),
                        absl::StrCat("duplicate class \"", cfg.classes[k], "\""));
    }
    const std::string loc = Key("concepts", cfg.classes[k]);
    if (cfg.concepts[k].empty()) return ParseError(loc, "empty concept list");
    std::set<std::string> concept_names;
    for (size_t i = 0; i < cfg.concepts[k].size(); ++i) {
      if (!concept_names.insert(cfg.concepts[k][i]).second) {
        return ParseError(Key(loc, i), absl::StrCat("duplicate concept \"",
                                                    cfg.concepts[k][i], "\""));
      }
    }
  }
  if (cfg.templates.empty()) return ParseError("templates", "is empty");
  for (size_t i = 0; i < cfg.templates.size(); ++i) {
    if (cfg.templates[i].find("{}") == std::string::npos) {
      return ParseError(Key("templates", i), "has no \"{}\" placeholder");
    }
  }
  std::set<std::string> merging_names;
  for (const Merging& m : cfg.mergings) {
    const std::string where = Key("mergings", m.name);
    if (!merging_names.insert(m.name).second) {
      return ParseError(where, "duplicate merging name");
    }
    RETURN_IF_ERROR(CheckMerging(cfg, m, where));
  }
  std::set<std::string> set_names;
  for (const OodPromptSet& s : cfg.ood_prompt_sets) {
    const std::string where = Key("ood_prompt_sets", s.name);
    if (!set_names.insert(s.name).second) {
      return ParseError(where, "duplicate OOD prompt set name");
    }
    std::set<std::string> names;
    for (size_t i = 0; i < s.classes.size(); ++i) {
      if (seen.contains(s.classes[i])) {
        return ParseError(Key(where, i),
                          absl::StrCat("OOD class \"", s.classes[i],
                                       "\" is also an ID class"));
      }
      if (!names.insert(s.classes[i]).second) {
        return ParseError(Key(where, i), absl::StrCat("duplicate OOD class \"",
                                                      s.classes[i], "\""));
      }
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<VocabConfig> ParseVocabConfig(absl::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    return ParseError("document", e.what());
  }
  if (!doc.is_object()) return ParseError("document", "expected an object");

  VocabConfig cfg;
  if (!doc.contains("classes")) return ParseError("classes", "is missing");
  ASSIGN_OR_RETURN(cfg.classes, StringList(doc["classes"], "classes"));

  if (!doc.contains("concepts") || !doc["concepts"].is_object()) {
    return ParseError("concepts", "expected an object of class -> concepts");
  }
  const Json& concepts = doc["concepts"];
  for (const auto& [cls, list] : concepts.items()) {
    if (std::find(cfg.classes.begin(), cfg.classes.end(), cls) ==
        cfg.classes.end()) {
      return ParseError(Key("concepts", cls), "names an unknown class");
    }
  }
  for (size_t k = 0; k < cfg.classes.size(); ++k) {
    const std::string& cls = cfg.classes[k];
    if (!concepts.contains(cls)) {
      return ParseError(Key("concepts", cls), "is missing");
    }
    ASSIGN_OR_RETURN(auto list, StringList(concepts[cls], Key("concepts", cls)));
    cfg.concepts.push_back(std::move(list));
  }

  if (!doc.contains("templates")) return ParseError("templates", "is missing");
  ASSIGN_OR_RETURN(cfg.templates, StringList(doc["templates"], "templates"));

  if (doc.contains("merging")) {
    const Json& j = doc["merging"];
    const std::string name = j.is_object() ? std::to_string(j.size()) : "";
    ASSIGN_OR_RETURN(Merging m, ParseMerging(j, name, "merging"));
    cfg.mergings.push_back(std::move(m));
  }
  if (doc.contains("mergings")) {
    if (!doc["mergings"].is_object()) {
      return ParseError("mergings", "expected an object of name -> merging");
    }
    for (const auto& [name, j] : doc["mergings"].items()) {
      ASSIGN_OR_RETURN(Merging m, ParseMerging(j, name, Key("mergings", name)));
      cfg.mergings.push_back(std::move(m));
    }
  }
  if (doc.contains("ood_classes")) {
    ASSIGN_OR_RETURN(auto list, StringList(doc["ood_classes"], "ood_classes"));
    cfg.ood_prompt_sets.push_back({"default", std::move(list)});
  }
  if (doc.contains("ood_prompt_sets")) {
    if (!doc["ood_prompt_sets"].is_object()) {
      return ParseError("ood_prompt_sets", "expected an object of name -> list");
    }
    for (const auto& [name, j] : doc["ood_prompt_sets"].items()) {
      ASSIGN_OR_RETURN(auto list, StringList(j, Key("ood_prompt_sets", name)));
      cfg.ood_prompt_sets.push_back({name, std::move(list)});
    }
  }
  RETURN_IF_ERROR(ValidateVocabConfig(cfg));
  return cfg;
}

absl::StatusOr<ClassIndex> ClassIndex::Create(
    std::vector<std::vector<size_t>> groups, std::vector<std::string> names,
    size_t id_channel_count) {
  if (names.size() != groups.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("class index: ", groups.size(), " groups but ",
                     names.size(), " names"));
  }
  if (id_channel_count > groups.size()) {
    return absl::InvalidArgumentError(
        "class index: more ID channels than groups");
  }
  std::map<size_t, size_t> owner;
  for (size_t c = 0; c < groups.size(); ++c) {
    if (groups[c].empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("class index: channel \"", names[c], "\" is empty"));
    }
    for (size_t row : groups[c]) {
      auto [it, inserted] = owner.emplace(row, c);
      if (!inserted) {
        return absl::InvalidArgumentError(absl::StrCat(
            "class index conflict: concept row ", row, " is in both \"",
            names[it->second], "\" and \"", names[c], "\""));
      }
    }
  }
  ClassIndex idx;
  idx.groups_ = std::move(groups);
  idx.names_ = std::move(names);
  idx.id_channels_ = id_channel_count;
  return idx;
}

size_t ClassIndex::min_concept_rows() const {
  size_t rows = 0;
  for (const auto& g : groups_) {
    for (size_t r : g) rows = std::max(rows, r + 1);
  }
  return rows;
}

absl::StatusOr<ClassIndex> BuildClassIndex(
    const VocabConfig& cfg, const Merging* merging,
    std::span<const ConceptEntry> concept_index) {
  std::map<std::pair<std::string, std::string>, size_t> row_of;
  for (size_t m = 0; m < concept_index.size(); ++m) {
    row_of.emplace(std::make_pair(concept_index[m].class_name,
                                  concept_index[m].concept_name),
                   m);
  }
  auto append_class = [&](const std::string& cls,
                          std::vector<size_t>* rows) -> absl::Status {
    const auto* concepts = cfg.ConceptsOf(cls);
    if (concepts == nullptr) {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown class \"", cls, "\""));
    }
    for (const std::string& c : *concepts) {
      auto it = row_of.find({cls, c});
      if (it == row_of.end()) {
        return absl::InvalidArgumentError(
            absl::StrCat("no text embedding for concept \"", c,
                         "\" of class \"", cls, "\""));
      }
      rows->push_back(it->second);
    }
    return absl::OkStatus();
  };

  std::vector<std::vector<size_t>> groups;
  std::vector<std::string> names;
  if (merging == nullptr) {
    for (const std::string& cls : cfg.classes) {
      groups.emplace_back();
      RETURN_IF_ERROR(append_class(cls, &groups.back()));
      names.push_back(cls);
    }
  } else {
    for (const Superclass& s : merging->superclasses) {
      groups.emplace_back();
      for (const std::string& member : s.members) {
        RETURN_IF_ERROR(append_class(member, &groups.back()));
      }
      names.push_back(s.name);
    }
  }
  const size_t id_channels = groups.size();
  return ClassIndex::Create(std::move(groups), std::move(names), id_channels);
}

absl::StatusOr<ClassIndex> ExtendWithOod(
    const ClassIndex& idx, const std::vector<std::vector<size_t>>& ood_rows,
    const std::vector<std::string>& ood_names) {
  if (ood_rows.size() != ood_names.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat(ood_rows.size(), " OOD row groups but ", ood_names.size(),
                     " OOD names"));
  }
  auto groups = idx.groups();
  auto names = idx.channel_names();
  groups.insert(groups.end(), ood_rows.begin(), ood_rows.end());
  names.insert(names.end(), ood_names.begin(), ood_names.end());
  return ClassIndex::Create(std::move(groups), std::move(names),
                            idx.id_channel_count());
}

absl::StatusOr<std::vector<std::vector<size_t>>> ResolveOodRows(
    std::span<const ConceptEntry> concept_index,
    std::span<const std::string> ood_classes) {
  std::vector<std::vector<size_t>> rows;
  for (const std::string& name : ood_classes) {
    rows.emplace_back();
    for (size_t m = 0; m < concept_index.size(); ++m) {
      if (concept_index[m].class_name == name) rows.back().push_back(m);
    }
    if (rows.back().empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("no text embedding for OOD prompt \"", name, "\""));
    }
  }
  return rows;
}

absl::StatusOr<Tensor> AggregateTemplateEmbeddings(
    const Tensor& text_raw, std::span<const ConceptEntry> concept_index) {
  if (text_raw.dtype() != DType::kF32 || text_raw.rank() != 2) {
    return absl::InvalidArgumentError(absl::StrCat(
        "text embeddings must be f32 [P, D], got ", text_raw.ShapeString()));
  }
  const size_t rows = text_raw.dim(0);
  const size_t dim = text_raw.dim(1);
  const auto raw = text_raw.f32();
  std::vector<float> out;
  out.reserve(concept_index.size() * dim);
  std::vector<double> mean(dim);
  for (const ConceptEntry& e : concept_index) {
    const std::string name =
        absl::StrCat("\"", e.concept_name, "\" (class \"", e.class_name, "\")");
    if (e.template_rows.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("concept ", name, " owns no template rows"));
    }
    std::fill(mean.begin(), mean.end(), 0.0);
    for (uint64_t r : e.template_rows) {
      if (r >= rows) {
        return absl::InvalidArgumentError(
            absl::StrCat("concept ", name, " references row ", r, " of ", rows));
      }
      const float* row = raw.data() + r * dim;
      double norm2 = 0.0;
      for (size_t d = 0; d < dim; ++d) norm2 += double{row[d]} * row[d];
      const double norm = std::sqrt(norm2);
      if (norm < 1e-8) {
        return absl::InvalidArgumentError(absl::StrCat(
            "degenerate embedding: template row ", r, " of concept ", name,
            " has zero norm"));
      }
      for (size_t d = 0; d < dim; ++d) mean[d] += row[d] / norm;
    }
    double norm2 = 0.0;
    for (size_t d = 0; d < dim; ++d) {
      mean[d] /= static_cast<double>(e.template_rows.size());
      norm2 += mean[d] * mean[d];
    }
    const double norm = std::sqrt(norm2);
    if (norm < 1e-8) {
      return absl::InvalidArgumentError(absl::StrCat(
          "degenerate embedding: mean template embedding of concept ", name,
          " has norm ", norm));
    }
    for (size_t d = 0; d < dim; ++d) {
      out.push_back(static_cast<float>(mean[d] / norm));
    }
  }
  return Tensor::FromF32({concept_index.size(), dim}, std::move(out));
}

std::vector<ConceptEntry> MakeConceptIndex(
    const VocabConfig& cfg, std::span<const std::string> ood_classes,
    size_t templates) {
  std::vector<ConceptEntry> index;
  uint64_t next = 0;
  auto add = [&](const std::string& cls, const std::string& concept_name) {
    ConceptEntry e{cls, concept_name, {}};
    for (size_t t = 0; t < templates; ++t) e.template_rows.push_back(next++);
    index.push_back(std::move(e));
  };
  for (size_t k = 0; k < cfg.classes.size(); ++k) {
    for (const std::string& c : cfg.concepts[k]) add(cfg.classes[k], c);
  }
  for (const std::string& o : ood_classes) add(o, o);
  return index;
}

}  // namespace vlscore
