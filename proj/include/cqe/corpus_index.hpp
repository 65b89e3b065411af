#pragma once

// Document-level inverted index over a local corpus. A term counts once per
// document no matter how often it repeats there.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "cqe/error.hpp"
#include "cqe/occurrence.hpp"
#include "cqe/text.hpp"

namespace cqe {

struct doc_record {
  std::string id;
  std::string text;
};

class corpus_index : public occurrence_source {
 public:
  using doc_list = std::vector<std::uint32_t>;  // sorted document ordinals

  corpus_index() = default;

  static corpus_index build(std::span<const doc_record> docs) {
    corpus_index idx;
    std::unordered_set<std::string> seen;
    idx.ids_.reserve(docs.size());
    for (const auto& d : docs) {
      if (d.id.empty()) throw ingestion_error("document with empty id");
      if (!seen.insert(d.id).second)
        throw ingestion_error("duplicate document id: " + d.id);
      const auto ord = static_cast<std::uint32_t>(idx.ids_.size());
      idx.ids_.push_back(d.id);
      for (auto& tok : tokenize(d.text)) {
        auto& list = idx.postings_[std::move(tok)];
        if (list.empty() || list.back() != ord) list.push_back(ord);
      }
    }
    return idx;
  }

  std::uint64_t total() const override { return ids_.size(); }

  const std::vector<std::string>& document_ids() const noexcept { return ids_; }

  const std::map<std::string, doc_list, std::less<>>& postings() const noexcept {
    return postings_;
  }

  // Documents containing every token in `tokens`. Empty token list matches
  // nothing.
  doc_list support(std::span<const std::string> tokens) const {
    if (tokens.empty()) return {};
    std::vector<const doc_list*> lists;
    for (const auto& t : tokens) {
      auto it = postings_.find(t);
      if (it == postings_.end()) return {};
      lists.push_back(&it->second);
    }
    std::sort(lists.begin(), lists.end(),
              [](auto* a, auto* b) { return a->size() < b->size(); });
    doc_list acc = *lists.front();
    for (std::size_t i = 1; i < lists.size() && !acc.empty(); ++i) {
      doc_list next;
      std::set_intersection(acc.begin(), acc.end(), lists[i]->begin(),
                            lists[i]->end(), std::back_inserter(next));
      acc = std::move(next);
    }
    return acc;
  }

  std::uint64_t count(std::span<const std::string> terms) const override {
    return support(tokens_of(terms)).size();
  }

  std::uint64_t doc_freq(std::string_view term) const {
    return support(tokenize(term)).size();
  }

  std::uint64_t pair_doc_freq(std::string_view x, std::string_view y) const {
    auto toks = tokenize(x);
    for (auto& t : tokenize(y)) toks.push_back(std::move(t));
    return support(toks).size();
  }

  // P(target | all of given) over documents.
  double cond_prob(std::string_view target,
                   std::span<const std::string> given) const {
    const auto cond = tokens_of(given);
    const auto base = support(cond);
    if (base.empty()) throw domain_error("zero-support condition");
    auto joint_tokens = cond;
    for (auto& t : tokenize(target)) joint_tokens.push_back(std::move(t));
    const auto joint = support(joint_tokens);
    return static_cast<double>(joint.size()) / static_cast<double>(base.size());
  }

  // Every indexed term occurring in at least one document that contains all
  // of `terms`.
  std::vector<std::string> cooccurring_terms(
      std::span<const std::string> terms) const {
    const auto base = support(tokens_of(terms));
    std::vector<std::string> out;
    for (const auto& [term, list] : postings_) {
      doc_list common;
      std::set_intersection(base.begin(), base.end(), list.begin(), list.end(),
                            std::back_inserter(common));
      if (!common.empty()) out.push_back(term);
    }
    return out;
  }

  void save(std::ostream& os) const {
    nlohmann::json j;
    j["format"] = "cqe-index/1";
    j["documents"] = ids_;
    j["postings"] = nlohmann::json::object();
    for (const auto& [term, list] : postings_) j["postings"][term] = list;
    os << j.dump() << '\n';
  }

  static corpus_index load(std::istream& is) {
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw parse_error(std::string("index file: ") + e.what());
    }
    if (j.value("format", "") != "cqe-index/1")
      throw parse_error("index file: unsupported format");
    corpus_index idx;
    idx.ids_ = j.at("documents").get<std::vector<std::string>>();
    for (const auto& [term, list] : j.at("postings").items()) {
      auto docs = list.get<doc_list>();
      for (auto d : docs)
        if (d >= idx.ids_.size())
          throw parse_error("index file: posting for '" + term +
                            "' references unknown document");
      idx.postings_.emplace(term, std::move(docs));
    }
    return idx;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw error("cannot write index: " + path.string());
    save(os);
  }

  static corpus_index load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw error("cannot read index: " + path.string());
    return load(is);
  }

 private:
  static std::vector<std::string> tokens_of(std::span<const std::string> terms) {
    std::vector<std::string> toks;
    for (const auto& term : terms)
      for (auto& t : tokenize(term)) toks.push_back(std::move(t));
    return toks;
  }

  std::vector<std::string> ids_;
  std::map<std::string, doc_list, std::less<>> postings_;
};

// One document per regular file under `root`, id = path relative to root
// with '/' separators. Files are read in sorted path order.
inline std::vector<doc_record> read_corpus_dir(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root))
    throw ingestion_error("corpus directory not found: " + root.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<doc_record> docs;
  for (const auto& f : files) {
    std::ifstream is(f, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    docs.push_back({fs::relative(f, root).generic_string(), ss.str()});
  }
  return docs;
}

// Newline-delimited records, each `id<TAB>text`. Blank lines are skipped.
inline std::vector<doc_record> read_corpus_records(std::istream& is) {
  std::vector<doc_record> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw parse_error("record without TAB separator", lineno);
    docs.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return docs;
}

inline std::vector<doc_record> read_corpus_records(
    const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ingestion_error("cannot read corpus records: " + path.string());
  return read_corpus_records(is);
}

}  // namespace cqe
