// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepasr/vocab.hpp"

#include <fstream>
#include <unordered_map>

namespace sepasr {

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  if (words_.size() < 2) {
    fail(Error::Kind::Config, "vocabulary needs at least 2 words, got ", words_.size());
  }
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(Error::Kind::Io, "cannot open vocabulary file: ", path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.size() < 3 || lines[0] != "<blank>" || lines[1] != "<sos>" || lines[2] != "<eos>") {
    fail(Error::Kind::Config, "vocabulary file ", path,
         " must start with <blank>, <sos>, <eos> at indices 0, 1, 2");
  }
  return Vocabulary(std::vector<std::string>(lines.begin() + 3, lines.end()));
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) fail(Error::Kind::Io, "cannot write vocabulary file: ", path);
  os << "<blank>\n<sos>\n<eos>\n";
  for (const auto& w : words_) os << w << "\n";
}

const std::string& Vocabulary::word(int id) const {
  if (id < 0 || id >= size()) fail(Error::Kind::Usage, "word id ", id, " outside vocabulary");
  return words_[static_cast<std::size_t>(id)];
}

int Vocabulary::word_id(const std::string& token) const {
  for (int i = 0; i < size(); ++i) {
    if (words_[static_cast<std::size_t>(i)] == token) return i;
  }
  fail(Error::Kind::Data, "token not in vocabulary: ", token);
}

std::vector<int> Vocabulary::to_word_ids(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(word_id(t));
  return ids;
}

std::vector<std::string> Vocabulary::to_tokens(const std::vector<int>& word_ids) const {
  std::vector<std::string> out;
  out.reserve(word_ids.size());
  for (int id : word_ids) out.push_back(word(id));
  return out;
}

}  // namespace sepasr
