// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SEPASR_VOCAB_HPP
#define SEPASR_VOCAB_HPP

#include <string>
#include <vector>

#include "sepasr/common.hpp"

namespace sepasr {

// Token inventory shared by the corpus and the recognizer. The on-disk format
// is one token per line with reserved tokens <blank>, <sos>, <eos> at fixed
// indices 0, 1, 2; regular words follow. The CTC head works in a class space
// of [blank + words] and the attention decoder in [eos + words] (sos is
// input-only), so the reserved tokens never leak into the wrong head.
class Vocabulary {
 public:
  static constexpr int kBlankIndex = 0;
  static constexpr int kSosIndex = 1;
  static constexpr int kEosIndex = 2;

  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  int size() const { return static_cast<int>(words_.size()); }  // word count V
  const std::vector<std::string>& words() const { return words_; }
  const std::string& word(int id) const;
  int word_id(const std::string& token) const;  // 0-based word id

  // CTC class space: blank = 0, word i = 1 + i. V+1 classes.
  int ctc_classes() const { return size() + 1; }
  static constexpr int kCtcBlank = 0;
  static int word_to_ctc(int word_id) { return word_id + 1; }
  static int ctc_to_word(int ctc_class) { return ctc_class - 1; }

  // Attention output space: eos = 0, word i = 1 + i. V+1 classes.
  // Attention embedding space: sos = 0, eos = 1, word i = 2 + i. V+2 entries.
  int att_classes() const { return size() + 1; }
  int att_embed_entries() const { return size() + 2; }
  static constexpr int kAttEos = 0;
  static int word_to_att(int word_id) { return word_id + 1; }
  static constexpr int kEmbedSos = 0;
  static constexpr int kEmbedEos = 1;
  static int word_to_embed(int word_id) { return word_id + 2; }

  std::vector<int> to_word_ids(const std::vector<std::string>& tokens) const;
  std::vector<std::string> to_tokens(const std::vector<int>& word_ids) const;

 private:
  std::vector<std::string> words_;
};

}  // namespace sepasr

#endif  // SEPASR_VOCAB_HPP
