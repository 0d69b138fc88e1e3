#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xnli/error.hpp"
#include "xnli/numkit.hpp"

// Language-neutral domain types shared by every other module. All of them are
// immutable after construction and safe to share read-only across workers.

namespace xnli {

// The three inference relations. The numeric order (contradiction <
// entailment < neutral) is fixed: reports, confusion matrices, and argmax
// tie-breaking all follow it.
enum class Label : std::uint8_t { contradiction = 0, entailment = 1, neutral = 2 };

inline constexpr std::size_t kNumLabels = 3;
inline constexpr std::array<Label, kNumLabels> kLabelOrder = {
    Label::contradiction, Label::entailment, Label::neutral};

// Case-insensitive; anything but the three names (including SNLI's "-"
// consensus-less marker) is UnknownLabel.
Label parse_label(std::string_view text);
std::string_view render_label(Label label);

// Short lowercase language identifier, e.g. "eng", "fra". No whitespace and
// no ':' since the tag doubles as a token prefix separator.
class LangTag {
 public:
  explicit LangTag(std::string code);

  const std::string& code() const { return code_; }
  bool operator==(const LangTag&) const = default;

 private:
  std::string code_;
};

// "eng" + "dog" -> "eng:dog". Shared vocabularies prefix every token with its
// language so that surface-form collisions across languages cannot occur and
// language membership stays testable.
std::string prefix_token(const LangTag& lang, std::string_view token);
std::vector<std::string> prefix_tokens(const LangTag& lang,
                                       std::span<const std::string> tokens);

// Token <-> dense index bijection with per-token occurrence counts.
class Vocabulary {
 public:
  // Inserts token (count 1) or bumps its count; returns its index.
  std::size_t add(std::string_view token, std::uint64_t count = 1);

  std::optional<std::size_t> find(std::string_view token) const;
  std::size_t index_of(std::string_view token) const;  // InvalidToken if absent
  const std::string& token_of(std::size_t index) const { return tokens_[index]; }
  std::uint64_t count_of(std::size_t index) const { return counts_[index]; }
  bool contains(std::string_view token) const { return find(token).has_value(); }
  std::size_t size() const { return tokens_.size(); }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
};

// A vocabulary plus its V x d vector matrix: the sole interface between
// languages and the classifier.
struct EmbeddingSpace {
  Vocabulary vocab;
  numkit::Matrix matrix;  // V x d

  std::size_t dim() const { return matrix.cols(); }
  std::span<const double> vector_of(std::size_t index) const { return matrix.row(index); }
  std::optional<std::span<const double>> lookup(std::string_view token) const {
    auto idx = vocab.find(token);
    if (!idx) return std::nullopt;
    return matrix.row(*idx);
  }
};

// Throws unless row count matches vocab size, d >= 1, and entries are finite.
void validate_space(const EmbeddingSpace& space);

struct NliExample {
  std::vector<std::string> premise;
  std::vector<std::string> hypothesis;
  Label gold;
};

struct SentencePair {
  std::vector<std::string> src_tokens;
  std::vector<std::string> tgt_tokens;
  LangTag src_lang;
  LangTag tgt_lang;
};

struct ParallelCorpus {
  std::vector<SentencePair> pairs;
  LangTag src_lang;
  LangTag tgt_lang;
};

// Bilingual dictionary: (src_word, tgt_word) pairs, unique, first-occurrence
// order.
struct Dictionary {
  std::vector<std::pair<std::string, std::string>> entries;
};

// Maps row vectors of from_lang's space into to_lang's space by
// right-multiplication: v_mapped = v * matrix.
struct LinearMap {
  numkit::Matrix matrix;  // dim(from) x dim(to)
  LangTag from_lang;
  LangTag to_lang;
};

}  // namespace xnli
