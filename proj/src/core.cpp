#include "xnli/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace xnli {

namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool has_ascii_space(std::string_view s) {
  return std::any_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

Label parse_label(std::string_view text) {
  const std::string lower = ascii_lower(text);
  if (lower == "contradiction") return Label::contradiction;
  if (lower == "entailment") return Label::entailment;
  if (lower == "neutral") return Label::neutral;
  throw UnknownLabel("unknown label: \"" + std::string(text) + "\"");
}

std::string_view render_label(Label label) {
  switch (label) {
    case Label::contradiction: return "contradiction";
    case Label::entailment: return "entailment";
    case Label::neutral: return "neutral";
  }
  throw UnknownLabel("label out of range");
}

LangTag::LangTag(std::string code) : code_(std::move(code)) {
  if (code_.empty()) throw InvalidLangTag("language tag is empty");
  if (has_ascii_space(code_) || code_.find(':') != std::string::npos)
    throw InvalidLangTag("language tag \"" + code_ + "\" contains whitespace or ':'");
}

std::string prefix_token(const LangTag& lang, std::string_view token) {
  std::string out;
  out.reserve(lang.code().size() + 1 + token.size());
  out += lang.code();
  out += ':';
  out += token;
  return out;
}

std::vector<std::string> prefix_tokens(const LangTag& lang,
                                       std::span<const std::string> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(prefix_token(lang, t));
  return out;
}

std::size_t Vocabulary::add(std::string_view token, std::uint64_t count) {
  if (token.empty() || has_ascii_space(token))
    throw InvalidToken("vocabulary token must be non-empty and whitespace-free");
  auto it = index_.find(std::string(token));
  if (it != index_.end()) {
    counts_[it->second] += count;
    return it->second;
  }
  const std::size_t idx = tokens_.size();
  tokens_.emplace_back(token);
  counts_.push_back(count);
  index_.emplace(tokens_.back(), idx);
  return idx;
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::index_of(std::string_view token) const {
  auto idx = find(token);
  if (!idx) throw InvalidToken("token not in vocabulary: \"" + std::string(token) + "\"");
  return *idx;
}

void validate_space(const EmbeddingSpace& space) {
  if (space.matrix.rows() != space.vocab.size())
    throw ShapeMismatch("embedding space: matrix rows disagree with vocabulary size");
  if (space.vocab.size() > 0 && space.matrix.cols() < 1)
    throw ShapeMismatch("embedding space: dimensionality must be at least 1");
  if (!space.matrix.all_finite())
    throw NonFiniteValue("embedding space: matrix contains non-finite entries");
}

}  // namespace xnli
