#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "xnli/core.hpp"

// Tokenization and bit-exact readers/writers for every external file format.
// Readers are pure functions of file contents: LF or CRLF endings are
// accepted (CR stripped), a trailing newline is optional, everything is
// UTF-8.

namespace xnli::ingest {

// Simplified deterministic rule tokenizer: split on whitespace, isolate
// maximal punctuation runs, lowercase. Case folding covers ASCII, Latin-1,
// Latin Extended-A, and Cyrillic; other scripts pass through unchanged.
struct TokenizerConfig {
  bool lowercase = true;
  bool split_punctuation = true;
};

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg = {});

// Shortest round-trip rendering for doubles; the float grammar every writer
// in the toolkit uses ('.' decimal separator, no locale).
std::string format_double(double v);
double parse_double(std::string_view s);  // ParseError

// --- SNLI pairs (TSV: gold_label, sentence1, sentence2) ---

struct SnliReadStats {
  std::size_t skipped_no_consensus = 0;  // gold_label "-"
  std::size_t skipped_empty = 0;         // a side tokenized to nothing
};

std::vector<NliExample> read_snli(const std::filesystem::path& path,
                                  const TokenizerConfig& cfg = {},
                                  SnliReadStats* stats = nullptr);

// --- Word vectors (header "V d", then "token v1 .. vd" per line) ---

EmbeddingSpace read_embeddings(const std::filesystem::path& path, bool headerless = false);
void write_embeddings(const EmbeddingSpace& space, const std::filesystem::path& path);

// --- Line-aligned parallel corpus ---

struct ParallelReadStats {
  std::size_t dropped_pairs = 0;  // a side tokenized to nothing
};

ParallelCorpus read_parallel(const std::filesystem::path& src_path,
                             const std::filesystem::path& tgt_path,
                             const LangTag& src_lang, const LangTag& tgt_lang,
                             const TokenizerConfig& cfg = {},
                             ParallelReadStats* stats = nullptr);

// --- Bilingual dictionary (TSV: src_word, tgt_word) ---

Dictionary read_dictionary(const std::filesystem::path& path);

}  // namespace xnli::ingest
