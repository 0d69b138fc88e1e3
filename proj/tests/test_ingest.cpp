#include "xnli/ingest.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "xnli/numkit.hpp"

using namespace xnli;
using namespace xnli::ingest;

namespace {

namespace fs = std::filesystem;

// Scratch dir shared by the file-format tests.
fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "xnli_ingest_tests";
  fs::create_directories(p);
  return p;
}

fs::path write_file(const std::string& name, const std::string& content) {
  const fs::path p = scratch() / name;
  std::ofstream out(p, std::ios::binary);
  out << content;
  return p;
}

std::string join(const std::vector<std::string>& toks) {
  std::string s;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) s += ' ';
    s += toks[i];
  }
  return s;
}

}  // namespace

TEST_CASE("tokenize splits words and punctuation runs, lowercases") {
  CHECK(tokenize("Football players practice.") ==
        std::vector<std::string>{"football", "players", "practice", "."});
  CHECK(tokenize("Gymnasts get ready for a competition.") ==
        std::vector<std::string>{"gymnasts", "get", "ready", "for", "a", "competition", "."});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("   \t \n ") == std::vector<std::string>{});
  CHECK(tokenize("don't stop!!!") == std::vector<std::string>{"don", "'", "t", "stop", "!!!"});
  CHECK(tokenize("a,b") == std::vector<std::string>{"a", ",", "b"});
}

TEST_CASE("tokenize flags") {
  TokenizerConfig keep_case{.lowercase = false, .split_punctuation = true};
  CHECK(tokenize("Hello There.", keep_case) == std::vector<std::string>{"Hello", "There", "."});
  TokenizerConfig no_split{.lowercase = true, .split_punctuation = false};
  CHECK(tokenize("Hello There.", no_split) == std::vector<std::string>{"hello", "there."});
}

TEST_CASE("tokenize handles Latin and Cyrillic case folding") {
  CHECK(tokenize("Été") == std::vector<std::string>{"été"});
  CHECK(tokenize("MAÑANA") == std::vector<std::string>{"mañana"});
  CHECK(tokenize("Москва") == std::vector<std::string>{"москва"});
  CHECK(tokenize("ŒUVRE") == std::vector<std::string>{"œuvre"});
  // Arabic has no case; text passes through with its punctuation isolated.
  CHECK(tokenize("كتاب،") == std::vector<std::string>{"كتاب", "،"});
}

TEST_CASE("tokenize is idempotent on its own space-joined output") {
  numkit::Rng rng(11);
  const std::string alphabet = "abzZ.!? ,\téÉж -";
  std::vector<char> chars(alphabet.begin(), alphabet.end());
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const std::size_t len = rng.uniform_int(30);
    for (std::size_t i = 0; i < len; ++i) text += chars[rng.uniform_int(chars.size())];
    const auto once = tokenize(text);
    const auto twice = tokenize(join(once));
    CHECK(once == twice);
  }
}

TEST_CASE("read_snli parses rows, skips dashes, detects header") {
  const auto p = write_file("snli.tsv",
                            "gold_label\tsentence1\tsentence2\n"
                            "entailment\tA man runs.\tA person moves.\n"
                            "-\tx\ty\n"
                            "CONTRADICTION\tA dog.\tA cat.\n");
  SnliReadStats stats;
  const auto examples = read_snli(p, {}, &stats);
  REQUIRE(examples.size() == 2);
  CHECK(examples[0].premise == std::vector<std::string>{"a", "man", "runs", "."});
  CHECK(examples[0].hypothesis == std::vector<std::string>{"a", "person", "moves", "."});
  CHECK(examples[0].gold == Label::entailment);
  CHECK(examples[1].gold == Label::contradiction);
  CHECK(stats.skipped_no_consensus == 1);
}

TEST_CASE("read_snli error paths") {
  const auto two_cols = write_file("snli_bad.tsv", "entailment\tonly one sentence\n");
  CHECK_THROWS_AS(read_snli(two_cols), MalformedRow);
  const auto bad_label = write_file("snli_label.tsv", "maybe\ta\tb\n");
  CHECK_THROWS_AS(read_snli(bad_label), UnknownLabel);
  CHECK_THROWS_AS(read_snli(scratch() / "does_not_exist.tsv"), IoError);
}

TEST_CASE("read_snli without header and with CRLF") {
  const auto p = write_file("snli_crlf.tsv", "neutral\tA man.\tA tall man.\r\n");
  const auto examples = read_snli(p);
  REQUIRE(examples.size() == 1);
  CHECK(examples[0].gold == Label::neutral);
}

TEST_CASE("read_embeddings parses the documented format") {
  const auto p = write_file("vec.txt", "2 3\na 1 0 0\nb 0 1 0\n");
  const auto space = read_embeddings(p);
  CHECK(space.vocab.size() == 2);
  CHECK(space.dim() == 3);
  CHECK(space.matrix(space.vocab.index_of("a"), 0) == 1.0);
  CHECK(space.matrix(space.vocab.index_of("b"), 1) == 1.0);
}

TEST_CASE("embeddings round-trip exactly") {
  EmbeddingSpace space;
  space.vocab.add("eng:dog");
  space.vocab.add("fra:chien");
  space.vocab.add("x");
  space.matrix = numkit::Matrix(3, 4);
  numkit::Rng rng(3);
  for (double& v : space.matrix.flat()) v = rng.normal() * 1e3;
  space.matrix(0, 0) = 0.1;
  space.matrix(0, 1) = -0.0;
  space.matrix(1, 2) = 1.0 / 3.0;
  space.matrix(2, 3) = 1e-300;

  const auto p = scratch() / "roundtrip.txt";
  write_embeddings(space, p);
  const auto back = read_embeddings(p);

  REQUIRE(back.vocab.size() == space.vocab.size());
  for (std::size_t i = 0; i < space.vocab.size(); ++i)
    CHECK(back.vocab.token_of(i) == space.vocab.token_of(i));
  CHECK(back.matrix == space.matrix);
}

TEST_CASE("read_embeddings error paths") {
  const auto short_body = write_file("vec_short.txt", "3 2\na 1 2\nb 3 4\n");
  CHECK_THROWS_AS(read_embeddings(short_body), HeaderMismatch);
  const auto wrong_dim = write_file("vec_dim.txt", "1 3\na 1 2\n");
  CHECK_THROWS_AS(read_embeddings(wrong_dim), HeaderMismatch);
  const auto dup = write_file("vec_dup.txt", "2 1\na 1\na 2\n");
  CHECK_THROWS_AS(read_embeddings(dup), DuplicateToken);
  const auto garbage = write_file("vec_garbage.txt", "1 1\na x\n");
  CHECK_THROWS_AS(read_embeddings(garbage), ParseError);
  const auto nonfinite = write_file("vec_inf.txt", "1 1\na inf\n");
  CHECK_THROWS_AS(read_embeddings(nonfinite), ParseError);
}

TEST_CASE("read_embeddings headerless mode") {
  const auto p = write_file("vec_nohdr.txt", "a 1 0\nb 0 1\nc 1 1\n");
  const auto space = read_embeddings(p, /*headerless=*/true);
  CHECK(space.vocab.size() == 3);
  CHECK(space.dim() == 2);
}

TEST_CASE("read_parallel pairs lines and drops empty sides") {
  const auto src = write_file("par_src.txt", "a b\nc\n...\n");
  const auto tgt = write_file("par_tgt.txt", "x\ny z\nw\n");
  ParallelReadStats stats;
  const auto corpus =
      read_parallel(src, tgt, LangTag("eng"), LangTag("fra"),
                    TokenizerConfig{.lowercase = true, .split_punctuation = false}, &stats);
  // third pair survives ("..." is one token with split_punctuation off)
  REQUIRE(corpus.pairs.size() == 3);
  CHECK(corpus.pairs[0].src_tokens == std::vector<std::string>{"a", "b"});
  CHECK(corpus.pairs[0].tgt_tokens == std::vector<std::string>{"x"});
  CHECK(corpus.pairs[1].src_tokens == std::vector<std::string>{"c"});
  CHECK(stats.dropped_pairs == 0);

  const auto src2 = write_file("par_src2.txt", "\nc\n");
  const auto tgt2 = write_file("par_tgt2.txt", "x\ny\n");
  const auto corpus2 = read_parallel(src2, tgt2, LangTag("eng"), LangTag("fra"), {}, &stats);
  CHECK(corpus2.pairs.size() == 1);
  CHECK(stats.dropped_pairs == 1);
}

TEST_CASE("read_parallel line count mismatch") {
  const auto src = write_file("par_src3.txt", "a\nb\nc\n");
  const auto tgt = write_file("par_tgt3.txt", "x\ny\n");
  CHECK_THROWS_AS(read_parallel(src, tgt, LangTag("eng"), LangTag("fra")), LineCountMismatch);
}

TEST_CASE("read_dictionary dedups and keeps order") {
  const auto p = write_file("dict.tsv", "dog\tchien\ncat\tchat\ndog\tchien\n");
  const auto dict = read_dictionary(p);
  REQUIRE(dict.entries.size() == 2);
  CHECK(dict.entries[0].first == "dog");
  CHECK(dict.entries[0].second == "chien");
  CHECK(dict.entries[1].first == "cat");

  const auto bad = write_file("dict_bad.tsv", "a\tb\tc\n");
  CHECK_THROWS_AS(read_dictionary(bad), MalformedRow);
}

TEST_CASE("format_double is shortest round-trip") {
  for (double v : {0.1, -0.0, 1.0 / 3.0, 1e-300, 123456.789, 2.5}) {
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(2.5) == "2.5");
  CHECK(format_double(0.1) == "0.1");
  CHECK_THROWS_AS(parse_double("1.2.3"), ParseError);
  CHECK_THROWS_AS(parse_double(""), ParseError);
}
