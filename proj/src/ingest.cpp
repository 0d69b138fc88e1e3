#include "xnli/ingest.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

namespace xnli::ingest {

namespace {

// ---------------------------------------------------------------------------
// UTF-8 and character classes
// ---------------------------------------------------------------------------

// Decodes one codepoint starting at s[i]; advances i. Invalid sequences decode
// to U+FFFD one byte at a time, so tokenization never fails.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const unsigned char b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + len > s.size()) {
    ++i;
    return 0xFFFD;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const unsigned char bk = static_cast<unsigned char>(s[i + k]);
    if ((bk & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (bk & 0x3F);
  }
  i += len;
  return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_space_cp(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_punct_cp(char32_t c) {
  if (c < 0x80)
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
           (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  switch (c) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
    case 0x60C: case 0x60D: case 0x61B: case 0x61E: case 0x61F:  // Arabic
    case 0x66A: case 0x66B: case 0x66C: case 0x66D: case 0x6D4:
    case 0x3001: case 0x3002:  // CJK comma / full stop
      return true;
    default:
      // general punctuation block, minus the separators handled as space
      return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E && c != 0x202F && c != 0x205F);
  }
}

char32_t to_lower_cp(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 0x20;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;  // Latin-1
  if (c >= 0x100 && c <= 0x12F) return (c % 2 == 0) ? c + 1 : c;  // Latin Ext-A pairs
  if (c == 0x130) return 0x69;  // dotted capital I
  if (c >= 0x132 && c <= 0x137) return (c % 2 == 0) ? c + 1 : c;
  if (c >= 0x139 && c <= 0x148) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x14A && c <= 0x177) return (c % 2 == 0) ? c + 1 : c;
  if (c == 0x178) return 0xFF;  // Y with diaeresis
  if (c >= 0x179 && c <= 0x17E) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;  // Cyrillic
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  return c;
}

// ---------------------------------------------------------------------------
// Line reading
// ---------------------------------------------------------------------------

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (in.bad()) throw IoError("read failure on " + path.string());
  return lines;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg) {
  enum class Class { space, punct, word };
  std::vector<std::string> tokens;
  std::string current;
  Class current_class = Class::space;

  auto flush = [&]() {
    if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  };

  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = decode_utf8(text, i);
    Class cls;
    if (is_space_cp(cp))
      cls = Class::space;
    else if (cfg.split_punctuation && is_punct_cp(cp))
      cls = Class::punct;
    else
      cls = Class::word;

    if (cls == Class::space) {
      flush();
      current_class = Class::space;
      continue;
    }
    if (cls != current_class) flush();
    current_class = cls;
    if (cfg.lowercase) cp = to_lower_cp(cp);
    encode_utf8(cp, current);
  }
  flush();
  return tokens;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ParseError("not a number: \"" + std::string(s) + "\"");
  return v;
}

namespace {

std::size_t parse_size(std::string_view s, const char* what) {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ParseError(std::string("not an integer (") + what + "): \"" + std::string(s) + "\"");
  return v;
}

}  // namespace

std::vector<NliExample> read_snli(const std::filesystem::path& path,
                                  const TokenizerConfig& cfg, SnliReadStats* stats) {
  const auto lines = read_lines(path);
  std::vector<NliExample> examples;
  SnliReadStats local;

  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto cells = split_tabs(lines[n]);
    if (n == 0 && !cells.empty() && cells[0] == "gold_label") continue;  // header
    if (cells.size() != 3)
      throw MalformedRow(path.string() + ":" + std::to_string(n + 1) + ": expected 3 columns, got " +
                         std::to_string(cells.size()));
    if (cells[0] == "-") {
      ++local.skipped_no_consensus;
      continue;
    }
    const Label gold = parse_label(cells[0]);
    auto premise = tokenize(cells[1], cfg);
    auto hypothesis = tokenize(cells[2], cfg);
    if (premise.empty() || hypothesis.empty()) {
      ++local.skipped_empty;
      continue;
    }
    examples.push_back({std::move(premise), std::move(hypothesis), gold});
  }
  if (stats) *stats = local;
  return examples;
}

EmbeddingSpace read_embeddings(const std::filesystem::path& path, bool headerless) {
  const auto lines = read_lines(path);
  // Drop trailing blank line if the file ended with LF LF or similar.
  std::size_t line_count = lines.size();
  while (line_count > 0 && lines[line_count - 1].empty()) --line_count;

  std::size_t declared_v = 0;
  std::size_t declared_d = 0;
  std::size_t first_row = 0;

  if (headerless) {
    if (line_count == 0) throw ParseError(path.string() + ": empty embedding file");
    declared_v = line_count;
    const auto fields = split_spaces(lines[0]);
    if (fields.size() < 2)
      throw ParseError(path.string() + ":1: expected token and at least one value");
    declared_d = fields.size() - 1;
  } else {
    if (line_count == 0) throw ParseError(path.string() + ": missing header line");
    const auto header = split_spaces(lines[0]);
    if (header.size() != 2)
      throw ParseError(path.string() + ":1: header must be two integers \"V d\"");
    declared_v = parse_size(header[0], "V");
    declared_d = parse_size(header[1], "d");
    first_row = 1;
    if (line_count - 1 != declared_v)
      throw HeaderMismatch(path.string() + ": header declares " + std::to_string(declared_v) +
                           " rows, body has " + std::to_string(line_count - 1));
  }

  EmbeddingSpace space;
  space.matrix = numkit::Matrix(declared_v, declared_d);
  for (std::size_t r = 0; r < declared_v; ++r) {
    const std::string& line = lines[first_row + r];
    const auto fields = split_spaces(line);
    if (fields.size() != declared_d + 1)
      throw HeaderMismatch(path.string() + ":" + std::to_string(first_row + r + 1) +
                           ": expected " + std::to_string(declared_d) + " values, got " +
                           std::to_string(fields.empty() ? 0 : fields.size() - 1));
    if (space.vocab.contains(fields[0]))
      throw DuplicateToken(path.string() + ": duplicate token \"" + std::string(fields[0]) + "\"");
    const std::size_t idx = space.vocab.add(fields[0]);
    for (std::size_t j = 0; j < declared_d; ++j) {
      const double v = parse_double(fields[j + 1]);
      if (!std::isfinite(v))
        throw ParseError(path.string() + ":" + std::to_string(first_row + r + 1) +
                         ": non-finite value");
      space.matrix(idx, j) = v;
    }
  }
  validate_space(space);
  return space;
}

void write_embeddings(const EmbeddingSpace& space, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << space.vocab.size() << ' ' << space.dim() << '\n';
  std::string line;
  for (std::size_t i = 0; i < space.vocab.size(); ++i) {
    line = space.vocab.token_of(i);
    for (double v : space.matrix.row(i)) {
      line += ' ';
      line += format_double(v);
    }
    line += '\n';
    out << line;
  }
  if (!out) throw IoError("write failure on " + path.string());
}

ParallelCorpus read_parallel(const std::filesystem::path& src_path,
                             const std::filesystem::path& tgt_path,
                             const LangTag& src_lang, const LangTag& tgt_lang,
                             const TokenizerConfig& cfg, ParallelReadStats* stats) {
  const auto src_lines = read_lines(src_path);
  const auto tgt_lines = read_lines(tgt_path);
  if (src_lines.size() != tgt_lines.size())
    throw LineCountMismatch(src_path.string() + " has " + std::to_string(src_lines.size()) +
                            " lines, " + tgt_path.string() + " has " +
                            std::to_string(tgt_lines.size()));

  ParallelCorpus corpus{{}, src_lang, tgt_lang};
  ParallelReadStats local;
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    auto src_tokens = tokenize(src_lines[i], cfg);
    auto tgt_tokens = tokenize(tgt_lines[i], cfg);
    if (src_tokens.empty() || tgt_tokens.empty()) {
      ++local.dropped_pairs;
      continue;
    }
    corpus.pairs.push_back({std::move(src_tokens), std::move(tgt_tokens), src_lang, tgt_lang});
  }
  if (stats) *stats = local;
  return corpus;
}

Dictionary read_dictionary(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  Dictionary dict;
  std::set<std::pair<std::string_view, std::string_view>> seen;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto cells = split_tabs(lines[n]);
    if (cells.size() != 2)
      throw MalformedRow(path.string() + ":" + std::to_string(n + 1) + ": expected 2 columns, got " +
                         std::to_string(cells.size()));
    if (cells[0].empty() || cells[1].empty())
      throw MalformedRow(path.string() + ":" + std::to_string(n + 1) + ": empty word");
    if (!seen.insert({cells[0], cells[1]}).second) continue;  // duplicate pair
    dict.entries.emplace_back(cells[0], cells[1]);
  }
  return dict;
}

}  // namespace xnli::ingest
