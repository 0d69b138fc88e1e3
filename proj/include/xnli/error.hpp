#pragma once

#include <stdexcept>
#include <string>

namespace xnli {

// Base type for all toolkit errors. Subtypes exist so callers can recover
// from specific conditions; messages are single-line and name the offending
// input (path, token, line) where one exists.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define XNLI_DEFINE_ERROR(NAME)                                   \
  class NAME : public Error {                                     \
   public:                                                        \
    explicit NAME(const std::string& msg) : Error(msg) {}         \
  }

// core
XNLI_DEFINE_ERROR(UnknownLabel);
XNLI_DEFINE_ERROR(InvalidToken);
XNLI_DEFINE_ERROR(InvalidLangTag);

// ingest
XNLI_DEFINE_ERROR(IoError);
XNLI_DEFINE_ERROR(MalformedRow);
XNLI_DEFINE_ERROR(HeaderMismatch);
XNLI_DEFINE_ERROR(ParseError);
XNLI_DEFINE_ERROR(DuplicateToken);
XNLI_DEFINE_ERROR(LineCountMismatch);

// numkit
XNLI_DEFINE_ERROR(EmptyInput);
XNLI_DEFINE_ERROR(EmptyVector);
XNLI_DEFINE_ERROR(ShapeMismatch);
XNLI_DEFINE_ERROR(RankTooLarge);
XNLI_DEFINE_ERROR(ConvergenceFailure);
XNLI_DEFINE_ERROR(NonFiniteValue);

// xembed
XNLI_DEFINE_ERROR(NoUsablePairs);
XNLI_DEFINE_ERROR(DimMismatch);
XNLI_DEFINE_ERROR(EmptySide);
XNLI_DEFINE_ERROR(EmptyCorpus);
XNLI_DEFINE_ERROR(DegenerateVocabulary);

// nli
XNLI_DEFINE_ERROR(EmptySentence);
XNLI_DEFINE_ERROR(LengthMismatch);
XNLI_DEFINE_ERROR(EmptyDataset);

// eval
XNLI_DEFINE_ERROR(SizeOutOfRange);
XNLI_DEFINE_ERROR(EmptySizes);
XNLI_DEFINE_ERROR(OutOfRange);

#undef XNLI_DEFINE_ERROR

}  // namespace xnli
