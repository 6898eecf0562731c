#pragma once

#include <stdexcept>
#include <string>

namespace semproj {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  using Error::Error;
};

struct NotInVocabulary : Error {
  explicit NotInVocabulary(const std::string& token)
      : Error("token not in vocabulary: " + token) {}
};

struct UnresolvableItem : Error {
  explicit UnresolvableItem(const std::string& item)
      : Error("item cannot be resolved to a vector: " + item) {}
};

struct MissingPoleWord : Error {
  using Error::Error;
};

struct InvalidInput : Error {
  using Error::Error;
};

}  // namespace semproj
