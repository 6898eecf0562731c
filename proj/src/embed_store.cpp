#include "semproj/embed_store.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "semproj/error.hpp"

namespace semproj {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'M', 'P', 'R', 'J', '1', '\0'};

template <typename T>
void write_le(std::ostream& out, T value) {
  // Little-endian host assumed; format is defined little-endian.
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ParseError("cache file truncated");
  return value;
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string normalize_item(std::string_view item) {
  std::string lowered = to_lower(item);
  std::string out;
  out.reserve(lowered.size());
  bool in_space = false;
  for (char c : lowered) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_space = !out.empty();
      continue;
    }
    if (in_space) {
      out.push_back('-');
      in_space = false;
    }
    out.push_back(c);
  }
  return out;
}

EmbeddingStore::EmbeddingStore(std::vector<std::string> vocab, Matrix matrix,
                               std::string source_meta, std::size_t duplicates_dropped)
    : vocab_(std::move(vocab)),
      matrix_(std::move(matrix)),
      source_meta_(std::move(source_meta)),
      duplicates_dropped_(duplicates_dropped) {
  if (static_cast<Eigen::Index>(vocab_.size()) != matrix_.rows())
    throw InvalidInput("vocab size does not match matrix rows");
  index_.reserve(vocab_.size());
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(vocab_.size()); ++i) {
    if (vocab_[i].empty()) throw InvalidInput("empty token in vocabulary");
    if (!index_.emplace(vocab_[i], i).second)
      throw InvalidInput("duplicate token in vocabulary: " + vocab_[i]);
  }
}

bool EmbeddingStore::contains(std::string_view token) const {
  return index_.count(to_lower(token)) > 0;
}

Eigen::VectorXf EmbeddingStore::lookup(std::string_view token) const {
  auto it = index_.find(to_lower(token));
  if (it == index_.end()) throw NotInVocabulary(std::string(token));
  return matrix_.row(it->second).transpose();
}

EmbeddingStore::ResolvedItem EmbeddingStore::resolve_item(std::string_view item) const {
  if (item.empty()) throw InvalidInput("empty item name");
  const std::string joined = normalize_item(item);
  auto it = index_.find(joined);
  if (it != index_.end())
    return {matrix_.row(it->second).transpose(), Resolution::Direct, joined};

  // Constituent-mean fallback for multi-word items.
  std::vector<Eigen::Index> rows;
  std::size_t start = 0;
  while (start <= joined.size()) {
    std::size_t end = joined.find('-', start);
    if (end == std::string::npos) end = joined.size();
    const std::string part = joined.substr(start, end - start);
    if (!part.empty()) {
      auto pit = index_.find(part);
      if (pit == index_.end()) throw UnresolvableItem(std::string(item));
      rows.push_back(pit->second);
    }
    start = end + 1;
  }
  if (rows.size() < 2) throw UnresolvableItem(std::string(item));
  Eigen::VectorXf mean = Eigen::VectorXf::Zero(dim());
  for (Eigen::Index r : rows) mean += matrix_.row(r).transpose();
  mean /= static_cast<float>(rows.size());
  return {std::move(mean), Resolution::ConstituentMean, joined};
}

EmbeddingStore EmbeddingStore::load_embeddings(const std::string& path, std::size_t vocab_limit) {
  if (vocab_limit == 0) throw InvalidInput("vocab_limit must be positive");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embedding file: " + path);

  std::vector<std::string> vocab;
  std::vector<float> values;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  std::size_t duplicates = 0;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;

  // The cap applies to file lines: the first vocab_limit lines are
  // considered, and lowercase duplicates within them are dropped.
  while (line_no < vocab_limit && std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const char* p = line.data();
    const char* end = p + line.size();
    const char* tok_end = p;
    while (tok_end < end && *tok_end != ' ' && *tok_end != '\t') ++tok_end;
    std::string token = to_lower(std::string_view(p, static_cast<std::size_t>(tok_end - p)));
    if (token.empty())
      throw ParseError(path + ":" + std::to_string(line_no) + ": missing token");

    std::vector<float> row;
    row.reserve(dim ? dim : 300);
    const char* q = tok_end;
    while (q < end) {
      while (q < end && (*q == ' ' || *q == '\t')) ++q;
      if (q >= end) break;
      float v = 0.0f;
      auto [next, ec] = std::from_chars(q, end, v);
      if (ec != std::errc())
        throw ParseError(path + ":" + std::to_string(line_no) + ": bad float near '" +
                         std::string(q, std::min<std::size_t>(8, static_cast<std::size_t>(end - q))) + "'");
      if (!std::isfinite(v))
        throw ParseError(path + ":" + std::to_string(line_no) + ": non-finite value");
      row.push_back(v);
      q = next;
    }

    if (dim == 0) {
      dim = row.size();
      if (dim == 0) throw ParseError(path + ":" + std::to_string(line_no) + ": no vector values");
    } else if (row.size() != dim) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                       " values, got " + std::to_string(row.size()));
    }

    if (!seen.emplace(token, vocab.size()).second) {
      ++duplicates;  // keep the earlier (more frequent) occurrence
      continue;
    }
    vocab.push_back(std::move(token));
    values.insert(values.end(), row.begin(), row.end());
  }

  if (vocab.empty()) throw ParseError(path + ": empty embedding file");

  Matrix matrix(static_cast<Eigen::Index>(vocab.size()), static_cast<Eigen::Index>(dim));
  std::memcpy(matrix.data(), values.data(), values.size() * sizeof(float));

  std::string meta = path + " (vocab cap " + std::to_string(vocab_limit) + ", retained " +
                     std::to_string(vocab.size());
  if (duplicates > 0) meta += ", dropped " + std::to_string(duplicates) + " lowercase duplicates";
  meta += ")";
  return EmbeddingStore(std::move(vocab), std::move(matrix), std::move(meta), duplicates);
}

void EmbeddingStore::save_cache(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open cache for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim()));
  write_le<std::uint64_t>(out, static_cast<std::uint64_t>(size()));
  for (const auto& token : vocab_) {
    if (token.size() > 0xFFFF) throw Error("token too long for cache format: " + token);
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(token.size()));
    out.write(token.data(), static_cast<std::streamsize>(token.size()));
  }
  out.write(reinterpret_cast<const char*>(matrix_.data()),
            static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(matrix_.size())));
  if (!out) throw Error("write failure on cache: " + path);
}

EmbeddingStore EmbeddingStore::load_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open cache: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError(path + ": bad cache magic");
  const auto dim = read_le<std::uint32_t>(in);
  const auto count = read_le<std::uint64_t>(in);
  if (dim == 0 || count == 0) throw ParseError(path + ": empty cache header");

  std::vector<std::string> vocab;
  vocab.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = read_le<std::uint16_t>(in);
    std::string token(len, '\0');
    in.read(token.data(), len);
    if (!in) throw ParseError(path + ": truncated token table");
    vocab.push_back(std::move(token));
  }

  Matrix matrix(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  const std::streamsize bytes =
      static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(matrix.size()));
  in.read(reinterpret_cast<char*>(matrix.data()), bytes);
  if (!in || in.gcount() != bytes) throw ParseError(path + ": truncated matrix payload");

  return EmbeddingStore(std::move(vocab), std::move(matrix), path + " (cache)");
}

EmbeddingStore EmbeddingStore::open(const std::string& path, std::size_t vocab_limit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embeddings: " + path);
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  in.close();
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) == 0) return load_cache(path);
  return load_embeddings(path, vocab_limit);
}

}  // namespace semproj
