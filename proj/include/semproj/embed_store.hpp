#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semproj {

/// Immutable in-memory word-vector store. Rows are ordered by the source
/// file's line order, which for published GloVe releases is descending
/// corpus frequency. Safe to share across threads once constructed.
class EmbeddingStore {
 public:
  using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  enum class Resolution { Direct, ConstituentMean };

  struct ResolvedItem {
    Eigen::VectorXf vec;
    Resolution resolution;
    std::string token;  // the normalized token (or hyphen-joined form)
  };

  EmbeddingStore(std::vector<std::string> vocab, Matrix matrix, std::string source_meta,
                 std::size_t duplicates_dropped = 0);

  Eigen::Index dim() const { return matrix_.cols(); }
  Eigen::Index size() const { return matrix_.rows(); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const Matrix& matrix() const { return matrix_; }
  const std::string& source_meta() const { return source_meta_; }
  std::size_t duplicates_dropped() const { return duplicates_dropped_; }

  bool contains(std::string_view token) const;

  /// Row for lowercase(token). Throws NotInVocabulary if absent.
  Eigen::VectorXf lookup(std::string_view token) const;

  /// Lowercases, joins internal spaces with hyphens, and falls back to the
  /// mean of constituent-token rows for multi-word items.
  ResolvedItem resolve_item(std::string_view item) const;

  void save_cache(const std::string& path) const;
  static EmbeddingStore load_cache(const std::string& path);

  static EmbeddingStore load_embeddings(const std::string& path, std::size_t vocab_limit);

  /// Text parse or cache load, chosen by sniffing the magic bytes.
  static EmbeddingStore open(const std::string& path, std::size_t vocab_limit);

 private:
  std::vector<std::string> vocab_;
  Matrix matrix_;
  std::unordered_map<std::string, Eigen::Index> index_;
  std::string source_meta_;
  std::size_t duplicates_dropped_ = 0;
};

/// ASCII lowercasing; multi-byte UTF-8 sequences pass through untouched.
std::string to_lower(std::string_view s);

/// Item-name normalization: lowercase, internal whitespace runs -> '-'.
std::string normalize_item(std::string_view item);

}  // namespace semproj
