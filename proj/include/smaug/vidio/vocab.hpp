#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace smaug::vidio {

inline constexpr std::uint32_t kClsId = 0;
inline constexpr std::uint32_t kMaskId = 1;

/// Token sequence with a leading CLS id.
struct Caption {
  std::vector<std::uint32_t> token_ids;

  std::size_t size() const noexcept { return token_ids.size(); }
  bool operator==(const Caption&) const = default;
};

/// Closed vocabulary of the synthetic corpus: two special tokens, colour,
/// shape and motion words, and the connective "and".
class Vocab {
 public:
  static const Vocab& instance();

  std::size_t size() const noexcept { return words_.size(); }
  std::uint32_t id(std::string_view word) const;  // throws on out-of-vocabulary words
  const std::string& word(std::uint32_t id) const;

  const std::vector<std::string>& colors() const noexcept { return colors_; }
  const std::vector<std::string>& shapes() const noexcept { return shapes_; }
  const std::vector<std::string>& motions() const noexcept { return motions_; }

 private:
  Vocab();
  std::vector<std::string> words_;
  std::vector<std::string> colors_, shapes_, motions_;
};

/// Rejects captions shorter than CLS + one token or with ids outside the vocabulary.
void validate_caption(const Caption& c, std::size_t vocab_size);

/// Whitespace split, word -> id, CLS prepended.
Caption tokenize(std::string_view text);
/// Inverse of tokenize (CLS dropped, words joined by single spaces).
std::string detokenize(const Caption& c);

}  // namespace smaug::vidio
