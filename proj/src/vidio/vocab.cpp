#include "smaug/vidio/vocab.hpp"

#include <sstream>
#include <stdexcept>

namespace smaug::vidio {

Vocab::Vocab()
    : colors_{"red",  "green", "blue",   "yellow", "cyan", "magenta", "orange", "purple",
              "white", "pink", "lime",   "teal",   "navy", "maroon",  "olive",  "gray"},
      shapes_{"circle", "square", "triangle", "diamond", "cross", "ring"},
      motions_{"left", "right", "up", "down", "still", "diagonal"} {
  words_ = {"[CLS]", "[MASK]"};
  for (const auto* group : {&colors_, &shapes_, &motions_}) words_.insert(words_.end(), group->begin(), group->end());
  words_.push_back("and");
}

const Vocab& Vocab::instance() {
  static const Vocab v;
  return v;
}

std::uint32_t Vocab::id(std::string_view word) const {
  for (std::size_t i = 2; i < words_.size(); ++i) {
    if (words_[i] == word) return static_cast<std::uint32_t>(i);
  }
  throw std::invalid_argument("out-of-vocabulary word: '" + std::string(word) + "'");
}

const std::string& Vocab::word(std::uint32_t id) const {
  if (id >= words_.size()) throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
  return words_[id];
}

void validate_caption(const Caption& c, std::size_t vocab_size) {
  if (c.token_ids.size() < 2) {
    throw std::invalid_argument("caption needs CLS plus at least one token, got length " +
                                std::to_string(c.token_ids.size()));
  }
  if (c.token_ids.front() != kClsId) throw std::invalid_argument("caption must start with CLS");
  for (auto id : c.token_ids) {
    if (id >= vocab_size) {
      throw std::out_of_range("caption id " + std::to_string(id) + " >= vocab size " + std::to_string(vocab_size));
    }
  }
}

Caption tokenize(std::string_view text) {
  const auto& vocab = Vocab::instance();
  Caption c{{kClsId}};
  std::istringstream is{std::string(text)};
  std::string w;
  while (is >> w) c.token_ids.push_back(vocab.id(w));
  validate_caption(c, vocab.size());
  return c;
}

std::string detokenize(const Caption& c) {
  const auto& vocab = Vocab::instance();
  std::string out;
  for (std::size_t i = 1; i < c.token_ids.size(); ++i) {
    if (i > 1) out += ' ';
    out += vocab.word(c.token_ids[i]);
  }
  return out;
}

}  // namespace smaug::vidio
