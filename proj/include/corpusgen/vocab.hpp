#ifndef CORPUSGEN_VOCAB_HPP
#define CORPUSGEN_VOCAB_HPP

#include <string>
#include <vector>

namespace corpusgen {

// Token <-> id bijection with four reserved ids. Ids 0..3 are fixed;
// corpus tokens follow in byte-lexicographic order so two builds over
// the same token set agree exactly.
class Vocab {
public:
  static constexpr int pad_id = 0;
  static constexpr int bos_id = 1;
  static constexpr int eos_id = 2;
  static constexpr int unk_id = 3;

  Vocab();

  static Vocab build(const std::vector<std::vector<std::string>> &sequences);

  int size() const { return static_cast<int>(tokens_.size()); }
  bool contains(const std::string &token) const;
  int id(const std::string &token) const; // unk_id when absent
  int require_id(const std::string &token) const; // throws when absent
  const std::string &token(int id) const;         // throws out of range

  // OOV tokens become unk_id; no BOS/EOS framing is added here.
  std::vector<int> encode(const std::vector<std::string> &tokens) const;
  std::vector<std::string> decode(const std::vector<int> &ids) const;

  // All tokens ordered by id, reserved ones first.
  const std::vector<std::string> &tokens() const { return tokens_; }

  // Rebuild from a saved id-ordered token list (reserved ids checked).
  static Vocab from_tokens(std::vector<std::string> tokens);

private:
  std::vector<std::string> tokens_;
};

} // namespace corpusgen

#endif
