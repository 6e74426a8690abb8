#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace objreason {

/// Fixed question vocabulary shared by every task. Token ids are indices
/// into `tokens()`.
class Vocab {
 public:
  static const std::vector<std::string>& tokens();
  static int size() { return static_cast<int>(tokens().size()); }
  static int id(std::string_view token);
  static const std::string& token(int id);
  static bool valid(int id) { return id >= 0 && id < size(); }

  static int color_token(int color);
  static int shape_token(int shape);
  static int number_token(int n);

  /// Answer vocabulary of the descriptive head: number words, object colors,
  /// and "none". Returns the answer-class index of a token, or -1.
  static const std::vector<int>& answer_tokens();
  static int answer_class(int token_id);
  static int answer_size() { return static_cast<int>(answer_tokens().size()); }

  static std::string render(const std::vector<int>& ids);
};

}  // namespace objreason
