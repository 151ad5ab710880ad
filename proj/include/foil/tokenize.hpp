#ifndef FOIL_TOKENIZE_HPP
#define FOIL_TOKENIZE_HPP

#include <string>
#include <string_view>
#include <vector>

namespace foil {

/// Lowercases and splits on anything that is not [a-z0-9].
/// "A dog, on a couch." -> {"a", "dog", "on", "a", "couch"}
std::vector<std::string> tokenize(std::string_view text);

/// Joins tokens with single spaces.
std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace foil

#endif
