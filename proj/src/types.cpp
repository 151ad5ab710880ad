#include "foil/types.hpp"

namespace foil {

std::string to_string(Label label) {
  return label == Label::Real ? "REAL" : "FOIL";
}

Label label_from_string(const std::string& s) {
  if (s == "REAL") return Label::Real;
  if (s == "FOIL") return Label::Foil;
  throw DataError("unknown label '" + s + "' (expected REAL or FOIL)");
}

std::string to_string(PosSubset pos) {
  switch (pos) {
    case PosSubset::Noun: return "noun";
    case PosSubset::Verb: return "verb";
    case PosSubset::Adjective: return "adjective";
    case PosSubset::Adverb: return "adverb";
    case PosSubset::Preposition: return "preposition";
  }
  return "noun";
}

PosSubset pos_from_string(const std::string& s) {
  if (s == "noun") return PosSubset::Noun;
  if (s == "verb") return PosSubset::Verb;
  if (s == "adjective") return PosSubset::Adjective;
  if (s == "adverb") return PosSubset::Adverb;
  if (s == "preposition") return PosSubset::Preposition;
  throw DataError("unknown pos subset '" + s + "'");
}

}  // namespace foil
