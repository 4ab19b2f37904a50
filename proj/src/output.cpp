#include "latent/output.hpp"

#include <charconv>

namespace latent {

std::string EscapeTsv(std::string_view field) {
  std::string out;
  out.reserve(field.size());
  for (char c : field) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  return out;
}

std::string UnescapeTsv(std::string_view field) {
  std::string out;
  out.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] != '\\' || i + 1 == field.size()) {
      out += field[i];
      continue;
    }
    switch (field[++i]) {
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: out += field[i];
    }
  }
  return out;
}

std::string FormatDouble(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

void WriteHeader(std::ostream& out, std::string_view command, const ParamList& params) {
  out << "# latent " << command << '\n';
  for (const auto& [key, value] : params) {
    out << "# " << key << '=' << EscapeTsv(value) << '\n';
  }
}

void WriteTsvRow(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << '\t';
    out << fields[i];
  }
  out << '\n';
}

const std::vector<std::string>& SuggestionColumns() {
  static const std::vector<std::string> columns = {
      "query", "rank", "score", "sentence_id", "source_doc", "text", "covered_tokens"};
  return columns;
}

std::vector<std::string> SuggestionFields(const SuggestionResult& result,
                                          const Suggestion& s) {
  std::string covered;
  for (std::size_t i = 0; i < s.covered.size(); ++i) {
    if (i) covered += ' ';
    covered += s.covered[i];
  }
  return {EscapeTsv(result.query), std::to_string(s.rank), FormatDouble(s.score),
          EscapeTsv(s.sentence_id), EscapeTsv(s.doc_id), EscapeTsv(s.text),
          EscapeTsv(covered)};
}

}  // namespace latent
