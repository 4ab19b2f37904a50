#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "latent/simsearch.hpp"

namespace latent {

using ParamList = std::vector<std::pair<std::string, std::string>>;

// Backslash-escapes tab, newline, carriage return and backslash.
std::string EscapeTsv(std::string_view field);
std::string UnescapeTsv(std::string_view field);

// Shortest decimal that round-trips to the same double.
std::string FormatDouble(double value);

// "# latent <command>" followed by one "# key=value" line per parameter.
// Comment lines written after the header start with a word followed by a
// space ("# fit slope=..."), so the parameter block ends at the first of them.
void WriteHeader(std::ostream& out, std::string_view command, const ParamList& params);

void WriteTsvRow(std::ostream& out, const std::vector<std::string>& fields);

// Columns of the suggestion table shared by the CLI and the service.
const std::vector<std::string>& SuggestionColumns();
std::vector<std::string> SuggestionFields(const SuggestionResult& result,
                                          const Suggestion& suggestion);

}  // namespace latent
