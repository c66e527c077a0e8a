#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "cmpe/poly.hpp"

namespace cmpe {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Parses the UAI-competition MARKOV text format. Tables are interpreted as
// natural-log values; with tables_are_probabilities the entries must be
// strictly positive and are log-transformed on load. Only binary variables
// are in scope; any other cardinality is a ParseError.
MarkovNetwork parse_uai(std::istream& in, bool tables_are_probabilities = false);
MarkovNetwork parse_uai_file(const std::string& path,
                             bool tables_are_probabilities = false);

void write_uai(const MarkovNetwork& net, std::ostream& out);
void write_uai_file(const MarkovNetwork& net, const std::string& path);

// UAI evidence convention: "count idx val ..." whitespace-separated pairs.
Evidence parse_evidence(std::istream& in, std::uint32_t n_vars);
Evidence parse_evidence_file(const std::string& path, std::uint32_t n_vars);

}  // namespace cmpe
