#include "cmpe/uai.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace cmpe {

namespace {

// Whitespace tokenizer that tracks line numbers for error messages.
class Tokenizer {
 public:
  explicit Tokenizer(std::istream& in) : in_(in) {}

  bool next(std::string& tok) {
    tok.clear();
    int c;
    while ((c = in_.get()) != EOF) {
      if (c == '\n') ++line_;
      if (!std::isspace(c)) break;
    }
    if (c == EOF) return false;
    tok.push_back(static_cast<char>(c));
    while ((c = in_.get()) != EOF && !std::isspace(c))
      tok.push_back(static_cast<char>(c));
    if (c == '\n') ++line_;
    return true;
  }

  std::string expect(const char* what) {
    std::string tok;
    if (!next(tok)) throw ParseError(line_, std::string("unexpected end of input, expected ") + what);
    return tok;
  }

  long expect_int(const char* what) {
    const std::string tok = expect(what);
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(tok, &pos);
    } catch (const std::exception&) {
      throw ParseError(line_, "malformed token '" + tok + "', expected " + what);
    }
    if (pos != tok.size())
      throw ParseError(line_, "malformed token '" + tok + "', expected " + what);
    return v;
  }

  double expect_real(const char* what) {
    const std::string tok = expect(what);
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      throw ParseError(line_, "malformed token '" + tok + "', expected " + what);
    }
    if (pos != tok.size())
      throw ParseError(line_, "malformed token '" + tok + "', expected " + what);
    return v;
  }

  int line() const { return line_; }

 private:
  std::istream& in_;
  int line_ = 1;
};

}  // namespace

MarkovNetwork parse_uai(std::istream& in, bool tables_are_probabilities) {
  Tokenizer tk(in);
  const std::string preamble = tk.expect("MARKOV preamble");
  if (preamble != "MARKOV")
    throw ParseError(tk.line(), "expected MARKOV preamble, got '" + preamble + "'");

  MarkovNetwork net;
  const long n_vars = tk.expect_int("variable count");
  if (n_vars < 0) throw ParseError(tk.line(), "negative variable count");
  net.n_vars = static_cast<std::uint32_t>(n_vars);

  net.cardinalities.reserve(net.n_vars);
  for (std::uint32_t i = 0; i < net.n_vars; ++i) {
    const long c = tk.expect_int("cardinality");
    if (c != 2)
      throw ParseError(tk.line(), "cardinality " + std::to_string(c) +
                                      " for variable " + std::to_string(i) +
                                      " (binary networks only)");
    net.cardinalities.push_back(2);
  }

  const long n_cliques = tk.expect_int("clique count");
  if (n_cliques < 0) throw ParseError(tk.line(), "negative clique count");
  net.potentials.resize(static_cast<std::size_t>(n_cliques));

  for (auto& pot : net.potentials) {
    const long scope_size = tk.expect_int("scope size");
    if (scope_size < 0) throw ParseError(tk.line(), "negative scope size");
    std::set<VarIndex> seen;
    for (long j = 0; j < scope_size; ++j) {
      const long v = tk.expect_int("scope variable");
      if (v < 0 || v >= n_vars)
        throw ParseError(tk.line(), "scope variable " + std::to_string(v) +
                                        " out of range");
      if (!seen.insert(static_cast<VarIndex>(v)).second)
        throw ParseError(tk.line(), "duplicate variable in scope");
      pot.scope.push_back(static_cast<VarIndex>(v));
    }
  }

  for (std::size_t ci = 0; ci < net.potentials.size(); ++ci) {
    auto& pot = net.potentials[ci];
    const long declared = tk.expect_int("table length");
    const std::size_t expected = std::size_t{1} << pot.scope.size();
    if (declared < 0 || static_cast<std::size_t>(declared) != expected)
      throw ParseError(tk.line(), "table length mismatch for clique " +
                                      std::to_string(ci) + " (expected " +
                                      std::to_string(expected) + ", got " +
                                      std::to_string(declared) + ")");
    pot.table.reserve(expected);
    for (std::size_t j = 0; j < expected; ++j) {
      double v = tk.expect_real("table entry");
      if (tables_are_probabilities) {
        if (v <= 0.0)
          throw ParseError(tk.line(), "non-positive probability entry");
        v = std::log(v);
      }
      pot.table.push_back(v);
    }
  }

  std::string extra;
  if (tk.next(extra))
    throw ParseError(tk.line(), "trailing token '" + extra + "'");
  return net;
}

MarkovNetwork parse_uai_file(const std::string& path, bool tables_are_probabilities) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  return parse_uai(in, tables_are_probabilities);
}

void write_uai(const MarkovNetwork& net, std::ostream& out) {
  out << "MARKOV\n" << net.n_vars << "\n";
  for (std::uint32_t i = 0; i < net.n_vars; ++i)
    out << (i ? " " : "") << net.cardinalities[i];
  out << "\n" << net.potentials.size() << "\n";
  for (const auto& pot : net.potentials) {
    out << pot.scope.size();
    for (VarIndex v : pot.scope) out << " " << v;
    out << "\n";
  }
  char buf[40];
  for (const auto& pot : net.potentials) {
    out << "\n" << pot.table.size() << "\n";
    for (std::size_t i = 0; i < pot.table.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", pot.table[i]);
      out << buf << ((i + 1) % 4 == 0 || i + 1 == pot.table.size() ? "\n" : " ");
    }
  }
}

void write_uai_file(const MarkovNetwork& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_uai(net, out);
}

Evidence parse_evidence(std::istream& in, std::uint32_t n_vars) {
  Tokenizer tk(in);
  const long count = tk.expect_int("evidence count");
  if (count < 0) throw ParseError(tk.line(), "negative evidence count");
  Evidence ev;
  std::set<VarIndex> seen;
  for (long i = 0; i < count; ++i) {
    const long idx = tk.expect_int("evidence variable");
    const long val = tk.expect_int("evidence value");
    if (idx < 0 || static_cast<std::uint32_t>(idx) >= n_vars)
      throw ParseError(tk.line(), "evidence variable out of range");
    if (val != 0 && val != 1)
      throw ParseError(tk.line(), "evidence value must be 0 or 1");
    if (!seen.insert(static_cast<VarIndex>(idx)).second)
      throw ParseError(tk.line(), "duplicate evidence variable");
    ev.emplace_back(static_cast<VarIndex>(idx), static_cast<double>(val));
  }
  return ev;
}

Evidence parse_evidence_file(const std::string& path, std::uint32_t n_vars) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open evidence file: " + path);
  return parse_evidence(in, n_vars);
}

}  // namespace cmpe
