#include "pllcop/parser.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace pllcop {

ParseError::ParseError(const std::string& msg, int line, int column)
    : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
      line_(line),
      column_(column) {}

namespace {

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  // Like skip_space but stops at newlines.
  void skip_inline_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) {
      advance();
    }
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  int line() const { return line_; }
  int column() const { return column_; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void expect(char c) {
    skip_space();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }

  std::string identifier() {
    skip_space();
    const std::size_t start = pos_;
    while (!at_end()) {
      const char c = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
        advance();
      } else {
        break;
      }
    }
    if (pos_ == start) fail("expected identifier");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string rest_of_line() {
    const std::size_t start = pos_;
    while (!at_end() && text_[pos_] != '\n') advance();
    return std::string(text_.substr(start, pos_ - start));
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, column_); }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

bool is_variable_name(const std::string& s) {
  return std::isupper(static_cast<unsigned char>(s[0])) || s[0] == '_';
}

class ClauseParser {
 public:
  ClauseParser(Lexer& lex, std::unordered_map<std::string, std::size_t>& arities)
      : lex_(lex), arities_(arities) {}

  Literal literal() {
    lex_.skip_space();
    bool positive = true;
    if (lex_.peek() == '~') {
      lex_.advance();
      positive = false;
    }
    lex_.skip_space();
    const int line = lex_.line();
    const int col = lex_.column();
    const std::string name = lex_.identifier();
    if (is_variable_name(name)) throw ParseError("variable used as predicate: " + name, line, col);
    return {positive, application(name, line, col)};
  }

 private:
  Term term() {
    lex_.skip_space();
    const int line = lex_.line();
    const int col = lex_.column();
    const std::string name = lex_.identifier();
    if (is_variable_name(name)) {
      auto [it, inserted] = vars_.emplace(name, static_cast<VarId>(vars_.size()));
      lex_.skip_space();
      if (lex_.peek() == '(') lex_.fail("variable applied to arguments: " + name);
      return Term::variable(it->second);
    }
    return application(name, line, col);
  }

  Term application(const std::string& name, int line, int col) {
    std::vector<Term> args;
    lex_.skip_space();
    if (lex_.peek() == '(') {
      lex_.advance();
      args.push_back(term());
      lex_.skip_space();
      while (lex_.peek() == ',') {
        lex_.advance();
        args.push_back(term());
        lex_.skip_space();
      }
      lex_.expect(')');
    }
    auto [it, inserted] = arities_.emplace(name, args.size());
    if (!inserted && it->second != args.size()) {
      throw ParseError("arity mismatch for '" + name + "': " + std::to_string(args.size()) +
                           " vs " + std::to_string(it->second),
                       line, col);
    }
    return Term::app(name, std::move(args));
  }

  Lexer& lex_;
  std::unordered_map<std::string, std::size_t>& arities_;
  std::unordered_map<std::string, VarId> vars_;
};

std::vector<int> parse_ids(const std::string& s, int line) {
  std::vector<int> ids;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    for (char& c : tok) {
      if (c == ',') c = ' ';
    }
    std::istringstream sub(tok);
    int id;
    while (sub >> id) ids.push_back(id);
    if (!sub.eof()) throw ParseError("bad clause id in #start header", line, 1);
  }
  return ids;
}

}  // namespace

Problem parse_problem(std::string_view text, std::string name) {
  Problem p;
  p.name = std::move(name);
  Lexer lex(text);
  std::unordered_map<std::string, std::size_t> arities;
  std::optional<std::vector<int>> start;
  int start_line = 0;

  for (;;) {
    lex.skip_space();
    if (lex.at_end()) break;
    if (lex.peek() == '#') {
      const int line = lex.line();
      lex.advance();
      std::string header = lex.rest_of_line();
      const auto colon = header.find(':');
      if (colon == std::string::npos) throw ParseError("header without ':'", line, 1);
      std::string key = header.substr(0, colon);
      std::string value = header.substr(colon + 1);
      while (!value.empty() && std::isspace(static_cast<unsigned char>(value.front()))) value.erase(0, 1);
      while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back()))) value.pop_back();
      if (key == "start") {
        start = parse_ids(value, line);
        start_line = line;
      } else if (key == "name") {
        p.name = value;
      } else {
        p.metadata[key] = value;
      }
      continue;
    }
    ClauseParser cp(lex, arities);
    Clause c;
    c.id = static_cast<int>(p.clauses.size());
    c.literals.push_back(cp.literal());
    for (;;) {
      lex.skip_space();
      if (lex.peek() == '|') {
        lex.advance();
        lex.skip_space();
        if (lex.peek() == '.' || lex.at_end()) lex.fail("dangling '|'");
        c.literals.push_back(cp.literal());
      } else if (lex.peek() == '.') {
        lex.advance();
        break;
      } else if (lex.at_end()) {
        lex.fail("clause not terminated by '.'");
      } else {
        lex.fail(std::string("unexpected character '") + lex.peek() + "'");
      }
    }
    p.clauses.push_back(std::move(c));
  }

  if (start) {
    for (int id : *start) {
      if (id < 0 || id >= static_cast<int>(p.clauses.size())) {
        throw ParseError("start clause " + std::to_string(id) + " does not exist", start_line, 1);
      }
    }
    p.start_clause_ids = *start;
  } else {
    for (const Clause& c : p.clauses) p.start_clause_ids.push_back(c.id);
  }
  return p;
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string name = path;
  const auto slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  const auto dot = name.find_last_of('.');
  if (dot != std::string::npos && dot > 0) name = name.substr(0, dot);
  return parse_problem(ss.str(), name);
}

std::string print_problem(const Problem& p) {
  std::string out;
  if (!p.name.empty()) out += "#name: " + p.name + "\n";
  for (const auto& [k, v] : p.metadata) out += "#" + k + ": " + v + "\n";
  out += "#start:";
  for (int id : p.start_clause_ids) out += " " + std::to_string(id);
  out += "\n";
  for (const Clause& c : p.clauses) out += to_string(c) + "\n";
  return out;
}

Problem convert_tptp_cnf(std::string_view text, std::string name) {
  // Rewrites each cnf(...) into a matrix line, then reuses the matrix parser.
  std::string matrix;
  std::vector<int> starts;
  int clause_index = 0;
  std::size_t pos = 0;
  while ((pos = text.find("cnf(", pos)) != std::string_view::npos) {
    const std::size_t c1 = text.find(',', pos);
    const std::size_t c2 = c1 == std::string_view::npos ? c1 : text.find(',', c1 + 1);
    if (c2 == std::string_view::npos) throw Error("malformed cnf record");
    std::string role(text.substr(c1 + 1, c2 - c1 - 1));
    std::erase_if(role, [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    const std::size_t end = text.find(").", c2);
    if (end == std::string_view::npos) throw Error("unterminated cnf record");
    std::string body(text.substr(c2 + 1, end - c2 - 1));
    while (!body.empty() && std::isspace(static_cast<unsigned char>(body.front()))) body.erase(0, 1);
    if (!body.empty() && body.front() == '(' && body.back() == ')') body = body.substr(1, body.size() - 2);
    std::string line;
    std::size_t lit_start = 0;
    int depth = 0;
    auto flush = [&](std::size_t stop) {
      std::string lit = body.substr(lit_start, stop - lit_start);
      while (!lit.empty() && std::isspace(static_cast<unsigned char>(lit.front()))) lit.erase(0, 1);
      while (!lit.empty() && std::isspace(static_cast<unsigned char>(lit.back()))) lit.pop_back();
      if (!line.empty()) line += " | ";
      line += (!lit.empty() && lit.front() == '~') ? lit.substr(1) : "~" + lit;
    };
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '(') ++depth;
      if (body[i] == ')') --depth;
      if (body[i] == '|' && depth == 0) {
        flush(i);
        lit_start = i + 1;
      }
    }
    flush(body.size());
    matrix += line + ".\n";
    if (role == "negated_conjecture") starts.push_back(clause_index);
    ++clause_index;
    pos = end;
  }
  Problem p = parse_problem(matrix, std::move(name));
  if (!starts.empty()) p.start_clause_ids = starts;
  return p;
}

}  // namespace pllcop
