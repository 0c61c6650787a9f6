#include "gridlay/dsl.hpp"

#include <cctype>
#include <sstream>

#include "gridlay/error.hpp"
#include "gridlay/strings.hpp"

namespace gridlay {

std::string_view to_string(ReportKind k) {
  switch (k) {
    case ReportKind::Wirelength: return "wirelength";
    case ReportKind::Drc: return "drc";
    case ReportKind::Lvs: return "lvs";
  }
  return "?";
}

namespace {

enum class Tok { Ident, Int, LParen, RParen, Comma, Dot, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int column = 1;  // 1-based
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '!' || c == '$' || c == '[' ||
         c == ']' || c == '<' || c == '>';
}

[[noreturn]] void syntax_error(int column, const std::string& hint) {
  throw Error(ErrorCode::SyntaxError, "syntax error at column " + std::to_string(column) + ": " + hint,
              {{"position", column}, {"hint", hint}});
}

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    const int col = static_cast<int>(i) + 1;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '#') {
      break;
    } else if (c == '(' || c == ')' || c == ',' || c == '.') {
      const Tok k = c == '(' ? Tok::LParen : c == ')' ? Tok::RParen : c == ',' ? Tok::Comma : Tok::Dot;
      out.push_back({k, std::string(1, c), col});
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '-' && i + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
      std::size_t j = i + 1;
      while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
      if (j < line.size() && ident_char(line[j]) && !std::isdigit(static_cast<unsigned char>(line[j])))
        syntax_error(static_cast<int>(j) + 1, "unexpected character '" + std::string(1, line[j]) + "'");
      out.push_back({Tok::Int, std::string(line.substr(i, j - i)), col});
      i = j;
    } else if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < line.size() && ident_char(line[j])) ++j;
      out.push_back({Tok::Ident, std::string(line.substr(i, j - i)), col});
      i = j;
    } else {
      syntax_error(col, "unexpected character '" + std::string(1, c) + "'");
    }
  }
  out.push_back({Tok::End, "", static_cast<int>(line.size()) + 1});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  const Token& peek() const { return toks_[pos_]; }

  bool at_keyword(std::string_view kw) const { return peek().kind == Tok::Ident && iequals(peek().text, kw); }

  void keyword(std::string_view kw) {
    if (!at_keyword(kw)) fail("expected \"" + std::string(kw) + "\"");
    ++pos_;
  }

  bool accept_keyword(std::string_view kw) {
    if (!at_keyword(kw)) return false;
    ++pos_;
    return true;
  }

  std::string ident() {
    if (peek().kind != Tok::Ident) fail("expected identifier");
    return toks_[pos_++].text;
  }

  int integer() {
    if (peek().kind != Tok::Int) fail("expected integer");
    const std::string& t = toks_[pos_].text;
    try {
      std::size_t used = 0;
      const long v = std::stol(t, &used);
      if (used != t.size() || v < INT32_MIN || v > INT32_MAX) throw std::out_of_range(t);
      ++pos_;
      return static_cast<int>(v);
    } catch (const std::exception&) {
      fail("integer out of range");
    }
  }

  void punct(Tok kind, std::string_view text) {
    if (peek().kind != kind) fail("expected \"" + std::string(text) + "\"");
    ++pos_;
  }

  bool accept(Tok kind) {
    if (peek().kind != kind) return false;
    ++pos_;
    return true;
  }

  Point point() {
    punct(Tok::LParen, "(");
    const int x = integer();
    punct(Tok::Comma, ",");
    const int y = integer();
    punct(Tok::RParen, ")");
    return {x, y};
  }

  void end() {
    if (peek().kind != Tok::End) fail("expected end of line");
  }

  /// Keyword chosen from a closed set; returns its index.
  std::size_t one_of(std::initializer_list<std::string_view> options) {
    std::size_t i = 0;
    for (auto o : options) {
      if (at_keyword(o)) {
        ++pos_;
        return i;
      }
      ++i;
    }
    std::vector<std::string> quoted;
    for (auto o : options) quoted.push_back("\"" + std::string(o) + "\"");
    fail(quoted.size() == 1 ? "expected " + quoted[0] : "expected one of " + join(quoted, ", "));
  }

  [[noreturn]] void fail(const std::string& hint) const { syntax_error(peek().column, hint); }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

PinRef pin_ref(Parser& p) {
  PinRef ref;
  ref.instance = p.ident();
  p.punct(Tok::Dot, ".");
  ref.pin = p.ident();
  return ref;
}

Command parse_tokens(Parser& p) {
  const std::size_t which =
      p.one_of({"place", "place_rows", "place_row", "optimize_order", "move", "swap", "route", "unroute",
                "label", "report", "undo", "checkpoint"});
  switch (which) {
    case 0: {
      PlaceCmd c;
      c.inst = p.ident();
      if (p.accept_keyword("template")) c.template_name = p.ident();
      p.keyword("at");
      c.at = p.point();
      if (p.accept_keyword("orient")) {
        const std::size_t o = p.one_of({"R0", "MX", "MY", "R180"});
        c.orient = static_cast<Orient>(o);
      }
      return c;
    }
    case 1: return PlaceRowsCmd{};
    case 2: {
      PlaceRowCmd c;
      if (p.accept_keyword("order")) {
        c.order.push_back(p.ident());
        while (p.accept(Tok::Comma)) c.order.push_back(p.ident());
      }
      return c;
    }
    case 3: {
      OptimizeOrderCmd c;
      while (p.accept_keyword("fix")) {
        std::string name = p.ident();
        const Side side = p.one_of({"left", "right"}) == 0 ? Side::Left : Side::Right;
        c.fixes.emplace_back(std::move(name), side);
      }
      return c;
    }
    case 4: {
      MoveCmd c;
      c.inst = p.ident();
      p.keyword("to");
      c.to = p.point();
      return c;
    }
    case 5: {
      SwapCmd c;
      c.a = p.ident();
      c.b = p.ident();
      return c;
    }
    case 6: {
      if (p.one_of({"net", "pins"}) == 0) {
        RouteNetCmd c;
        c.net = p.ident();
        if (p.one_of({"auto", "trunk"}) == 1) {
          c.trunk_layer = p.ident();
          p.keyword("track");
          c.track = p.integer();
        }
        return c;
      }
      RoutePinsCmd c;
      c.pins.push_back(pin_ref(p));
      p.punct(Tok::Comma, ",");
      c.pins.push_back(pin_ref(p));
      while (p.accept(Tok::Comma)) c.pins.push_back(pin_ref(p));
      p.keyword("trunk");
      c.trunk_layer = p.ident();
      p.keyword("track");
      c.track = p.integer();
      return c;
    }
    case 7: {
      p.keyword("net");
      return UnrouteNetCmd{p.ident()};
    }
    case 8: {
      LabelCmd c;
      c.net = p.ident();
      p.keyword("at");
      c.at = p.point();
      p.keyword("layer");
      c.layer = p.ident();
      return c;
    }
    case 9: return ReportCmd{static_cast<ReportKind>(p.one_of({"wirelength", "drc", "lvs"}))};
    case 10: return UndoCmd{};
    default: return CheckpointCmd{p.ident()};
  }
}

std::string point_text(Point p) { return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")"; }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

Command parse_command(std::string_view line) {
  Parser p(tokenize(line));
  if (p.peek().kind == Tok::End) p.fail("expected command");
  Command cmd = parse_tokens(p);
  p.end();
  return cmd;
}

std::string print_command(const Command& cmd) {
  return std::visit(
      overloaded{
          [](const PlaceCmd& c) {
            std::string s = "place " + c.inst;
            if (c.template_name) s += " template " + *c.template_name;
            return s + " at " + point_text(c.at) + " orient " + std::string(to_string(c.orient));
          },
          [](const PlaceRowsCmd&) { return std::string("place_rows"); },
          [](const PlaceRowCmd& c) {
            return c.order.empty() ? std::string("place_row") : "place_row order " + join(c.order, ", ");
          },
          [](const OptimizeOrderCmd& c) {
            std::string s = "optimize_order";
            for (const auto& [name, side] : c.fixes) s += " fix " + name + (side == Side::Left ? " left" : " right");
            return s;
          },
          [](const MoveCmd& c) { return "move " + c.inst + " to " + point_text(c.to); },
          [](const SwapCmd& c) { return "swap " + c.a + " " + c.b; },
          [](const RouteNetCmd& c) {
            if (c.is_auto()) return "route net " + c.net + " auto";
            return "route net " + c.net + " trunk " + *c.trunk_layer + " track " + std::to_string(c.track);
          },
          [](const RoutePinsCmd& c) {
            std::vector<std::string> pins;
            for (const auto& p : c.pins) pins.push_back(p.instance + "." + p.pin);
            return "route pins " + join(pins, ", ") + " trunk " + c.trunk_layer + " track " +
                   std::to_string(c.track);
          },
          [](const UnrouteNetCmd& c) { return "unroute net " + c.net; },
          [](const LabelCmd& c) { return "label " + c.net + " at " + point_text(c.at) + " layer " + c.layer; },
          [](const ReportCmd& c) { return "report " + std::string(to_string(c.kind)); },
          [](const UndoCmd&) { return std::string("undo"); },
          [](const CheckpointCmd& c) { return "checkpoint " + c.name; },
      },
      cmd);
}

std::vector<ScriptLine> parse_script(std::string_view text) {
  std::vector<ScriptLine> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    try {
      out.push_back({n, parse_command(line)});
    } catch (const Error& e) {
      nlohmann::json detail = e.detail();
      detail["line"] = n;
      throw Error(e.code(), "line " + std::to_string(n) + ": " + e.what(), detail);
    }
  }
  return out;
}

std::string_view dsl_grammar() {
  return R"ebnf(command    := place | place_rows | place_row | optimize | move | swap
            | route_net | route_pins | unroute | label | report | undo | checkpoint
place      := "place" IDENT ["template" IDENT] "at" "(" INT "," INT ")" ["orient" ORIENT]
place_rows := "place_rows"
place_row  := "place_row" ["order" IDENT ("," IDENT)*]
optimize   := "optimize_order" ("fix" IDENT ("left"|"right"))*
move       := "move" IDENT "to" "(" INT "," INT ")"
swap       := "swap" IDENT IDENT
route_net  := "route" "net" IDENT ("auto" | "trunk" IDENT "track" INT)
route_pins := "route" "pins" PIN ("," PIN)+ "trunk" IDENT "track" INT
unroute    := "unroute" "net" IDENT
label      := "label" IDENT "at" "(" INT "," INT ")" "layer" IDENT
report     := "report" ("wirelength"|"drc"|"lvs")
undo       := "undo"
checkpoint := "checkpoint" IDENT
PIN        := IDENT "." IDENT
ORIENT     := "R0" | "MX" | "MY" | "R180"
IDENT      := [A-Za-z_][A-Za-z0-9_!$<>\[\]]*
INT        := -?[0-9]+
One command per line. "#" starts a comment. Keywords are case-insensitive.
)ebnf";
}

}  // namespace gridlay
