// SPDX-License-Identifier: Apache-2.0

#include "sqlimc/parser.hpp"

#include <cctype>
#include <map>
#include <optional>
#include <set>

#include "sqlimc/builtin_db.hpp"

namespace sqlimc {

namespace {

enum class Tok {
  Ident,      // lower-case initial: constants, keywords
  VarIdent,   // upper-case initial: variables, entity names
  LBrace, RBrace, LParen, RParen, LBracket, RBracket,
  Colon, Semi, Comma, Dot, Question, Bang, Assign, Entails, Equal, Underscore,
  ArrowInsecure, ArrowAuthentic, ArrowConfidential, ArrowSecure,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { next(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    next();
    return t;
  }

  struct State {
    std::size_t pos;
    int line, col;
    Token tok;
  };
  State save() const { return {pos_, line_, col_, tok_}; }
  void restore(const State& s) {
    pos_ = s.pos;
    line_ = s.line;
    col_ = s.col;
    tok_ = s.tok;
  }

 private:
  void next() {
    skip_space();
    tok_.line = line_;
    tok_.col = col_;
    tok_.text.clear();
    if (pos_ >= src_.size()) {
      tok_.kind = Tok::End;
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        advance();
      tok_.text = src_.substr(start, pos_ - start);
      tok_.kind = std::isupper(static_cast<unsigned char>(c)) ? Tok::VarIdent
                                                              : Tok::Ident;
      return;
    }
    if (src_.compare(pos_, 4, "*->*") == 0) { take_n(4); tok_.kind = Tok::ArrowSecure; return; }
    if (src_.compare(pos_, 3, "*->") == 0) { take_n(3); tok_.kind = Tok::ArrowAuthentic; return; }
    if (src_.compare(pos_, 3, "->*") == 0) { take_n(3); tok_.kind = Tok::ArrowConfidential; return; }
    if (src_.compare(pos_, 2, "->") == 0) { take_n(2); tok_.kind = Tok::ArrowInsecure; return; }
    if (src_.compare(pos_, 2, ":=") == 0) { take_n(2); tok_.kind = Tok::Assign; return; }
    if (src_.compare(pos_, 2, ":-") == 0) { take_n(2); tok_.kind = Tok::Entails; return; }
    switch (c) {
      case '{': advance(); tok_.kind = Tok::LBrace; return;
      case '}': advance(); tok_.kind = Tok::RBrace; return;
      case '(': advance(); tok_.kind = Tok::LParen; return;
      case ')': advance(); tok_.kind = Tok::RParen; return;
      case '[': advance(); tok_.kind = Tok::LBracket; return;
      case ']': advance(); tok_.kind = Tok::RBracket; return;
      case ':': advance(); tok_.kind = Tok::Colon; return;
      case ';': advance(); tok_.kind = Tok::Semi; return;
      case ',': advance(); tok_.kind = Tok::Comma; return;
      case '.': advance(); tok_.kind = Tok::Dot; return;
      case '?': advance(); tok_.kind = Tok::Question; return;
      case '!': advance(); tok_.kind = Tok::Bang; return;
      case '=': advance(); tok_.kind = Tok::Equal; return;
      case '_': advance(); tok_.kind = Tok::Underscore; return;
      default:
        throw ParseError(line_, col_, std::string("unexpected character '") + c + "'");
    }
  }

  void skip_space() {
    for (;;) {
      while (pos_ < src_.size() &&
             std::isspace(static_cast<unsigned char>(src_[pos_])))
        advance();
      if (pos_ < src_.size() && src_[pos_] == '%') { // comment to end of line
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        continue;
      }
      break;
    }
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void take_n(std::size_t n) {
    tok_.text = src_.substr(pos_, n);
    for (std::size_t i = 0; i < n; ++i) advance();
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token tok_;
};

std::optional<Sort> sort_from_name(const std::string& s) {
  if (s == "agent") return Sort::Agent;
  if (s == "message") return Sort::Message;
  if (s == "text") return Sort::Text;
  if (s == "fact") return Sort::Fact;
  return std::nullopt;
}

bool is_keyword(const std::string& s) {
  static const std::set<std::string> kw = {
      "specification", "channel_model", "entity", "symbols", "clauses",
      "body",          "goals",         "new",    "select",  "on",
      "if",            "else",          "while",  "true",    "fresh",
      "nonpublic",     "iknows",        "iknowledge",
      "agent",         "message",       "text",   "fact"};
  return kw.count(s) > 0;
}

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  EntityDecl parse_single_entity() {
    SpecAST scratch;
    auto e = parse_entity(scratch);
    if (lex_.peek().kind != Tok::End) err("trailing input after the entity");
    return *e;
  }

  SpecAST parse() {
    SpecAST ast;
    expect_ident("specification");
    ast.name = expect_name();
    expect_ident("channel_model");
    ast.channel_model = expect_name();
    ast.root = parse_entity(ast);
    if (lex_.peek().kind != Tok::End)
      err("trailing input after the root entity");
    return ast;
  }

 private:
  [[noreturn]] void err(const std::string& m) const {
    throw ParseError(lex_.peek().line, lex_.peek().col, m);
  }

  bool at_ident(const char* kw) const {
    return lex_.peek().kind == Tok::Ident && lex_.peek().text == kw;
  }

  void expect_ident(const char* kw) {
    if (!at_ident(kw)) err(std::string("expected '") + kw + "'");
    lex_.take();
  }

  void expect(Tok k, const char* what) {
    if (lex_.peek().kind != k) err(std::string("expected ") + what);
    lex_.take();
  }

  std::string expect_name() {
    if (lex_.peek().kind != Tok::Ident && lex_.peek().kind != Tok::VarIdent)
      err("expected an identifier");
    return lex_.take().text;
  }

  std::string expect_var_name() {
    if (lex_.peek().kind != Tok::VarIdent)
      err("expected a capitalized identifier");
    return lex_.take().text;
  }

  std::shared_ptr<EntityDecl> parse_entity(SpecAST& ast) {
    expect_ident("entity");
    auto e = std::make_shared<EntityDecl>();
    e->line = lex_.peek().line;
    e->name = expect_var_name();
    if (lex_.peek().kind == Tok::LParen) {
      lex_.take();
      if (lex_.peek().kind != Tok::RParen) parse_param_groups(*e);
      expect(Tok::RParen, "')'");
    }
    expect(Tok::LBrace, "'{'");
    bool seen_body = false;
    while (lex_.peek().kind != Tok::RBrace) {
      if (at_ident("symbols")) {
        lex_.take();
        parse_symbols(*e);
      } else if (at_ident("clauses")) {
        lex_.take();
        parse_clauses(ast);
      } else if (at_ident("entity")) {
        e->children.push_back(parse_entity(ast));
      } else if (at_ident("body")) {
        if (seen_body) err("an entity has a single body section");
        seen_body = true;
        lex_.take();
        expect(Tok::LBrace, "'{'");
        e->body = parse_statements();
        expect(Tok::RBrace, "'}'");
      } else if (at_ident("goals")) {
        lex_.take();
        parse_goals(ast);
      } else {
        err("expected a section (symbols, clauses, body, goals or entity)");
      }
    }
    lex_.take(); // }
    return e;
  }

  void parse_param_groups(EntityDecl& e) {
    for (;;) {
      std::vector<std::string> names;
      names.push_back(expect_var_name());
      while (lex_.peek().kind == Tok::Comma) {
        lex_.take();
        names.push_back(expect_var_name());
      }
      expect(Tok::Colon, "':'");
      std::string sn = expect_name();
      auto s = sort_from_name(sn);
      if (!s || *s == Sort::Fact) err("expected a parameter sort");
      for (auto& n : names) e.params.emplace_back(n, *s);
      if (lex_.peek().kind != Tok::Comma) break;
      lex_.take();
    }
  }

  // symbols section: `[nonpublic] name[, name]* : sort ;`
  // or a function/predicate: `[nonpublic] name(sort) : sort ;`
  void parse_symbols(EntityDecl& e) {
    while (lex_.peek().kind == Tok::Ident || lex_.peek().kind == Tok::VarIdent) {
      if (is_section_start()) break;
      bool nonpublic = false;
      if (at_ident("nonpublic")) {
        lex_.take();
        nonpublic = true;
      }
      std::vector<Token> names;
      names.push_back(take_symbol_name());
      if (lex_.peek().kind == Tok::LParen) {
        lex_.take();
        std::string argn = expect_name();
        auto arg = sort_from_name(argn);
        if (!arg || *arg == Sort::Fact) err("expected an argument sort");
        expect(Tok::RParen, "')'");
        expect(Tok::Colon, "':'");
        std::string resn = expect_name();
        auto res = sort_from_name(resn);
        if (!res) err("expected a result sort");
        SymbolDecl d;
        d.name = names[0].text;
        d.line = names[0].line;
        d.is_function = true;
        d.arg_sort = *arg;
        d.sort = *res;
        d.is_public = !nonpublic;
        d.is_constant = true;
        e.symbols.push_back(std::move(d));
        expect(Tok::Semi, "';'");
        continue;
      }
      while (lex_.peek().kind == Tok::Comma) {
        lex_.take();
        names.push_back(take_symbol_name());
      }
      expect(Tok::Colon, "':'");
      std::string sn = expect_name();
      auto s = sort_from_name(sn);
      if (!s) err("expected a sort");
      if (*s == Sort::Fact) err("only function symbols may have the fact sort");
      for (auto& n : names) {
        SymbolDecl d;
        d.name = n.text;
        d.line = n.line;
        d.sort = *s;
        d.is_public = !nonpublic;
        d.is_constant = std::islower(static_cast<unsigned char>(n.text[0])) != 0;
        e.symbols.push_back(std::move(d));
      }
      expect(Tok::Semi, "';'");
    }
  }

  Token take_symbol_name() {
    if (lex_.peek().kind != Tok::Ident && lex_.peek().kind != Tok::VarIdent)
      err("expected a symbol name");
    if (lex_.peek().kind == Tok::Ident && is_keyword(lex_.peek().text))
      err("'" + lex_.peek().text + "' is reserved");
    return lex_.take();
  }

  bool is_section_start() const {
    const Token& t = lex_.peek();
    if (t.kind != Tok::Ident) return false;
    return t.text == "symbols" || t.text == "clauses" || t.text == "body" ||
           t.text == "goals" || t.text == "entity";
  }

  // clauses section: `name[(Vars)]: pred(pattern) [:- pred(pattern), ...] ;`
  void parse_clauses(SpecAST& ast) {
    while (lex_.peek().kind == Tok::Ident && !is_section_start()) {
      HornClause hc;
      hc.name = expect_name();
      if (lex_.peek().kind == Tok::LParen) { // universally quantified vars
        lex_.take();
        expect_var_name();
        while (lex_.peek().kind == Tok::Comma) {
          lex_.take();
          expect_var_name();
        }
        expect(Tok::RParen, "')'");
      }
      expect(Tok::Colon, "':'");
      hc.head_predicate = expect_name();
      expect(Tok::LParen, "'('");
      hc.head_arg = parse_term();
      expect(Tok::RParen, "')'");
      if (lex_.peek().kind == Tok::Entails) {
        lex_.take();
        for (;;) {
          std::string bp = expect_name();
          expect(Tok::LParen, "'('");
          Term arg = parse_term();
          expect(Tok::RParen, "')'");
          hc.body.emplace_back(bp, arg);
          if (lex_.peek().kind != Tok::Comma) break;
          lex_.take();
        }
      }
      expect(Tok::Semi, "';'");
      ast.horn_clauses.push_back(std::move(hc));
    }
  }

  void parse_goals(SpecAST& ast) {
    while (lex_.peek().kind == Tok::Ident || lex_.peek().kind == Tok::VarIdent) {
      if (is_section_start()) break;
      Goal g;
      g.line = lex_.peek().line;
      g.name = expect_name();
      expect(Tok::Colon, "':'");
      // [](!(iknows(pattern)))  -- the only accepted goal shape
      expect(Tok::LBracket, "'['");
      expect(Tok::RBracket, "']'");
      expect(Tok::LParen, "'('");
      expect(Tok::Bang, "'!'");
      expect(Tok::LParen, "'('");
      if (!at_ident("iknows") && !at_ident("iknowledge"))
        err("only globally-not-knows goals are supported");
      lex_.take();
      expect(Tok::LParen, "'('");
      g.forbidden = parse_term();
      expect(Tok::RParen, "')'");
      expect(Tok::RParen, "')'");
      expect(Tok::RParen, "')'");
      expect(Tok::Semi, "';'");
      ast.goals.push_back(std::move(g));
    }
  }

  StatementList parse_statements() {
    StatementList out;
    while (lex_.peek().kind != Tok::RBrace && lex_.peek().kind != Tok::End)
      out.push_back(parse_statement());
    return out;
  }

  Statement parse_statement() {
    Statement st;
    st.line = lex_.peek().line;
    if (at_ident("new")) {
      lex_.take();
      st.kind = StatementKind::New;
      st.entity = expect_var_name();
      expect(Tok::LParen, "'('");
      if (lex_.peek().kind != Tok::RParen) {
        st.args.push_back(parse_term());
        while (lex_.peek().kind == Tok::Comma) {
          lex_.take();
          st.args.push_back(parse_term());
        }
      }
      expect(Tok::RParen, "')'");
      expect(Tok::Semi, "';'");
      return st;
    }
    if (at_ident("select")) {
      lex_.take();
      st.kind = StatementKind::Select;
      expect(Tok::LBrace, "'{'");
      while (at_ident("on")) {
        lex_.take();
        expect(Tok::LParen, "'('");
        st.guards.push_back(parse_guard());
        expect(Tok::RParen, "')'");
        expect(Tok::Colon, "':'");
        expect(Tok::LBrace, "'{'");
        st.bodies.push_back(parse_statements());
        expect(Tok::RBrace, "'}'");
      }
      if (st.guards.empty()) err("select needs at least one on(...) branch");
      expect(Tok::RBrace, "'}'");
      return st;
    }
    if (at_ident("if")) {
      lex_.take();
      st.kind = StatementKind::If;
      expect(Tok::LParen, "'('");
      st.guards.push_back(parse_guard());
      expect(Tok::RParen, "')'");
      expect(Tok::LBrace, "'{'");
      st.bodies.push_back(parse_statements());
      expect(Tok::RBrace, "'}'");
      if (at_ident("else")) {
        lex_.take();
        expect(Tok::LBrace, "'{'");
        st.bodies.push_back(parse_statements());
        expect(Tok::RBrace, "'}'");
      }
      return st;
    }
    if (at_ident("while")) {
      lex_.take();
      st.kind = StatementKind::While;
      expect(Tok::LParen, "'('");
      expect_ident("true");
      expect(Tok::RParen, "')'");
      expect(Tok::LBrace, "'{'");
      st.bodies.push_back(parse_statements());
      expect(Tok::RBrace, "'}'");
      return st;
    }
    // assignment?
    if (lex_.peek().kind == Tok::VarIdent) {
      Token name = lex_.peek();
      Lexer::State saved = lex_.save();
      lex_.take();
      if (lex_.peek().kind == Tok::Assign) {
        lex_.take();
        st.kind = StatementKind::Assign;
        st.var = name.text;
        if (at_ident("fresh")) {
          lex_.take();
          expect(Tok::LParen, "'('");
          expect(Tok::RParen, "')'");
          st.fresh = true;
        } else {
          st.value = parse_term();
        }
        expect(Tok::Semi, "';'");
        return st;
      }
      lex_.restore(saved);
    }
    // message exchange: term ARROW term : pattern ;
    Term left = lex_.peek().kind == Tok::Question ? (lex_.take(), make_wildcard())
                                                  : parse_term();
    ChannelKind ch = parse_arrow();
    Term right = parse_term();
    expect(Tok::Colon, "':'");
    Term msg = parse_term();
    expect(Tok::Semi, "';'");
    bool send = left->kind == TermKind::Variable && left->name == "Actor";
    bool recv = right->kind == TermKind::Variable && right->name == "Actor";
    if (send == recv)
      throw ParseError(st.line, 1, "one endpoint of an exchange must be Actor");
    st.kind = send ? StatementKind::Send : StatementKind::Receive;
    st.peer = send ? right : left;
    st.channel = ch;
    st.message = msg;
    return st;
  }

  ChannelKind parse_arrow() {
    switch (lex_.peek().kind) {
      case Tok::ArrowInsecure: lex_.take(); return ChannelKind::Insecure;
      case Tok::ArrowAuthentic: lex_.take(); return ChannelKind::Authentic;
      case Tok::ArrowConfidential: lex_.take(); return ChannelKind::Confidential;
      case Tok::ArrowSecure: lex_.take(); return ChannelKind::Secure;
      default: err("expected a channel arrow");
    }
  }

  Guard parse_guard() {
    Guard g;
    g.line = lex_.peek().line;
    if (lex_.peek().kind == Tok::Bang) {
      lex_.take();
      expect(Tok::LParen, "'('");
      g.kind = GuardKind::Fact;
      g.negated = true;
      g.predicate = expect_name();
      expect(Tok::LParen, "'('");
      g.arg = parse_term();
      expect(Tok::RParen, "')'");
      expect(Tok::RParen, "')'");
      return g;
    }
    Term left = lex_.peek().kind == Tok::Question ? (lex_.take(), make_wildcard())
                                                  : parse_term();
    switch (lex_.peek().kind) {
      case Tok::ArrowInsecure:
      case Tok::ArrowAuthentic:
      case Tok::ArrowConfidential:
      case Tok::ArrowSecure: {
        g.kind = GuardKind::Receive;
        g.from = left;
        g.channel = parse_arrow();
        Term right = parse_term();
        if (!(right->kind == TermKind::Variable && right->name == "Actor"))
          throw ParseError(g.line, 1, "a receive guard must target Actor");
        expect(Tok::Colon, "':'");
        g.pattern = parse_term();
        return g;
      }
      case Tok::Equal: {
        lex_.take();
        g.kind = GuardKind::Equality;
        g.lhs = left;
        g.rhs = parse_term();
        return g;
      }
      default:
        // positive fact guard, parsed as an application
        if (left->kind == TermKind::Apply) {
          g.kind = GuardKind::Fact;
          g.predicate = left->name;
          g.arg = left->children[0];
          return g;
        }
        err("expected a guard");
    }
  }

  // term := encterm { '.' encterm }
  Term parse_term() {
    std::vector<Term> parts;
    parts.push_back(parse_encterm());
    while (lex_.peek().kind == Tok::Dot) {
      lex_.take();
      parts.push_back(parse_encterm());
    }
    return make_concat(std::move(parts));
  }

  // encterm := '{' term '}' '_' primary | primary
  Term parse_encterm() {
    if (lex_.peek().kind == Tok::LBrace) {
      lex_.take();
      Term payload = parse_term();
      expect(Tok::RBrace, "'}'");
      expect(Tok::Underscore, "'_'");
      Term key = parse_primary();
      return make_enc(payload, key);
    }
    return parse_primary();
  }

  Term parse_primary() {
    const Token& t = lex_.peek();
    switch (t.kind) {
      case Tok::Question: {
        lex_.take();
        if (lex_.peek().kind == Tok::VarIdent) {
          Token v = lex_.take();
          return make_variable(v.text, Sort::Message, /*binder=*/true);
        }
        return make_wildcard();
      }
      case Tok::VarIdent: {
        Token v = lex_.take();
        return make_variable(v.text);
      }
      case Tok::Ident: {
        if (is_keyword(t.text)) err("'" + t.text + "' is reserved");
        Token c = lex_.take();
        if (lex_.peek().kind == Tok::LParen) {
          lex_.take();
          Term arg = parse_term();
          expect(Tok::RParen, "')'");
          return make_apply(c.text, arg);
        }
        return make_constant(c.text);
      }
      case Tok::LParen: {
        lex_.take();
        Term inner = parse_term();
        expect(Tok::RParen, "')'");
        return inner;
      }
      default:
        err("expected a term");
    }
  }

  Lexer lex_;
};

// --- validation ----------------------------------------------------------

struct Scope {
  const Scope* parent = nullptr;
  std::map<std::string, const SymbolDecl*> symbols;
  std::map<std::string, Sort> params;

  const SymbolDecl* find_symbol(const std::string& n) const {
    auto it = symbols.find(n);
    if (it != symbols.end()) return it->second;
    return parent ? parent->find_symbol(n) : nullptr;
  }
  const Sort* find_param(const std::string& n) const {
    auto it = params.find(n);
    if (it != params.end()) return &it->second;
    return parent ? parent->find_param(n) : nullptr;
  }
};

class Validator {
 public:
  explicit Validator(SpecAST& ast) : ast_(ast) {}

  void run() {
    if (!ast_.root) throw ValidationError(1, "missing root entity");
    // The intruder's agent name is always available.
    builtin_.push_back(SymbolDecl{.name = "i", .sort = Sort::Agent,
                                  .is_public = true, .is_constant = true});
    Scope root;
    for (const auto& s : builtin_) root.symbols[s.name] = &s;
    validate_entity(*ast_.root, root, /*is_root=*/true);
    validate_goals();
    validate_clauses();
  }

 private:
  void validate_entity(EntityDecl& e, const Scope& parent_scope, bool is_root) {
    entity_parents_[&e] = entity_stack_.empty() ? nullptr : entity_stack_.back();
    entity_stack_.push_back(&e);
    Scope scope;
    scope.parent = &parent_scope;
    if (!is_root) {
      bool has_actor = false;
      for (const auto& [n, s] : e.params)
        if (n == "Actor") has_actor = true;
      if (!has_actor) {
        e.params.insert(e.params.begin(), {"Actor", Sort::Agent});
        e.implicit_actor = true;
      }
    }
    for (auto& [n, s] : e.params) scope.params[n] = s;
    for (auto& d : e.symbols) {
      if (scope.symbols.count(d.name))
        throw ValidationError(d.line, "duplicate symbol '" + d.name + "'");
      scope.symbols[d.name] = &d;
    }

    // Instantiating the builtin database pulls its declaration in as a child.
    for (const auto& st : e.body) {
      if (st.kind == StatementKind::New && !resolve_entity(e, st.entity) &&
          st.entity == builtin_database_entity().name) {
        e.children.push_back(
            std::make_shared<EntityDecl>(builtin_database_entity()));
      }
    }

    bool has_behaviour = false;
    bool has_new = false;
    for (const auto& st : e.body) {
      if (st.kind == StatementKind::New)
        has_new = true;
      else
        has_behaviour = true;
    }
    if (has_new && has_behaviour)
      throw ValidationError(e.line,
                            "an entity body either instantiates sub-entities or "
                            "describes behaviour, not both");

    for (std::size_t i = 0; i < e.body.size(); ++i) {
      auto& st = e.body[i];
      if (st.kind == StatementKind::While && i != 0)
        throw ValidationError(
            st.line, "while(true) is only supported as the outermost statement");
      validate_statement(st, e, scope);
    }
    for (auto& c : e.children) validate_entity(*c, scope, false);
    entity_stack_.pop_back();
  }

  // Instantiation targets resolve to a child or, failing that, to an
  // entity declared beside an ancestor (a sibling).
  const EntityDecl* resolve_entity(const EntityDecl& within, const std::string& name) {
    for (const auto& c : within.children)
      if (c->name == name) return c.get();
    auto it = entity_parents_.find(&within);
    const EntityDecl* up = it == entity_parents_.end() ? nullptr : it->second;
    while (up) {
      for (const auto& c : up->children)
        if (c->name == name && c.get() != &within) return c.get();
      auto pit = entity_parents_.find(up);
      up = pit == entity_parents_.end() ? nullptr : pit->second;
    }
    return nullptr;
  }

  void validate_statement(Statement& st, EntityDecl& e, Scope& scope) {
    switch (st.kind) {
      case StatementKind::New: {
        const EntityDecl* target = resolve_entity(e, st.entity);
        if (!target)
          throw ValidationError(st.line, "unknown entity '" + st.entity + "'");
        std::size_t expected = target->params.size();
        if (target->implicit_actor) --expected; // bound from the parent
        if (st.args.size() != expected)
          throw ValidationError(st.line, "arity mismatch instantiating '" +
                                             st.entity + "'");
        for (auto& a : st.args) resolve_term(a, scope, st.line, false);
        break;
      }
      case StatementKind::Assign: {
        if (!lookup_variable(scope, st.var))
          throw ValidationError(st.line, "undeclared variable '" + st.var + "'");
        if (!st.fresh) resolve_term(st.value, scope, st.line, false);
        break;
      }
      case StatementKind::Send: {
        resolve_term(st.peer, scope, st.line, false);
        resolve_term(st.message, scope, st.line, false);
        break;
      }
      case StatementKind::Receive: {
        if (st.peer->kind != TermKind::Wildcard)
          resolve_term(st.peer, scope, st.line, false);
        resolve_term(st.message, scope, st.line, true);
        break;
      }
      case StatementKind::Select: {
        for (std::size_t b = 0; b < st.guards.size(); ++b) {
          validate_guard(st.guards[b], scope);
          for (auto& s : st.bodies[b]) validate_statement(s, e, scope);
        }
        break;
      }
      case StatementKind::If: {
        validate_guard(st.guards[0], scope);
        for (auto& body : st.bodies)
          for (auto& s : body) validate_statement(s, e, scope);
        break;
      }
      case StatementKind::While: {
        for (auto& s : st.bodies[0]) validate_statement(s, e, scope);
        break;
      }
    }
  }

  void validate_guard(Guard& g, Scope& scope) {
    switch (g.kind) {
      case GuardKind::Receive:
        if (g.from->kind != TermKind::Wildcard)
          resolve_term(g.from, scope, g.line, false);
        resolve_term(g.pattern, scope, g.line, true);
        break;
      case GuardKind::Equality:
        resolve_term(g.lhs, scope, g.line, false);
        resolve_term(g.rhs, scope, g.line, true);
        break;
      case GuardKind::Fact: {
        const SymbolDecl* d = scope.find_symbol(g.predicate);
        if (!d || !d->is_function || d->sort != Sort::Fact)
          throw ValidationError(g.line, "undeclared fact predicate '" +
                                            g.predicate + "'");
        resolve_term(g.arg, scope, g.line, true);
        break;
      }
    }
  }

  bool lookup_variable(const Scope& scope, const std::string& name) {
    if (scope.find_param(name)) return true;
    const SymbolDecl* d = scope.find_symbol(name);
    return d && !d->is_constant && !d->is_function;
  }

  void resolve_term(Term& t, const Scope& scope, int line, bool pattern_ok) {
    t = resolve(t, scope, line, pattern_ok);
  }

  Term resolve(const Term& t, const Scope& scope, int line, bool pattern_ok) {
    switch (t->kind) {
      case TermKind::Wildcard:
        if (!pattern_ok)
          throw ValidationError(line, "wildcards are only allowed in patterns");
        return t;
      case TermKind::Variable: {
        if (t->binder && !pattern_ok)
          throw ValidationError(line, "binders are only allowed in patterns");
        if (const Sort* ps = scope.find_param(t->name))
          return make_variable(t->name, *ps, t->binder);
        const SymbolDecl* d = scope.find_symbol(t->name);
        if (!d || d->is_constant)
          throw ValidationError(line, "undeclared variable '" + t->name + "'");
        return make_variable(t->name, d->sort, t->binder);
      }
      case TermKind::Constant: {
        const SymbolDecl* d = scope.find_symbol(t->name);
        if (!d || !d->is_constant)
          throw ValidationError(line, "undeclared constant '" + t->name + "'");
        if (d->is_function)
          throw ValidationError(line, "function symbol '" + t->name +
                                          "' needs an argument");
        return make_constant(t->name, d->sort, d->is_public);
      }
      case TermKind::Apply: {
        const SymbolDecl* d = scope.find_symbol(t->name);
        if (!d || !d->is_function)
          throw ValidationError(line, "undeclared function symbol '" + t->name + "'");
        if (d->sort == Sort::Fact)
          throw ValidationError(line, "fact predicate '" + t->name +
                                          "' cannot appear inside a message");
        Term arg = resolve(t->children[0], scope, line, pattern_ok);
        return make_apply(t->name, arg, d->is_public);
      }
      case TermKind::Enc: {
        Term payload = resolve(t->children[0], scope, line, pattern_ok);
        Term key = resolve(t->children[1], scope, line, pattern_ok);
        if (key->kind == TermKind::Constant && key->sort == Sort::Agent)
          throw ValidationError(line, "an agent name cannot be an encryption key");
        return make_enc(payload, key);
      }
      case TermKind::Concat: {
        std::vector<Term> parts;
        parts.reserve(t->children.size());
        for (const auto& c : t->children)
          parts.push_back(resolve(c, scope, line, pattern_ok));
        return make_concat(std::move(parts));
      }
    }
    return t;
  }

  void validate_goals() {
    Scope root;
    for (const auto& s : builtin_) root.symbols[s.name] = &s;
    Scope es;
    es.parent = &root;
    for (const auto& d : ast_.root->symbols) es.symbols[d.name] = &d;
    std::set<std::string> names;
    for (auto& g : ast_.goals) {
      if (!names.insert(g.name).second)
        throw ValidationError(g.line, "duplicate goal name '" + g.name + "'");
      g.forbidden = resolve(g.forbidden, es, g.line, true);
      if (!check_no_binders(g.forbidden))
        throw ValidationError(g.line, "goal patterns cannot bind variables");
    }
  }

  static bool check_no_binders(const Term& t) {
    if (t->kind == TermKind::Variable) return false;
    for (const auto& c : t->children)
      if (!check_no_binders(c)) return false;
    return true;
  }

  void validate_clauses() {
    Scope root;
    for (const auto& s : builtin_) root.symbols[s.name] = &s;
    Scope es;
    es.parent = &root;
    for (const auto& d : ast_.root->symbols) es.symbols[d.name] = &d;
    for (auto& hc : ast_.horn_clauses) {
      const SymbolDecl* d = es.find_symbol(hc.head_predicate);
      if (!d || !d->is_function || d->sort != Sort::Fact)
        throw ValidationError(1, "clause '" + hc.name +
                                     "' heads an undeclared predicate");
      hc.head_arg = resolve_clause(hc.head_arg, es);
      for (auto& [p, a] : hc.body) a = resolve_clause(a, es);
    }
  }

  // Clause variables are implicitly universally quantified; constants and
  // function symbols still resolve against the root scope.
  Term resolve_clause(const Term& t, const Scope& scope) {
    switch (t->kind) {
      case TermKind::Variable:
        return make_variable(t->name, Sort::Message, false);
      case TermKind::Wildcard:
        return t;
      case TermKind::Constant: {
        const SymbolDecl* d = scope.find_symbol(t->name);
        if (!d)
          throw ValidationError(1, "undeclared constant '" + t->name +
                                       "' in a clause");
        return make_constant(t->name, d->sort, d->is_public);
      }
      case TermKind::Apply: {
        const SymbolDecl* d = scope.find_symbol(t->name);
        if (!d || !d->is_function)
          throw ValidationError(1, "undeclared function '" + t->name +
                                       "' in a clause");
        return make_apply(t->name, resolve_clause(t->children[0], scope),
                          d->is_public);
      }
      case TermKind::Enc:
        return make_enc(resolve_clause(t->children[0], scope),
                        resolve_clause(t->children[1], scope));
      case TermKind::Concat: {
        std::vector<Term> parts;
        for (const auto& c : t->children)
          parts.push_back(resolve_clause(c, scope));
        return make_concat(std::move(parts));
      }
    }
    return t;
  }

  SpecAST& ast_;
  std::vector<SymbolDecl> builtin_;
  std::vector<EntityDecl*> entity_stack_;
  std::map<const EntityDecl*, EntityDecl*> entity_parents_;
};

} // namespace

SpecAST parse_spec(const std::string& text) {
  Parser p(text);
  SpecAST ast = p.parse();
  Validator v(ast);
  v.run();
  return ast;
}

EntityDecl parse_entity_source(const std::string& text) {
  Parser p(text);
  return p.parse_single_entity();
}

} // namespace sqlimc
