// SPDX-License-Identifier: Apache-2.0

#include "sqlimc/trace.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace sqlimc {

std::string AttackKind::to_string() const {
  switch (tag) {
    case AttackKindTag::AuthBypass:
      return "AuthBypass(" + page + ")";
    case AttackKindTag::DataExtraction:
      return "DataExtraction";
    case AttackKindTag::SecondOrder:
      return inner == AttackKindTag::AuthBypass
                 ? "SecondOrder(AuthBypass(" + inner_page + "))"
                 : "SecondOrder(DataExtraction)";
  }
  return "?";
}

namespace {

// Drops secure-channel nonce plumbing: top-level parts that are
// engine-fresh constants.
Term strip_nonces(const Term& t) {
  if (t->kind != TermKind::Concat) return t;
  std::vector<Term> parts;
  for (const auto& p : t->children)
    if (!(p->kind == TermKind::Constant && p->fresh_engine)) parts.push_back(p);
  if (parts.empty() || parts.size() == t->children.size()) return t;
  return make_concat(std::move(parts));
}

const FactAtom* find_produced(const GroundFiring& f, const std::string& pred) {
  for (const auto& a : f.produced)
    if (a.predicate == pred) return &a;
  return nullptr;
}

bool step_injected(const GroundFiring& f) {
  for (const auto& c : f.choices)
    if (c.origin == ChoiceOrigin::SqliPayload ||
        c.origin == ChoiceOrigin::SqliExtended)
      return true;
  return false;
}

} // namespace

AttackTrace build_trace(const AttackFound& result, const TransitionSystem& ts) {
  AttackTrace trace;
  trace.goal = result.goal;
  for (const auto& node : result.path) {
    if (!node->via) continue;
    const GroundFiring& f = *node->via;
    const TransitionRule& rule = ts.rules.at(static_cast<std::size_t>(f.rule_index));
    TraceStep step;
    switch (rule.role) {
      case MsgRole::None:
        continue;
      case MsgRole::ReceiveClient: {
        step.from = "i";
        step.to = rule.entity;
        step.message = f.synth_message;
        step.injected = step_injected(f);
        break;
      }
      case MsgRole::SendSecure: {
        const FactAtom* a = find_produced(f, "secure_msg");
        if (!a) continue;
        step.from = rule.entity;
        step.to = entity_for_agent(ts, a->args[1]);
        step.message = strip_nonces(a->args[2]);
        break;
      }
      case MsgRole::SendClient: {
        const FactAtom* a = find_produced(f, "iknows");
        if (!a) continue;
        step.from = rule.entity;
        Term to = rule.send_to ? apply_subst(f.subst, rule.send_to) : Term{};
        step.to = to ? entity_for_agent(ts, to) : "i";
        step.message = a->args[0];
        break;
      }
    }
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

AttackKind classify(const AttackTrace& trace, const TransitionSystem& ts) {
  const AttackState* goal = nullptr;
  for (const auto& g : ts.attack_states)
    if (g.goal == trace.goal) goal = &g;
  if (!goal) throw ClassificationAmbiguous("unknown goal '" + trace.goal + "'");

  const Term& forbidden = goal->pattern.args.at(0);
  AttackKind base;
  if (forbidden->kind == TermKind::Apply && forbidden->name == "tuple" &&
      forbidden->children[0]->kind == TermKind::Wildcard) {
    base.tag = AttackKindTag::DataExtraction;
  } else if (forbidden->kind == TermKind::Constant) {
    base.tag = AttackKindTag::AuthBypass;
    base.page = forbidden->name;
  } else {
    throw ClassificationAmbiguous("goal pattern " + to_string(forbidden) +
                                  " is neither a page constant nor tuple(?)");
  }

  // Second-order: the same injected payload is consumed by a raw query
  // twice and the first response never reached the intruder as tuple(...).
  std::vector<std::pair<Term, std::size_t>> query_args; // arg, first index
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const Term& m = trace.steps[k].message;
    if (m->kind != TermKind::Apply || m->name != "query") continue;
    const Term& arg = m->children[0];
    bool injected_payload = false;
    for (const auto& sub : subterms(arg))
      if (sub->kind == TermKind::Constant && sub->name == "sqli")
        injected_payload = true;
    if (!injected_payload) continue;
    auto it = std::find_if(query_args.begin(), query_args.end(),
                           [&](const auto& p) { return term_equal(p.first, arg); });
    if (it == query_args.end()) {
      query_args.emplace_back(arg, k);
      continue;
    }
    // second firing of the same payload: was tuple(arg) handed out between?
    bool delivered = false;
    Term expected = make_apply("tuple", it->first);
    for (std::size_t j = it->second + 1; j < k; ++j) {
      if (trace.steps[j].to != "i") continue;
      for (const auto& sub : subterms(trace.steps[j].message))
        if (term_equal(sub, expected)) delivered = true;
    }
    if (!delivered) {
      AttackKind so;
      so.tag = AttackKindTag::SecondOrder;
      so.inner = base.tag;
      so.inner_page = base.page;
      return so;
    }
  }
  return base;
}

std::string render_msc(const AttackTrace& trace) {
  std::size_t wfrom = 0, wto = 0;
  for (const auto& s : trace.steps) {
    wfrom = std::max(wfrom, s.from.size());
    wto = std::max(wto, s.to.size());
  }
  std::ostringstream out;
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const auto& s = trace.steps[k];
    out << (k + 1) << ". " << s.from << std::string(wfrom - s.from.size(), ' ')
        << " -> " << s.to << std::string(wto - s.to.size(), ' ') << " : "
        << to_string(s.message) << "\n";
  }
  return out.str();
}

std::string render_structured(const AttackTrace& trace) {
  std::ostringstream out;
  out << "goal: " << trace.goal << "\n";
  out << "classification: " << trace.classification.to_string() << "\n";
  out << "steps: " << trace.steps.size() << "\n";
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const auto& s = trace.steps[k];
    out << "step: " << (k + 1) << "\n";
    out << "from: " << s.from << "\n";
    out << "to: " << s.to << "\n";
    out << "message: " << to_string(s.message) << "\n";
    out << "injected: " << (s.injected ? "true" : "false") << "\n";
  }
  return out.str();
}

// --- MSC parsing and skeleton comparison ----------------------------------

namespace {

struct TraceTermParser {
  const std::string& src;
  std::size_t pos = 0;

  explicit TraceTermParser(const std::string& s) : src(s) {}

  [[noreturn]] void fail(const std::string& m) {
    throw std::runtime_error("bad trace term '" + src + "': " + m);
  }

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos])))
      ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < src.size() && src[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos;
    while (pos < src.size() &&
           (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
      ++pos;
    if (start == pos) fail("expected an identifier");
    return src.substr(start, pos - start);
  }

  Term parse() {
    Term t = concat();
    skip_ws();
    if (pos != src.size()) fail("trailing input");
    return t;
  }

  Term concat() {
    std::vector<Term> parts;
    parts.push_back(primary());
    while (eat('.')) parts.push_back(primary());
    return make_concat(std::move(parts));
  }

  Term primary() {
    skip_ws();
    if (pos >= src.size()) fail("unexpected end");
    char c = src[pos];
    if (c == '<') { // placeholder atom
      ++pos;
      std::string n = ident();
      if (!eat('>')) fail("unterminated placeholder");
      return make_constant("<" + n + ">", Sort::Message, false);
    }
    if (c == '?') {
      ++pos;
      return make_wildcard();
    }
    if (c == '{') {
      ++pos;
      Term payload = concat();
      if (!eat('}')) fail("unterminated encryption");
      if (!eat('_')) fail("missing key");
      Term key = primary();
      return make_enc(payload, key);
    }
    if (c == '(') {
      ++pos;
      Term inner = concat();
      if (!eat(')')) fail("unbalanced parentheses");
      return inner;
    }
    std::string n = ident();
    skip_ws();
    if (pos < src.size() && src[pos] == '(') {
      ++pos;
      Term arg = concat();
      if (!eat(')')) fail("unbalanced call");
      return make_apply(n, arg);
    }
    return make_constant(n);
  }
};

bool is_placeholder(const Term& t) {
  return t->kind == TermKind::Constant && !t->name.empty() && t->name[0] == '<';
}

// expected may contain placeholders; actual contains real atoms. The map
// keeps placeholder -> atom-name consistent in both directions, and a
// literal never collides with an atom a placeholder already claimed.
bool skeleton_equal(const Term& expected, const Term& actual,
                    std::map<std::string, std::string>& fwd,
                    std::map<std::string, std::string>& rev) {
  if (is_placeholder(expected)) {
    if (actual->kind != TermKind::Constant) return false;
    auto it = fwd.find(expected->name);
    if (it != fwd.end()) return it->second == actual->name;
    auto ri = rev.find(actual->name);
    if (ri != rev.end()) return false;
    fwd[expected->name] = actual->name;
    rev[actual->name] = expected->name;
    return true;
  }
  if (expected->kind != actual->kind) return false;
  if (expected->name != actual->name) return false;
  if (expected->kind == TermKind::Constant && rev.count(actual->name))
    return false;
  if (expected->children.size() != actual->children.size()) return false;
  for (std::size_t i = 0; i < expected->children.size(); ++i)
    if (!skeleton_equal(expected->children[i], actual->children[i], fwd, rev))
      return false;
  return true;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

} // namespace

std::vector<MscLine> parse_msc(const std::string& text) {
  std::vector<MscLine> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    // optional leading "N."
    std::size_t p = 0;
    while (p < t.size() && std::isdigit(static_cast<unsigned char>(t[p]))) ++p;
    if (p > 0 && p < t.size() && t[p] == '.') t = trim(t.substr(p + 1));
    std::size_t arrow = t.find("->");
    if (arrow == std::string::npos)
      throw std::runtime_error("bad MSC line: " + line);
    std::size_t colon = t.find(" : ", arrow);
    if (colon == std::string::npos)
      throw std::runtime_error("bad MSC line: " + line);
    MscLine l;
    l.from = trim(t.substr(0, arrow));
    l.to = trim(t.substr(arrow + 2, colon - arrow - 2));
    std::string msg = trim(t.substr(colon + 3));
    TraceTermParser parser(msg);
    l.message = parser.parse();
    out.push_back(std::move(l));
  }
  return out;
}

bool trace_matches(const AttackTrace& trace, const std::vector<MscLine>& expected,
                   std::string* why) {
  auto explain = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  if (trace.steps.size() != expected.size())
    return explain("expected " + std::to_string(expected.size()) + " steps, got " +
                   std::to_string(trace.steps.size()));
  std::map<std::string, std::string> fwd, rev;
  for (std::size_t k = 0; k < expected.size(); ++k) {
    const auto& e = expected[k];
    const auto& s = trace.steps[k];
    if (e.from != s.from || e.to != s.to)
      return explain("step " + std::to_string(k + 1) + ": endpoints " + s.from +
                     " -> " + s.to + ", expected " + e.from + " -> " + e.to);
    if (!skeleton_equal(e.message, s.message, fwd, rev))
      return explain("step " + std::to_string(k + 1) + ": message " +
                     to_string(s.message) + ", expected " + to_string(e.message));
  }
  return true;
}

bool trace_matches(const AttackTrace& trace, const std::string& expected_msc,
                   std::string* why) {
  return trace_matches(trace, parse_msc(expected_msc), why);
}

bool msc_matches(const std::vector<MscLine>& actual,
                 const std::vector<MscLine>& expected, std::string* why) {
  AttackTrace shim;
  for (const auto& l : actual)
    shim.steps.push_back(TraceStep{l.from, l.to, l.message, false});
  return trace_matches(shim, expected, why);
}

} // namespace sqlimc
