// SPDX-License-Identifier: Apache-2.0

#include "sqlimc/term.hpp"

#include <algorithm>
#include <cassert>
#include <set>
#include <stdexcept>

namespace sqlimc {

namespace {

std::size_t hash_node(const TermNode& n) {
  std::size_t h = 1469598103934665603ull; // FNV offset basis
  auto mix = [&h](std::size_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  mix(static_cast<std::size_t>(n.kind));
  mix(std::hash<std::string>{}(n.name));
  for (const auto& c : n.children) mix(c->hash);
  return h;
}

} // namespace

std::size_t term_hash(const Term& t) { return t->hash; }

const char* sort_name(Sort s) {
  switch (s) {
    case Sort::Agent: return "agent";
    case Sort::Message: return "message";
    case Sort::Text: return "text";
    case Sort::Fact: return "fact";
  }
  return "?";
}

Term make_constant(std::string name, Sort sort, bool is_public) {
  auto n = std::make_shared<TermNode>();
  n->kind = TermKind::Constant;
  n->sort = sort;
  n->name = std::move(name);
  n->is_public = is_public;
  n->hash = hash_node(*n);
  return n;
}

Term make_fresh_engine_constant(std::string name, Sort sort) {
  auto n = std::make_shared<TermNode>();
  n->kind = TermKind::Constant;
  n->sort = sort;
  n->name = std::move(name);
  n->fresh_engine = true;
  n->hash = hash_node(*n);
  return n;
}

Term make_fresh_intruder_constant(std::string name) {
  auto n = std::make_shared<TermNode>();
  n->kind = TermKind::Constant;
  n->sort = Sort::Message;
  n->name = std::move(name);
  n->fresh_intruder = true;
  n->hash = hash_node(*n);
  return n;
}

Term make_variable(std::string name, Sort sort, bool binder) {
  auto n = std::make_shared<TermNode>();
  n->kind = TermKind::Variable;
  n->sort = sort;
  n->name = std::move(name);
  n->binder = binder;
  n->hash = hash_node(*n);
  return n;
}

Term make_wildcard() {
  auto n = std::make_shared<TermNode>();
  n->kind = TermKind::Wildcard;
  n->hash = hash_node(*n);
  return n;
}

Term make_apply(std::string symbol, Term arg, bool symbol_public) {
  auto n = std::make_shared<TermNode>();
  n->kind = TermKind::Apply;
  n->name = std::move(symbol);
  n->is_public = symbol_public;
  n->children.push_back(std::move(arg));
  n->hash = hash_node(*n);
  return n;
}

Term make_enc(Term payload, Term key) {
  auto n = std::make_shared<TermNode>();
  n->kind = TermKind::Enc;
  n->children.push_back(std::move(payload));
  n->children.push_back(std::move(key));
  n->hash = hash_node(*n);
  return n;
}

Term make_concat(std::vector<Term> parts) {
  std::vector<Term> flat;
  flat.reserve(parts.size());
  for (auto& p : parts) {
    if (p->kind == TermKind::Concat) {
      flat.insert(flat.end(), p->children.begin(), p->children.end());
    } else {
      flat.push_back(std::move(p));
    }
  }
  if (flat.empty()) throw std::invalid_argument("empty concatenation");
  if (flat.size() == 1) return flat.front();
  auto n = std::make_shared<TermNode>();
  n->kind = TermKind::Concat;
  n->children = std::move(flat);
  n->hash = hash_node(*n);
  return n;
}

Term canonicalize(const Term& t) {
  switch (t->kind) {
    case TermKind::Constant:
    case TermKind::Variable:
    case TermKind::Wildcard:
      return t;
    case TermKind::Apply:
      return make_apply(t->name, canonicalize(t->children[0]), t->is_public);
    case TermKind::Enc:
      return make_enc(canonicalize(t->children[0]), canonicalize(t->children[1]));
    case TermKind::Concat: {
      std::vector<Term> parts;
      parts.reserve(t->children.size());
      for (const auto& c : t->children) parts.push_back(canonicalize(c));
      return make_concat(std::move(parts));
    }
  }
  return t;
}

bool term_equal(const Term& a, const Term& b) {
  if (a.get() == b.get()) return true;
  if (a->hash != b->hash) return false;
  return term_order(a, b) == std::strong_ordering::equal;
}

static int kind_rank(TermKind k) {
  switch (k) {
    case TermKind::Constant: return 0;
    case TermKind::Variable: return 1;
    case TermKind::Apply: return 2;
    case TermKind::Enc: return 3;
    case TermKind::Concat: return 4;
    case TermKind::Wildcard: return 5;
  }
  return 6;
}

std::strong_ordering term_order(const Term& a, const Term& b) {
  if (a.get() == b.get()) return std::strong_ordering::equal;
  if (int ra = kind_rank(a->kind), rb = kind_rank(b->kind); ra != rb)
    return ra <=> rb;
  if (auto c = a->name <=> b->name; c != std::strong_ordering::equal) return c;
  if (auto c = a->children.size() <=> b->children.size();
      c != std::strong_ordering::equal)
    return c;
  for (std::size_t i = 0; i < a->children.size(); ++i) {
    if (auto c = term_order(a->children[i], b->children[i]);
        c != std::strong_ordering::equal)
      return c;
  }
  return std::strong_ordering::equal;
}

bool is_ground(const Term& t) {
  if (t->kind == TermKind::Variable || t->kind == TermKind::Wildcard) return false;
  for (const auto& c : t->children)
    if (!is_ground(c)) return false;
  return true;
}

bool has_wildcard(const Term& t) {
  if (t->kind == TermKind::Wildcard) return true;
  for (const auto& c : t->children)
    if (has_wildcard(c)) return true;
  return false;
}

bool is_submessage(const Term& t, const Term& u) {
  if (term_equal(t, u)) return true;
  for (const auto& c : u->children)
    if (is_submessage(t, c)) return true;
  return false;
}

static void collect_subterms(const Term& t, std::set<Term, TermLess>& out) {
  out.insert(t);
  for (const auto& c : t->children) collect_subterms(c, out);
}

std::vector<Term> subterms(const Term& t) {
  std::set<Term, TermLess> acc;
  collect_subterms(t, acc);
  return {acc.begin(), acc.end()};
}

static void collect_variables(const Term& t, std::vector<std::string>& out) {
  if (t->kind == TermKind::Variable) {
    if (std::find(out.begin(), out.end(), t->name) == out.end())
      out.push_back(t->name);
    return;
  }
  for (const auto& c : t->children) collect_variables(c, out);
}

std::vector<std::string> variables_of(const Term& t) {
  std::vector<std::string> out;
  collect_variables(t, out);
  return out;
}

bool Substitution::bind(const std::string& var, Term value) {
  auto it = map_.find(var);
  if (it != map_.end()) return term_equal(it->second, value);
  map_.emplace(var, std::move(value));
  return true;
}

const Term* Substitution::lookup(const std::string& var) const {
  auto it = map_.find(var);
  return it == map_.end() ? nullptr : &it->second;
}

std::strong_ordering Substitution::compare(const Substitution& other) const {
  auto a = map_.begin();
  auto b = other.map_.begin();
  for (; a != map_.end() && b != other.map_.end(); ++a, ++b) {
    if (auto c = a->first <=> b->first; c != std::strong_ordering::equal) return c;
    if (auto c = term_order(a->second, b->second); c != std::strong_ordering::equal)
      return c;
  }
  if (a != map_.end()) return std::strong_ordering::greater;
  if (b != other.map_.end()) return std::strong_ordering::less;
  return std::strong_ordering::equal;
}

Term apply_subst(const Substitution& s, const Term& t) {
  switch (t->kind) {
    case TermKind::Constant:
    case TermKind::Wildcard:
      return t;
    case TermKind::Variable: {
      const Term* v = s.lookup(t->name);
      return v ? *v : t;
    }
    case TermKind::Apply:
      return make_apply(t->name, apply_subst(s, t->children[0]), t->is_public);
    case TermKind::Enc:
      return make_enc(apply_subst(s, t->children[0]), apply_subst(s, t->children[1]));
    case TermKind::Concat: {
      std::vector<Term> parts;
      parts.reserve(t->children.size());
      for (const auto& c : t->children) parts.push_back(apply_subst(s, c));
      return make_concat(std::move(parts)); // re-flattens
    }
  }
  return t;
}

namespace {

bool match_node(const Term& p, const Term& s, Substitution& binds);

// Matches pattern parts p[pi..] against subject parts s[si..]. A variable
// or wildcard part may absorb one or more consecutive subject parts;
// shorter absorptions are tried first so earlier positions take as little
// as possible and the first solution is the canonical one.
bool match_parts(const std::vector<Term>& p, std::size_t pi,
                 const std::vector<Term>& s, std::size_t si,
                 Substitution& binds) {
  if (pi == p.size()) return si == s.size();
  if (si == s.size()) return false;
  const Term& pp = p[pi];
  const bool absorbing =
      pp->kind == TermKind::Variable || pp->kind == TermKind::Wildcard;
  if (!absorbing) {
    if (!match_node(pp, s[si], binds)) return false;
    return match_parts(p, pi + 1, s, si + 1, binds);
  }
  std::size_t remaining_patterns = p.size() - pi - 1;
  std::size_t max_take = s.size() - si - remaining_patterns;
  for (std::size_t take = 1; take <= max_take; ++take) {
    Term absorbed = take == 1
        ? s[si]
        : make_concat({s.begin() + static_cast<std::ptrdiff_t>(si),
                       s.begin() + static_cast<std::ptrdiff_t>(si + take)});
    Substitution saved = binds;
    if (match_node(pp, absorbed, binds) &&
        match_parts(p, pi + 1, s, si + take, binds))
      return true;
    binds = saved;
  }
  return false;
}

bool match_node(const Term& p, const Term& s, Substitution& binds) {
  switch (p->kind) {
    case TermKind::Wildcard:
      return true;
    case TermKind::Variable:
      return binds.bind(p->name, s);
    case TermKind::Constant:
      return s->kind == TermKind::Constant && s->name == p->name;
    case TermKind::Apply:
      return s->kind == TermKind::Apply && s->name == p->name &&
             match_node(p->children[0], s->children[0], binds);
    case TermKind::Enc:
      return s->kind == TermKind::Enc &&
             match_node(p->children[0], s->children[0], binds) &&
             match_node(p->children[1], s->children[1], binds);
    case TermKind::Concat:
      return s->kind == TermKind::Concat &&
             match_parts(p->children, 0, s->children, 0, binds);
  }
  return false;
}

} // namespace

bool match_into(const Term& pattern, const Term& subject, Substitution& binds) {
  return match_node(pattern, subject, binds);
}

std::optional<Substitution> match(const Term& pattern, const Term& subject) {
  Substitution binds;
  if (match_node(pattern, subject, binds)) return binds;
  return std::nullopt;
}

std::string to_string(const Term& t) {
  switch (t->kind) {
    case TermKind::Constant:
    case TermKind::Variable:
      return t->name;
    case TermKind::Wildcard:
      return "?";
    case TermKind::Apply:
      return t->name + "(" + to_string(t->children[0]) + ")";
    case TermKind::Enc: {
      const Term& key = t->children[1];
      std::string k = to_string(key);
      if (key->kind == TermKind::Concat) k = "(" + k + ")";
      return "{" + to_string(t->children[0]) + "}_" + k;
    }
    case TermKind::Concat: {
      std::string out;
      for (std::size_t i = 0; i < t->children.size(); ++i) {
        if (i) out += ".";
        const Term& c = t->children[i];
        std::string s = to_string(c);
        out += s;
      }
      return out;
    }
  }
  return "?";
}

} // namespace sqlimc
