// SPDX-License-Identifier: Apache-2.0

#include "sqlimc/engine.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>

namespace sqlimc {

void insert_fact(std::vector<FactAtom>& facts, FactAtom a) {
  auto it = std::lower_bound(
      facts.begin(), facts.end(), a, [](const FactAtom& x, const FactAtom& y) {
        return atom_order(x, y) == std::strong_ordering::less;
      });
  if (it != facts.end() && atom_equal(*it, a)) return;
  facts.insert(it, std::move(a));
}

bool contains_fact(const std::vector<FactAtom>& facts, const FactAtom& a) {
  auto it = std::lower_bound(
      facts.begin(), facts.end(), a, [](const FactAtom& x, const FactAtom& y) {
        return atom_order(x, y) == std::strong_ordering::less;
      });
  return it != facts.end() && atom_equal(*it, a);
}

void erase_fact(std::vector<FactAtom>& facts, const FactAtom& a) {
  auto it = std::lower_bound(
      facts.begin(), facts.end(), a, [](const FactAtom& x, const FactAtom& y) {
        return atom_order(x, y) == std::strong_ordering::less;
      });
  if (it != facts.end() && atom_equal(*it, a)) facts.erase(it);
}

// --- per-state caches ---------------------------------------------------

struct Engine::View {
  std::set<Term, TermLess> decomp; // decomposition closure of the knowledge
  std::vector<Term> pool;          // all subterm positions of known terms
  std::vector<FactAtom> derived;   // facts from non-schema clauses
  mutable std::map<Term, bool, TermLess> compose_memo;
};

struct Engine::Entry {
  SystemState state;
  View view;
  std::map<int, std::vector<Candidate>> apps; // memoized applicable()
};

namespace {

bool state_equal(const SystemState& a, const SystemState& b) {
  if (a.fresh_counter != b.fresh_counter) return false;
  if (a.hash_cache && b.hash_cache && a.hash_cache != b.hash_cache) return false;
  if (a.facts.size() != b.facts.size()) return false;
  for (std::size_t i = 0; i < a.facts.size(); ++i)
    if (!atom_equal(a.facts[i], b.facts[i])) return false;
  return true;
}

std::size_t state_hash(const SystemState& s) {
  if (s.hash_cache) return s.hash_cache;
  std::size_t h = 14695981039346656037ull;
  auto mix = [&h](std::size_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  mix(static_cast<std::size_t>(s.fresh_counter));
  for (const auto& f : s.facts) {
    mix(std::hash<std::string>{}(f.predicate));
    for (const auto& t : f.args) mix(term_hash(t));
  }
  if (h == 0) h = 1;
  s.hash_cache = h;
  return h;
}

// Composition without memo, used while the decomposition fixpoint runs.
bool compose_raw(const std::set<Term, TermLess>& d, const Term& t) {
  if (t->kind == TermKind::Constant && t->fresh_intruder) return true;
  if (d.count(t)) return true;
  switch (t->kind) {
    case TermKind::Concat: {
      for (const auto& p : t->children)
        if (!compose_raw(d, p)) return false;
      return true;
    }
    case TermKind::Apply:
      return t->is_public && compose_raw(d, t->children[0]);
    case TermKind::Enc:
      return compose_raw(d, t->children[0]) && compose_raw(d, t->children[1]);
    default:
      return false;
  }
}

} // namespace

Engine::Engine(TransitionSystem ts, EngineOptions opts)
    : ts_(std::move(ts)), opts_(opts) {
  for (const auto& c : ts_.public_constants)
    if (c->name == "sqli") sqli_ = c;
}

Engine::~Engine() = default;

SystemState Engine::initial_state() const {
  SystemState s;
  s.facts = ts_.initial;
  std::sort(s.facts.begin(), s.facts.end(),
            [](const FactAtom& a, const FactAtom& b) {
              return atom_order(a, b) == std::strong_ordering::less;
            });
  s.facts.erase(std::unique(s.facts.begin(), s.facts.end(), atom_equal),
                s.facts.end());
  s.fresh_counter = 1;
  return s;
}

Engine::Entry& Engine::entry(const SystemState& s) const {
  std::size_t h = state_hash(s);
  {
    auto it = cache_.find(h);
    if (it != cache_.end())
      for (auto& e : it->second)
        if (state_equal(e->state, s)) return *e;
  }
  auto ent = std::make_unique<Entry>();
  ent->state = s;
  View* v = &ent->view;
  std::vector<Term> work;
  for (const auto& f : s.facts)
    if (f.predicate == "iknows") work.push_back(f.args[0]);

  // Decomposition: split concatenations, open encryptions whose key is
  // composable from what is known so far. Terms only shrink, so this
  // terminates.
  while (!work.empty()) {
    Term t = work.back();
    work.pop_back();
    if (!v->decomp.insert(t).second) continue;
    if (t->kind == TermKind::Concat)
      for (const auto& p : t->children) work.push_back(p);
  }
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<Term> opened;
    for (const auto& t : v->decomp)
      if (t->kind == TermKind::Enc && !v->decomp.count(t->children[0]) &&
          compose_raw(v->decomp, t->children[1]))
        opened.push_back(t->children[0]);
    for (const auto& p : opened) {
      changed = true;
      work.push_back(p);
      while (!work.empty()) {
        Term t = work.back();
        work.pop_back();
        if (!v->decomp.insert(t).second) continue;
        if (t->kind == TermKind::Concat)
          for (const auto& q : t->children) work.push_back(q);
      }
    }
  }

  std::set<Term, TermLess> pool;
  for (const auto& f : s.facts)
    if (f.predicate == "iknows")
      for (const auto& sub : subterms(f.args[0])) pool.insert(sub);
  v->pool.assign(pool.begin(), pool.end());

  // Forward chaining of clauses with bodies over the state facts.
  std::vector<FactAtom> base = s.facts;
  for (const auto& t : v->decomp) insert_fact(base, FactAtom{"iknows", {t}});
  for (int pass = 0; pass < 100; ++pass) {
    bool grew = false;
    for (const auto& hc : ts_.horn) {
      if (hc.body.empty()) continue; // schema clauses are evaluated lazily
      // enumerate bindings of the body atoms against the fact base
      std::vector<Substitution> cands{Substitution{}};
      for (const auto& [pred, pat] : hc.body) {
        std::vector<Substitution> next;
        for (const auto& c : cands) {
          Term p = apply_subst(c, pat);
          for (const auto& f : base) {
            if (f.predicate != pred || f.args.size() != 1) continue;
            Substitution ext = c;
            if (match_into(p, f.args[0], ext)) next.push_back(std::move(ext));
          }
        }
        cands = std::move(next);
      }
      for (const auto& c : cands) {
        Term head = apply_subst(c, hc.head_arg);
        if (!is_ground(head)) continue;
        FactAtom derived{hc.head_predicate, {head}};
        if (!contains_fact(base, derived)) {
          insert_fact(base, derived);
          v->derived.push_back(derived);
          grew = true;
        }
      }
    }
    if (!grew) break;
    if (pass == 99) throw EngineError("clause saturation did not converge");
  }

  auto& bucket = cache_[h];
  bucket.push_back(std::move(ent));
  ++cache_entries_;
  return *bucket.back();
}

bool Engine::compose(const View& v, const Term& t) const {
  if (t->kind == TermKind::Constant && t->fresh_intruder) return true;
  auto it = v.compose_memo.find(t);
  if (it != v.compose_memo.end()) return it->second;
  bool ok;
  if (v.decomp.count(t)) {
    ok = true;
  } else {
    switch (t->kind) {
      case TermKind::Concat: {
        ok = true;
        for (const auto& p : t->children)
          if (!compose(v, p)) {
            ok = false;
            break;
          }
        break;
      }
      case TermKind::Apply:
        ok = t->is_public && compose(v, t->children[0]);
        break;
      case TermKind::Enc:
        ok = compose(v, t->children[0]) && compose(v, t->children[1]);
        break;
      default:
        ok = false;
    }
  }
  v.compose_memo.emplace(t, ok);
  return ok;
}

std::vector<FactAtom> Engine::closure(const SystemState& s) const {
  const View& v = entry(s).view;
  std::vector<FactAtom> out = s.facts;
  for (const auto& t : v.decomp) insert_fact(out, FactAtom{"iknows", {t}});
  for (const auto& f : v.derived) insert_fact(out, f);
  return out;
}

bool Engine::derivable(const SystemState& s, const Term& t) const {
  if (!is_ground(t)) throw EngineError("derivable() needs a ground term");
  return compose(entry(s).view, t);
}

bool Engine::holds_fact(const SystemState& s, const std::string& predicate,
                        const Term& t) const {
  const View& v = entry(s).view;
  for (const auto& f : v.derived)
    if (f.predicate == predicate && f.args.size() == 1 &&
        term_equal(f.args[0], t))
      return true;
  for (const auto& f : s.facts)
    if (f.predicate == predicate && f.args.size() == 1 &&
        term_equal(f.args[0], t))
      return true;
  for (const auto& hc : ts_.horn) {
    if (!hc.body.empty() || hc.head_predicate != predicate) continue;
    if (match(hc.head_arg, t)) return true;
    if (opts_.indb_loose && predicate == "inDB" &&
        t->kind == TermKind::Concat && sqli_) {
      for (const auto& p : t->children)
        if (term_equal(p, sqli_)) return true;
    }
  }
  return false;
}

namespace {

bool is_linear_pred(const std::string& p) {
  return p.rfind("state_", 0) == 0 || p == "secure_msg";
}

struct Partial {
  Substitution subst;
  std::vector<FactAtom> consumed;
  Term synth;
  std::vector<SynthChoice> choices;
};

} // namespace

std::vector<Candidate> Engine::applicable(const SystemState& s,
                                          int rule_index) const {
  return applicable_on(entry(s), rule_index);
}

const std::vector<Candidate>& Engine::applicable_on(Entry& e,
                                                    int rule_index) const {
  auto it = e.apps.find(rule_index);
  if (it != e.apps.end()) return it->second;
  auto [pos, inserted] =
      e.apps.emplace(rule_index, compute_applicable(e.state, rule_index));
  return pos->second;
}

std::vector<Candidate> Engine::compute_applicable(const SystemState& s,
                                                  int rule_index) const {
  const TransitionRule& rule = ts_.rules.at(static_cast<std::size_t>(rule_index));
  const View& v = entry(s).view;

  std::vector<const FactAtom*> linear_atoms, fact_atoms, iknows_atoms;
  for (const auto& a : rule.consume) {
    if (a.predicate == "iknows")
      iknows_atoms.push_back(&a);
    else if (is_linear_pred(a.predicate) || a.predicate == "child")
      linear_atoms.push_back(&a);
    else
      fact_atoms.push_back(&a);
  }

  std::vector<Partial> partials{Partial{}};

  // (1a) linear facts: match each positive atom against the state
  for (const FactAtom* atom : linear_atoms) {
    std::vector<Partial> next;
    for (const auto& part : partials) {
      for (const auto& f : s.facts) {
        if (f.predicate != atom->predicate || f.args.size() != atom->args.size())
          continue;
        Partial ext = part;
        bool ok = true;
        for (std::size_t i = 0; i < f.args.size() && ok; ++i)
          ok = match_into(apply_subst(ext.subst, atom->args[i]), f.args[i],
                          ext.subst);
        if (!ok) continue;
        ext.consumed.push_back(f);
        next.push_back(std::move(ext));
      }
    }
    partials = std::move(next);
    if (partials.empty()) return {};
  }

  // (1b) derived facts (query validity and friends)
  for (const FactAtom* atom : fact_atoms) {
    std::vector<Partial> next;
    for (const auto& part : partials) {
      if (atom->args.size() != 1)
        throw EngineError("unsupported fact arity in rule " + rule.name);
      Term arg = apply_subst(part.subst, atom->args[0]);
      if (!is_ground(arg))
        throw EngineError("non-ground fact guard in rule " + rule.name);
      if (holds_fact(s, atom->predicate, arg)) next.push_back(part);
    }
    partials = std::move(next);
    if (partials.empty()) return {};
  }

  // (1c) knowledge atoms: the intruder composes the message
  int reserved = 0;
  for (const FactAtom* atom : iknows_atoms) {
    std::vector<Partial> next;
    for (const auto& part : partials) {
      Term p = apply_subst(part.subst, atom->args[0]);

      // Replay: any known, derivable term matching the pattern.
      for (const auto& t : v.pool) {
        if (!compose(v, t)) continue;
        Substitution ext = part.subst;
        if (!match_into(p, t, ext)) continue;
        Partial np = part;
        for (const auto& [var, val] : ext.entries()) {
          if (part.subst.lookup(var)) continue;
          np.subst.bind(var, val);
          ChoiceOrigin origin = (sqli_ && term_equal(val, sqli_))
                                    ? ChoiceOrigin::SqliPayload
                                    : ChoiceOrigin::Known;
          std::string disp = var;
          if (auto it = rule.var_display.find(var); it != rule.var_display.end())
            disp = it->second;
          np.choices.push_back(SynthChoice{var, disp, val, origin});
        }
        np.synth = t;
        next.push_back(std::move(np));
      }

      // A fully determined pattern only needs composing.
      if (is_ground(p) && compose(v, p)) {
        Partial np = part;
        np.synth = p;
        next.push_back(std::move(np));
      }

      // Synthesis: bind each open variable to a candidate and compose.
      std::vector<std::string> binders = variables_of(p);
      if (!binders.empty()) {
        std::sort(binders.begin(), binders.end());
        reserved = std::max(reserved, static_cast<int>(binders.size()));

        std::vector<std::vector<std::pair<Term, ChoiceOrigin>>> cand_lists;
        for (std::size_t bi = 0; bi < binders.size(); ++bi) {
          std::string disp = binders[bi];
          if (auto it = rule.var_display.find(binders[bi]);
              it != rule.var_display.end())
            disp = it->second;
          std::vector<std::pair<Term, ChoiceOrigin>> cands;
          for (const auto& t : v.pool) {
            if (!compose(v, t)) continue;
            cands.emplace_back(t, (sqli_ && term_equal(t, sqli_))
                                      ? ChoiceOrigin::SqliPayload
                                      : ChoiceOrigin::Known);
          }
          Term fresh = make_fresh_intruder_constant(
              disp + "_" + std::to_string(s.fresh_counter + static_cast<long>(bi)));
          cands.emplace_back(fresh, ChoiceOrigin::Fresh);
          if (sqli_) {
            std::vector<std::pair<Term, ChoiceOrigin>> exts;
            for (const auto& [c, o] : cands) {
              (void)o;
              exts.emplace_back(make_concat({c, sqli_}),
                                ChoiceOrigin::SqliExtended);
            }
            cands.insert(cands.end(), exts.begin(), exts.end());
          }
          std::sort(cands.begin(), cands.end(),
                    [](const auto& a, const auto& b) {
                      return term_order(a.first, b.first) ==
                             std::strong_ordering::less;
                    });
          cands.erase(std::unique(cands.begin(), cands.end(),
                                  [](const auto& a, const auto& b) {
                                    return term_equal(a.first, b.first);
                                  }),
                      cands.end());
          cand_lists.push_back(std::move(cands));
        }

        std::vector<std::size_t> idx(binders.size(), 0);
        for (;;) {
          Partial np = part;
          for (std::size_t bi = 0; bi < binders.size(); ++bi) {
            const auto& [val, origin] = cand_lists[bi][idx[bi]];
            np.subst.bind(binders[bi], val);
            std::string disp = binders[bi];
            if (auto it = rule.var_display.find(binders[bi]);
                it != rule.var_display.end())
              disp = it->second;
            np.choices.push_back(SynthChoice{binders[bi], disp, val, origin});
          }
          Term msg = apply_subst(np.subst, p);
          if (is_ground(msg) && !has_wildcard(msg) && compose(v, msg)) {
            np.synth = msg;
            next.push_back(np);
          }
          // advance the index vector
          std::size_t k = 0;
          for (; k < idx.size(); ++k) {
            if (++idx[k] < cand_lists[k].size()) break;
            idx[k] = 0;
          }
          if (k == idx.size()) break;
        }
      }
    }
    partials = std::move(next);
    if (partials.empty()) return {};
  }

  // (2) equality conditions, which may bind pattern variables
  for (const auto& [lhs, rhs] : rule.require_eq) {
    std::vector<Partial> next;
    for (const auto& part : partials) {
      Term l = apply_subst(part.subst, lhs);
      Term r = apply_subst(part.subst, rhs);
      if (!is_ground(l)) throw EngineError("non-ground condition in " + rule.name);
      Substitution ext = part.subst;
      if (!match_into(r, l, ext)) continue;
      Partial np = part;
      np.subst = std::move(ext);
      next.push_back(std::move(np));
    }
    partials = std::move(next);
    if (partials.empty()) return {};
  }

  std::vector<Candidate> out;
  for (const auto& part : partials) {
    // (3) forbidden atoms: no ground instance may be present or derivable
    bool rejected = false;
    for (const auto& a : rule.forbid) {
      FactAtom fa = atom_apply(part.subst, a);
      bool is_schema = false;
      for (const auto& hc : ts_.horn)
        if (hc.body.empty() && hc.head_predicate == fa.predicate)
          is_schema = true;
      if (is_schema) {
        if (fa.args.size() != 1 || !atom_is_ground(fa))
          throw EngineError("non-ground forbidden schema atom in " + rule.name);
        if (holds_fact(s, fa.predicate, fa.args[0])) {
          rejected = true;
          break;
        }
        continue;
      }
      // generic predicate: reject when any instance matches the closure
      for (const auto& f : s.facts) {
        if (f.predicate != fa.predicate || f.args.size() != fa.args.size())
          continue;
        Substitution probe = part.subst;
        bool all = true;
        for (std::size_t i = 0; i < f.args.size() && all; ++i)
          all = match_into(atom_apply(probe, fa).args[i], f.args[i], probe);
        if (all) {
          rejected = true;
          break;
        }
      }
      if (rejected) break;
    }
    if (rejected) continue;

    // (4) inequality conditions
    for (const auto& [lhs, rhs] : rule.require_neq) {
      Term l = apply_subst(part.subst, lhs);
      Term r = apply_subst(part.subst, rhs);
      if (!is_ground(l)) throw EngineError("non-ground condition in " + rule.name);
      Substitution probe = part.subst;
      if (match_into(r, l, probe)) {
        rejected = true;
        break;
      }
    }
    if (rejected) continue;

    Candidate c;
    c.subst = part.subst;
    c.consumed_linear = part.consumed;
    c.synth_message = part.synth;
    c.choices = part.choices;
    c.reserved_fresh = reserved;
    out.push_back(std::move(c));
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (auto c = a.subst.compare(b.subst);
                         c != std::strong_ordering::equal)
                       return c == std::strong_ordering::less;
                     if (a.synth_message && b.synth_message)
                       return term_order(a.synth_message, b.synth_message) ==
                              std::strong_ordering::less;
                     return false;
                   });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Candidate& a, const Candidate& b) {
                          if (a.subst.compare(b.subst) !=
                              std::strong_ordering::equal)
                            return false;
                          if (!a.synth_message != !b.synth_message) return false;
                          if (a.synth_message &&
                              !term_equal(a.synth_message, b.synth_message))
                            return false;
                          return true;
                        }),
            out.end());
  return out;
}

SystemState Engine::step(const SystemState& s, int rule_index,
                         const Candidate& c, GroundFiring* firing) const {
  const TransitionRule& rule = ts_.rules.at(static_cast<std::size_t>(rule_index));
  SystemState out;
  out.facts = s.facts;
  out.fresh_counter = s.fresh_counter + c.reserved_fresh;

  Substitution subst = c.subst;
  for (const auto& [fv, sort] : rule.fresh_vars) {
    Term nf = make_fresh_engine_constant("n" + std::to_string(out.fresh_counter++),
                                         sort);
    subst.bind(fv, nf);
  }

  // knowledge is monotone: iknows atoms are never removed
  for (const auto& f : c.consumed_linear)
    if (f.predicate != "iknows" && f.predicate != "child") erase_fact(out.facts, f);

  std::vector<FactAtom> produced;
  for (const auto& a : rule.produce) {
    FactAtom ground = atom_apply(subst, a);
    if (!atom_is_ground(ground))
      throw EngineError("rule " + rule.name + " produced a non-ground atom " +
                        atom_to_string(ground));
    produced.push_back(ground);
    insert_fact(out.facts, std::move(ground));
  }
  if (c.synth_message) {
    insert_fact(out.facts, FactAtom{"iknows", {c.synth_message}});
    produced.push_back(FactAtom{"iknows", {c.synth_message}});
  }

  if (firing) {
    firing->rule_index = rule_index;
    firing->subst = subst;
    firing->consumed = c.consumed_linear;
    if (c.synth_message)
      firing->consumed.push_back(FactAtom{"iknows", {c.synth_message}});
    firing->produced = std::move(produced);
    firing->synth_message = c.synth_message;
    firing->choices = c.choices;
  }
  return out;
}

std::optional<std::string> Engine::violated_goal(const SystemState& s) const {
  return violated_goal_on(entry(s));
}

std::optional<std::string> Engine::violated_goal_on(const Entry& e) const {
  const View& v = e.view;
  for (const auto& g : ts_.attack_states) {
    if (g.pattern.predicate != "iknows" || g.pattern.args.size() != 1) continue;
    for (const auto& t : v.decomp)
      if (match(g.pattern.args[0], t)) return g.goal;
  }
  return std::nullopt;
}

SearchResult Engine::search(SearchStats* stats) const {
  if (opts_.max_depth < 1) throw EngineError("max_depth must be at least 1");
  auto t0 = std::chrono::steady_clock::now();
  SearchStats local;
  SearchStats& st = stats ? *stats : local;
  st.nodes = 0;

  auto root = std::make_shared<SearchNode>();
  root->state = initial_state();
  st.nodes = 1;

  bool cutoff = false;
  std::optional<AttackFound> found;

  // depth-first exploration bounded by the number of message exchanges
  auto dfs = [&](auto&& self, const NodePtr& node, int bound) -> bool {
    Entry& e = entry(node->state);
    if (auto goal = violated_goal_on(e)) {
      AttackFound af;
      af.goal = *goal;
      for (NodePtr n = node; n; n = n->parent) af.path.push_back(n);
      std::reverse(af.path.begin(), af.path.end());
      found = std::move(af);
      return true;
    }
    for (int ri = 0; ri < static_cast<int>(ts_.rules.size()); ++ri) {
      bool bearing = ts_.rules[static_cast<std::size_t>(ri)].role != MsgRole::None;
      int d2 = node->msg_depth + (bearing ? 1 : 0);
      if (d2 > bound) {
        if (!applicable_on(e, ri).empty()) cutoff = true;
        continue;
      }
      for (const auto& cand : applicable_on(e, ri)) {
        auto child = std::make_shared<SearchNode>();
        GroundFiring firing;
        child->state = step(node->state, ri, cand, &firing);
        child->parent = node;
        child->via = std::move(firing);
        child->msg_depth = d2;
        child->length = node->length + 1;
        if (++st.nodes > opts_.node_budget) throw ResourceLimit(opts_.node_budget);
        if (self(self, child, bound)) return true;
      }
    }
    return false;
  };

  int bound = 1;
  for (; bound <= opts_.max_depth; ++bound) {
    // safe point: nothing references the cache between iterations
    if (cache_entries_ >= 200000) {
      cache_.clear();
      cache_entries_ = 0;
    }
    cutoff = false;
    if (dfs(dfs, root, bound)) break;
    st.bound_reached = bound;
    if (!cutoff) {
      st.elapsed_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
      return Exhausted{true};
    }
  }
  st.elapsed_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  if (found) {
    st.bound_reached = bound;
    return *found;
  }
  return SafeUpToDepth{opts_.max_depth};
}

} // namespace sqlimc
