// SPDX-License-Identifier: Apache-2.0

#include "sqlimc/translate.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace sqlimc {

namespace {

Term dummy_for(Sort s) {
  switch (s) {
    case Sort::Agent: return make_constant("dummy_agent", Sort::Agent, false);
    case Sort::Text: return make_constant("dummy_text", Sort::Text, false);
    default: return make_constant("dummy_message", Sort::Message, false);
  }
}

Term label_term(int n) {
  return make_constant("sl_" + std::to_string(n), Sort::Text, false);
}

Term iid_term(int n) {
  return make_constant("iid_" + std::to_string(n), Sort::Text, false);
}

struct Instance {
  const EntityDecl* entity = nullptr;
  int iid = 0;
  int parent_iid = -1;
  Term actor;
  std::map<std::string, Term> param_values;
  std::vector<std::string> locals; // declaration order
  std::map<std::string, Sort> local_sorts;
};

class Translator {
 public:
  explicit Translator(const SpecAST& ast) : ast_(ast) {}

  TransitionSystem run() {
    if (!ast_.root) throw TranslationError("missing root entity");
    collect_constants(*ast_.root);
    Instance root;
    root.entity = ast_.root.get();
    root.iid = next_iid_++;
    root.actor = make_constant("environment", Sort::Agent, false);
    instances_.push_back(root);
    instantiate_children(0);

    for (auto& inst : instances_) {
      if (!is_pure_new(*inst.entity) && !inst.entity->body.empty())
        compile_instance(inst);
      else
        initial_state_atom(inst, 0);
    }

    ts_.horn = ast_.horn_clauses;
    for (const auto& g : ast_.goals)
      ts_.attack_states.push_back({g.name, FactAtom{"iknows", {g.forbidden}}});

    build_initial_knowledge();
    std::sort(ts_.initial.begin(), ts_.initial.end(),
              [](const FactAtom& a, const FactAtom& b) {
                return atom_order(a, b) == std::strong_ordering::less;
              });
    ts_.initial.erase(std::unique(ts_.initial.begin(), ts_.initial.end(),
                                  atom_equal),
                      ts_.initial.end());
    check_well_formed();
    return rename_apart(ts_);
  }

 private:
  static bool is_pure_new(const EntityDecl& e) {
    if (e.body.empty()) return false;
    for (const auto& st : e.body)
      if (st.kind != StatementKind::New) return false;
    return true;
  }

  void collect_constants(const EntityDecl& e) {
    for (const auto& d : e.symbols) {
      if (d.is_function) continue;
      if (!d.is_constant) continue;
      Term c = make_constant(d.name, d.sort, d.is_public);
      if (d.is_public || d.sort == Sort::Agent) known_constants_.push_back(c);
      if (d.is_public) ts_.public_constants.push_back(c);
    }
    for (const auto& c : e.children) collect_constants(*c);
  }

  // Looks the declaration up among the entity's children, then among the
  // entities declared beside its ancestors.
  const EntityDecl* resolve_decl(const Instance& inst, const std::string& name) {
    for (const auto& c : inst.entity->children)
      if (c->name == name) return c.get();
    int pid = inst.parent_iid;
    while (pid >= 0) {
      const Instance* p = nullptr;
      for (const auto& x : instances_)
        if (x.iid == pid) p = &x;
      if (!p) break;
      for (const auto& c : p->entity->children)
        if (c->name == name) return c.get();
      pid = p->parent_iid;
    }
    return nullptr;
  }

  void instantiate_children(std::size_t inst_index) {
    const Instance inst = instances_[inst_index]; // copy: vector may grow
    if (!is_pure_new(*inst.entity)) return;
    for (const auto& st : inst.entity->body) {
      const EntityDecl* target = resolve_decl(inst, st.entity);
      if (!target) throw TranslationError("unknown entity '" + st.entity + "'");

      Instance child;
      child.entity = target;
      child.iid = next_iid_++;
      child.parent_iid = inst.iid;

      std::vector<Term> args;
      for (const auto& a : st.args) args.push_back(eval_arg(a, inst, st.line));
      std::size_t ai = 0;
      for (const auto& [pname, psort] : target->params) {
        if (pname == "Actor" && target->implicit_actor) {
          child.param_values["Actor"] = inst.actor;
          continue;
        }
        if (ai >= args.size())
          throw TranslationError("arity mismatch instantiating '" + st.entity + "'");
        child.param_values[pname] = args[ai++];
        (void)psort;
      }
      if (ai != args.size())
        throw TranslationError("arity mismatch instantiating '" + st.entity + "'");
      child.actor = child.param_values.at("Actor");
      for (const auto& d : target->symbols) {
        if (d.is_function || d.is_constant) continue;
        child.locals.push_back(d.name);
        child.local_sorts[d.name] = d.sort;
      }
      if (child.actor->kind == TermKind::Constant &&
          !ts_.agent_entity.count(child.actor->name) &&
          !is_pure_new(*target) && !target->body.empty())
        ts_.agent_entity[child.actor->name] = target->name;

      ts_.initial.push_back(
          FactAtom{"child", {iid_term(child.iid), iid_term(inst.iid)}});
      instances_.push_back(child);
      instantiate_children(instances_.size() - 1);
    }
  }

  Term eval_arg(const Term& a, const Instance& inst, int line) {
    (void)line;
    if (a->kind == TermKind::Constant) return a;
    if (a->kind == TermKind::Variable) {
      auto it = inst.param_values.find(a->name);
      if (it != inst.param_values.end()) return it->second;
    }
    throw TranslationError("entity instantiated with unknown constants: " +
                           to_string(a));
  }

  // --- compilation of one behavioural instance ---------------------------

  struct Ctx {
    Instance* inst;
    int label_counter = 0;
    std::set<int> loop_heads;
    int alloc() { return label_counter++; }
  };

  void compile_instance(Instance& inst) {
    Ctx ctx{&inst};
    std::size_t first_rule = ts_.rules.size();
    int entry = ctx.alloc();
    int exit = ctx.alloc();
    compile_seq(ctx, inst.entity->body, entry, exit);
    renumber_labels(first_rule, ctx.loop_heads, entry);
    initial_state_atom(inst, 0);
  }

  // Labels are allocated in whatever order compilation needs them; this
  // pass renames them so they strictly increase along the control flow,
  // with loop back edges returning to their head.
  void renumber_labels(std::size_t first_rule, const std::set<int>& loop_heads,
                       int entry) {
    auto label_of = [](const FactAtom& a) {
      return std::stoi(a.args[2]->name.substr(3));
    };
    std::map<int, std::vector<int>> succ;
    std::map<int, int> indeg;
    indeg[entry] = 0;
    for (std::size_t i = first_rule; i < ts_.rules.size(); ++i) {
      const auto& r = ts_.rules[i];
      int from = -1, to = -1;
      for (const auto& a : r.consume)
        if (a.predicate.rfind("state_", 0) == 0) from = label_of(a);
      for (const auto& a : r.produce)
        if (a.predicate.rfind("state_", 0) == 0) to = label_of(a);
      if (from < 0 || to < 0)
        throw TranslationError("internal: rule without state atoms");
      indeg.try_emplace(from, 0);
      indeg.try_emplace(to, 0);
      if (loop_heads.count(to)) continue; // back edge
      succ[from].push_back(to);
      ++indeg[to];
    }
    std::map<int, int> renamed;
    std::set<int> ready;
    for (const auto& [l, d] : indeg)
      if (d == 0) ready.insert(l);
    while (!ready.empty()) {
      int l = *ready.begin();
      ready.erase(ready.begin());
      renamed[l] = static_cast<int>(renamed.size());
      for (int t : succ[l])
        if (--indeg[t] == 0) ready.insert(t);
    }
    if (renamed.size() != indeg.size())
      throw TranslationError("internal: control flow is not reducible");
    for (std::size_t i = first_rule; i < ts_.rules.size(); ++i) {
      TransitionRule& r = ts_.rules[i];
      int from = -1;
      for (auto atoms : {&r.consume, &r.produce})
        for (auto& a : *atoms)
          if (a.predicate.rfind("state_", 0) == 0) {
            if (atoms == &r.consume) from = renamed.at(label_of(a));
            a.args[2] = label_term(renamed.at(label_of(a)));
          }
      // rule names carry the renamed source label
      std::size_t s = r.name.rfind("_s");
      std::size_t d = s + 2;
      while (d < r.name.size() && std::isdigit((unsigned char)r.name[d])) ++d;
      r.name = r.name.substr(0, s + 2) + std::to_string(from) + r.name.substr(d);
    }
  }

  void initial_state_atom(const Instance& inst, int entry_label) {
    FactAtom a;
    a.predicate = "state_" + inst.entity->name;
    a.args.push_back(inst.actor);
    a.args.push_back(iid_term(inst.iid));
    a.args.push_back(label_term(entry_label));
    for (const auto& [pname, psort] : inst.entity->params) {
      if (pname == "Actor") continue;
      (void)psort;
      a.args.push_back(inst.param_values.at(pname));
    }
    for (const auto& l : inst.locals)
      a.args.push_back(dummy_for(inst.local_sorts.at(l)));
    ts_.initial.push_back(std::move(a));
  }

  void compile_seq(Ctx& ctx, const StatementList& body, int entry, int exit) {
    int cur = entry;
    for (std::size_t i = 0; i < body.size(); ++i) {
      int next = (i + 1 == body.size()) ? exit : ctx.alloc();
      compile_statement(ctx, body[i], cur, next);
      cur = next;
    }
    if (body.empty() && entry != exit)
      throw TranslationError("internal: empty body with distinct labels");
  }

  // State atom template: locals as variables, label fixed.
  FactAtom state_atom(const Ctx& ctx, int label,
                      const std::map<std::string, Term>& updates) const {
    const Instance& inst = *ctx.inst;
    FactAtom a;
    a.predicate = "state_" + inst.entity->name;
    a.args.push_back(inst.actor);
    a.args.push_back(iid_term(inst.iid));
    a.args.push_back(label_term(label));
    for (const auto& [pname, psort] : inst.entity->params) {
      if (pname == "Actor") continue;
      (void)psort;
      a.args.push_back(inst.param_values.at(pname));
    }
    for (const auto& l : inst.locals) {
      auto it = updates.find(l);
      if (it != updates.end())
        a.args.push_back(it->second);
      else
        a.args.push_back(make_variable(l, inst.local_sorts.at(l)));
    }
    return a;
  }

  TransitionRule new_rule(const Ctx& ctx, int label, const char* tag) {
    TransitionRule r;
    r.entity = ctx.inst->entity->name;
    r.instance_id = ctx.inst->iid;
    r.name = ctx.inst->entity->name + "_i" + std::to_string(ctx.inst->iid) +
             "_s" + std::to_string(label) + tag;
    for (const auto& l : ctx.inst->locals) {
      r.var_display[l] = l;
      r.var_display[l + "__in"] = l;
      r.var_display[l + "__f"] = l;
    }
    return r;
  }

  // Rewrites a surface term to rule form: locals become rule variables,
  // parameters become the instance constants, binders get the __in suffix.
  Term rule_term(const Ctx& ctx, const Term& t) const {
    switch (t->kind) {
      case TermKind::Constant:
      case TermKind::Wildcard:
        return t;
      case TermKind::Variable: {
        auto it = ctx.inst->param_values.find(t->name);
        if (it != ctx.inst->param_values.end()) {
          if (t->binder)
            throw TranslationError("cannot rebind parameter '" + t->name + "'");
          return it->second;
        }
        if (t->binder) return make_variable(t->name + "__in", t->sort);
        return make_variable(t->name, t->sort);
      }
      case TermKind::Apply:
        return make_apply(t->name, rule_term(ctx, t->children[0]), t->is_public);
      case TermKind::Enc:
        return make_enc(rule_term(ctx, t->children[0]),
                        rule_term(ctx, t->children[1]));
      case TermKind::Concat: {
        std::vector<Term> parts;
        for (const auto& c : t->children) parts.push_back(rule_term(ctx, c));
        return make_concat(std::move(parts));
      }
    }
    return t;
  }

  static void collect_binders(const Term& t, std::vector<std::string>& out) {
    if (t->kind == TermKind::Variable) {
      if (t->binder &&
          std::find(out.begin(), out.end(), t->name) == out.end())
        out.push_back(t->name);
      return;
    }
    for (const auto& c : t->children) collect_binders(c, out);
  }

  void compile_statement(Ctx& ctx, const Statement& st, int entry, int exit) {
    switch (st.kind) {
      case StatementKind::Assign: {
        TransitionRule r = new_rule(ctx, entry, "");
        r.consume.push_back(state_atom(ctx, entry, {}));
        std::map<std::string, Term> up;
        if (st.fresh) {
          Sort s = ctx.inst->local_sorts.count(st.var)
                       ? ctx.inst->local_sorts.at(st.var)
                       : Sort::Message;
          r.fresh_vars.emplace_back(st.var + "__f", s);
          up[st.var] = make_variable(st.var + "__f", s);
        } else {
          up[st.var] = rule_term(ctx, st.value);
        }
        r.produce.push_back(state_atom(ctx, exit, up));
        ts_.rules.push_back(std::move(r));
        return;
      }
      case StatementKind::Send: {
        TransitionRule r = new_rule(ctx, entry, "");
        r.consume.push_back(state_atom(ctx, entry, {}));
        Term msg = rule_term(ctx, st.message);
        Term to = rule_term(ctx, st.peer);
        bool private_peer = to->kind == TermKind::Constant &&
                            to->sort == Sort::Agent && to->name != "i";
        if (st.channel == ChannelKind::Secure && private_peer) {
          r.produce.push_back(FactAtom{"secure_msg", {ctx.inst->actor, to, msg}});
          r.role = MsgRole::SendSecure;
        } else {
          // The intruder is the network and the only client: anything not
          // bound for a model instance on a secure channel ends up in its
          // knowledge.
          r.produce.push_back(FactAtom{"iknows", {msg}});
          r.role = MsgRole::SendClient;
        }
        r.send_to = to;
        r.produce.push_back(state_atom(ctx, exit, {}));
        ts_.rules.push_back(std::move(r));
        return;
      }
      case StatementKind::Receive: {
        compile_receive(ctx, st.peer, st.channel, st.message, entry, exit, "");
        return;
      }
      case StatementKind::Select: {
        for (std::size_t b = 0; b < st.guards.size(); ++b) {
          std::string tag = "_b" + std::to_string(b);
          const auto& body = st.bodies[b];
          int bentry = body.empty() ? exit : ctx.alloc();
          compile_guard(ctx, st.guards[b], entry, bentry, tag, /*positive=*/true);
          if (!body.empty()) compile_seq(ctx, body, bentry, exit);
        }
        return;
      }
      case StatementKind::If: {
        const auto& then_body = st.bodies[0];
        int tentry = then_body.empty() ? exit : ctx.alloc();
        compile_guard(ctx, st.guards[0], entry, tentry, "_pos", true);
        if (!then_body.empty()) compile_seq(ctx, then_body, tentry, exit);
        bool has_else = st.bodies.size() > 1;
        if (st.guards[0].kind == GuardKind::Receive) {
          if (has_else && !st.bodies[1].empty())
            throw TranslationError("a receive guard cannot be negated (line " +
                                   std::to_string(st.line) + ")");
          return; // blocking receive, nothing to do when absent
        }
        const auto& else_body = has_else ? st.bodies[1] : StatementList{};
        int eentry = else_body.empty() ? exit : ctx.alloc();
        compile_guard(ctx, st.guards[0], entry, eentry, "_neg", false);
        if (!else_body.empty()) compile_seq(ctx, else_body, eentry, exit);
        return;
      }
      case StatementKind::While: {
        ctx.loop_heads.insert(entry);
        compile_seq(ctx, st.bodies[0], entry, entry);
        return;
      }
      case StatementKind::New:
        throw TranslationError("new-instantiation inside behaviour (line " +
                               std::to_string(st.line) + ")");
    }
  }

  void compile_guard(Ctx& ctx, const Guard& g, int entry, int exit,
                     const std::string& tag, bool positive) {
    switch (g.kind) {
      case GuardKind::Receive:
        compile_receive(ctx, g.from, g.channel, g.pattern, entry, exit, tag);
        return;
      case GuardKind::Fact: {
        TransitionRule r = new_rule(ctx, entry, tag.c_str());
        r.consume.push_back(state_atom(ctx, entry, {}));
        FactAtom atom{g.predicate, {rule_term(ctx, g.arg)}};
        bool wants = positive ? !g.negated : g.negated;
        if (wants)
          r.consume.push_back(std::move(atom));
        else
          r.forbid.push_back(std::move(atom));
        r.produce.push_back(state_atom(ctx, exit, {}));
        ts_.rules.push_back(std::move(r));
        return;
      }
      case GuardKind::Equality: {
        TransitionRule r = new_rule(ctx, entry, tag.c_str());
        r.consume.push_back(state_atom(ctx, entry, {}));
        Term lhs = rule_term(ctx, g.lhs);
        Term rhs = rule_term(ctx, g.rhs);
        std::map<std::string, Term> up;
        if (positive) {
          r.require_eq.emplace_back(lhs, rhs);
          std::vector<std::string> binders;
          collect_binders(g.rhs, binders);
          for (const auto& b : binders)
            up[b] = make_variable(b + "__in", Sort::Message);
        } else {
          r.require_neq.emplace_back(lhs, rhs);
        }
        r.produce.push_back(state_atom(ctx, exit, up));
        ts_.rules.push_back(std::move(r));
        return;
      }
    }
  }

  void compile_receive(Ctx& ctx, const Term& from, ChannelKind ch,
                       const Term& pattern, int entry, int exit,
                       const std::string& tag) {
    TransitionRule r = new_rule(ctx, entry, tag.c_str());
    r.consume.push_back(state_atom(ctx, entry, {}));
    Term pat = rule_term(ctx, pattern);
    Term fromT = from->kind == TermKind::Wildcard ? from : rule_term(ctx, from);

    if (ch == ChannelKind::Secure) {
      if (fromT->kind != TermKind::Constant || fromT->sort != Sort::Agent)
        throw TranslationError(
            "receive on a channel the sender cannot write: the intruder "
            "cannot forge secure-channel messages");
      r.consume.push_back(FactAtom{"secure_msg", {fromT, ctx.inst->actor, pat}});
      r.role = MsgRole::None; // reported at the producing side
    } else if (ch == ChannelKind::Authentic) {
      throw TranslationError(
          "receive on a channel the sender cannot write: authentic "
          "delivery between entities is not modeled");
    } else {
      // insecure / confidential: the intruder can write it
      r.consume.push_back(FactAtom{"iknows", {pat}});
      r.role = MsgRole::ReceiveClient;
    }
    std::map<std::string, Term> up;
    std::vector<std::string> binders;
    collect_binders(pattern, binders);
    for (const auto& b : binders)
      up[b] = make_variable(b + "__in",
                            ctx.inst->local_sorts.count(b)
                                ? ctx.inst->local_sorts.at(b)
                                : Sort::Message);
    r.produce.push_back(state_atom(ctx, exit, up));
    ts_.rules.push_back(std::move(r));
  }

  void build_initial_knowledge() {
    std::set<std::string> seen;
    ts_.initial.push_back(
        FactAtom{"iknows", {make_constant("i", Sort::Agent, true)}});
    for (const auto& c : known_constants_) {
      if (!seen.insert(c->name).second) continue;
      ts_.initial.push_back(FactAtom{"iknows", {c}});
    }
  }

  void check_well_formed() const {
    for (const auto& r : ts_.rules) {
      std::set<std::string> bound;
      for (const auto& a : r.consume)
        for (const auto& t : a.args)
          for (const auto& v : variables_of(t)) bound.insert(v);
      for (const auto& [l, rh] : r.require_eq) {
        for (const auto& v : variables_of(l))
          if (!bound.count(v))
            throw TranslationError("rule " + r.name +
                                   ": unbound condition variable " + v);
        for (const auto& v : variables_of(rh)) bound.insert(v);
      }
      for (const auto& [v, s] : r.fresh_vars) {
        (void)s;
        bound.insert(v);
      }
      for (const auto& a : r.produce)
        for (const auto& t : a.args)
          for (const auto& v : variables_of(t))
            if (!bound.count(v))
              throw TranslationError("rule " + r.name +
                                     ": unbound produced variable " + v);
    }
  }

  const SpecAST& ast_;
  TransitionSystem ts_;
  std::vector<Instance> instances_;
  std::vector<Term> known_constants_;
  int next_iid_ = 0;
};

Term rename_term(const Term& t, const std::string& suffix) {
  switch (t->kind) {
    case TermKind::Constant:
    case TermKind::Wildcard:
      return t;
    case TermKind::Variable:
      return make_variable(t->name + suffix, t->sort, t->binder);
    case TermKind::Apply:
      return make_apply(t->name, rename_term(t->children[0], suffix), t->is_public);
    case TermKind::Enc:
      return make_enc(rename_term(t->children[0], suffix),
                      rename_term(t->children[1], suffix));
    case TermKind::Concat: {
      std::vector<Term> parts;
      for (const auto& c : t->children) parts.push_back(rename_term(c, suffix));
      return make_concat(std::move(parts));
    }
  }
  return t;
}

} // namespace

TransitionSystem translate(const SpecAST& ast) { return Translator(ast).run(); }

TransitionSystem rename_apart(const TransitionSystem& ts) {
  if (ts.renamed_apart) return ts;
  TransitionSystem out = ts;
  out.renamed_apart = true;
  for (std::size_t i = 0; i < out.rules.size(); ++i) {
    auto& r = out.rules[i];
    std::string suffix = "_r" + std::to_string(i);

    auto ren_atoms = [&](std::vector<FactAtom>& atoms) {
      for (auto& a : atoms)
        for (auto& t : a.args) t = rename_term(t, suffix);
    };
    ren_atoms(r.consume);
    ren_atoms(r.forbid);
    ren_atoms(r.produce);
    for (auto& [l, rh] : r.require_eq) {
      l = rename_term(l, suffix);
      rh = rename_term(rh, suffix);
    }
    for (auto& [l, rh] : r.require_neq) {
      l = rename_term(l, suffix);
      rh = rename_term(rh, suffix);
    }
    if (r.send_to) r.send_to = rename_term(r.send_to, suffix);
    std::map<std::string, std::string> disp;
    for (auto& [v, s] : r.fresh_vars) v = v + suffix;
    for (const auto& [v, d] : r.var_display) disp[v + suffix] = d;
    r.var_display = std::move(disp);
  }
  return out;
}

} // namespace sqlimc
