// SPDX-License-Identifier: Apache-2.0

#include "sqlimc/verify_db.hpp"

#include <sstream>

#include "sqlimc/engine.hpp"
#include "sqlimc/parser.hpp"
#include "sqlimc/translate.hpp"

namespace sqlimc {

namespace {

const char* kHarness = R"(specification DatabaseCheck
channel_model CCM
entity Environment {
  symbols
    webapp, database: agent;
    nonpublic inDB(message): fact;
    nonpublic sanitizedQuery(message): message;
    nonpublic query(message): message;
    nonpublic tuple(message): message;
    nonpublic no_tuple: text;
    sqli: text;
  clauses
    db_hc_ev(M): inDB(M.sqli);
  entity Session {
    body { new DB(webapp, database); }
  }
  body { new Session(); }
}
)";

struct Driver {
  Engine engine;

  Driver() : engine(translate(parse_spec(kHarness))) {}

  // Feeds one wrapped query to the database instance and runs it to
  // quiescence; returns the replies that came back (nonces stripped).
  std::vector<Term> drive(const std::string& wrapper, const Term& q) {
    SystemState s = engine.initial_state();
    Term probe = make_constant("probe_nonce", Sort::Text, false);
    insert_fact(s.facts,
                FactAtom{"secure_msg",
                         {make_constant("webapp", Sort::Agent, true),
                          make_constant("database", Sort::Agent, true),
                          make_concat({probe, make_apply(wrapper, q)})}});
    std::vector<Term> replies;
    for (int steps = 0; steps < 64; ++steps) {
      bool fired = false;
      for (int ri = 0; ri < static_cast<int>(engine.system().rules.size()); ++ri) {
        auto cands = engine.applicable(s, ri);
        if (cands.empty()) continue;
        GroundFiring firing;
        s = engine.step(s, ri, cands.front(), &firing);
        for (const auto& a : firing.produced)
          if (a.predicate == "secure_msg" &&
              a.args[1]->kind == TermKind::Constant &&
              a.args[1]->name == "webapp")
            replies.push_back(a.args[2]);
        fired = true;
        break;
      }
      if (!fired) break;
    }
    return replies;
  }
};

bool reply_is(const Term& reply, const Term& payload) {
  // replies have the shape <payload>.<fresh nonce>
  if (reply->kind != TermKind::Concat || reply->children.size() < 2) return false;
  const Term& last = reply->children.back();
  if (!(last->kind == TermKind::Constant && last->fresh_engine)) return false;
  std::vector<Term> head(reply->children.begin(), reply->children.end() - 1);
  return term_equal(make_concat(std::move(head)), payload);
}

void add_counterexample(DbCheckReport& r, const std::string& what) {
  if (r.counterexamples.size() < 5) r.counterexamples.push_back(what);
  else if (r.counterexamples.size() == 5)
    r.counterexamples.push_back("...");
}

} // namespace

DbCheckReport check_database_behaviour(int depth_bound) {
  if (depth_bound < 1) depth_bound = 1;
  DbCheckReport report;
  report.depth = depth_bound;

  std::vector<Term> atoms = {
      make_constant("u", Sort::Text, true),
      make_constant("v", Sort::Text, true),
      make_constant("w", Sort::Text, true),
      make_constant("sqli", Sort::Text, true),
  };
  Term sqli = atoms.back();

  // terms of depth d that may appear as concatenation parts
  std::vector<std::vector<Term>> nonconcat(static_cast<std::size_t>(depth_bound));
  std::vector<Term> all_prev = atoms;
  nonconcat[0] = atoms;
  for (int d = 1; d < depth_bound; ++d) {
    std::vector<Term> level = atoms;
    for (const auto& t : all_prev) level.push_back(make_apply("tuple", t));
    nonconcat[static_cast<std::size_t>(d)] = level;
    // all terms of depth <= d: the level plus two/three-part concatenations
    std::vector<Term> all = level;
    const auto& parts = nonconcat[static_cast<std::size_t>(d - 1)];
    for (const auto& a : parts)
      for (const auto& b : parts) all.push_back(make_concat({a, b}));
    all_prev = std::move(all);
  }

  const auto& prefix_pool = nonconcat[static_cast<std::size_t>(depth_bound - 1)];
  std::vector<Term> queries;
  for (const auto& a : prefix_pool) queries.push_back(make_concat({a, sqli}));
  for (const auto& a : prefix_pool)
    for (const auto& b : prefix_pool)
      queries.push_back(make_concat({a, b, sqli}));
  report.queries = static_cast<long>(queries.size());

  Driver driver;
  for (const auto& q : queries) {
    auto raw = driver.drive("query", q);
    if (raw.size() == 1 && reply_is(raw[0], make_apply("tuple", q)))
      ++report.raw_ok;
    else
      add_counterexample(report, "raw " + to_string(q) + ": expected tuple(" +
                                     to_string(q) + "), got " +
                                     (raw.empty() ? "no reply"
                                                  : to_string(raw[0])));
    auto sanitized = driver.drive("sanitizedQuery", q);
    if (sanitized.empty())
      ++report.sanitized_ok;
    else
      add_counterexample(report, "sanitized " + to_string(q) +
                                     ": expected no reply, got " +
                                     to_string(sanitized[0]));
  }

  // legitimate sanitized queries: whole-tuple terms come back as no_tuple
  Term no_tuple = make_constant("no_tuple", Sort::Text, false);
  for (const auto& t : prefix_pool) {
    Term q = make_apply("tuple", t);
    auto replies = driver.drive("sanitizedQuery", q);
    if (replies.size() == 1 && reply_is(replies[0], no_tuple))
      ++report.legit;
    else
      add_counterexample(report, "legitimate sanitized " + to_string(q) +
                                     ": expected no_tuple");
  }
  return report;
}

std::string render_report(const DbCheckReport& r) {
  std::ostringstream out;
  out << "database behaviour check, query depth <= " << r.depth << "\n";
  out << "trailing-injection queries: " << r.queries << "\n";
  out << "raw path ok (tuple(Q) returned): " << r.raw_ok << "\n";
  out << "sanitized path ok (no reply): " << r.sanitized_ok << "\n";
  out << "legitimate sanitized queries answered no_tuple: " << r.legit << "\n";
  out << "counterexamples: " << r.counterexamples.size() << "\n";
  for (const auto& c : r.counterexamples) out << "  " << c << "\n";
  return out.str();
}

} // namespace sqlimc
