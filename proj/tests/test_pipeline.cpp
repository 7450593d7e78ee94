// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "helpers.hpp"
#include "sqlimc/fixtures.hpp"
#include "sqlimc/pipeline.hpp"

using namespace sqlimc;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(CliConfig config, const std::string& stdin_text = "") {
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  int code = run_pipeline(config, in, out, err);
  return {code, out.str(), err.str()};
}

} // namespace

TEST_CASE("exit codes") {
  SUBCASE("attack found is 1") {
    Run r = run({.spec_path = testutil::fixture_path("yavwa.sqlf")});
    CHECK(r.code == 1);
    CHECK(r.out.find("attack found: goal secureFolder") != std::string::npos);
    CHECK(r.out.find("6. WebApp") != std::string::npos);
  }
  SUBCASE("no attack is 0") {
    // a query no client input reaches is never valid
    const char* text = R"(specification Quiet
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
    somepage: text;
    nonpublic dashboard: text;
  clauses
    db_hc_ev(M): inDB(M.sqli);
  entity Session {
    entity WebApp(Actor, Database: agent) {
      symbols NonceWA, NonceDB: text; SQLquery: message;
      body {
        NonceWA := fresh();
        Actor *->* Database: NonceWA.query(somepage);
        select {
          on(Database *->* Actor: tuple(?SQLquery).?NonceDB): {
            Actor ->* i: dashboard;
          }
        }
      }
    }
    body { new WebApp(webapp, database); new DB(webapp, database); }
  }
  body { new Session(); }
  goals
    authentication: [](!(iknows(dashboard)));
}
)";
    std::string path = "/tmp/sqlimc_quiet_test.sqlf";
    {
      std::ofstream f(path);
      f << text;
    }
    Run r = run({.spec_path = path});
    CHECK(r.code == 0);
    CHECK(r.out.find("no attack found") != std::string::npos);
    // the constant query trips the modeling lint
    CHECK(r.err.find("no client input") != std::string::npos);
  }
  SUBCASE("missing file is 2") {
    Run r = run({.spec_path = "no/such/file.sqlf"});
    CHECK(r.code == 2);
    CHECK(r.err.find("error:") != std::string::npos);
  }
  SUBCASE("parse errors are 2") {
    std::string path = "/tmp/sqlimc_broken_test.sqlf";
    {
      std::ofstream f(path);
      f << "specification Broken\n";
    }
    Run r = run({.spec_path = path});
    CHECK(r.code == 2);
  }
  SUBCASE("an exceeded node budget is 2") {
    Run r = run({.spec_path = testutil::fixture_path("joomla.sqlf"),
                 .node_budget = 10});
    CHECK(r.code == 2);
    CHECK(r.err.find("budget") != std::string::npos);
  }
}

TEST_CASE("embedded fixtures resolve through the fixture: scheme") {
  REQUIRE(bundled_fixtures().size() == 5);
  CHECK(find_fixture("joomla"));
  CHECK_FALSE(find_fixture("nope"));
  Run r = run({.spec_path = "fixture:yavwa"});
  CHECK(r.code == 1);
  // the embedded text equals the file on disk
  CHECK(find_fixture("yavwa")->text == testutil::fixture_text("yavwa.sqlf"));
}

TEST_CASE("output formats") {
  SUBCASE("structured") {
    Run r = run({.spec_path = "fixture:yavwa", .format = "structured"});
    CHECK(r.out.find("goal: secureFolder\n") != std::string::npos);
    CHECK(r.out.find("message: ") != std::string::npos);
    CHECK(r.out.find("1. i") == std::string::npos); // no MSC in this mode
  }
  SUBCASE("transition system dump") {
    Run r = run({.spec_path = "fixture:yavwa", .emit_ts = true});
    CHECK(r.out.find("rules:") != std::string::npos);
    CHECK(r.out.find("  LHS:") != std::string::npos);
  }
  SUBCASE("search statistics go to the diagnostic stream") {
    Run r = run({.spec_path = "fixture:yavwa"});
    CHECK(r.out.find("nodes=") == std::string::npos);
    CHECK(r.err.find("search: nodes=") != std::string::npos);
  }
}

TEST_CASE("interactive and flag-driven concretization agree") {
  const std::string url = "http://victim.example/login";
  CliConfig flags{.spec_path = "fixture:yavwa",
                  .non_interactive = true,
                  .urls = {"0=" + url}};
  Run by_flags = run(flags);
  REQUIRE(by_flags.code == 1);

  CliConfig dialog{.spec_path = "fixture:yavwa", .interactive = true};
  Run by_dialog = run(dialog, "\n\n" + url + "\n\n");
  REQUIRE(by_dialog.code == 1);

  std::string expected = "sqlmap.py -u \"" + url + "\" -a";
  CHECK(by_flags.out.find(expected) != std::string::npos);
  CHECK(by_dialog.out.find(expected) != std::string::npos);
}

TEST_CASE("a bound below the attack reports how far it looked") {
  Run r = run({.spec_path = "fixture:yavwa", .max_depth = 3});
  CHECK(r.code == 0);
  CHECK(r.out.find("no attack found: SafeUpToDepth(3)") != std::string::npos);
}

TEST_CASE("fixtures list names the bundled models") {
  std::ostringstream out;
  CHECK(run_fixtures_list(out) == 0);
  CHECK(out.str().find("joomla\tfixtures/joomla.sqlf") != std::string::npos);
  CHECK(out.str().find("webgoat_extract") != std::string::npos);
}

TEST_CASE("sibling entities can be instantiated") {
  const char* text = R"(specification Siblings
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
    nonpublic dashboard: text;
  clauses
    db_hc_ev(M): inDB(M.sqli);
  entity WebApp(Actor, Database: agent) {
    symbols Input: message; SQLquery: message; NonceWA, NonceDB: text;
    body {
      ? ->* Actor: ?Input;
      NonceWA := fresh();
      Actor *->* Database: NonceWA.query(Input);
      select {
        on(Database *->* Actor: tuple(?SQLquery).?NonceDB): {
          Actor ->* i: dashboard.tuple(SQLquery);
        }
      }
    }
  }
  entity Session {
    body { new WebApp(webapp, database); new DB(webapp, database); }
  }
  body { new Session(); }
  goals
    authentication: [](!(iknows(dashboard)));
}
)";
  std::string path = "/tmp/sqlimc_siblings_test.sqlf";
  {
    std::ofstream f(path);
    f << text;
  }
  Run r = run({.spec_path = path});
  CHECK(r.code == 1); // WebApp declared beside Session still resolves
}

TEST_CASE("loose validity mode still reproduces the bundled attacks") {
  Run r = run({.spec_path = "fixture:yavwa", .indb_loose = true});
  CHECK(r.code == 1);
}
